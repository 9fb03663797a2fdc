#pragma once

#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "ops.hpp"
#include "tensor.hpp"

namespace psidit {

// Minimal reverse-mode engine: ops build a DAG of shared nodes, each holding
// its forward value and a closure that pushes gradients into its parents.
// Graphs are built per forward pass and released afterwards.
template <class S>
struct NodeT {
    TensorT<S> val;
    TensorT<S> grad;
    bool needs_grad = false;
    std::vector<std::shared_ptr<NodeT>> parents;
    std::function<void(NodeT&)> backprop;

    void ensure_grad() {
        if (grad.v.empty() && !val.v.empty()) grad = TensorT<S>::zeros(val.shape);
    }
};

template <class S>
using Var = std::shared_ptr<NodeT<S>>;

template <class S>
Var<S> make_var(TensorT<S> value, bool needs_grad = false) {
    auto n = std::make_shared<NodeT<S>>();
    n->val = std::move(value);
    n->needs_grad = needs_grad;
    return n;
}

template <class S>
Var<S> make_const(TensorT<S> value) {
    return make_var(std::move(value), false);
}

namespace detail {

template <class S>
bool any_needs_grad(const std::vector<Var<S>>& ps) {
    for (const auto& p : ps)
        if (p && p->needs_grad) return true;
    return false;
}

template <class S>
Var<S> make_op(TensorT<S> value, std::vector<Var<S>> parents, std::function<void(NodeT<S>&)> backprop) {
    auto n = std::make_shared<NodeT<S>>();
    n->val = std::move(value);
    n->needs_grad = any_needs_grad(parents);
    if (n->needs_grad) {
        n->parents = std::move(parents);
        n->backprop = std::move(backprop);
        for (auto& p : n->parents)
            if (p->needs_grad) p->ensure_grad();
    }
    return n;
}

template <class S>
void topo_visit(NodeT<S>* n, std::unordered_set<NodeT<S>*>& seen, std::vector<NodeT<S>*>& order) {
    std::vector<std::pair<NodeT<S>*, size_t>> stack;
    stack.emplace_back(n, 0);
    seen.insert(n);
    while (!stack.empty()) {
        auto& [cur, idx] = stack.back();
        if (idx < cur->parents.size()) {
            NodeT<S>* p = cur->parents[idx].get();
            ++idx;
            if (p->needs_grad && !seen.count(p)) {
                seen.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(cur);
            stack.pop_back();
        }
    }
}

}  // namespace detail

// Reverse pass from a scalar loss node.
template <class S>
void backward(const Var<S>& loss) {
    if (!loss->needs_grad) fail(ErrorCode::invalid_arg, "backward: loss does not depend on trainable inputs");
    if (loss->val.numel() != 1) fail(ErrorCode::invalid_arg, "backward: loss must be scalar");
    std::unordered_set<NodeT<S>*> seen;
    std::vector<NodeT<S>*> order;
    detail::topo_visit(loss.get(), seen, order);
    loss->ensure_grad();
    loss->grad.v[0] = S(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        NodeT<S>* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

// ---- op builders ----

template <class S>
Var<S> vadd(const Var<S>& a, const Var<S>& b) {
    if (!a->val.same_shape(b->val)) fail(ErrorCode::shape_mismatch, "vadd shape mismatch");
    TensorT<S> out(a->val.shape);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a->val.v[i] + b->val.v[i];
    return detail::make_op<S>(std::move(out), {a, b}, [](NodeT<S>& n) {
        for (int pi = 0; pi < 2; ++pi) {
            auto& p = n.parents[static_cast<size_t>(pi)];
            if (!p->needs_grad) continue;
            for (size_t i = 0; i < n.grad.v.size(); ++i) p->grad.v[i] += n.grad.v[i];
        }
    });
}

template <class S>
Var<S> vscale(const Var<S>& a, S c) {
    TensorT<S> out(a->val.shape);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a->val.v[i] * c;
    return detail::make_op<S>(std::move(out), {a}, [c](NodeT<S>& n) {
        auto& p = n.parents[0];
        if (!p->needs_grad) return;
        for (size_t i = 0; i < n.grad.v.size(); ++i) p->grad.v[i] += n.grad.v[i] * c;
    });
}

// broadcast-add a [N,D] table over the batch axis of x [B,N,D]
template <class S>
Var<S> vadd_rows(const Var<S>& x, const Var<S>& rows) {
    const int B = x->val.dim(0), N = x->val.dim(1), D = x->val.dim(2);
    if (rows->val.shape != std::vector<int>{N, D}) fail(ErrorCode::shape_mismatch, "vadd_rows mismatch");
    TensorT<S> out(x->val.shape);
    for (int b = 0; b < B; ++b)
        for (int64_t i = 0; i < static_cast<int64_t>(N) * D; ++i)
            out.v[static_cast<size_t>(b * static_cast<int64_t>(N) * D + i)] =
                x->val.v[static_cast<size_t>(b * static_cast<int64_t>(N) * D + i)] + rows->val.v[static_cast<size_t>(i)];
    return detail::make_op<S>(std::move(out), {x, rows}, [B, N, D](NodeT<S>& n) {
        auto& px = n.parents[0];
        auto& pr = n.parents[1];
        if (px->needs_grad)
            for (size_t i = 0; i < n.grad.v.size(); ++i) px->grad.v[i] += n.grad.v[i];
        if (pr->needs_grad)
            for (int b = 0; b < B; ++b)
                for (int64_t i = 0; i < static_cast<int64_t>(N) * D; ++i)
                    pr->grad.v[static_cast<size_t>(i)] += n.grad.v[static_cast<size_t>(b * static_cast<int64_t>(N) * D + i)];
    });
}

template <class S>
Var<S> vlinear(const Var<S>& x, const Var<S>& w, const Var<S>& b) {
    TensorT<S> out = linear(x->val, w->val, b->val);
    return detail::make_op<S>(std::move(out), {x, w, b}, [](NodeT<S>& n) {
        auto& px = n.parents[0];
        auto& pw = n.parents[1];
        auto& pb = n.parents[2];
        linear_backward(px->val, pw->val, n.grad, px->needs_grad ? &px->grad : nullptr,
                        pw->needs_grad ? &pw->grad : nullptr, pb->needs_grad ? &pb->grad : nullptr);
    });
}

template <class S>
Var<S> vgelu(const Var<S>& x) {
    TensorT<S> out = gelu(x->val);
    return detail::make_op<S>(std::move(out), {x}, [](NodeT<S>& n) {
        auto& p = n.parents[0];
        if (p->needs_grad) gelu_backward(p->val, n.grad, &p->grad);
    });
}

template <class S>
Var<S> vattention(const Var<S>& q, const Var<S>& k, const Var<S>& v) {
    TensorT<S> probs;
    TensorT<S> out = scaled_dot_attention(q->val, k->val, v->val, &probs);
    return detail::make_op<S>(std::move(out), {q, k, v}, [probs = std::move(probs)](NodeT<S>& n) {
        auto& pq = n.parents[0];
        auto& pk = n.parents[1];
        auto& pv = n.parents[2];
        scaled_dot_attention_backward(pq->val, pk->val, pv->val, probs, n.grad,
                                      pq->needs_grad ? &pq->grad : nullptr, pk->needs_grad ? &pk->grad : nullptr,
                                      pv->needs_grad ? &pv->grad : nullptr);
    });
}

template <class S>
Var<S> vmodln(const Var<S>& x, const Var<S>& scale, const Var<S>& shift) {
    TensorT<S> out = modulated_layer_norm(x->val, scale->val, shift->val);
    return detail::make_op<S>(std::move(out), {x, scale, shift}, [](NodeT<S>& n) {
        auto& px = n.parents[0];
        auto& psc = n.parents[1];
        auto& psh = n.parents[2];
        modulated_layer_norm_backward(px->val, psc->val, psh->val, n.grad, px->needs_grad ? &px->grad : nullptr,
                                      psc->needs_grad ? &psc->grad : nullptr, psh->needs_grad ? &psh->grad : nullptr);
    });
}

template <class S>
Var<S> vsplit_heads(const Var<S>& x, int heads) {
    TensorT<S> out = split_heads(x->val, heads);
    return detail::make_op<S>(std::move(out), {x}, [heads](NodeT<S>& n) {
        auto& p = n.parents[0];
        if (!p->needs_grad) return;
        TensorT<S> g = merge_heads(n.grad);
        for (size_t i = 0; i < g.v.size(); ++i) p->grad.v[i] += g.v[i];
    });
}

template <class S>
Var<S> vmerge_heads(const Var<S>& x) {
    const int heads = x->val.dim(1);
    TensorT<S> out = merge_heads(x->val);
    return detail::make_op<S>(std::move(out), {x}, [heads](NodeT<S>& n) {
        auto& p = n.parents[0];
        if (!p->needs_grad) return;
        TensorT<S> g = split_heads(n.grad, heads);
        for (size_t i = 0; i < g.v.size(); ++i) p->grad.v[i] += g.v[i];
    });
}

template <class S>
Var<S> vconcat_tokens(const Var<S>& a, const Var<S>& b) {
    TensorT<S> out = concat_tokens(a->val, b->val);
    const int Na = a->val.dim(1);
    return detail::make_op<S>(std::move(out), {a, b}, [Na](NodeT<S>& n) {
        auto& pa = n.parents[0];
        auto& pb = n.parents[1];
        const int Nb = pb->val.dim(1);
        if (pa->needs_grad) {
            TensorT<S> g = slice_tokens(n.grad, 0, Na);
            for (size_t i = 0; i < g.v.size(); ++i) pa->grad.v[i] += g.v[i];
        }
        if (pb->needs_grad) {
            TensorT<S> g = slice_tokens(n.grad, Na, Nb);
            for (size_t i = 0; i < g.v.size(); ++i) pb->grad.v[i] += g.v[i];
        }
    });
}

template <class S>
Var<S> vslice_tokens(const Var<S>& x, int start, int len) {
    TensorT<S> out = slice_tokens(x->val, start, len);
    return detail::make_op<S>(std::move(out), {x}, [start, len](NodeT<S>& n) {
        auto& p = n.parents[0];
        if (!p->needs_grad) return;
        const int D = p->val.shape.back();
        const int B = p->val.dim(0), N = p->val.dim(1);
        for (int b = 0; b < B; ++b)
            for (int t = 0; t < len; ++t)
                for (int i = 0; i < D; ++i)
                    p->grad.v[static_cast<size_t>(((static_cast<int64_t>(b) * N + start + t) * D) + i)] +=
                        n.grad.v[static_cast<size_t>(((static_cast<int64_t>(b) * len + t) * D) + i)];
    });
}

// embedding lookup: table [V,D], ids per batch item -> [B,Nt,D]
template <class S>
Var<S> vembed_rows(const Var<S>& table, const std::vector<std::vector<int>>& ids) {
    const int V = table->val.dim(0), D = table->val.dim(1);
    const int B = static_cast<int>(ids.size());
    const int Nt = B ? static_cast<int>(ids[0].size()) : 0;
    TensorT<S> out({B, Nt, D});
    for (int b = 0; b < B; ++b) {
        if (static_cast<int>(ids[static_cast<size_t>(b)].size()) != Nt)
            fail(ErrorCode::shape_mismatch, "ragged id sequences");
        for (int t = 0; t < Nt; ++t) {
            int id = ids[static_cast<size_t>(b)][static_cast<size_t>(t)];
            if (id < 0 || id >= V) fail(ErrorCode::invalid_arg, "token id out of vocabulary");
            std::copy(table->val.data() + static_cast<int64_t>(id) * D, table->val.data() + static_cast<int64_t>(id + 1) * D,
                      out.data() + (static_cast<int64_t>(b) * Nt + t) * D);
        }
    }
    return detail::make_op<S>(std::move(out), {table}, [ids, D, Nt](NodeT<S>& n) {
        auto& p = n.parents[0];
        if (!p->needs_grad) return;
        for (size_t b = 0; b < ids.size(); ++b)
            for (int t = 0; t < Nt; ++t) {
                int id = ids[b][static_cast<size_t>(t)];
                for (int i = 0; i < D; ++i)
                    p->grad.v[static_cast<size_t>(static_cast<int64_t>(id) * D + i)] +=
                        n.grad.v[static_cast<size_t>((static_cast<int64_t>(b) * Nt + t) * D + i)];
            }
    });
}

// gather rows of a [N,D] table into [B,Nk,D] with per-batch index lists
template <class S>
Var<S> vgather_rows(const Var<S>& rows, const std::vector<std::vector<int>>& idx) {
    const int N = rows->val.dim(0), D = rows->val.dim(1);
    const int B = static_cast<int>(idx.size());
    const int Nk = B ? static_cast<int>(idx[0].size()) : 0;
    TensorT<S> out({B, Nk, D});
    for (int b = 0; b < B; ++b)
        for (int t = 0; t < Nk; ++t) {
            int r = idx[static_cast<size_t>(b)][static_cast<size_t>(t)];
            if (r < 0 || r >= N) fail(ErrorCode::invalid_arg, "gather index out of range");
            std::copy(rows->val.data() + static_cast<int64_t>(r) * D, rows->val.data() + static_cast<int64_t>(r + 1) * D,
                      out.data() + (static_cast<int64_t>(b) * Nk + t) * D);
        }
    return detail::make_op<S>(std::move(out), {rows}, [idx, D, Nk](NodeT<S>& n) {
        auto& p = n.parents[0];
        if (!p->needs_grad) return;
        for (size_t b = 0; b < idx.size(); ++b)
            for (int t = 0; t < Nk; ++t) {
                int r = idx[b][static_cast<size_t>(t)];
                for (int i = 0; i < D; ++i)
                    p->grad.v[static_cast<size_t>(static_cast<int64_t>(r) * D + i)] +=
                        n.grad.v[static_cast<size_t>((static_cast<int64_t>(b) * Nk + t) * D + i)];
            }
    });
}

// take the chunk-th of n equal slices along the last axis
template <class S>
Var<S> vchunk(const Var<S>& x, int n_chunks, int chunk) {
    const int D_all = x->val.shape.back();
    if (n_chunks < 1 || D_all % n_chunks != 0 || chunk < 0 || chunk >= n_chunks)
        fail(ErrorCode::invalid_arg, "vchunk bad arguments");
    const int D = D_all / n_chunks;
    const int64_t M = x->val.numel() / D_all;
    std::vector<int> out_shape = x->val.shape;
    out_shape.back() = D;
    TensorT<S> out(out_shape);
    for (int64_t m = 0; m < M; ++m)
        std::copy(x->val.data() + m * D_all + static_cast<int64_t>(chunk) * D,
                  x->val.data() + m * D_all + static_cast<int64_t>(chunk + 1) * D, out.data() + m * D);
    return detail::make_op<S>(std::move(out), {x}, [D_all, D, M, chunk](NodeT<S>& n) {
        auto& p = n.parents[0];
        if (!p->needs_grad) return;
        for (int64_t m = 0; m < M; ++m)
            for (int i = 0; i < D; ++i)
                p->grad.v[static_cast<size_t>(m * D_all + static_cast<int64_t>(chunk) * D + i)] +=
                    n.grad.v[static_cast<size_t>(m * D + i)];
    });
}

// mean((pred - target)^2) against a constant target
template <class S>
Var<S> vmse(const Var<S>& pred, const TensorT<S>& target) {
    if (!pred->val.same_shape(target)) fail(ErrorCode::shape_mismatch, "vmse shape mismatch");
    const int64_t n = pred->val.numel();
    S acc = S(0);
    for (int64_t i = 0; i < n; ++i) {
        S d = pred->val.v[static_cast<size_t>(i)] - target.v[static_cast<size_t>(i)];
        acc += d * d;
    }
    TensorT<S> out({1});
    out.v[0] = acc / static_cast<S>(n);
    return detail::make_op<S>(std::move(out), {pred}, [target, n](NodeT<S>& node) {
        auto& p = node.parents[0];
        if (!p->needs_grad) return;
        const S g = node.grad.v[0] * S(2) / static_cast<S>(n);
        for (int64_t i = 0; i < n; ++i)
            p->grad.v[static_cast<size_t>(i)] += g * (p->val.v[static_cast<size_t>(i)] - target.v[static_cast<size_t>(i)]);
    });
}

}  // namespace psidit
