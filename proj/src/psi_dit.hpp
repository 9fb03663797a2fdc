#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "autograd.hpp"
#include "param_store.hpp"
#include "rng.hpp"

namespace psidit {

enum class SscmInitPolicy { random, teb_copy, nlb_copy };
enum class Arch { base_only, psi_dit, controlnet };

const char* to_string(SscmInitPolicy p);
SscmInitPolicy sscm_policy_from_string(const std::string& s);
const char* to_string(Arch a);
Arch arch_from_string(const std::string& s);

struct PsiDitConfig {
    int depth = 4;
    int width = 64;
    int heads = 4;
    int patch = 4;
    int image_size = 32;
    int vocab = 32;
    int text_len = 8;
    bool enable_zero_init = true;
    SscmInitPolicy sscm_init_policy = SscmInitPolicy::nlb_copy;

    int token_dim() const { return patch * patch * 3; }
    int image_tokens() const {
        int g = image_size / patch;
        return g * g;
    }
    void validate() const;
};

// Dual-stream base blocks plus embeddings and the output head; everything
// trainable (the pretraining phase owns the freeze flags).
ParamStore init_base(const PsiDitConfig& cfg, RngStream& rng);

// Adds the per-block stream-control parameters. Copy policies duplicate the
// base stream weights bit-for-bit; the merge projection is zero-filled when
// enable_zero_init is set. Marks only the additions trainable.
void init_sscm_from_base(ParamStore& store, const PsiDitConfig& cfg, RngStream& rng);

// Adds a full trainable replica of the base block stack plus zero-initialized
// per-block injection maps. Marks only the additions trainable.
void init_controlnet_from_base(ParamStore& store, const PsiDitConfig& cfg, RngStream& rng);

// Leaf-variable view over a parameter store for one forward/backward pass.
template <class S>
class GraphParams {
  public:
    explicit GraphParams(const ParamStoreT<S>& store) : store_(&store) {}

    Var<S> operator()(const std::string& name) {
        auto it = cache_.find(name);
        if (it != cache_.end()) return it->second;
        const auto& e = store_->entry(name);
        auto v = make_var(e.t, e.trainable);
        cache_.emplace(name, v);
        return v;
    }

    // gradients of the trainable parameters touched by the pass
    std::map<std::string, TensorT<S>> grads() const {
        std::map<std::string, TensorT<S>> out;
        for (const auto& [name, var] : cache_) {
            if (!var->needs_grad) continue;
            if (var->grad.v.empty())
                out.emplace(name, TensorT<S>::zeros(var->val.shape));
            else
                out.emplace(name, var->grad);
        }
        return out;
    }

    const ParamStoreT<S>& store() const { return *store_; }

  private:
    const ParamStoreT<S>* store_;
    std::unordered_map<std::string, Var<S>> cache_;
};

template <class S>
struct TokenStreamsT {
    Var<S> text;   // [B,Nt,D]
    Var<S> noise;  // [B,Nn,D]
    Var<S> lr;     // [B,Nl',D]; Nl' = |kept| per item
    std::vector<std::vector<int>> lr_kept;  // sorted ascending per item
};

template <class S>
struct ForwardInput {
    std::vector<std::vector<int>> caption_ids;  // B x Nt
    TensorT<S> noisy_tokens;                    // [B,Nn,token_dim]
    TensorT<S> lr_tokens;                       // [B,Nn,token_dim] full grid (empty for base_only)
    std::vector<std::vector<int>> kept;         // per item, sorted subset of 0..Nn-1
    std::vector<double> taus;                   // per item, flow time in [0,1]
};

// timestep conditioning vector [B,D]
template <class S>
Var<S> cond_embed(GraphParams<S>& P, const PsiDitConfig& cfg, const std::vector<double>& taus);

template <class S>
TokenStreamsT<S> embed_streams(GraphParams<S>& P, const PsiDitConfig& cfg, const ForwardInput<S>& in);

template <class S>
std::pair<Var<S>, Var<S>> mmdit_block(GraphParams<S>& P, const PsiDitConfig& cfg, const std::string& prefix,
                                      Var<S> text, Var<S> noise, Var<S> cond);

// Joint attention over (noise, kept lr) tokens. Returns the additive noise
// delta (through the merge projection) and the lr stream for the next block.
template <class S>
std::pair<Var<S>, Var<S>> sscm_block(GraphParams<S>& P, const PsiDitConfig& cfg, int block, Var<S> noise_in,
                                     Var<S> lr_in, Var<S> cond);

// Velocity tokens [B,Nn,token_dim].
template <class S>
Var<S> base_forward(GraphParams<S>& P, const PsiDitConfig& cfg, const ForwardInput<S>& in);
template <class S>
Var<S> psi_dit_forward(GraphParams<S>& P, const PsiDitConfig& cfg, const ForwardInput<S>& in);
template <class S>
Var<S> controlnet_forward(GraphParams<S>& P, const PsiDitConfig& cfg, const ForwardInput<S>& in);

template <class S>
Var<S> model_forward(GraphParams<S>& P, const PsiDitConfig& cfg, Arch arch, const ForwardInput<S>& in);

int64_t count_params(const ParamStore& store, bool trainable_only);

extern template class GraphParams<float>;
extern template class GraphParams<double>;

}  // namespace psidit
