#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace psidit {

// Named parameter tensors with a trainable flag and an init-provenance label.
// Iteration order is insertion order so updates and serialization are stable.
template <class S>
class ParamStoreT {
  public:
    struct Entry {
        std::string name;
        TensorT<S> t;
        bool trainable = true;
        std::string provenance;
    };

    TensorT<S>& add(const std::string& name, TensorT<S> t, bool trainable, std::string provenance) {
        if (index_.count(name)) fail(ErrorCode::invalid_arg, "duplicate parameter name: " + name);
        index_[name] = entries_.size();
        entries_.push_back(Entry{name, std::move(t), trainable, std::move(provenance)});
        return entries_.back().t;
    }

    bool has(const std::string& name) const { return index_.count(name) != 0; }

    const Entry& entry(const std::string& name) const { return entries_[find(name)]; }
    Entry& entry(const std::string& name) { return entries_[find(name)]; }
    TensorT<S>& at(const std::string& name) { return entries_[find(name)].t; }
    const TensorT<S>& at(const std::string& name) const { return entries_[find(name)].t; }

    size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }
    std::vector<Entry>& entries() { return entries_; }

    void set_trainable(const std::string& name, bool flag) { entries_[find(name)].trainable = flag; }

    int64_t count_params(bool trainable_only) const {
        int64_t n = 0;
        for (const auto& e : entries_)
            if (!trainable_only || e.trainable) n += e.t.numel();
        return n;
    }

    // digest of a tensor's raw bytes; used for freeze-integrity checks
    uint64_t tensor_digest(const std::string& name) const {
        const auto& t = at(name);
        return fnv1a64(t.v.data(), t.v.size() * sizeof(S));
    }

    uint64_t store_digest() const {
        uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& e : entries_) {
            h ^= fnv1a64(e.name);
            h = splitmix64(h ^ tensor_digest(e.name) ^ (e.trainable ? 1u : 0u));
        }
        return h;
    }

  private:
    size_t find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) fail(ErrorCode::invalid_arg, "unknown parameter: " + name);
        return it->second;
    }

    std::vector<Entry> entries_;
    std::unordered_map<std::string, size_t> index_;
};

using ParamStore = ParamStoreT<float>;
using ParamStoreD = ParamStoreT<double>;

template <class To, class From>
ParamStoreT<To> cast_store(const ParamStoreT<From>& in) {
    ParamStoreT<To> out;
    for (const auto& e : in.entries()) out.add(e.name, cast_tensor<To>(e.t), e.trainable, e.provenance);
    return out;
}

}  // namespace psidit
