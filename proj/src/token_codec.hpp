#pragma once

#include <vector>

#include "image.hpp"
#include "tensor.hpp"

namespace psidit {

struct PatchGeometry {
    int h = 0;
    int w = 0;
    int c = 3;
    int patch = 0;
    int tokens() const { return (h / patch) * (w / patch); }
    int token_dim() const { return patch * patch * c; }
};

// Non-overlapping P x P patches in row-major patch order, each flattened
// HWC; the learned projection to the model width lives in the model.
Tensor patchify(const ImageGrid& image, int patch);
ImageGrid unpatchify(const Tensor& tokens, const PatchGeometry& geom);

// Plain row lookup; ids must be in [0, vocab). Padding positions use the
// pad id's own row.
Tensor embed_caption(const std::vector<int>& ids, const Tensor& table);

// Sinusoidal features of width D at log-spaced frequencies; pure function
// of tau in [0,1]. The learned two-layer projection lives in the model.
template <class S>
TensorT<S> timestep_embed(double tau, int D);

}  // namespace psidit
