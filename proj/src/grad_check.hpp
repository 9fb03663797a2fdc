#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "param_store.hpp"
#include "rng.hpp"

namespace psidit {

struct GradSample {
    std::string name;
    int64_t index = 0;
    double analytic = 0.0;
    double fd = 0.0;
    double rel_err = 0.0;
};

struct GradReport {
    std::vector<GradSample> samples;

    double frac_below(double tol) const;
    double max_rel_err() const;
};

// Deterministic scalar loss of the parameters; evaluated in 64-bit.
using LossFn = std::function<double(const ParamStoreD&)>;
// Analytic gradients (name -> tensor) for the trainable parameters of the
// same loss, as produced by the implementation under test.
using AnalyticGradFn = std::function<std::map<std::string, TensorD>(const ParamStoreD&)>;

// Central finite differences (loss(t+h) - loss(t-h)) / (2h) on n_samples
// randomly chosen trainable entries, compared against analytic gradients.
// Relative error is |a-f| / max(|a|,|f|,1e-8).  Throws if loss_fn is not
// deterministic (two evaluations must agree bit-exactly).
GradReport grad_check(const LossFn& loss_fn, const AnalyticGradFn& analytic_fn, const ParamStoreD& params,
                      int n_samples, double h, RngStream& rng);

}  // namespace psidit
