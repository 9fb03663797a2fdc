#include "grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace psidit {

double GradReport::frac_below(double tol) const {
    if (samples.empty()) return 1.0;
    int64_t ok = 0;
    for (const auto& s : samples)
        if (s.rel_err < tol) ++ok;
    return static_cast<double>(ok) / static_cast<double>(samples.size());
}

double GradReport::max_rel_err() const {
    double m = 0.0;
    for (const auto& s : samples) m = std::max(m, s.rel_err);
    return m;
}

GradReport grad_check(const LossFn& loss_fn, const AnalyticGradFn& analytic_fn, const ParamStoreD& params,
                      int n_samples, double h, RngStream& rng) {
    if (n_samples < 1 || h <= 0.0) fail(ErrorCode::invalid_arg, "grad_check: bad n_samples or h");

    const double l0 = loss_fn(params);
    const double l1 = loss_fn(params);
    if (std::memcmp(&l0, &l1, sizeof(double)) != 0)
        fail(ErrorCode::invalid_arg, "grad_check: loss_fn is not deterministic");
    if (!std::isfinite(l0)) fail(ErrorCode::numeric, "grad_check: non-finite loss");

    std::map<std::string, TensorD> grads = analytic_fn(params);

    // flat list of trainable entries
    std::vector<std::pair<std::string, int64_t>> pool;
    for (const auto& e : params.entries()) {
        if (!e.trainable) continue;
        if (!grads.count(e.name)) fail(ErrorCode::invalid_arg, "grad_check: no analytic gradient for " + e.name);
        pool.emplace_back(e.name, e.t.numel());
    }
    if (pool.empty()) fail(ErrorCode::invalid_arg, "grad_check: no trainable parameters");
    int64_t total = 0;
    for (const auto& [name, n] : pool) total += n;

    GradReport report;
    ParamStoreD work = params;
    for (int s = 0; s < n_samples; ++s) {
        int64_t flat = static_cast<int64_t>(rng.uniform() * static_cast<double>(total));
        flat = std::min(flat, total - 1);
        size_t which = 0;
        while (flat >= pool[which].second) {
            flat -= pool[which].second;
            ++which;
        }
        const std::string& name = pool[which].first;

        auto& t = work.at(name);
        const double orig = t.v[static_cast<size_t>(flat)];
        t.v[static_cast<size_t>(flat)] = orig + h;
        const double lp = loss_fn(work);
        t.v[static_cast<size_t>(flat)] = orig - h;
        const double lm = loss_fn(work);
        t.v[static_cast<size_t>(flat)] = orig;

        GradSample sample;
        sample.name = name;
        sample.index = flat;
        sample.fd = (lp - lm) / (2.0 * h);
        sample.analytic = grads.at(name).v[static_cast<size_t>(flat)];
        sample.rel_err = std::abs(sample.analytic - sample.fd) /
                         std::max({std::abs(sample.analytic), std::abs(sample.fd), 1e-8});
        report.samples.push_back(std::move(sample));
    }
    return report;
}

}  // namespace psidit
