#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "covqa/rng.hpp"
#include "covqa/tensor.hpp"

namespace covqa {

struct GradCheckOptions {
    double epsilon = 1e-5;     // central-difference step, must lie in [1e-6, 1e-2]
    int samples_per_param = 4; // coordinates sampled per parameter tensor
    std::uint64_t seed = 0;
};

struct ParamGradError {
    std::string name;
    double worst_rel_error;
    std::size_t coords_checked;
};

// Compares backward-computed gradients of f against central differences on
// sampled coordinates of each named parameter. f must rebuild its graph on
// every call and read the parameters' current values. Returns the worst
// relative error per parameter, with the spec's denominator
// max(|analytic|, |numeric|, 1e-8).
template <typename T>
std::vector<ParamGradError> finite_difference_report(
    const std::function<Tensor<T>()>& f,
    const std::vector<std::pair<std::string, Tensor<T>>>& params, const GradCheckOptions& opts) {
    if (opts.epsilon < 1e-6 || opts.epsilon > 1e-2)
        throw ContractError("finite_difference: epsilon " + std::to_string(opts.epsilon) +
                            " outside [1e-6, 1e-2]");
    const T eps = static_cast<T>(opts.epsilon);

    const T probe1 = f().item();
    const T probe2 = f().item();
    if (probe1 != probe2)
        throw DeterminismError("finite_difference: repeated evaluation of f disagreed");

    for (auto& [name, p] : params) Tensor<T>(p).zero_grad();
    Tensor<T> loss = f();
    backward(loss);
    std::vector<std::vector<T>> analytic;
    analytic.reserve(params.size());
    for (auto& [name, p] : params)
        analytic.push_back(p.has_grad() ? p.grad() : std::vector<T>(p.size(), T(0)));

    Rng rng(opts.seed);
    std::vector<ParamGradError> report;
    report.reserve(params.size());
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<T> p = params[pi].second;  // handle copy, shares the node
        std::vector<std::size_t> coords;
        if (p.size() <= static_cast<std::size_t>(opts.samples_per_param)) {
            for (std::size_t i = 0; i < p.size(); ++i) coords.push_back(i);
        } else {
            for (int i = 0; i < opts.samples_per_param; ++i)
                coords.push_back(static_cast<std::size_t>(rng.uniform_int(p.size())));
        }
        double worst = 0.0;
        for (std::size_t c : coords) {
            const T orig = p.data()[c];
            p.data()[c] = orig + eps;
            const T fp = f().item();
            p.data()[c] = orig - eps;
            const T fm = f().item();
            p.data()[c] = orig;
            const double numeric = (static_cast<double>(fp) - static_cast<double>(fm)) /
                                   (2.0 * static_cast<double>(eps));
            const double a = static_cast<double>(analytic[pi][c]);
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
        report.push_back({params[pi].first, worst, coords.size()});
    }
    return report;
}

// Convenience form: worst relative error across all parameters.
template <typename T>
double finite_difference_check(const std::function<Tensor<T>()>& f,
                               const std::vector<Tensor<T>>& params, double epsilon,
                               int samples_per_param = 4, std::uint64_t seed = 0) {
    std::vector<std::pair<std::string, Tensor<T>>> named;
    named.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        named.emplace_back("p" + std::to_string(i), params[i]);
    GradCheckOptions opts;
    opts.epsilon = epsilon;
    opts.samples_per_param = samples_per_param;
    opts.seed = seed;
    double worst = 0.0;
    for (const auto& e : finite_difference_report<T>(f, named, opts))
        worst = std::max(worst, e.worst_rel_error);
    return worst;
}

}  // namespace covqa
