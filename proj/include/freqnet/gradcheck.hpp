#pragma once

#include <cmath>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "freqnet/tensor.hpp"

namespace freqnet {

// Central finite-difference verification of reverse-mode gradients. Always
// run in 64-bit: the difference quotient is unreliable in single precision.
//
// f rebuilds the forward graph from the current parameter values and returns
// the scalar loss tensor.

namespace detail {

template <typename F>
double eval_scalar(F&& f) {
  Tensor<double> out = f();
  const double v = out.item();
  if (!std::isfinite(v)) throw NumericError("grad_check: objective returned a non-finite value");
  return v;
}

}  // namespace detail

struct GradCheckEntry {
  const Parameter<double>* param = nullptr;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

// Checks a chosen subset of entries; pass empty `entries` to check all.
// Returns the maximum relative error encountered; `worst` (optional) receives
// the offending entry.
template <typename F>
double grad_check_entries(F&& f, std::span<Parameter<double>* const> params, double eps,
                          const std::vector<std::pair<std::size_t, std::size_t>>& entries,
                          GradCheckEntry* worst = nullptr) {
  for (auto* p : params) p->value.zero_grad();
  Tensor<double> loss = f();
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (auto* p : params) {
    if (p->value.has_grad())
      analytic.push_back(p->value.grad());
    else
      analytic.emplace_back(p->value.data().size(), 0.0);
  }

  auto check_one = [&](std::size_t pi, std::size_t i) {
    auto& vals = params[pi]->value.raw_data();
    const double keep = vals[i];
    vals[i] = keep + eps;
    const double lp = detail::eval_scalar(f);
    vals[i] = keep - eps;
    const double lm = detail::eval_scalar(f);
    vals[i] = keep;
    const double cd = (lp - lm) / (2.0 * eps);
    const double a = analytic[pi][i];
    const double rel = relative_error(a, cd);
    if (worst && rel >= worst->rel_error) {
      *worst = {params[pi], i, a, cd, rel};
    }
    return rel;
  };

  double max_rel = 0.0;
  if (entries.empty()) {
    for (std::size_t pi = 0; pi < params.size(); ++pi)
      for (std::size_t i = 0; i < params[pi]->value.data().size(); ++i)
        max_rel = std::max(max_rel, check_one(pi, i));
  } else {
    for (const auto& [pi, i] : entries) max_rel = std::max(max_rel, check_one(pi, i));
  }
  return max_rel;
}

template <typename F>
double grad_check(F&& f, std::span<Parameter<double>* const> params, double eps,
                  GradCheckEntry* worst = nullptr) {
  return grad_check_entries(std::forward<F>(f), params, eps, {}, worst);
}

// Samples up to max_entries (parameter, index) pairs uniformly without
// replacement. Used for large models where the full sweep is too slow.
template <typename F>
double grad_check_sampled(F&& f, std::span<Parameter<double>* const> params, double eps,
                          std::size_t max_entries, std::mt19937_64& rng,
                          GradCheckEntry* worst = nullptr) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t pi = 0; pi < params.size(); ++pi)
    for (std::size_t i = 0; i < params[pi]->value.data().size(); ++i) all.emplace_back(pi, i);
  std::shuffle(all.begin(), all.end(), rng);
  if (all.size() > max_entries) all.resize(max_entries);
  return grad_check_entries(std::forward<F>(f), params, eps, all, worst);
}

}  // namespace freqnet
