#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tvselect/errors.hpp"
#include "tvselect/solver.hpp"

namespace tvselect {

enum class EffectClass { Zero, Const, Vary };

/// Disjoint index sets (0-based) covering {0..p-1}.
struct StructuralPartition {
  std::vector<int> s_vary;
  std::vector<int> s_const;
  std::vector<int> s_zero;
  double threshold_used = 0;

  int size() const { return static_cast<int>(s_vary.size() + s_const.size() + s_zero.size()); }

  std::vector<EffectClass> labels() const {
    std::vector<EffectClass> out(size(), EffectClass::Zero);
    for (int k : s_vary) out[k] = EffectClass::Vary;
    for (int k : s_const) out[k] = EffectClass::Const;
    return out;
  }
};

/// {k : ||theta_k||_2 > 0}.
template <typename Scalar>
std::vector<int> select_vary(const ModelFit<Scalar>& fit) {
  std::vector<int> out;
  for (int k = 0; k < static_cast<int>(fit.theta.size()); ++k)
    if (!fit.theta[k].isZero(0)) out.push_back(k);
  return out;
}

/// tau_N = c sqrt(log(p) / n).
inline double classification_threshold(long n, int p, double multiplier = 1.0) {
  if (n < 2) throw ConfigError(fmt::format("classification needs n >= 2, got {}", n));
  if (p < 1) throw ConfigError(fmt::format("classification needs p >= 1, got {}", p));
  if (!(multiplier >= 0)) throw ConfigError("threshold multiplier must be non-negative");
  return multiplier * std::sqrt(std::log(static_cast<double>(p)) / static_cast<double>(n));
}

/// Vary if theta_k != 0; otherwise const when |mu_k| > tau_N (strict), else
/// zero. Classification is done on whatever covariate scale the fit uses,
/// normally the standardized one.
template <typename Scalar>
StructuralPartition classify(const ModelFit<Scalar>& fit, long n, int p, double multiplier = 1.0) {
  if (fit.num_covariates() != p)
    throw DimensionError(fmt::format("fit has {} covariates, expected p={}", fit.num_covariates(), p));
  StructuralPartition part;
  part.threshold_used = classification_threshold(n, p, multiplier);
  for (int k = 0; k < p; ++k) {
    if (!fit.theta[k].isZero(0))
      part.s_vary.push_back(k);
    else if (std::abs(static_cast<double>(fit.mu(k))) > part.threshold_used)
      part.s_const.push_back(k);
    else
      part.s_zero.push_back(k);
  }
  return part;
}

inline std::string to_string(EffectClass c) {
  switch (c) {
    case EffectClass::Zero: return "zero";
    case EffectClass::Const: return "const";
    case EffectClass::Vary: return "vary";
  }
  return "unknown";
}

}  // namespace tvselect
