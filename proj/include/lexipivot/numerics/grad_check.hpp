#pragma once

#include <functional>
#include <string>
#include <vector>

#include "lexipivot/numerics/param_store.hpp"

namespace lexipivot {

/// Evaluates the loss and accumulates analytic gradients into the store.
using LossClosure = std::function<double(ParamStore&)>;

struct GradCheckEntry {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  bool passed = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = true;

  std::vector<std::string> failures() const;
};

struct GradCheckOptions {
  double eps = 1e-5;
  double tol = 1e-4;
  /// Denominator floor for |a - n| / max(|a|, |n|, floor).
  double magnitude_floor = 1e-6;
};

/// Central-difference check of every trainable parameter. Throws
/// DeterminismError when two baseline evaluations disagree.
GradCheckReport grad_check(const LossClosure& loss, ParamStore& params,
                           const GradCheckOptions& options = {});

double relative_error(double analytic, double numeric, double floor = 1e-6) noexcept;

}  // namespace lexipivot
