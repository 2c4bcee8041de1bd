#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lexipivot/numerics/param_store.hpp"

namespace lexipivot {

struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;
};

/// One bias-corrected Adam step over every parameter with requires_grad set.
/// Each of those must carry a gradient (StateError names the first that does
/// not). Gradients are zeroed afterwards.
void adam_update(ParamStore& params, AdamState& state);

/// Rescales trainable gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping; max_norm <= 0 disables clipping.
double clip_grad_norm(ParamStore& params, double max_norm);

}  // namespace lexipivot
