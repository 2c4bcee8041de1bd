#include "lexipivot/numerics/adam.hpp"

#include <cmath>

#include "lexipivot/error.hpp"

namespace lexipivot {

void adam_update(ParamStore& params, AdamState& state) {
  for (const auto& [name, t] : params) {
    if (t.requires_grad() && !t.has_grad()) {
      throw StateError("adam_update: parameter \"" + name + "\" has no gradient");
    }
  }
  ++state.step;
  const double step = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, step);
  const double correction2 = 1.0 - std::pow(state.beta2, step);
  for (auto& [name, t] : params) {
    if (!t.requires_grad()) continue;
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.size() != t.size()) m.assign(t.size(), 0.0);
    if (v.size() != t.size()) v.assign(t.size(), 0.0);
    auto data = t.data();
    auto grad = t.grad();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double g = grad[i];
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      data[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    t.zero_grad();
  }
}

double clip_grad_norm(ParamStore& params, double max_norm) {
  double sq = 0.0;
  for (auto& [_, t] : params) {
    if (!t.requires_grad() || !t.has_grad()) continue;
    for (double g : t.grad()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw NumericError("gradient norm is not finite");
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& [_, t] : params) {
      if (!t.requires_grad() || !t.has_grad()) continue;
      for (double& g : t.grad()) g *= scale;
    }
  }
  return norm;
}

}  // namespace lexipivot
