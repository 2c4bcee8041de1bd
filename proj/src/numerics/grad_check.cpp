#include "lexipivot/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lexipivot/error.hpp"

namespace lexipivot {

double relative_error(double analytic, double numeric, double floor) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

std::vector<std::string> GradCheckReport::failures() const {
  std::vector<std::string> out;
  for (const auto& e : entries) {
    if (!e.passed) out.push_back(e.name);
  }
  return out;
}

GradCheckReport grad_check(const LossClosure& loss, ParamStore& params,
                           const GradCheckOptions& options) {
  params.zero_grad();
  const double baseline = loss(params);
  std::map<std::string, std::vector<double>> analytic;
  for (auto& [name, t] : params) {
    if (t.requires_grad()) analytic.emplace(name, std::vector<double>(t.grad().begin(), t.grad().end()));
  }
  params.zero_grad();
  const double repeat = loss(params);
  if (baseline != repeat) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "loss closure is not deterministic: " << baseline << " vs " << repeat;
    throw DeterminismError(msg.str());
  }

  GradCheckReport report;
  for (auto& [name, t] : params) {
    if (!t.requires_grad()) continue;
    GradCheckEntry entry;
    entry.name = name;
    const auto& a = analytic.at(name);
    auto data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double original = data[i];
      data[i] = original + options.eps;
      const double plus = loss(params);
      data[i] = original - options.eps;
      const double minus = loss(params);
      data[i] = original;
      const double numeric = (plus - minus) / (2.0 * options.eps);
      const double err = relative_error(a[i], numeric, options.magnitude_floor);
      if (i == 0 || err > entry.max_rel_error) {
        entry.max_rel_error = err;
        entry.worst_index = i;
        entry.analytic = a[i];
        entry.numeric = numeric;
      }
    }
    entry.passed = entry.max_rel_error < options.tol;
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.passed = report.passed && entry.passed;
    report.entries.push_back(entry);
  }
  params.zero_grad();
  return report;
}

}  // namespace lexipivot
