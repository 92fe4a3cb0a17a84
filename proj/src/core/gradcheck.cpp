#include "ssi/core/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssi/core/error.hpp"

namespace ssi {

double relative_error(double analytic, double numeric, double floor) noexcept {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport check_gradients(std::span<Tensor* const> params, std::span<const Tensor> analytic,
                                const std::function<double()>& loss,
                                const GradCheckOptions& options) {
  if (params.size() != analytic.size()) throw InvalidArgument("check_gradients: size mismatch");
  GradCheckReport report;
  // Central differences carry about noise_ulps * eps * |L| / step of absolute
  // round-off; gradients below noise / tolerance are compared absolutely.
  const double noise = options.noise_ulps * std::numeric_limits<double>::epsilon() * std::abs(loss()) / options.step;
  const double floor = std::max(options.floor, noise / options.tolerance);
  report.floor = floor;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& param = *params[p];
    if (param.shape() != analytic[p].shape()) throw InvalidArgument("check_gradients: shape mismatch");
    for (std::size_t i = 0; i < param.size(); ++i) {
      const double saved = param[i];
      param[i] = saved + options.step;
      const double up = loss();
      param[i] = saved - options.step;
      const double down = loss();
      param[i] = saved;
      const double numeric = (up - down) / (2.0 * options.step);
      const double err = relative_error(analytic[p][i], numeric, floor);
      ++report.checked;
      if (!(err < options.tolerance)) ++report.failures;
      if (!(err <= report.max_rel_error)) {
        report.max_rel_error = err;
        report.worst_param = p;
        report.worst_index = i;
        report.worst_analytic = analytic[p][i];
        report.worst_numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace ssi
