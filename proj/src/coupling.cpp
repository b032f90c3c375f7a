#include "tofbeam/coupling.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <string>

#include "tofbeam/errors.hpp"

namespace tofbeam {

namespace {
constexpr double kPi = std::numbers::pi;
using quad = boost::math::quadrature::gauss_kronrod<double, 31>;

// Radial beam intensity about the beam center.
double radial_intensity(const ModeSpec& spec, double r) {
  const double w = spec.waist_radius();
  double sum = 0.0;
  for (const auto& m : spec.modes) sum += m.weight * lg_radial_intensity(m.p, w, r);
  return sum;
}
}  // namespace

double coupling_efficiency(const ModeSpec& spec, double active_diameter_um,
                           double offset_um) {
  spec.validate();
  if (active_diameter_um <= 0.0)
    throw invalid_input("coupling_efficiency: active diameter must be > 0");
  if (offset_um < 0.0)
    throw invalid_input("coupling_efficiency: offset must be >= 0");

  const double radius = 0.5 * active_diameter_um;
  const double d = std::hypot(spec.center_x_um + offset_um, spec.center_y_um);
  const double w = spec.waist_radius();

  // Beyond ~8 w from the beam center the remaining power is < 1e-27.
  if (d - radius > 8.0 * w) return 0.0;
  if (radius - d > 8.0 * w) return 1.0;

  // Polar integration about the disk center; the beam sits at distance d.
  auto ring = [&](double rho) {
    double err = 0.0;
    const double v = quad::integrate(
        [&](double phi) {
          const double r2 = rho * rho + d * d - 2.0 * rho * d * std::cos(phi);
          return radial_intensity(spec, std::sqrt(std::max(r2, 0.0)));
        },
        0.0, kPi, 14, 1e-11, &err);
    return 2.0 * rho * v;
  };
  double err = 0.0;
  const double eff = quad::integrate(ring, 0.0, radius, 14, 1e-9, &err);
  if (!std::isfinite(eff) || err > 1e-8 * std::max(eff, 1e-12))
    throw numerical_error("coupling_efficiency: quadrature did not converge");
  return std::min(eff, 1.0);
}

double max_tolerable_offset(const ModeSpec& spec, double active_diameter_um,
                            double loss_budget) {
  spec.validate();
  if (loss_budget <= 0.0 || loss_budget >= 1.0)
    throw invalid_input("max_tolerable_offset: loss budget must be in (0, 1)");
  const double aligned_loss = 1.0 - coupling_efficiency(spec, active_diameter_um, 0.0);
  if (aligned_loss > loss_budget)
    throw invalid_input("max_tolerable_offset: aligned loss " +
                        std::to_string(aligned_loss) +
                        " already exceeds the budget");
  if (aligned_loss == loss_budget) return 0.0;

  double lo = 0.0;
  double hi = 0.5 * active_diameter_um + 8.0 * spec.waist_radius();
  while (hi - lo > 0.01) {
    const double mid = 0.5 * (lo + hi);
    const double loss = 1.0 - coupling_efficiency(spec, active_diameter_um, mid);
    (loss <= loss_budget ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ToleranceCurve tolerance_curve(const ModeSpec& spec,
                               const std::vector<double>& diameters_um,
                               const std::vector<double>& offsets_um) {
  if (diameters_um.empty() || offsets_um.empty())
    throw invalid_input("tolerance_curve: grids must be nonempty");
  ToleranceCurve out;
  out.diameters_um = diameters_um;
  out.offsets_um = offsets_um;
  out.loss.resize(diameters_um.size());
  for (std::size_t i = 0; i < diameters_um.size(); ++i) {
    out.loss[i].resize(offsets_um.size());
    for (std::size_t j = 0; j < offsets_um.size(); ++j) {
      try {
        out.loss[i][j] =
            1.0 - coupling_efficiency(spec, diameters_um[i], offsets_um[j]);
      } catch (const numerical_error& e) {
        throw numerical_error("tolerance_curve at D=" +
                              std::to_string(diameters_um[i]) + " offset=" +
                              std::to_string(offsets_um[j]) + ": " + e.what());
      }
    }
  }
  return out;
}

}  // namespace tofbeam
