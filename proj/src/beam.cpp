#include "tofbeam/beam.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/laguerre.hpp>

#include <cmath>
#include <numbers>

#include "tofbeam/errors.hpp"

namespace tofbeam {

namespace {
constexpr int kMaxP = 4;
constexpr double kPi = std::numbers::pi;

using quad = boost::math::quadrature::gauss_kronrod<double, 31>;
}  // namespace

void ModeSpec::validate() const {
  if (mfd_um <= 0.0) throw invalid_input("ModeSpec: mfd must be > 0");
  if (wavelength_um <= 0.0) throw invalid_input("ModeSpec: wavelength must be > 0");
  if (modes.empty()) throw invalid_input("ModeSpec: mode list is empty");
  double total = 0.0;
  for (const auto& m : modes) {
    if (m.l != 0)
      throw invalid_input("ModeSpec: only l = 0 modes are supported");
    if (m.p < 0 || m.p > kMaxP)
      throw invalid_input("ModeSpec: p must be in [0, 4]");
    if (m.weight < 0.0 || m.weight > 1.0)
      throw invalid_input("ModeSpec: mode weight must be in [0, 1]");
    total += m.weight;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw invalid_input("ModeSpec: mode weights must sum to 1");
}

double lg_radial_intensity(int p, double w_um, double r_um) {
  // Normalized l=0 LG intensity: (2/pi w^2) [L_p(2 r^2/w^2)]^2 exp(-2 r^2/w^2).
  const double u = 2.0 * r_um * r_um / (w_um * w_um);
  const double lp = boost::math::laguerre(static_cast<unsigned>(p), u);
  return 2.0 / (kPi * w_um * w_um) * lp * lp * std::exp(-u);
}

double intensity_2d(const ModeSpec& spec, double x_um, double y_um) {
  spec.validate();
  const double dx = x_um - spec.center_x_um;
  const double dy = y_um - spec.center_y_um;
  const double r = std::hypot(dx, dy);
  const double w = spec.waist_radius();
  double sum = 0.0;
  for (const auto& m : spec.modes) sum += m.weight * lg_radial_intensity(m.p, w, r);
  return sum;
}

double lg_marginal(int p, double w_um, double x_um) {
  if (p == 0) {
    // Gaussian marginal: sqrt(2/pi)/w exp(-2 x^2/w^2).
    return std::sqrt(2.0 / kPi) / w_um * std::exp(-2.0 * x_um * x_um / (w_um * w_um));
  }
  const double ylim = 6.0 * w_um;
  double err = 0.0;
  const double val = quad::integrate(
      [&](double y) { return lg_radial_intensity(p, w_um, std::hypot(x_um, y)); },
      0.0, ylim, 12, 1e-8, &err);
  if (!(std::isfinite(val)) || err > 1e-8 * std::max(std::abs(val), 1e-300) + 1e-14)
    throw numerical_error("lg_marginal: quadrature did not converge");
  return 2.0 * val;
}

double marginal_1d(const ModeSpec& spec, double x_um) {
  spec.validate();
  const double w = spec.waist_radius();
  const double dx = x_um - spec.center_x_um;
  double sum = 0.0;
  for (const auto& m : spec.modes) sum += m.weight * lg_marginal(m.p, w, dx);
  return sum;
}

double rayleigh_range(double mfd_um, double wavelength_um) {
  if (mfd_um <= 0.0 || wavelength_um <= 0.0)
    throw invalid_input("rayleigh_range: arguments must be > 0");
  const double w0 = 0.5 * mfd_um;
  return kPi * w0 * w0 / wavelength_um;
}

double beam_radius_at(double w0_um, double z_r_um, double z_um) {
  if (w0_um <= 0.0 || z_r_um <= 0.0)
    throw invalid_input("beam_radius_at: w0 and z_R must be > 0");
  const double q = z_um / z_r_um;
  return w0_um * std::sqrt(1.0 + q * q);
}

double infer_path_length(double mfd_initial_um, double mfd_final_um,
                         double wavelength_um) {
  if (mfd_initial_um <= 0.0 || wavelength_um <= 0.0)
    throw invalid_input("infer_path_length: mfd and wavelength must be > 0");
  if (mfd_final_um < mfd_initial_um)
    throw invalid_input(
        "infer_path_length: final MFD below initial MFD violates the "
        "divergence model");
  if (mfd_final_um == mfd_initial_um) return 0.0;
  const double w0 = 0.5 * mfd_initial_um;
  const double wf = 0.5 * mfd_final_um;
  const double zr = rayleigh_range(mfd_initial_um, wavelength_um);
  const double ratio = wf / w0;
  return zr * std::sqrt(ratio * ratio - 1.0);
}

}  // namespace tofbeam
