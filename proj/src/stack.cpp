#include "tofbeam/stack.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "tofbeam/errors.hpp"

namespace tofbeam {

namespace {
using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

struct Mat2 {
  cd a, b, c, d;
  Mat2 operator*(const Mat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d,
            c * o.a + d * o.c, c * o.b + d * o.d};
  }
};

// Characteristic matrix of one layer, exp(-i w t) convention, N = n - i k.
Mat2 layer_matrix(const Layer& l, double wavelength_nm) {
  const cd N(l.n, -l.k);
  const cd delta = 2.0 * kPi * N * l.thickness_nm / wavelength_nm;
  const cd cosd = std::cos(delta);
  const cd sind = std::sin(delta);
  return {cosd, cd(0, 1) * sind / N, cd(0, 1) * N * sind, cosd};
}
}  // namespace

void StackSpec::validate() const {
  if (layers.empty()) throw invalid_input("StackSpec: layer list is empty");
  if (ambient_n <= 0.0 || substrate_n <= 0.0 || wavelength_nm <= 0.0)
    throw invalid_input("StackSpec: indices and wavelength must be > 0");
  for (const auto& l : layers) {
    if (l.thickness_nm <= 0.0) throw invalid_input("StackSpec: layer thickness must be > 0");
    if (l.n <= 0.0) throw invalid_input("StackSpec: layer n must be > 0");
    if (l.k < 0.0) throw invalid_input("StackSpec: layer k must be >= 0");
  }
}

StackResponse tmm_response(const StackSpec& stack) {
  stack.validate();
  const cd eta0(stack.ambient_n, 0.0);
  const cd etas(stack.substrate_n, 0.0);

  Mat2 total{1, 0, 0, 1};
  for (const auto& l : stack.layers) total = total * layer_matrix(l, stack.wavelength_nm);

  const cd bb = total.a + total.b * etas;
  const cd cc = total.c + total.d * etas;
  const cd denom = eta0 * bb + cc;
  if (std::abs(denom) < 1e-300)
    throw numerical_error("tmm_response: singular transfer matrix");

  const cd r = (eta0 * bb - cc) / denom;
  const cd t = 2.0 * eta0 / denom;
  const double s_inc = eta0.real();

  StackResponse out;
  out.reflectance = std::norm(r);
  out.transmittance = etas.real() * std::norm(t) / s_inc;

  // Back-propagate (E, H) from the substrate interface to resolve the
  // Poynting flux at every internal interface.
  const std::size_t n = stack.layers.size();
  cd e = t;
  cd h = etas * t;
  std::vector<double> flux(n + 1);  // flux[j] at the front face of layer j
  flux[n] = (e * std::conj(h)).real();
  for (std::size_t j = n; j-- > 0;) {
    const Mat2 m = layer_matrix(stack.layers[j], stack.wavelength_nm);
    const cd e2 = m.a * e + m.b * h;
    const cd h2 = m.c * e + m.d * h;
    e = e2;
    h = h2;
    flux[j] = (e * std::conj(h)).real();
  }

  out.per_layer_absorption.resize(n);
  double a_total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out.per_layer_absorption[j] = (flux[j] - flux[j + 1]) / s_inc;
    a_total += out.per_layer_absorption[j];
  }
  out.absorptance = a_total;
  return out;
}

StackSpec reference_stack(double mosi_n, double mosi_k, DbrOrdering ordering) {
  if (mosi_n <= 0.0 || mosi_k < 0.0)
    throw invalid_input("reference_stack: invalid MoSi index");

  const Layer sio2_qw{266.7, 1.453, 0.0};
  const Layer asi_qw{141.7, 2.735, 0.0};

  StackSpec s;
  s.ambient_n = 1.453;    // silica-like fiber medium
  s.substrate_n = 3.48;   // silicon wafer
  s.wavelength_nm = 1550.0;

  // Light enters through the AR coat (topmost deposited layer first).
  s.layers.push_back({66.7, 2.735, 0.0});
  s.layers.push_back({122.4, 1.453, 0.0});
  s.layers.push_back({78.5, 2.735, 0.0});
  s.layers.push_back({2.0, 2.735, 0.0});  // aSi cap
  s.layers.push_back({4.1, mosi_n, mosi_k});
  // 13-layer DBR below the absorber; the layer adjacent to the absorber
  // alternates from there down to the substrate.
  const Layer first =
      (ordering == DbrOrdering::HighIndexAdjacentToAbsorber) ? asi_qw : sio2_qw;
  const Layer second =
      (ordering == DbrOrdering::HighIndexAdjacentToAbsorber) ? sio2_qw : asi_qw;
  for (int i = 0; i < 13; ++i) s.layers.push_back((i % 2 == 0) ? first : second);
  return s;
}

double multipass_path_length(double per_pass_absorption, double single_pass_path_um) {
  if (per_pass_absorption <= 0.0 || per_pass_absorption > 1.0)
    throw invalid_input("multipass_path_length: per-pass absorption must be in (0, 1]");
  if (single_pass_path_um <= 0.0)
    throw invalid_input("multipass_path_length: path must be > 0");
  return single_pass_path_um / per_pass_absorption;
}

}  // namespace tofbeam
