#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "tofbeam/errors.hpp"
#include "tofbeam/stack.hpp"

using namespace tofbeam;

namespace {
using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

// Independent oracle: solve the boundary-condition system layer by layer.
// Fields in layer j: E(z) = A_j e^{i q_j (z - z_j)} + B_j e^{-i q_j (z - z_j)},
// H proportional to N_j (A e^{...} - B e^{...}); E and H continuous at every
// interface. Unknowns: r, per-layer (A_j, B_j), t. Dense complex solve.
struct OracleResult {
  double R, T, A;
};

OracleResult field_matching_oracle(const StackSpec& s) {
  const std::size_t nl = s.layers.size();
  const std::size_t nu = 2 + 2 * nl;  // r, (A_j, B_j)..., t
  std::vector<std::vector<cd>> m(2 * (nl + 1), std::vector<cd>(nu, 0.0));
  std::vector<cd> rhs(2 * (nl + 1), 0.0);

  auto q = [&](std::size_t j) {
    return 2.0 * kPi * cd(s.layers[j].n, s.layers[j].k) / s.wavelength_nm;
  };
  auto phase = [&](std::size_t j) {
    return std::exp(cd(0, 1) * q(j) * s.layers[j].thickness_nm);
  };

  // Interface 0: ambient (1 + r) meets layer 0 at its local z = 0.
  // E: 1 + r = A_0 + B_0 ; H: n0 (1 - r) = N_0 (A_0 - B_0)
  m[0][0] = 1.0;   // r
  m[0][1] = -1.0;  // A_0
  m[0][2] = -1.0;  // B_0
  rhs[0] = -1.0;
  m[1][0] = -cd(s.ambient_n);
  m[1][1] = -cd(s.layers[0].n, s.layers[0].k);
  m[1][2] = cd(s.layers[0].n, s.layers[0].k);
  rhs[1] = -cd(s.ambient_n);

  for (std::size_t j = 0; j + 1 < nl; ++j) {
    const cd ph = phase(j);
    const cd nj(s.layers[j].n, s.layers[j].k);
    const cd nn(s.layers[j + 1].n, s.layers[j + 1].k);
    auto& re = m[2 * (j + 1)];
    auto& rh = m[2 * (j + 1) + 1];
    // A_j ph + B_j / ph = A_{j+1} + B_{j+1}
    re[1 + 2 * j] = ph;
    re[2 + 2 * j] = 1.0 / ph;
    re[3 + 2 * j] = -1.0;
    re[4 + 2 * j] = -1.0;
    // N_j (A_j ph - B_j / ph) = N_{j+1} (A_{j+1} - B_{j+1})
    rh[1 + 2 * j] = nj * ph;
    rh[2 + 2 * j] = -nj / ph;
    rh[3 + 2 * j] = -nn;
    rh[4 + 2 * j] = nn;
  }

  // Exit interface: layer nl-1 meets substrate (t, no backward wave).
  {
    const std::size_t j = nl - 1;
    const cd ph = phase(j);
    const cd nj(s.layers[j].n, s.layers[j].k);
    auto& re = m[2 * nl];
    auto& rh = m[2 * nl + 1];
    re[1 + 2 * j] = ph;
    re[2 + 2 * j] = 1.0 / ph;
    re[nu - 1] = -1.0;  // t
    rh[1 + 2 * j] = nj * ph;
    rh[2 + 2 * j] = -nj / ph;
    rh[nu - 1] = -cd(s.substrate_n);
  }

  // Gaussian elimination with partial pivoting.
  const std::size_t n = nu;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t piv = i;
    for (std::size_t r = i + 1; r < n; ++r)
      if (std::abs(m[r][i]) > std::abs(m[piv][i])) piv = r;
    std::swap(m[i], m[piv]);
    std::swap(rhs[i], rhs[piv]);
    for (std::size_t r = i + 1; r < n; ++r) {
      const cd f = m[r][i] / m[i][i];
      for (std::size_t c = i; c < n; ++c) m[r][c] -= f * m[i][c];
      rhs[r] -= f * rhs[i];
    }
  }
  std::vector<cd> x(n);
  for (std::size_t i = n; i-- > 0;) {
    cd acc = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= m[i][c] * x[c];
    x[i] = acc / m[i][i];
  }

  OracleResult out{};
  out.R = std::norm(x[0]);
  out.T = s.substrate_n / s.ambient_n * std::norm(x[n - 1]);
  out.A = 1.0 - out.R - out.T;
  return out;
}

StackSpec random_stack(std::mt19937& rng, int max_layers, bool lossy) {
  std::uniform_int_distribution<int> nl(1, max_layers);
  std::uniform_real_distribution<double> nd(1.0, 4.0), td(5.0, 600.0), kd(0.0, 0.5);
  StackSpec s;
  s.ambient_n = nd(rng);
  s.substrate_n = nd(rng);
  s.wavelength_nm = 1550.0;
  const int count = nl(rng);
  for (int i = 0; i < count; ++i)
    s.layers.push_back({td(rng), nd(rng), lossy ? kd(rng) : 0.0});
  return s;
}

StackSpec dbr13(double ambient, double substrate) {
  StackSpec s;
  s.ambient_n = ambient;
  s.substrate_n = substrate;
  s.wavelength_nm = 1550.0;
  for (int i = 0; i < 13; ++i)
    s.layers.push_back(i % 2 == 0 ? Layer{141.7, 2.735, 0.0} : Layer{266.7, 1.453, 0.0});
  return s;
}
}  // namespace

TEST_CASE("index-matched layer is transparent") {
  StackSpec s;
  s.layers = {{500.0, 1.0, 0.0}};
  const auto r = tmm_response(s);
  CHECK(std::abs(r.reflectance) < 1e-15);
  CHECK(r.transmittance == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.absorptance) < 1e-12);
}

TEST_CASE("quarter-wave layer matches the closed form") {
  const double n0 = 1.0, n1 = 1.453, ns = 2.735, wl = 1550.0;
  StackSpec s;
  s.ambient_n = n0;
  s.substrate_n = ns;
  s.wavelength_nm = wl;
  s.layers = {{wl / (4.0 * n1), n1, 0.0}};
  const double expected = std::pow((n0 * ns - n1 * n1) / (n0 * ns + n1 * n1), 2);
  CHECK(tmm_response(s).reflectance == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("13-layer quarter-wave DBR is a > 0.99 reflector at 1550 nm") {
  const auto s = dbr13(1.453, 3.48);
  const auto tmm = tmm_response(s);
  const auto oracle = field_matching_oracle(s);
  CHECK(tmm.reflectance > 0.99);
  CHECK(oracle.R > 0.99);
  CHECK(tmm.reflectance == doctest::Approx(oracle.R).epsilon(1e-9));
}

TEST_CASE("energy conservation on randomized stacks") {
  std::mt19937 rng(4242);
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_stack(rng, 8, i % 2 == 0);
    const auto r = tmm_response(s);
    CHECK(std::abs(r.reflectance + r.transmittance + r.absorptance - 1.0) < 1e-9);
    CHECK(r.reflectance >= 0.0);
    CHECK(r.reflectance <= 1.0);
    CHECK(r.transmittance >= 0.0);
    CHECK(r.transmittance <= 1.0);
    CHECK(r.absorptance >= -1e-12);
    double layer_sum = 0.0;
    for (double a : r.per_layer_absorption) layer_sum += a;
    CHECK(std::abs(layer_sum - r.absorptance) < 1e-9);
  }
}

TEST_CASE("lossless stacks absorb nothing") {
  std::mt19937 rng(7);
  for (int i = 0; i < 300; ++i) {
    const auto r = tmm_response(random_stack(rng, 8, false));
    CHECK(std::abs(r.absorptance) < 1e-12);
  }
}

TEST_CASE("reversing a symmetric lossless stack leaves R unchanged") {
  std::mt19937 rng(11);
  for (int i = 0; i < 100; ++i) {
    auto s = random_stack(rng, 4, false);
    // make it symmetric: mirror the layers and equalize the end media
    auto mirrored = s.layers;
    for (auto it = s.layers.rbegin(); it != s.layers.rend(); ++it) mirrored.push_back(*it);
    s.layers = mirrored;
    s.substrate_n = s.ambient_n;
    const double r1 = tmm_response(s).reflectance;
    std::reverse(s.layers.begin(), s.layers.end());
    CHECK(std::abs(tmm_response(s).reflectance - r1) < 1e-12);
  }
}

TEST_CASE("TMM matches the field-matching oracle on random stacks") {
  std::mt19937 rng(2024);
  for (int i = 0; i < 200; ++i) {
    const auto s = random_stack(rng, 5, i % 2 == 0);
    const auto tmm = tmm_response(s);
    const auto oracle = field_matching_oracle(s);
    CHECK(std::abs(tmm.reflectance - oracle.R) < 1e-9);
    CHECK(std::abs(tmm.transmittance - oracle.T) < 1e-9);
    CHECK(std::abs(tmm.absorptance - oracle.A) < 1e-9);
  }
}

TEST_CASE("a half-wave lossless layer is optically inert") {
  std::mt19937 rng(33);
  std::uniform_real_distribution<double> nd(1.2, 3.5);
  for (int i = 0; i < 100; ++i) {
    auto s = random_stack(rng, 5, false);
    const auto before = tmm_response(s);
    const double nh = nd(rng);
    const Layer half{s.wavelength_nm / (2.0 * nh), nh, 0.0};
    auto pos = static_cast<std::size_t>(rng() % (s.layers.size() + 1));
    s.layers.insert(s.layers.begin() + pos, half);
    const auto after = tmm_response(s);
    CHECK(std::abs(after.reflectance - before.reflectance) < 1e-9);
    CHECK(std::abs(after.transmittance - before.transmittance) < 1e-9);
  }
}

TEST_CASE("builtin stack layout") {
  const auto s = reference_stack(5.0, 4.0);  // placeholder MoSi index
  CHECK(s.layers.size() == 18);
  double total = 0.0;
  for (const auto& l : s.layers) total += l.thickness_nm;
  CHECK(total > 2800.0);  // "~3 um" dielectric stack
  CHECK(total < 3100.0);
  // DBR block: 13 layers after AR(3) + cap + absorber
  double dbr = 0.0;
  for (std::size_t i = 5; i < 18; ++i) dbr += s.layers[i].thickness_nm;
  CHECK(dbr == doctest::Approx(7 * 141.7 + 6 * 266.7).epsilon(1e-12));
  // default ordering: high-index aSi adjacent to the absorber
  CHECK(s.layers[5].n == doctest::Approx(2.735));
  const auto low = reference_stack(5.0, 4.0, DbrOrdering::LowIndexAdjacentToAbsorber);
  CHECK(low.layers[5].n == doctest::Approx(1.453));
  CHECK(low.layers[5].thickness_nm == doctest::Approx(266.7));

  const auto resp = tmm_response(s);
  CHECK(std::abs(resp.reflectance + resp.transmittance + resp.absorptance - 1.0) < 1e-9);
  // only the MoSi layer absorbs
  for (std::size_t i = 0; i < 18; ++i)
    if (i != 4) CHECK(std::abs(resp.per_layer_absorption[i]) < 1e-12);
  CHECK(resp.per_layer_absorption[4] == doctest::Approx(resp.absorptance).epsilon(1e-9));
}

TEST_CASE("multipass path length") {
  CHECK(multipass_path_length(1.0, 3.0) == doctest::Approx(3.0));
  CHECK(multipass_path_length(0.5, 3.0) == doctest::Approx(6.0));
  CHECK(multipass_path_length(0.01, 3.0) == doctest::Approx(300.0));
  CHECK_THROWS_AS(multipass_path_length(0.0, 3.0), invalid_input);
  CHECK_THROWS_AS(multipass_path_length(1.1, 3.0), invalid_input);
}

TEST_CASE("degenerate stack inputs are rejected") {
  StackSpec s;
  CHECK_THROWS_AS(tmm_response(s), invalid_input);  // no layers
  s.layers = {{-5.0, 1.5, 0.0}};
  CHECK_THROWS_AS(tmm_response(s), invalid_input);
  CHECK_THROWS_AS(reference_stack(-1.0, 0.0), invalid_input);
}
