#include "tofbeam/analysis.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "tofbeam/errors.hpp"

namespace tofbeam {

namespace {
constexpr double kPi = std::numbers::pi;
using fixed_gauss = boost::math::quadrature::gauss<double, 30>;
using adaptive_quad = boost::math::quadrature::gauss_kronrod<double, 31>;

double canonical_offset(double offset, double pitch) {
  double o = std::fmod(offset, pitch);
  if (o > 0.5 * pitch) o -= pitch;
  if (o <= -0.5 * pitch) o += pitch;
  return o;
}
}  // namespace

DtHistogram build_histogram(const std::vector<TimeTagPair>& pairs, double bin_width_ps) {
  if (pairs.empty()) throw invalid_input("build_histogram: empty pair list");
  if (bin_width_ps <= 0.0) throw invalid_input("build_histogram: bin width must be > 0");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& p : pairs) {
    lo = std::min(lo, p.dt_ps());
    hi = std::max(hi, p.dt_ps());
  }
  // Edges on multiples of the bin width so noiseless combs land mid-bin-range.
  const long long first = static_cast<long long>(std::floor(lo / bin_width_ps));
  const long long last = static_cast<long long>(std::floor(hi / bin_width_ps));
  const std::size_t nbins = static_cast<std::size_t>(last - first + 1);

  DtHistogram h;
  h.bin_width_ps = bin_width_ps;
  h.bin_edges_ps.resize(nbins + 1);
  for (std::size_t i = 0; i <= nbins; ++i)
    h.bin_edges_ps[i] = (first + static_cast<long long>(i)) * bin_width_ps;
  h.counts.assign(nbins, 0);
  for (const auto& p : pairs) {
    auto idx = static_cast<std::size_t>(
        std::floor(p.dt_ps() / bin_width_ps) - first);
    if (idx >= nbins) idx = nbins - 1;  // top edge
    ++h.counts[idx];
  }
  return h;
}

CombLock lock_comb(const DtHistogram& hist, double expected_pitch_ps) {
  if (expected_pitch_ps <= 0.0)
    throw invalid_input("lock_comb: pitch prior must be > 0");

  std::uint64_t total = 0;
  for (auto c : hist.counts) total += c;
  if (total == 0) throw invalid_input("lock_comb: empty histogram");

  // Coarse grid search: fold bin centers modulo each candidate pitch and find
  // the offset window (half-width pitch/4) holding the most mass.
  double best_pitch = expected_pitch_ps;
  double best_offset = 0.0;
  std::uint64_t best_score = 0;
  constexpr int kPitchSteps = 201;
  constexpr int kFoldBins = 512;
  for (int ip = 0; ip < kPitchSteps; ++ip) {
    const double pitch =
        expected_pitch_ps * (0.9 + 0.2 * ip / (kPitchSteps - 1));
    std::vector<std::uint64_t> fold(kFoldBins, 0);
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      if (hist.counts[i] == 0) continue;
      double f = std::fmod(hist.bin_center(i), pitch);
      if (f < 0) f += pitch;
      fold[static_cast<std::size_t>(f / pitch * kFoldBins) % kFoldBins] += hist.counts[i];
    }
    // Sliding circular window of width pitch/2.
    const int win = kFoldBins / 4;
    std::uint64_t acc = 0;
    for (int j = -win; j <= win; ++j) acc += fold[(j + kFoldBins) % kFoldBins];
    for (int c = 0; c < kFoldBins; ++c) {
      if (acc > best_score) {
        best_score = acc;
        best_pitch = pitch;
        best_offset = (c + 0.5) * pitch / kFoldBins;
      }
      acc -= fold[(c - win + kFoldBins) % kFoldBins];
      acc += fold[(c + win + 1) % kFoldBins];
    }
  }

  // Tooth assignment at the coarse lock.
  auto tooth_of = [](double t, double offset, double pitch) {
    return static_cast<long long>(std::llround((t - offset) / pitch));
  };
  auto distinct_teeth = [&](double offset, double pitch) {
    std::vector<long long> teeth;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      if (hist.counts[i] == 0) continue;
      const long long k = tooth_of(hist.bin_center(i), offset, pitch);
      if (std::find(teeth.begin(), teeth.end(), k) == teeth.end()) teeth.push_back(k);
    }
    return teeth;
  };

  CombLock lock;
  const auto teeth = distinct_teeth(best_offset, best_pitch);
  if (teeth.size() < 2) {
    // Single occupied tooth: pitch unresolvable, fall back to the prior.
    double mean = 0.0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
      mean += hist.counts[i] * hist.bin_center(i);
    mean /= total;
    lock.pitch_ps = expected_pitch_ps;
    lock.offset_ps = canonical_offset(mean, expected_pitch_ps);
    lock.low_confidence = true;
    return lock;
  }

  // Refine (offset, pitch) by count-weighted least squares over
  // center_i = offset + k_i * pitch, reassigning teeth between rounds.
  double pitch = best_pitch;
  double offset = best_offset;
  for (int round = 0; round < 3; ++round) {
    double sw = 0, sk = 0, skk = 0, st = 0, skt = 0;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
      if (hist.counts[i] == 0) continue;
      const double c = static_cast<double>(hist.counts[i]);
      const double t = hist.bin_center(i);
      const double k = static_cast<double>(tooth_of(t, offset, pitch));
      sw += c;
      sk += c * k;
      skk += c * k * k;
      st += c * t;
      skt += c * k * t;
    }
    const double det = sw * skk - sk * sk;
    if (std::abs(det) < 1e-12) break;
    offset = (skk * st - sk * skt) / det;
    pitch = (sw * skt - sk * st) / det;
  }
  lock.pitch_ps = pitch;
  lock.offset_ps = canonical_offset(offset, pitch);
  return lock;
}

ColumnProfile bin_to_columns(const std::vector<TimeTagPair>& pairs,
                             const CombLock& comb, const DetectorGeometry& geom,
                             double guard) {
  if (comb.pitch_ps <= 0.0) throw invalid_input("bin_to_columns: comb not locked");
  if (guard < 0.0 || guard >= 1.0)
    throw invalid_input("bin_to_columns: guard must be in [0, 1)");
  geom.validate();

  const int max_col = geom.max_column();
  ColumnProfile profile;
  profile.x_um.resize(geom.n_columns);
  profile.counts.assign(geom.n_columns, 0);
  for (int k = -max_col; k <= max_col; ++k)
    profile.x_um[k + max_col] = k * geom.column_pitch_um;

  const double accept_halfwidth = 0.5 * comb.pitch_ps * (1.0 - guard);
  for (const auto& p : pairs) {
    const double t = p.dt_ps() - comb.offset_ps;
    const long long k = std::llround(t / comb.pitch_ps);
    const double resid = t - k * comb.pitch_ps;
    if (std::abs(resid) > accept_halfwidth || std::llabs(k) > max_col) {
      ++profile.rejected;
      continue;
    }
    ++profile.counts[static_cast<std::size_t>(k + max_col)];
    ++profile.total;
  }
  return profile;
}

namespace {

// Marginal of one (l=0, p) mode at x, windowed in y by the active-area disk
// |y| <= Y(x). Analytic for p = 0, fixed-order quadrature otherwise.
double disk_marginal(int p, double w, double dx, double ylim) {
  if (ylim <= 0.0) return 0.0;
  if (p == 0) {
    return std::sqrt(2.0 / kPi) / w * std::exp(-2.0 * dx * dx / (w * w)) *
           std::erf(std::numbers::sqrt2 * ylim / w);
  }
  const double hi = std::min(ylim, 6.0 * w);
  return 2.0 * fixed_gauss::integrate(
                   [&](double y) {
                     return lg_radial_intensity(p, w, std::hypot(dx, y));
                   },
                   0.0, hi);
}

struct FitContext {
  std::vector<double> x;       // column x positions
  std::vector<double> counts;  // observed counts
  std::vector<double> sigma;   // Poisson sigma with variance floor 1
  double total = 0.0;
  double half_width = 0.0;  // wire stripe half-width
  double disk_radius = 0.0;
  int max_p = 0;

  // 3-point Gauss-Legendre abscissae on [-1, 1].
  static constexpr double kNodes[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
  static constexpr double kWeights[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};

  // Unnormalized per-column mass of mode p, integrated over the wire stripe
  // and windowed by the disk.
  double column_mass(int p, double center, double w, std::size_t k) const {
    double acc = 0.0;
    for (int g = 0; g < 3; ++g) {
      const double xx = x[k] + half_width * kNodes[g];
      const double r2 = disk_radius * disk_radius - xx * xx;
      const double ylim = r2 > 0.0 ? std::sqrt(r2) : 0.0;
      acc += kWeights[g] * disk_marginal(p, w, xx - center, ylim);
    }
    return acc * half_width;
  }

  // theta = (center, log w, q_1..q_max_p); a_p = q_p, a_0 = 1 - sum q.
  std::vector<double> model(const std::vector<double>& theta) const {
    const double center = theta[0];
    const double w = std::exp(theta[1]);
    std::vector<double> a(max_p + 1, 0.0);
    double qsum = 0.0;
    for (int p = 1; p <= max_p; ++p) {
      a[p] = theta[1 + p];
      qsum += a[p];
    }
    a[0] = 1.0 - qsum;

    std::vector<double> mu(x.size(), 0.0);
    double norm = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      double f = 0.0;
      for (int p = 0; p <= max_p; ++p)
        if (a[p] != 0.0) f += a[p] * column_mass(p, center, w, k);
      mu[k] = f;
      norm += f;
    }
    if (norm <= 0.0) throw numerical_error("fit_modes: vanishing model mass");
    for (auto& m : mu) m *= total / norm;
    return mu;
  }

  double chi2(const std::vector<double>& theta) const {
    const auto mu = model(theta);
    double c2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double r = (mu[k] - counts[k]) / sigma[k];
      c2 += r * r;
    }
    return c2;
  }
};

void clamp_weights(std::vector<double>& theta, int max_p) {
  double qsum = 0.0;
  for (int p = 1; p <= max_p; ++p) {
    theta[1 + p] = std::clamp(theta[1 + p], 0.0, 1.0);
    qsum += theta[1 + p];
  }
  if (qsum > 1.0)
    for (int p = 1; p <= max_p; ++p) theta[1 + p] /= qsum;
}

// Solve A x = b for a small symmetric system (Gaussian elimination with
// partial pivoting). Returns false if singular.
bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b,
                 std::vector<double>& x) {
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t piv = i;
    for (std::size_t r = i + 1; r < n; ++r)
      if (std::abs(a[r][i]) > std::abs(a[piv][i])) piv = r;
    if (std::abs(a[piv][i]) < 1e-300) return false;
    std::swap(a[i], a[piv]);
    std::swap(b[i], b[piv]);
    for (std::size_t r = i + 1; r < n; ++r) {
      const double f = a[r][i] / a[i][i];
      for (std::size_t c = i; c < n; ++c) a[r][c] -= f * a[i][c];
      b[r] -= f * b[i];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= a[i][c] * x[c];
    x[i] = s / a[i][i];
  }
  return true;
}

bool invert_dense(const std::vector<std::vector<double>>& a,
                  std::vector<std::vector<double>>& inv) {
  const std::size_t n = a.size();
  inv.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> e(n, 0.0), col;
    e[j] = 1.0;
    if (!solve_dense(a, e, col)) return false;
    for (std::size_t i = 0; i < n; ++i) inv[i][j] = col[i];
  }
  return true;
}

struct LmFit {
  std::vector<double> theta;
  std::vector<std::vector<double>> covariance;
  double chi2 = 0.0;
  int dof = 0;
};

LmFit levenberg_marquardt(const FitContext& ctx, std::vector<double> theta) {
  const std::size_t np = theta.size();
  const std::size_t nk = ctx.x.size();

  auto residuals = [&](const std::vector<double>& th) {
    const auto mu = ctx.model(th);
    std::vector<double> r(nk);
    for (std::size_t k = 0; k < nk; ++k) r[k] = (mu[k] - ctx.counts[k]) / ctx.sigma[k];
    return r;
  };

  auto jacobian = [&](const std::vector<double>& th, const std::vector<double>& r0) {
    std::vector<std::vector<double>> jac(nk, std::vector<double>(np, 0.0));
    for (std::size_t j = 0; j < np; ++j) {
      const double h = 1e-6 * std::max(1.0, std::abs(th[j]));
      auto th2 = th;
      th2[j] += h;
      const auto r1 = residuals(th2);
      for (std::size_t k = 0; k < nk; ++k) jac[k][j] = (r1[k] - r0[k]) / h;
    }
    return jac;
  };

  auto r = residuals(theta);
  double chi2 = 0.0;
  for (auto v : r) chi2 += v * v;

  double lambda = 1e-3;
  bool converged = false;
  for (int iter = 0; iter < 200 && !converged; ++iter) {
    const auto jac = jacobian(theta, r);
    std::vector<std::vector<double>> jtj(np, std::vector<double>(np, 0.0));
    std::vector<double> jtr(np, 0.0);
    for (std::size_t k = 0; k < nk; ++k)
      for (std::size_t i = 0; i < np; ++i) {
        jtr[i] += jac[k][i] * r[k];
        for (std::size_t j = 0; j < np; ++j) jtj[i][j] += jac[k][i] * jac[k][j];
      }

    bool stepped = false;
    for (int trial = 0; trial < 30; ++trial) {
      auto damped = jtj;
      for (std::size_t i = 0; i < np; ++i)
        damped[i][i] += lambda * std::max(jtj[i][i], 1e-12);
      std::vector<double> neg_jtr(np), delta;
      for (std::size_t i = 0; i < np; ++i) neg_jtr[i] = -jtr[i];
      if (!solve_dense(damped, neg_jtr, delta)) {
        lambda *= 10.0;
        continue;
      }
      auto cand = theta;
      double step_norm = 0.0;
      for (std::size_t i = 0; i < np; ++i) {
        cand[i] += delta[i];
        step_norm += delta[i] * delta[i];
      }
      clamp_weights(cand, ctx.max_p);
      double cand_chi2;
      try {
        const auto cr = residuals(cand);
        cand_chi2 = 0.0;
        for (auto v : cr) cand_chi2 += v * v;
      } catch (const numerical_error&) {
        lambda *= 10.0;
        continue;
      }
      if (cand_chi2 <= chi2) {
        if (chi2 - cand_chi2 < 1e-10 * (chi2 + 1e-10) || step_norm < 1e-18)
          converged = true;
        theta = cand;
        chi2 = cand_chi2;
        r = residuals(theta);
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) converged = true;  // no downhill direction left
  }

  LmFit out;
  out.theta = theta;
  out.chi2 = chi2;
  out.dof = static_cast<int>(nk) - static_cast<int>(np);
  const auto jac = jacobian(theta, r);
  std::vector<std::vector<double>> jtj(np, std::vector<double>(np, 0.0));
  for (std::size_t k = 0; k < nk; ++k)
    for (std::size_t i = 0; i < np; ++i)
      for (std::size_t j = 0; j < np; ++j) jtj[i][j] += jac[k][i] * jac[k][j];
  if (!invert_dense(jtj, out.covariance))
    throw numerical_error("fit_modes: singular normal matrix at optimum");
  return out;
}

ModeFitResult finish_fit(const FitContext& ctx, const LmFit& lm) {
  ModeFitResult res;
  const double w = std::exp(lm.theta[1]);
  res.center_x_um = lm.theta[0];
  res.mfd_um = 2.0 * w;
  res.mfd_sigma_um = 2.0 * w * std::sqrt(std::max(lm.covariance[1][1], 0.0));
  res.selected_max_p = ctx.max_p;
  res.chi2_per_dof = lm.dof > 0 ? lm.chi2 / lm.dof : lm.chi2;

  res.weights.assign(ctx.max_p + 1, 0.0);
  res.weight_sigmas.assign(ctx.max_p + 1, 0.0);
  double qsum = 0.0, var0 = 0.0;
  for (int p = 1; p <= ctx.max_p; ++p) {
    res.weights[p] = lm.theta[1 + p];
    res.weight_sigmas[p] = std::sqrt(std::max(lm.covariance[1 + p][1 + p], 0.0));
    qsum += res.weights[p];
    for (int q = 1; q <= ctx.max_p; ++q) var0 += lm.covariance[1 + p][1 + q];
  }
  res.weights[0] = 1.0 - qsum;
  res.weight_sigmas[0] = std::sqrt(std::max(var0, 0.0));
  return res;
}

}  // namespace

ModeFitResult fit_modes(const ColumnProfile& profile, const DetectorGeometry& geom,
                        int max_p) {
  if (max_p < 0 || max_p > 4) throw invalid_input("fit_modes: max_p must be in [0, 4]");
  geom.validate();

  std::size_t occupied = 0;
  for (auto c : profile.counts)
    if (c > 0) ++occupied;
  if (occupied < 5)
    throw invalid_input("fit_modes: need at least 5 occupied columns");

  FitContext ctx;
  ctx.x = profile.x_um;
  ctx.half_width = 0.5 * geom.wire_width_um;
  ctx.disk_radius = 0.5 * geom.active_diameter_um;
  for (std::size_t k = 0; k < profile.counts.size(); ++k) {
    const double c = static_cast<double>(profile.counts[k]);
    ctx.counts.push_back(c);
    ctx.sigma.push_back(std::sqrt(std::max(c, 1.0)));
    ctx.total += c;
  }

  // Moments initialization.
  double mean = 0.0;
  for (std::size_t k = 0; k < ctx.x.size(); ++k) mean += ctx.counts[k] * ctx.x[k];
  mean /= ctx.total;
  double var = 0.0;
  for (std::size_t k = 0; k < ctx.x.size(); ++k)
    var += ctx.counts[k] * (ctx.x[k] - mean) * (ctx.x[k] - mean);
  var /= ctx.total;
  const double w_init = 2.0 * std::sqrt(var);
  if (w_init < 0.5 * geom.column_pitch_um)
    throw invalid_input("fit_modes: profile narrower than the column spacing");

  // Fit with increasing mode content; stop once one more p-mode no longer
  // improves chi^2/dof by at least 2.
  std::optional<LmFit> selected;
  FitContext selected_ctx = ctx;
  double prev_chi2dof = 0.0;
  for (int m = 0; m <= max_p; ++m) {
    ctx.max_p = m;
    std::vector<double> theta(2 + m, 0.0);
    theta[0] = mean;
    theta[1] = std::log(w_init);
    if (selected) {
      // warm start from the previous model
      theta[0] = selected->theta[0];
      theta[1] = selected->theta[1];
      for (int p = 1; p < m; ++p) theta[1 + p] = selected->theta[1 + p];
    }
    LmFit fit;
    try {
      fit = levenberg_marquardt(ctx, theta);
    } catch (const numerical_error&) {
      if (selected) break;  // keep the simpler converged model
      throw;
    }
    const double chi2dof = fit.dof > 0 ? fit.chi2 / fit.dof : fit.chi2;
    if (selected && prev_chi2dof - chi2dof < 2.0) break;
    selected = fit;
    selected_ctx = ctx;
    prev_chi2dof = chi2dof;
  }
  return finish_fit(selected_ctx, *selected);
}

double tail_power_fit(const ModeFitResult& fit, double x_abs_um) {
  if (x_abs_um < 0.0) throw invalid_input("tail_power: x_abs must be >= 0");
  const double w = 0.5 * fit.mfd_um;
  double inside = 0.0;
  for (std::size_t p = 0; p < fit.weights.size(); ++p) {
    if (fit.weights[p] == 0.0) continue;
    double part;
    if (p == 0) {
      part = std::erf(std::numbers::sqrt2 * x_abs_um / w);
    } else {
      part = 2.0 * adaptive_quad::integrate(
                       [&](double x) {
                         return lg_marginal(static_cast<int>(p), w, x);
                       },
                       0.0, x_abs_um, 10, 1e-9);
    }
    inside += fit.weights[p] * part;
  }
  return std::clamp(1.0 - inside, 0.0, 1.0);
}

double tail_power_profile(const ColumnProfile& profile, double center_um,
                          double x_abs_um) {
  if (x_abs_um < 0.0) throw invalid_input("tail_power: x_abs must be >= 0");
  if (profile.total == 0) throw invalid_input("tail_power: empty profile");
  std::uint64_t outside = 0;
  for (std::size_t k = 0; k < profile.counts.size(); ++k)
    if (std::abs(profile.x_um[k] - center_um) > x_abs_um) outside += profile.counts[k];
  return static_cast<double>(outside) / static_cast<double>(profile.total);
}

}  // namespace tofbeam
