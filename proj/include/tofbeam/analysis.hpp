#pragma once

#include <cstdint>
#include <vector>

#include "tofbeam/beam.hpp"
#include "tofbeam/detector.hpp"

namespace tofbeam {

/// Histogram of pulse-pair timing differences.
struct DtHistogram {
  double bin_width_ps = 0.0;
  std::vector<double> bin_edges_ps;      // size = counts.size() + 1
  std::vector<std::uint64_t> counts;

  double bin_center(std::size_t i) const {
    return 0.5 * (bin_edges_ps[i] + bin_edges_ps[i + 1]);
  }
};

/// Locked timing comb: teeth at offset + k * pitch.
struct CombLock {
  double pitch_ps = 0.0;
  double offset_ps = 0.0;  ///< canonicalized to (-pitch/2, pitch/2]
  bool low_confidence = false;
};

/// Per-column detection counts; x positions are in the beam frame
/// (column 0 of the comb at x = 0) and uniformly spaced by the column pitch.
struct ColumnProfile {
  std::vector<double> x_um;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;
  std::uint64_t rejected = 0;
};

/// Result of a Laguerre-Gaussian decomposition fit to a column profile.
struct ModeFitResult {
  double mfd_um = 0.0;
  double mfd_sigma_um = 0.0;
  double center_x_um = 0.0;
  std::vector<double> weights;        ///< index = p
  std::vector<double> weight_sigmas;  ///< 1-sigma per weight
  double chi2_per_dof = 0.0;
  int selected_max_p = 0;
};

DtHistogram build_histogram(const std::vector<TimeTagPair>& pairs, double bin_width_ps);

/// Locks pitch and offset by grid search (pitch within +-10% of the prior,
/// count mass in half-width pitch/4 windows) followed by a weighted linear
/// refinement over tooth assignments. Single-tooth histograms fall back to the
/// prior pitch and are flagged low-confidence.
CombLock lock_comb(const DtHistogram& hist, double expected_pitch_ps);

/// Assigns each pair to its nearest comb tooth (Voronoi, optionally shrunk by
/// `guard`); teeth beyond the device's column range count as rejected.
ColumnProfile bin_to_columns(const std::vector<TimeTagPair>& pairs,
                             const CombLock& comb, const DetectorGeometry& geom,
                             double guard = 0.0);

/// Weighted least-squares LG decomposition of a column profile. The
/// per-column model integrates the mode intensity over each wire stripe,
/// windowed by the active-area disk. Fits are run with increasing max p and
/// the smallest model whose successor improves chi^2/dof by less than 2 is
/// reported.
ModeFitResult fit_modes(const ColumnProfile& profile, const DetectorGeometry& geom,
                        int max_p);

/// Fractional power outside |x - center| > x_abs for a fit (analytic marginal
/// integral) ...
double tail_power_fit(const ModeFitResult& fit, double x_abs_um);

/// ... or for a measured profile (count fraction in columns beyond x_abs of
/// the given center).
double tail_power_profile(const ColumnProfile& profile, double center_um,
                          double x_abs_um);

}  // namespace tofbeam
