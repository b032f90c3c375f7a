#pragma once

#include <cstdint>
#include <vector>

#include "tofbeam/beam.hpp"

namespace tofbeam {

/// Imaging-device geometry. Columns are indexed -K..K (n_columns odd) with
/// column 0 at x = 0; each column step adds path_increment_um of one-sided
/// delay line. Defaults reproduce the 215 ps timing pitch at 0.003 c.
struct DetectorGeometry {
  double column_pitch_um = 2.08;
  double wire_width_um = 0.12;
  int n_columns = 17;
  double path_increment_um = 96.75;  ///< one-sided path change per column
  double pulse_velocity_c = 0.003;   ///< fraction of c
  double jitter_sigma_ps = 10.0;     ///< per readout channel
  double active_diameter_um = 35.0;

  int max_column() const { return (n_columns - 1) / 2; }

  /// Noiseless timing pitch between neighboring columns, ps.
  double timing_pitch_ps() const;

  void validate() const;
};

/// Arrival times of one event's pulse pair at the two readout terminals.
struct TimeTagPair {
  double t_pos_ps = 0.0;
  double t_neg_ps = 0.0;
  double dt_ps() const { return t_pos_ps - t_neg_ps; }
};

/// One simulated detection with its ground truth.
struct EventRecord {
  int true_column = 0;
  double true_x_um = 0.0;
  double true_y_um = 0.0;
  TimeTagPair tags;
};

/// Small keyed counter RNG; the stream for event i depends only on
/// (seed, i), so partitioned generation is bit-identical to sequential.
class EventRng {
public:
  EventRng(std::uint64_t seed, std::uint64_t event_id);
  std::uint64_t next_u64();
  double next_uniform();  ///< in [0, 1)
  double next_normal();   ///< standard normal

private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Time tags for a detection in `column`: noiseless dt = 2 column ds / v plus
/// independent Gaussian jitter per terminal.
TimeTagPair column_to_tags(int column, const DetectorGeometry& geom, EventRng& rng);

/// Draws n absorption events from the mode intensity restricted to the
/// current-carrying wire stripes inside the active-area disk (photons landing
/// elsewhere are redrawn). Deterministic for a fixed seed, for any n_threads.
/// acceptance_rate, when non-null, receives accepted / proposed.
std::vector<EventRecord> sample_events(const ModeSpec& spec,
                                       const DetectorGeometry& geom,
                                       std::uint64_t n, std::uint64_t seed,
                                       unsigned n_threads = 1,
                                       double* acceptance_rate = nullptr);

}  // namespace tofbeam
