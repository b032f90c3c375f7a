#include "tofbeam/detector.hpp"

#include <boost/math/special_functions/laguerre.hpp>

#include <atomic>
#include <cmath>
#include <mutex>
#include <numbers>
#include <thread>

#include "tofbeam/errors.hpp"

namespace tofbeam {

namespace {
constexpr double kSpeedOfLightUmPerPs = 299.792458;
constexpr double kEpochPs = 10000.0;  // arbitrary common epoch
constexpr std::uint64_t kMaxAttemptsPerEvent = 20'000'000;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Rejection envelope max_u [L_p(u)]^2 exp(-u/2), with a safety margin.
double envelope_constant(int p) {
  double best = 0.0;
  for (int i = 0; i <= 80000; ++i) {
    const double u = i * 1e-3;
    const double lp = boost::math::laguerre(static_cast<unsigned>(p), u);
    best = std::max(best, lp * lp * std::exp(-0.5 * u));
  }
  return best * 1.01;
}
}  // namespace

double DetectorGeometry::timing_pitch_ps() const {
  return 2.0 * path_increment_um / (pulse_velocity_c * kSpeedOfLightUmPerPs);
}

void DetectorGeometry::validate() const {
  if (!(column_pitch_um > wire_width_um && wire_width_um > 0.0))
    throw invalid_input("DetectorGeometry: need column_pitch > wire_width > 0");
  if (pulse_velocity_c <= 0.0 || pulse_velocity_c >= 1.0)
    throw invalid_input("DetectorGeometry: pulse velocity must be in (0, 1) c");
  if (path_increment_um <= 0.0)
    throw invalid_input("DetectorGeometry: path increment must be > 0");
  if (n_columns < 1 || n_columns % 2 == 0)
    throw invalid_input("DetectorGeometry: n_columns must be odd and >= 1");
  if (jitter_sigma_ps < 0.0)
    throw invalid_input("DetectorGeometry: jitter sigma must be >= 0");
  if (active_diameter_um <= 0.0)
    throw invalid_input("DetectorGeometry: active diameter must be > 0");
  if (n_columns * column_pitch_um < active_diameter_um)
    throw invalid_input("DetectorGeometry: columns do not span the active area");
}

EventRng::EventRng(std::uint64_t seed, std::uint64_t event_id)
    : state_(splitmix64(splitmix64(seed) ^ (event_id * 0x9e3779b97f4a7c15ULL))) {}

std::uint64_t EventRng::next_u64() {
  state_ = state_ * 6364136223846793005ULL + 1442695040888963407ULL;
  std::uint64_t x = state_;
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  return x;
}

double EventRng::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double EventRng::next_normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = next_uniform();
  while (u1 <= 0.0) u1 = next_uniform();
  const double u2 = next_uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  spare_ = mag * std::sin(ang);
  has_spare_ = true;
  return mag * std::cos(ang);
}

TimeTagPair column_to_tags(int column, const DetectorGeometry& geom, EventRng& rng) {
  if (std::abs(column) > geom.max_column())
    throw invalid_input("column_to_tags: column out of range");
  const double dt = column * geom.timing_pitch_ps();
  TimeTagPair tags;
  tags.t_pos_ps = kEpochPs + 0.5 * dt + geom.jitter_sigma_ps * rng.next_normal();
  tags.t_neg_ps = kEpochPs - 0.5 * dt + geom.jitter_sigma_ps * rng.next_normal();
  return tags;
}

namespace {

struct ModeSampler {
  const ModeSpec& spec;
  std::vector<double> cum_weight;
  std::vector<double> envelope;  // indexed by p, only filled where needed

  explicit ModeSampler(const ModeSpec& s) : spec(s) {
    double c = 0.0;
    int max_p = 0;
    for (const auto& m : s.modes) {
      c += m.weight;
      cum_weight.push_back(c);
      max_p = std::max(max_p, m.p);
    }
    envelope.resize(max_p + 1, 0.0);
    for (const auto& m : s.modes)
      if (m.p >= 1 && envelope[m.p] == 0.0) envelope[m.p] = envelope_constant(m.p);
  }

  // Sample (x, y) from the mode superposition (waist plane, beam frame).
  void sample_point(EventRng& rng, double& x, double& y) const {
    const double pick = rng.next_uniform() * cum_weight.back();
    std::size_t idx = 0;
    while (idx + 1 < cum_weight.size() && pick > cum_weight[idx]) ++idx;
    const int p = spec.modes[idx].p;
    const double w = spec.waist_radius();

    double u;  // u = 2 r^2 / w^2, pdf ~ [L_p(u)]^2 exp(-u)
    if (p == 0) {
      u = -std::log(1.0 - rng.next_uniform());
    } else {
      // Proposal u ~ Exp(1/2), accept with [L_p(u)]^2 exp(-u/2) / C_p.
      for (;;) {
        u = -2.0 * std::log(1.0 - rng.next_uniform());
        const double lp = boost::math::laguerre(static_cast<unsigned>(p), u);
        if (rng.next_uniform() * envelope[p] <= lp * lp * std::exp(-0.5 * u)) break;
      }
    }
    const double r = w * std::sqrt(0.5 * u);
    const double phi = 2.0 * std::numbers::pi * rng.next_uniform();
    x = spec.center_x_um + r * std::cos(phi);
    y = spec.center_y_um + r * std::sin(phi);
  }
};

EventRecord sample_one(const ModeSampler& sampler, const DetectorGeometry& geom,
                       std::uint64_t seed, std::uint64_t event_id,
                       std::uint64_t& attempts) {
  EventRng rng(seed, event_id);
  const double radius = 0.5 * geom.active_diameter_um;
  const int max_col = geom.max_column();
  for (std::uint64_t i = 0; i < kMaxAttemptsPerEvent; ++i) {
    ++attempts;
    double x, y;
    sampler.sample_point(rng, x, y);
    const int col = static_cast<int>(std::lround(x / geom.column_pitch_um));
    if (std::abs(col) > max_col) continue;
    if (std::abs(x - col * geom.column_pitch_um) > 0.5 * geom.wire_width_um) continue;
    if (x * x + y * y > radius * radius) continue;
    EventRecord ev;
    ev.true_column = col;
    ev.true_x_um = x;
    ev.true_y_um = y;
    ev.tags = column_to_tags(col, geom, rng);
    return ev;
  }
  throw invalid_input(
      "sample_events: acceptance rate below 1e-6; mode and detector geometry "
      "are incompatible (misaligned or mismatched in scale)");
}

}  // namespace

std::vector<EventRecord> sample_events(const ModeSpec& spec,
                                       const DetectorGeometry& geom,
                                       std::uint64_t n, std::uint64_t seed,
                                       unsigned n_threads,
                                       double* acceptance_rate) {
  spec.validate();
  geom.validate();
  if (n < 1) throw invalid_input("sample_events: n must be >= 1");

  const ModeSampler sampler(spec);
  std::vector<EventRecord> events(n);
  std::atomic<std::uint64_t> total_attempts{0};

  if (n_threads == 0) n_threads = 1;
  n_threads = std::min<std::uint64_t>(n_threads, n);

  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&](std::uint64_t begin, std::uint64_t end) {
    std::uint64_t attempts = 0;
    try {
      for (std::uint64_t i = begin; i < end; ++i)
        events[i] = sample_one(sampler, geom, seed, i, attempts);
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
    total_attempts += attempts;
  };

  if (n_threads == 1) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (n + n_threads - 1) / n_threads;
    for (unsigned t = 0; t < n_threads; ++t) {
      const std::uint64_t begin = t * chunk;
      const std::uint64_t end = std::min<std::uint64_t>(begin + chunk, n);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  if (acceptance_rate)
    *acceptance_rate = static_cast<double>(n) / static_cast<double>(total_attempts.load());
  return events;
}

}  // namespace tofbeam
