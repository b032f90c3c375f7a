#pragma once

#include <string>
#include <vector>

#include "tofbeam/analysis.hpp"
#include "tofbeam/beam.hpp"
#include "tofbeam/detector.hpp"
#include "tofbeam/stack.hpp"

namespace tofbeam {

// JSON schemas. All floating-point output is locale-independent ('.' decimal
// separator); CSV files use '\n' line endings.

/// Shortest round-trip, locale-independent double formatting.
std::string format_double(double v);

std::string modespec_to_json(const ModeSpec& spec);
ModeSpec modespec_from_json(const std::string& json);

std::string geometry_to_json(const DetectorGeometry& geom);
DetectorGeometry geometry_from_json(const std::string& json);

std::string stackspec_to_json(const StackSpec& stack);
StackSpec stackspec_from_json(const std::string& json);

std::string stackresponse_to_json(const StackResponse& resp);

std::string fit_to_json(const ModeFitResult& fit);

/// Event CSV: header `event_id,true_column,true_x_um,true_y_um,t_pos_ps,t_neg_ps`.
void write_events_csv(const std::vector<EventRecord>& events, const std::string& path);
std::vector<EventRecord> read_events_csv(const std::string& path);

void write_profile_csv(const ColumnProfile& profile, const std::string& path);
void write_histogram_csv(const DtHistogram& hist, const std::string& path);

/// Overlay of the measured column profile and the fitted
/// marginal, and a tail-power curve plot.
void write_profile_svg(const ColumnProfile& profile, const ModeFitResult& fit,
                       const DetectorGeometry& geom, const std::string& path);
void write_tail_svg(const ColumnProfile& profile, const ModeFitResult& fit,
                    const std::string& path);

}  // namespace tofbeam
