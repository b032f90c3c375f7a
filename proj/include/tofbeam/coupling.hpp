#pragma once

#include <vector>

#include "tofbeam/beam.hpp"

namespace tofbeam {

/// Loss grid over active-area diameters (rows) and misalignment offsets
/// (columns); loss = 1 - efficiency.
struct ToleranceCurve {
  std::vector<double> diameters_um;
  std::vector<double> offsets_um;
  std::vector<std::vector<double>> loss;  // [diameter][offset]
};

/// Fraction of the beam power captured by a circular active area of the given
/// diameter whose center sits `offset` away from the beam center. Adaptive 2D
/// quadrature, rel tol 1e-9; matches 1 - exp(-2 R^2/w^2) for aligned
/// fundamentals.
double coupling_efficiency(const ModeSpec& spec, double active_diameter_um,
                           double offset_um);

/// Largest offset whose loss stays within loss_budget, by bisection to 0.01 um.
/// Throws invalid_input when the aligned loss already exceeds the budget.
double max_tolerable_offset(const ModeSpec& spec, double active_diameter_um,
                            double loss_budget);

ToleranceCurve tolerance_curve(const ModeSpec& spec,
                               const std::vector<double>& diameters_um,
                               const std::vector<double>& offsets_um);

}  // namespace tofbeam
