#pragma once

#include <vector>

namespace tofbeam {

/// One homogeneous optical layer at the working wavelength.
struct Layer {
  double thickness_nm = 0.0;
  double n = 1.0;  ///< real refractive index
  double k = 0.0;  ///< extinction coefficient
};

/// A planar multilayer; light enters from the ambient into layers[0].
struct StackSpec {
  double ambient_n = 1.0;
  double substrate_n = 1.0;
  double wavelength_nm = 1550.0;
  std::vector<Layer> layers;

  void validate() const;
};

/// Normal-incidence coherent response of a stack.
struct StackResponse {
  double reflectance = 0.0;
  double transmittance = 0.0;
  double absorptance = 0.0;
  std::vector<double> per_layer_absorption;  ///< sums to absorptance
};

/// Coherent transfer-matrix solution at normal incidence. Per-layer absorption
/// is the net Poynting-flux drop across each layer, normalized to unit
/// incident flux.
StackResponse tmm_response(const StackSpec& stack);

/// Which DBR material sits next to the absorber.
enum class DbrOrdering { HighIndexAdjacentToAbsorber, LowIndexAdjacentToAbsorber };

/// The DBR + MoSi + cap + AR recipe used throughout: 13 alternating
/// quarter-wave layers (266.7 nm SiO2 / 141.7 nm aSi), a 4.1 nm MoSi absorber,
/// a 2 nm aSi cap and the 3-layer AR coat, at 1550 nm. Light enters AR-side
/// first. The MoSi complex index is process-dependent and must be
/// supplied by the caller.
StackSpec reference_stack(double mosi_n, double mosi_k,
                              DbrOrdering ordering = DbrOrdering::HighIndexAdjacentToAbsorber);

/// Expected accumulated path under an incoherent pass-counting model:
/// mean pass count is 1/a, so the result is single_pass_path / a.
double multipass_path_length(double per_pass_absorption, double single_pass_path_um);

}  // namespace tofbeam
