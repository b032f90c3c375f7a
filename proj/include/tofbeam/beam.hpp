#pragma once

#include <vector>

namespace tofbeam {

/// One Laguerre-Gaussian mode with its fractional power weight.
/// Only l = 0, p in [0, 4] is supported; the marginal of an l != 0 mode is
/// degenerate with l = 0 mixtures and is rejected at validation.
struct LGMode {
  int l = 0;
  int p = 0;
  double weight = 1.0;
};

/// An incoherent superposition of LG modes sharing one waist and center.
/// mfd = 2 w, where w is the 1/e^2 intensity radius of the fundamental.
struct ModeSpec {
  std::vector<LGMode> modes{{0, 0, 1.0}};
  double mfd_um = 10.4;
  double center_x_um = 0.0;
  double center_y_um = 0.0;
  double wavelength_um = 1.55;

  double waist_radius() const { return 0.5 * mfd_um; }

  /// Throws invalid_input if any invariant is violated (weights must sum to 1
  /// within 1e-9, p in [0,4], l = 0, positive mfd and wavelength).
  void validate() const;
};

/// Power-normalized 2D intensity (1/um^2) of the mode superposition at the
/// waist plane; integrates to 1 over the plane.
double intensity_2d(const ModeSpec& spec, double x_um, double y_um);

/// Radial intensity of a single normalized (l=0, p) mode of waist w at radius r.
double lg_radial_intensity(int p, double w_um, double r_um);

/// 1D marginal density (1/um): integral of intensity_2d over y. Analytic for a
/// pure fundamental, adaptive quadrature (rel tol 1e-8) for p >= 1 content.
double marginal_1d(const ModeSpec& spec, double x_um);

/// Marginal of one (l=0, p) mode of waist w, centered at 0.
double lg_marginal(int p, double w_um, double x_um);

/// z_R = pi (mfd/2)^2 / lambda, vacuum.
double rayleigh_range(double mfd_um, double wavelength_um);

/// w(z) = w0 sqrt(1 + (z/z_R)^2).
double beam_radius_at(double w0_um, double z_r_um, double z_um);

/// Vacuum propagation distance that expands mfd_initial to mfd_final;
/// exact inverse of beam_radius_at. Zero when the MFDs are equal.
double infer_path_length(double mfd_initial_um, double mfd_final_um,
                         double wavelength_um);

}  // namespace tofbeam
