#pragma once

#include "optomech/cavity.hpp"
#include "optomech/membrane.hpp"

namespace optomech {

// TEM00 spot on the membrane, coordinates from the membrane corner.
struct GaussianBeam {
  double waist_w0_m = 0.0;
  double center_x0_m = 0.0;
  double center_y0_m = 0.0;

  void validate(const MembraneSpec& spec) const;
};

struct DriveField {
  double detuning_Delta = 0.0;           // rad/s, omega_L - omega_c
  double resonant_output_power_w = 0.0;  // P_out at zero detuning
  double optical_omega0 = 0.0;           // rad/s
  double cavity_linewidth_gamma = 0.0;   // rad/s, FWHM

  void validate() const;
};

struct PhotocurrentRecord {
  double dc_current_a = 0.0;         // i(Delta)
  double rms_fluctuation_a = 0.0;    // sqrt(<i^2>) integrated over the mechanical peak
};

constexpr double kDefaultCouplingFactor = 0.85;

double cavity_waist(const CavitySpec& cavity);

// |integral of psi * mode shape| over the membrane square, by nested adaptive
// Gauss-Kronrod quadrature. psi is the unit-power Gaussian intensity profile.
double overlap_eta(const GaussianBeam& beam, const MembraneSpec& spec, ModeIndex idx);

// g = factor * eta * omega_c / L, in rad/(s m).
double linear_coupling_g(double eta, const CavitySpec& cavity,
                         double factor = kDefaultCouplingFactor);

double intracavity_photons(const DriveField& drive);

double effective_coupling(double g, double x_zp, double alpha_abs);

// Dimensionless cavity response Delta^2 S+ S-.
double cavity_response_h(double omega_m, double detuning, double gamma);

// <a_z^2> from the photocurrent ratio <i^2>/i^2.
double displacement_from_photocurrent(const PhotocurrentRecord& rec, const DriveField& drive,
                                      double g, double omega_m);

// Inverse of the above: the ratio <i^2>/i^2 a given <a_z^2> would produce.
double photocurrent_ratio_for_displacement(double mean_square_disp, const DriveField& drive,
                                           double g, double omega_m);

double mode_temperature(double mean_square_disp, const MechanicalMode& mode);

}  // namespace optomech
