#pragma once

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace optomech {

struct SidebandRates {
  double s_plus = 0.0;   // anti-Stokes weight, 1/(rad/s)
  double s_minus = 0.0;  // Stokes weight
};

// S+- = gamma / ((omega_m +- Delta)^2 + (gamma/2)^2).
SidebandRates sideband_rates(double omega_m, double detuning, double gamma);

// Linearized cavity + single mechanical mode. All rates in rad/s.
struct LinearizedSystem {
  double omega_m = 0.0;
  double gamma_m = 0.0;
  double kappa_gamma = 0.0;  // optical FWHM
  double detuning_Delta = 0.0;
  double g_eff = 0.0;
  double n_bath = 0.0;

  void validate() const;
};

struct CoolingResult {
  double gamma_opt = 0.0;
  double gamma_eff = 0.0;
  double temperature_eff = 0.0;  // K
  double occupation_weak = 0.0;
};

// gamma_opt and gamma_eff only; never throws for a valid system.
CoolingResult weak_coupling_rates(const LinearizedSystem& sys);

// Full weak-coupling result. Throws InstabilityError when gamma_eff <= 0.
CoolingResult weak_coupling_model(const LinearizedSystem& sys, double t_room);

// Quadrature order (X_a, P_a, X_b, P_b).
Eigen::Matrix4d drift_matrix(const LinearizedSystem& sys);

bool stability(const LinearizedSystem& sys);

// Smallest g_eff in (0, g_upper] at which the system turns unstable, located by
// a uniform scan followed by bisection. Throws SearchFailure if none is found.
double stability_threshold(LinearizedSystem sys, double g_upper, int scan_steps = 400);

// Symmetrized steady-state covariance; vacuum gives 1/2 per quadrature.
Eigen::Matrix4d steady_state_covariance(const LinearizedSystem& sys);

double occupation_lyapunov(const LinearizedSystem& sys);

// Non-symmetrized phonon spectrum; integrates to 2 pi n over all omega and
// peaks near +omega_m.
double sbb_value(const LinearizedSystem& sys, double omega);

struct SpectrumResult {
  std::vector<double> omega_grid;
  std::vector<double> s_bb;
  double occupation = 0.0;
};

// Samples S_bb on the grid and integrates it adaptively over the whole axis.
SpectrumResult spectrum_sbb(const LinearizedSystem& sys, std::span<const double> omega_grid);

double occupation_spectral(const LinearizedSystem& sys);

struct OccupationPoint {
  double g_eff = 0.0;
  double occupation = 0.0;  // NaN when unstable
  bool stable = false;
};

std::vector<OccupationPoint> occupation_vs_coupling(const LinearizedSystem& sys_template,
                                                    std::span<const double> g_eff_grid);

// Interior local maxima of a sampled spectrum at or above rel_threshold of its peak.
std::vector<double> spectrum_peaks(std::span<const double> omega_grid,
                                   std::span<const double> s_bb, double rel_threshold = 0.01);

struct NmsRow {
  double kappa_gamma = 0.0;
  std::vector<double> s_bb;  // on the shared omega grid
  bool stable = false;
};

// S_bb over a linewidth x frequency grid; unstable linewidths carry no samples.
std::vector<NmsRow> nms_map(const LinearizedSystem& sys_template,
                            std::span<const double> gamma_grid,
                            std::span<const double> omega_grid);

}  // namespace optomech
