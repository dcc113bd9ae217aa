#pragma once

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace optomech {

// Square, uniformly stressed film clamped on all four edges.
struct MembraneSpec {
  double side_d_m = 0.0;
  double thickness_t_m = 0.0;
  double stress_T_pa = 0.0;
  double density_rho_kg_m3 = 0.0;
  double index_re = 1.0;
  double index_im = 0.0;

  // Throws DomainError naming the first violated field.
  void validate() const;

  std::complex<double> index() const { return {index_re, index_im}; }
  double physical_mass_kg() const { return density_rho_kg_m3 * side_d_m * side_d_m * thickness_t_m; }
};

struct ModeIndex {
  int j = 1;
  int k = 1;

  void validate() const;
  friend bool operator==(const ModeIndex&, const ModeIndex&) = default;
};

struct MechanicalMode {
  ModeIndex index;
  double omega_m = 0.0;   // rad/s
  double m_eff = 0.0;     // kg
  double x_zp = 0.0;      // m
  double gamma_m = 0.0;   // rad/s, energy damping rate
  double q_factor = 0.0;
};

struct RingdownSample {
  double time_s = 0.0;
  double amplitude = 0.0;
};

struct RingdownTrace {
  std::vector<RingdownSample> samples;
  double mode_frequency_hz = 0.0;
};

// Inputs of the Zener thin-plate estimate. The dilution factor multiplies the
// resulting Q (1 = bare Zener).
struct TedMaterial {
  double youngs_E_pa = 0.0;
  double expansion_alpha_per_k = 0.0;
  double heat_capacity_cp_j_per_kg_k = 0.0;
  double conductivity_kappa_w_per_m_k = 0.0;
  double bath_temperature_k = 0.0;
  double dilution_factor = 1.0;

  void validate() const;
};

// Whether a ringdown amplitude is field-like (decays as exp(-gamma_m t / 2))
// or energy-like (decays as exp(-gamma_m t)).
enum class AmplitudeConvention { kField, kEnergy };

struct RingdownFit {
  double gamma_m = 0.0;       // rad/s
  double q_factor = 0.0;
  double rms_residual = 0.0;  // rms of log-amplitude residuals
  double amplitude0 = 0.0;
};

// Ordinary frequency [Hz] of mode (j, k).
double mode_frequency(const MembraneSpec& spec, ModeIndex idx);

// Normalized displacement sin(j pi x / d) sin(k pi y / d); throws DomainError off the membrane.
double mode_shape(const MembraneSpec& spec, ModeIndex idx, double x_m, double y_m);

MechanicalMode build_mode(const MembraneSpec& spec, ModeIndex idx, double q_factor);

// High-temperature phonon occupation k_B T / (hbar omega).
double thermal_occupation(double bath_temperature_k, double omega_m);

// Thermal relaxation time across the film thickness.
double ted_relaxation_time(const TedMaterial& mat, const MembraneSpec& spec);
double ted_relaxation_strength(const TedMaterial& mat, const MembraneSpec& spec);
double ted_q_limit(const TedMaterial& mat, const MembraneSpec& spec, double omega);

// Log-linear least squares on amplitude(t). Throws InsufficientDataError below
// 8 samples and FitDegenerateError when the trace does not decay.
RingdownFit fit_ringdown(const RingdownTrace& trace,
                         AmplitudeConvention convention = AmplitudeConvention::kField);

// Reads `time_s,amplitude`; the trace's mode frequency is supplied by the caller.
RingdownTrace read_ringdown_csv(std::istream& in, double mode_frequency_hz,
                                std::string_view source_name = "<stream>");
RingdownTrace read_ringdown_csv(const std::filesystem::path& path, double mode_frequency_hz);

}  // namespace optomech
