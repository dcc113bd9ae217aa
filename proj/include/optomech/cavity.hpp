#pragma once

#include <complex>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "optomech/membrane.hpp"

namespace optomech {

// Two-mirror Fabry-Perot. Mirrors are thin beamsplitters with power
// transmission T_i and excess loss, reflecting -sqrt(1 - T_i - loss) into the cavity.
struct CavitySpec {
  double length_L_m = 0.0;
  double mirror_curvature_Rc_m = 0.0;
  double wavelength_lambda0_m = 0.0;
  double mirror_transmission_T1 = 0.0;
  double mirror_transmission_T2 = 0.0;
  double mirror_loss_per_mirror = 0.0;

  // Symmetric lossless mirrors T1 = T2 = pi / F0.
  static CavitySpec with_finesse(double length_m, double curvature_m, double wavelength_m,
                                 double empty_finesse);

  void validate() const;

  double empty_finesse() const;
  double fsr_hz() const;
  double carrier_hz() const;
  // Empty-cavity resonance nearest the carrier; detunings are measured from here.
  double line_center_hz() const;
};

// Membrane plane offset from the cavity centre, split into a macroscopic and a
// sub-wavelength part. Only the sum enters the optics.
struct MembranePlacement {
  double dz_coarse_m = 0.0;
  double dz_fine_m = 0.0;

  double offset_m() const { return dz_coarse_m + dz_fine_m; }
};

struct FinessePoint {
  double dz_m = 0.0;
  double finesse = 0.0;
  std::optional<double> finesse_sigma;
};

struct FinesseScan {
  std::vector<FinessePoint> points;
};

struct SlabResponse {
  std::complex<double> r_amplitude;
  std::complex<double> t_amplitude;
  double R = 0.0;
  double T = 0.0;
  double A = 0.0;
};

// Single homogeneous layer in vacuum at normal incidence (Airy sum over the two faces).
SlabResponse slab_response(double index_re, double index_im, double thickness_m,
                           double wavelength_m);

// Mirror / gap / membrane / gap / mirror stack evaluated with plane-wave
// transfer matrices. Construction validates the placement.
class CompositeCavity {
 public:
  CompositeCavity(const CavitySpec& cavity, const MembraneSpec& membrane,
                  const MembranePlacement& placement);

  std::complex<double> amplitude(double detuning_hz) const;
  double transmission(double detuning_hz) const { return std::norm(amplitude(detuning_hz)); }

  const CavitySpec& cavity() const { return cavity_; }

 private:
  struct Mirror {
    double r_outside;
    double r_inside;
    double t;
  };

  CavitySpec cavity_;
  std::complex<double> index_;
  double thickness_m_;
  // Gap transit in turns per Hz as an unevaluated sum hi + lo, so the
  // few-thousand-radian gap phases keep full precision.
  double left_hi_, left_lo_;
  double right_hi_, right_lo_;
  double line_center_hz_;
  Mirror input_;
  Mirror output_;
};

double composite_transmission(const CavitySpec& cavity, const MembraneSpec& membrane,
                              const MembranePlacement& placement, double detuning_hz);

// Where and how wide to prescan for a transmission resonance. The window is
// centred on the hint and doubled, up to max_window_fsr, until it contains an
// interior local maximum; the maximum nearest the hint is refined.
struct ResonanceSearch {
  double hint_hz = 0.0;
  double window_fsr = 1.0;
  int points_per_fsr = 10000;
  double max_window_fsr = 16.0;
};

struct Resonance {
  double detuning_hz = 0.0;
  double peak_transmission = 0.0;
  double fwhm_hz = 0.0;
  double finesse = 0.0;  // FSR / FWHM
};

Resonance locate_resonance(const CompositeCavity& cavity, const ResonanceSearch& search = {});

double finesse_at_position(const CavitySpec& cavity, const MembraneSpec& membrane,
                           const MembranePlacement& placement, double hint_hz = 0.0);

struct EnvelopePoint {
  double dz_m = 0.0;
  double f_min = 0.0;
  double f_max = 0.0;
};

struct EnvelopeOptions {
  int fine_steps = 32;
  int refine_iterations = 24;
};

// Min/max finesse over dz_fine in [0, lambda0/2) at each coarse position. The
// resonance is followed from one fine step to the next.
std::vector<EnvelopePoint> finesse_envelope(const CavitySpec& cavity, const MembraneSpec& membrane,
                                            std::span<const double> dz_coarse_grid,
                                            const EnvelopeOptions& options = {});

// Envelope maximum only, at each position (what the absorption fit compares against).
std::vector<double> envelope_maximum(const CavitySpec& cavity, const MembraneSpec& membrane,
                                     std::span<const double> dz_grid,
                                     const EnvelopeOptions& options = {});

struct AbsorptionFitOptions {
  double im_lower = 0.0;
  double im_upper = 1e-3;
  EnvelopeOptions envelope;
};

struct AbsorptionFit {
  double im_n = 0.0;
  double rms_residual = 0.0;
  int objective_evaluations = 0;
};

// One-parameter least-squares fit of Im(n) against the model envelope maximum.
// The membrane's own index_im is ignored.
AbsorptionFit fit_absorption(const FinesseScan& scan, const CavitySpec& cavity,
                             const MembraneSpec& membrane,
                             const AbsorptionFitOptions& options = {});

FinesseScan read_finesse_scan_csv(std::istream& in, std::string_view source_name = "<stream>");
FinesseScan read_finesse_scan_csv(const std::filesystem::path& path);

}  // namespace optomech
