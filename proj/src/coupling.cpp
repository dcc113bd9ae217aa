#include "optomech/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "optomech/constants.hpp"
#include "optomech/cooling.hpp"
#include "optomech/csv.hpp"
#include "optomech/errors.hpp"

namespace optomech {

namespace {

// Boost's error estimate floors near 1e-11 relative; asking for less makes the
// rule subdivide to full depth. The 61-point rule is far more accurate than this.
constexpr double kInnerTolerance = 1e-9;
constexpr double kOuterTolerance = 1e-9;
constexpr double kOverlapAbsLimit = 1e-6;
constexpr unsigned kMaxDepth = 12;

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 61>;

// Integrate f on [0, d] in pieces split around the beam so the adaptive rule
// sees the narrow Gaussian. The rule works in u = (x - center) / w: Boost's
// error estimate is not scale free, and on micron-wide raw intervals it never
// settles. Beyond 10 w the weight is below exp(-200), so the range stops there.
constexpr double kBeamReach = 10.0;

template <class F>
double integrate_across(F&& f, double d, double center, double w, double tol, double& error) {
  std::vector<double> edges{std::max(-center / w, -kBeamReach),
                            std::min((d - center) / w, kBeamReach)};
  for (double s : {-4.0, -1.0, 0.0, 1.0, 4.0}) {
    if (s > edges[0] && s < edges[1]) edges.push_back(s);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  auto g = [&](double u) { return f(center + w * u); };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double err = 0.0;
    total += Kronrod::integrate(g, edges[i], edges[i + 1], kMaxDepth, tol, &err);
    error += w * err;
  }
  return w * total;
}

}  // namespace

void GaussianBeam::validate(const MembraneSpec& spec) const {
  if (!(waist_w0_m > 0.0) || !std::isfinite(waist_w0_m)) {
    throw DomainError("beam.waist_w0_m must be positive and finite");
  }
  const double d = spec.side_d_m;
  if (!(center_x0_m >= 0.0 && center_x0_m <= d)) {
    throw DomainError("beam.center_x0_m must lie on the membrane [0, side_d]");
  }
  if (!(center_y0_m >= 0.0 && center_y0_m <= d)) {
    throw DomainError("beam.center_y0_m must lie on the membrane [0, side_d]");
  }
}

void DriveField::validate() const {
  if (!std::isfinite(detuning_Delta)) throw DomainError("drive.detuning_hz must be finite");
  if (!(resonant_output_power_w >= 0.0)) {
    throw DomainError("drive.resonant_output_power_w must be >= 0");
  }
  if (!(optical_omega0 > 0.0)) throw DomainError("drive optical frequency must be positive");
  if (!(cavity_linewidth_gamma > 0.0)) {
    throw DomainError("drive.cavity_linewidth_fwhm_hz must be positive");
  }
}

double cavity_waist(const CavitySpec& cavity) {
  cavity.validate();
  const double L = cavity.length_L_m;
  const double w0_sq = cavity.wavelength_lambda0_m / kTwoPi *
                       std::sqrt(L * (2.0 * cavity.mirror_curvature_Rc_m - L));
  return std::sqrt(w0_sq);
}

double overlap_eta(const GaussianBeam& beam, const MembraneSpec& spec, ModeIndex idx) {
  spec.validate();
  idx.validate();
  beam.validate(spec);
  const double d = spec.side_d_m;
  const double w = beam.waist_w0_m;
  const double kx = idx.j * kPi / d;
  const double ky = idx.k * kPi / d;
  const double norm = 2.0 / (kPi * w * w);

  double worst_inner = 0.0;
  auto row = [&](double y) {
    const double dy = y - beam.center_y0_m;
    const double gy = std::exp(-2.0 * dy * dy / (w * w)) * std::sin(ky * y);
    if (gy == 0.0) return 0.0;
    auto integrand = [&](double x) {
      const double dx = x - beam.center_x0_m;
      return std::exp(-2.0 * dx * dx / (w * w)) * std::sin(kx * x);
    };
    double inner_error = 0.0;
    const double inner = integrate_across(integrand, d, beam.center_x0_m, w, kInnerTolerance, inner_error);
    worst_inner = std::max(worst_inner, std::abs(gy) * inner_error);
    return gy * inner;
  };
  double outer_error = 0.0;
  const double value = norm * integrate_across(row, d, beam.center_y0_m, w, kOuterTolerance, outer_error);
  // Bound the inner contribution by its worst row over the full side.
  const double estimate = norm * (outer_error + d * worst_inner);
  if (!std::isfinite(value) || estimate > kOverlapAbsLimit) {
    throw NumericError("overlap quadrature did not reach 1e-6 absolute (estimate " +
                       format_double(estimate) + ")");
  }
  return std::abs(value);
}

double linear_coupling_g(double eta, const CavitySpec& cavity, double factor) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("overlap eta must lie in [0, 1]");
  if (!(factor > 0.0)) throw DomainError("coupling.g_factor must be positive");
  cavity.validate();
  const double omega_c = kTwoPi * kSpeedOfLight / cavity.wavelength_lambda0_m;
  return factor * eta * omega_c / cavity.length_L_m;
}

double intracavity_photons(const DriveField& drive) {
  drive.validate();
  const double half = 0.5 * drive.cavity_linewidth_gamma;
  return 2.0 * drive.resonant_output_power_w / (kHbar * drive.optical_omega0) * half /
         (half * half + drive.detuning_Delta * drive.detuning_Delta);
}

double effective_coupling(double g, double x_zp, double alpha_abs) {
  if (!(g >= 0.0 && x_zp >= 0.0 && alpha_abs >= 0.0)) {
    throw DomainError("effective coupling inputs must be non-negative");
  }
  return g * x_zp * alpha_abs;
}

double cavity_response_h(double omega_m, double detuning, double gamma) {
  const SidebandRates s = sideband_rates(omega_m, detuning, gamma);
  return detuning * detuning * s.s_plus * s.s_minus;
}

namespace {

double transduction(const DriveField& drive, double g, double omega_m) {
  drive.validate();
  if (drive.detuning_Delta == 0.0) {
    throw DomainError("no amplitude transduction on resonance: drive.detuning_hz must be nonzero");
  }
  if (!(g > 0.0)) throw DomainError("coupling g must be positive for calibration");
  if (!(omega_m > 0.0)) throw DomainError("mode frequency must be positive");
  const double half = 0.5 * drive.cavity_linewidth_gamma;
  return half * half / (g * g) / cavity_response_h(omega_m, drive.detuning_Delta,
                                                   drive.cavity_linewidth_gamma);
}

}  // namespace

double displacement_from_photocurrent(const PhotocurrentRecord& rec, const DriveField& drive,
                                      double g, double omega_m) {
  if (!(rec.dc_current_a > 0.0)) throw DataError("dc photocurrent must be positive");
  if (!(rec.rms_fluctuation_a >= 0.0)) throw DataError("photocurrent fluctuation must be >= 0");
  const double ratio = rec.rms_fluctuation_a * rec.rms_fluctuation_a /
                       (rec.dc_current_a * rec.dc_current_a);
  return ratio * transduction(drive, g, omega_m);
}

double photocurrent_ratio_for_displacement(double mean_square_disp, const DriveField& drive,
                                           double g, double omega_m) {
  if (!(mean_square_disp >= 0.0)) throw DomainError("mean-square displacement must be >= 0");
  return mean_square_disp / transduction(drive, g, omega_m);
}

double mode_temperature(double mean_square_disp, const MechanicalMode& mode) {
  if (!(mean_square_disp >= 0.0)) throw DomainError("mean-square displacement must be >= 0");
  if (!(mode.m_eff > 0.0 && mode.omega_m > 0.0)) throw DomainError("mode mass and frequency must be positive");
  return mean_square_disp * mode.m_eff * mode.omega_m * mode.omega_m / kBoltzmann;
}

}  // namespace optomech
