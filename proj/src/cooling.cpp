#include "optomech/cooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "optomech/constants.hpp"
#include "optomech/csv.hpp"
#include "optomech/errors.hpp"

namespace optomech {

namespace {

using Matrix4c = Eigen::Matrix<std::complex<double>, 4, 4>;
using Vector4c = Eigen::Matrix<std::complex<double>, 4, 1>;
using Kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;

// Stop extending once an octave adds less than this fraction; the 1/omega^2
// remainder estimate keeps the truncation error far below it.
constexpr double kTailTolerance = 1e-4;
constexpr double kSegmentTolerance = 1e-10;

void require_stable(const LinearizedSystem& sys) {
  if (!stability(sys)) {
    throw InstabilityError("linearized system is unstable (g_eff = " + format_double(sys.g_eff) +
                           " rad/s, detuning = " + format_double(sys.detuning_Delta) + " rad/s)");
  }
}

}  // namespace

SidebandRates sideband_rates(double omega_m, double detuning, double gamma) {
  if (!(gamma > 0.0)) throw DomainError("cavity linewidth must be positive");
  const double h = 0.5 * gamma;
  const double p = omega_m + detuning;
  const double m = omega_m - detuning;
  return {gamma / (p * p + h * h), gamma / (m * m + h * h)};
}

void LinearizedSystem::validate() const {
  if (!(omega_m > 0.0)) throw DomainError("omega_m must be positive");
  if (!(gamma_m > 0.0)) throw DomainError("gamma_m must be positive");
  if (!(kappa_gamma > 0.0)) throw DomainError("cavity linewidth must be positive");
  if (!std::isfinite(detuning_Delta)) throw DomainError("detuning must be finite");
  if (!(g_eff >= 0.0) || !std::isfinite(g_eff)) throw DomainError("g_eff must be >= 0");
  if (!(n_bath >= 0.0) || !std::isfinite(n_bath)) throw DomainError("n_bath must be >= 0");
}

CoolingResult weak_coupling_rates(const LinearizedSystem& sys) {
  sys.validate();
  const SidebandRates s = sideband_rates(sys.omega_m, sys.detuning_Delta, sys.kappa_gamma);
  CoolingResult out;
  out.gamma_opt = sys.g_eff * sys.g_eff * (s.s_plus - s.s_minus);
  out.gamma_eff = sys.gamma_m + out.gamma_opt;
  out.temperature_eff = std::numeric_limits<double>::quiet_NaN();
  out.occupation_weak = std::numeric_limits<double>::quiet_NaN();
  return out;
}

CoolingResult weak_coupling_model(const LinearizedSystem& sys, double t_room) {
  if (!(t_room > 0.0)) throw DomainError("environment.room_temperature_k must be positive");
  CoolingResult out = weak_coupling_rates(sys);
  if (!(out.gamma_eff > 0.0)) {
    throw InstabilityError("optical anti-damping exceeds intrinsic damping (gamma_eff = " +
                           format_double(out.gamma_eff) + " rad/s)");
  }
  const SidebandRates s = sideband_rates(sys.omega_m, sys.detuning_Delta, sys.kappa_gamma);
  out.temperature_eff = t_room * sys.gamma_m / out.gamma_eff;
  // gamma_opt * n_min = g^2 S-, which stays finite at zero detuning.
  const double heating = sys.g_eff * sys.g_eff * s.s_minus;
  out.occupation_weak = (sys.gamma_m * sys.n_bath + heating) / out.gamma_eff;
  return out;
}

Eigen::Matrix4d drift_matrix(const LinearizedSystem& sys) {
  sys.validate();
  const double hk = 0.5 * sys.kappa_gamma;
  const double hm = 0.5 * sys.gamma_m;
  const double g2 = 2.0 * sys.g_eff;
  Eigen::Matrix4d a;
  a << -hk, -sys.detuning_Delta, 0.0, 0.0,
       sys.detuning_Delta, -hk, g2, 0.0,
       0.0, 0.0, -hm, sys.omega_m,
       g2, 0.0, -sys.omega_m, -hm;
  return a;
}

bool stability(const LinearizedSystem& sys) {
  const Eigen::Matrix4d a = drift_matrix(sys);
  const Eigen::EigenSolver<Eigen::Matrix4d> solver(a, false);
  if (solver.info() != Eigen::Success) throw NumericError("eigenvalue solver failed");
  return (solver.eigenvalues().real().array() < 0.0).all();
}

double stability_threshold(LinearizedSystem sys, double g_upper, int scan_steps) {
  if (!(g_upper > 0.0)) throw DomainError("stability threshold search needs g_upper > 0");
  if (scan_steps < 1) throw DomainError("stability threshold search needs >= 1 scan step");
  sys.g_eff = 0.0;
  if (!stability(sys)) throw InstabilityError("system is unstable already at g_eff = 0");
  double lo = 0.0;
  double hi = -1.0;
  for (int i = 1; i <= scan_steps; ++i) {
    sys.g_eff = g_upper * i / scan_steps;
    if (!stability(sys)) {
      hi = sys.g_eff;
      break;
    }
    lo = sys.g_eff;
  }
  if (hi < 0.0) {
    throw SearchFailure("no instability found for g_eff up to " + format_double(g_upper) + " rad/s");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    sys.g_eff = 0.5 * (lo + hi);
    (stability(sys) ? lo : hi) = sys.g_eff;
  }
  return 0.5 * (lo + hi);
}

Eigen::Matrix4d steady_state_covariance(const LinearizedSystem& sys) {
  require_stable(sys);
  // Rescale time by omega_m; V is unchanged.
  const double s = 1.0 / sys.omega_m;
  const Eigen::Matrix4d a = drift_matrix(sys) * s;
  Eigen::Vector4d d;
  const double mech = sys.gamma_m * (sys.n_bath + 0.5) * s;
  d << 0.5 * sys.kappa_gamma * s, 0.5 * sys.kappa_gamma * s, mech, mech;

  // (I kron A + A kron I) vec(V) = -vec(D), column-major vec.
  Eigen::Matrix<double, 16, 16> k = Eigen::Matrix<double, 16, 16>::Zero();
  const Eigen::Matrix4d id = Eigen::Matrix4d::Identity();
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      k.block<4, 4>(4 * i, 4 * j) = id(i, j) * a + a(i, j) * id;
    }
  }
  Eigen::Matrix<double, 16, 1> rhs = Eigen::Matrix<double, 16, 1>::Zero();
  for (int i = 0; i < 4; ++i) rhs(5 * i) = -d(i);
  const Eigen::Matrix<double, 16, 1> v = k.fullPivLu().solve(rhs);
  Eigen::Matrix4d cov = Eigen::Map<const Eigen::Matrix4d>(v.data());
  return 0.5 * (cov + cov.transpose());
}

double occupation_lyapunov(const LinearizedSystem& sys) {
  const Eigen::Matrix4d v = steady_state_covariance(sys);
  return 0.5 * (v(2, 2) + v(3, 3) - 1.0);
}

double sbb_value(const LinearizedSystem& sys, double omega) {
  const Eigen::Matrix4d a = drift_matrix(sys);
  // Row vector c_b^T chi(omega) from the transposed system.
  Matrix4c m = -a.cast<std::complex<double>>();
  m.diagonal().array() += std::complex<double>(0.0, -omega);
  Vector4c cb;
  const double r = 1.0 / std::sqrt(2.0);
  cb << 0.0, 0.0, r, std::complex<double>(0.0, r);
  const Vector4c y = m.transpose().partialPivLu().solve(cb);
  const double sk = std::sqrt(sys.kappa_gamma);
  const double sm = std::sqrt(sys.gamma_m);
  const std::complex<double> k0 = y(0) * sk, k1 = y(1) * sk, k2 = y(2) * sm, k3 = y(3) * sm;
  const std::complex<double> i(0.0, 1.0);
  // Input noise correlators: optical vacuum, thermal mechanical bath.
  auto block = [&](std::complex<double> x, std::complex<double> p, double n) {
    return (std::conj(x) * x + std::conj(p) * p) * (n + 0.5) +
           (std::conj(x) * p - std::conj(p) * x) * (0.5 * i);
  };
  return (block(k0, k1, 0.0) + block(k2, k3, sys.n_bath)).real();
}

namespace {

// Breakpoints at the resonances and at geometric offsets scaled by each width.
std::vector<double> spectral_breakpoints(const LinearizedSystem& sys) {
  const Eigen::EigenSolver<Eigen::Matrix4d> solver(drift_matrix(sys), false);
  std::vector<double> pts{0.0};
  for (int i = 0; i < 4; ++i) {
    const double centre = -solver.eigenvalues()(i).imag();
    const double width = std::abs(solver.eigenvalues()(i).real());
    pts.push_back(centre);
    for (double f = 1.0; f <= 1e8; f *= 10.0) {
      pts.push_back(centre + f * width);
      pts.push_back(centre - f * width);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

}  // namespace

double occupation_spectral(const LinearizedSystem& sys) {
  require_stable(sys);
  const auto f = [&](double w) { return sbb_value(sys, w); };
  std::vector<double> pts = spectral_breakpoints(sys);

  double scale = sys.omega_m + std::abs(sys.detuning_Delta) + sys.kappa_gamma + 2.0 * sys.g_eff;
  double window = 4.0 * scale;
  pts.erase(std::remove_if(pts.begin(), pts.end(), [&](double p) { return std::abs(p) >= window; }),
            pts.end());
  pts.insert(pts.begin(), -window);
  pts.push_back(window);

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    total += Kronrod::integrate(f, pts[i], pts[i + 1], 25, kSegmentTolerance);
  }
  // Extend in octaves; the spectrum falls as 1/omega^2, so the remainder
  // beyond the last octave equals that octave's contribution.
  for (int octave = 0; octave < 60; ++octave) {
    const double upper = 2.0 * window;
    const double piece = Kronrod::integrate(f, window, upper, 25, kSegmentTolerance) +
                         Kronrod::integrate(f, -upper, -window, 25, kSegmentTolerance);
    total += piece;
    window = upper;
    if (piece < kTailTolerance * total) {
      total += piece;
      return total / kTwoPi;
    }
  }
  throw NumericError("spectral tail did not converge");
}

SpectrumResult spectrum_sbb(const LinearizedSystem& sys, std::span<const double> omega_grid) {
  SpectrumResult out;
  out.occupation = occupation_spectral(sys);
  out.omega_grid.assign(omega_grid.begin(), omega_grid.end());
  out.s_bb.reserve(omega_grid.size());
  for (const double w : omega_grid) out.s_bb.push_back(sbb_value(sys, w));
  return out;
}

std::vector<OccupationPoint> occupation_vs_coupling(const LinearizedSystem& sys_template,
                                                    std::span<const double> g_eff_grid) {
  std::vector<OccupationPoint> out;
  out.reserve(g_eff_grid.size());
  LinearizedSystem sys = sys_template;
  for (const double g : g_eff_grid) {
    sys.g_eff = g;
    OccupationPoint p;
    p.g_eff = g;
    p.stable = stability(sys);
    p.occupation = p.stable ? occupation_lyapunov(sys) : std::numeric_limits<double>::quiet_NaN();
    out.push_back(p);
  }
  return out;
}

std::vector<double> spectrum_peaks(std::span<const double> omega_grid,
                                   std::span<const double> s_bb, double rel_threshold) {
  if (omega_grid.size() != s_bb.size()) throw DomainError("spectrum grid and values differ in length");
  std::vector<double> out;
  if (s_bb.size() < 3) return out;
  const double top = *std::max_element(s_bb.begin(), s_bb.end());
  for (std::size_t i = 1; i + 1 < s_bb.size(); ++i) {
    if (s_bb[i] > s_bb[i - 1] && s_bb[i] >= s_bb[i + 1] && s_bb[i] >= rel_threshold * top) {
      out.push_back(omega_grid[i]);
    }
  }
  return out;
}

std::vector<NmsRow> nms_map(const LinearizedSystem& sys_template,
                            std::span<const double> gamma_grid,
                            std::span<const double> omega_grid) {
  std::vector<NmsRow> out;
  out.reserve(gamma_grid.size());
  LinearizedSystem sys = sys_template;
  for (const double gamma : gamma_grid) {
    sys.kappa_gamma = gamma;
    NmsRow row;
    row.kappa_gamma = gamma;
    row.stable = stability(sys);
    if (row.stable) {
      row.s_bb.reserve(omega_grid.size());
      for (const double w : omega_grid) row.s_bb.push_back(sbb_value(sys, w));
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace optomech
