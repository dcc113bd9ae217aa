#include "optomech/membrane.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "optomech/constants.hpp"
#include "optomech/csv.hpp"
#include "optomech/errors.hpp"

namespace optomech {

namespace {

constexpr std::size_t kMinRingdownSamples = 8;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(name) + " must be positive and finite");
  }
}

}  // namespace

void MembraneSpec::validate() const {
  require_positive(side_d_m, "membrane.side_d_m");
  require_positive(thickness_t_m, "membrane.thickness_t_m");
  if (thickness_t_m >= 0.01 * side_d_m) {
    throw DomainError("membrane.thickness_t_m must be much smaller than membrane.side_d_m");
  }
  require_positive(stress_T_pa, "membrane.stress_T_pa");
  require_positive(density_rho_kg_m3, "membrane.density_rho_kg_m3");
  if (!(index_re >= 1.0)) throw DomainError("membrane.index_re must be >= 1");
  if (!(index_im >= 0.0)) throw DomainError("membrane.index_im must be >= 0");
}

void ModeIndex::validate() const {
  if (j < 1 || k < 1) {
    throw DomainError("mode indices must be >= 1, got (" + std::to_string(j) + "," +
                      std::to_string(k) + ")");
  }
}

void TedMaterial::validate() const {
  require_positive(youngs_E_pa, "ted.youngs_E_pa");
  require_positive(expansion_alpha_per_k, "ted.expansion_alpha_per_k");
  require_positive(heat_capacity_cp_j_per_kg_k, "ted.heat_capacity_cp_j_per_kg_k");
  require_positive(conductivity_kappa_w_per_m_k, "ted.conductivity_kappa_w_per_m_k");
  require_positive(bath_temperature_k, "ted.bath_temperature_k");
  require_positive(dilution_factor, "ted.dilution_factor");
}

double mode_frequency(const MembraneSpec& spec, ModeIndex idx) {
  idx.validate();
  const double d = spec.side_d_m;
  const double base = std::sqrt(spec.stress_T_pa / (4.0 * spec.density_rho_kg_m3 * d * d));
  return base * std::hypot(static_cast<double>(idx.j), static_cast<double>(idx.k));
}

double mode_shape(const MembraneSpec& spec, ModeIndex idx, double x_m, double y_m) {
  idx.validate();
  const double d = spec.side_d_m;
  if (!(x_m >= 0.0 && x_m <= d && y_m >= 0.0 && y_m <= d)) {
    throw DomainError("mode_shape: point lies outside the membrane");
  }
  return std::sin(idx.j * kPi * x_m / d) * std::sin(idx.k * kPi * y_m / d);
}

MechanicalMode build_mode(const MembraneSpec& spec, ModeIndex idx, double q_factor) {
  if (!(q_factor > 0.0)) throw DomainError("build_mode: q_factor must be positive");
  MechanicalMode mode;
  mode.index = idx;
  mode.omega_m = to_angular(mode_frequency(spec, idx));
  // Every sine mode of the square membrane carries a quarter of the physical mass.
  mode.m_eff = spec.physical_mass_kg() / 4.0;
  mode.x_zp = std::sqrt(kHbar / (2.0 * mode.m_eff * mode.omega_m));
  mode.q_factor = q_factor;
  mode.gamma_m = mode.omega_m / q_factor;
  return mode;
}

double thermal_occupation(double bath_temperature_k, double omega_m) {
  if (!(bath_temperature_k > 0.0) || !(omega_m > 0.0)) {
    throw DomainError("thermal_occupation: temperature and frequency must be positive");
  }
  return kBoltzmann * bath_temperature_k / (kHbar * omega_m);
}

double ted_relaxation_time(const TedMaterial& mat, const MembraneSpec& spec) {
  const double t = spec.thickness_t_m;
  return t * t * spec.density_rho_kg_m3 * mat.heat_capacity_cp_j_per_kg_k /
         (kPi * kPi * mat.conductivity_kappa_w_per_m_k);
}

double ted_relaxation_strength(const TedMaterial& mat, const MembraneSpec& spec) {
  return mat.youngs_E_pa * mat.expansion_alpha_per_k * mat.expansion_alpha_per_k *
         mat.bath_temperature_k / (spec.density_rho_kg_m3 * mat.heat_capacity_cp_j_per_kg_k);
}

double ted_q_limit(const TedMaterial& mat, const MembraneSpec& spec, double omega) {
  mat.validate();
  if (!(omega > 0.0)) throw DomainError("ted_q_limit: omega must be positive");
  const double wt = omega * ted_relaxation_time(mat, spec);
  const double inverse_q = ted_relaxation_strength(mat, spec) * wt / (1.0 + wt * wt);
  return mat.dilution_factor / inverse_q;
}

RingdownFit fit_ringdown(const RingdownTrace& trace, AmplitudeConvention convention) {
  const auto& s = trace.samples;
  if (s.size() < kMinRingdownSamples) {
    throw InsufficientDataError("ringdown trace needs at least 8 samples, got " +
                                std::to_string(s.size()));
  }
  if (!(trace.mode_frequency_hz > 0.0)) {
    throw DomainError("ringdown trace mode frequency must be positive");
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i].amplitude > 0.0)) {
      throw DataError("ringdown amplitude must be positive (sample " + std::to_string(i) + ")");
    }
    if (i > 0 && !(s[i].time_s > s[i - 1].time_s)) {
      throw DataError("ringdown times must be strictly increasing (sample " +
                      std::to_string(i) + ")");
    }
  }

  // Centered ordinary least squares of log(amplitude) on time.
  const double n = static_cast<double>(s.size());
  double t_mean = 0.0, y_mean = 0.0;
  for (const auto& p : s) {
    t_mean += p.time_s;
    y_mean += std::log(p.amplitude);
  }
  t_mean /= n;
  y_mean /= n;
  double stt = 0.0, sty = 0.0;
  for (const auto& p : s) {
    const double dt = p.time_s - t_mean;
    stt += dt * dt;
    sty += dt * (std::log(p.amplitude) - y_mean);
  }
  const double slope = sty / stt;
  if (!(slope < 0.0)) {
    throw FitDegenerateError("ringdown trace does not decay (log-slope " + std::to_string(slope) + ")");
  }
  const double intercept = y_mean - slope * t_mean;

  double ss = 0.0;
  for (const auto& p : s) {
    const double r = std::log(p.amplitude) - (intercept + slope * p.time_s);
    ss += r * r;
  }

  RingdownFit fit;
  fit.gamma_m = convention == AmplitudeConvention::kField ? -2.0 * slope : -slope;
  fit.q_factor = to_angular(trace.mode_frequency_hz) / fit.gamma_m;
  fit.rms_residual = std::sqrt(ss / n);
  fit.amplitude0 = std::exp(intercept);
  return fit;
}

RingdownTrace read_ringdown_csv(std::istream& in, double mode_frequency_hz,
                                std::string_view source_name) {
  const CsvTable table = read_csv(in, source_name);
  const int ct = table.column("time_s");
  const int ca = table.column("amplitude");
  if (ct < 0 || ca < 0) {
    throw DataError(std::string(source_name) + ": ringdown CSV needs columns time_s,amplitude");
  }
  RingdownTrace trace;
  trace.mode_frequency_hz = mode_frequency_hz;
  for (const auto& row : table.rows) {
    if (std::isnan(row[ct]) || std::isnan(row[ca])) {
      throw DataError(std::string(source_name) + ": empty cell in ringdown CSV");
    }
    trace.samples.push_back({row[ct], row[ca]});
  }
  return trace;
}

RingdownTrace read_ringdown_csv(const std::filesystem::path& path, double mode_frequency_hz) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  return read_ringdown_csv(in, mode_frequency_hz, path.string());
}

}  // namespace optomech
