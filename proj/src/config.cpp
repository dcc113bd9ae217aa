#include "optomech/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "optomech/constants.hpp"
#include "optomech/errors.hpp"

namespace optomech {

namespace {

// Known scalar keys as (stem, unit suffix). Dimensionless keys have no unit.
struct KeyDef {
  std::string_view stem;
  std::string_view unit;
};

constexpr KeyDef kKeys[] = {
    {"membrane.side_d", "m"},
    {"membrane.thickness_t", "m"},
    {"membrane.stress_T", "pa"},
    {"membrane.density_rho", "kg_m3"},
    {"membrane.index_re", ""},
    {"membrane.index_im", ""},
    {"cavity.length_L", "m"},
    {"cavity.mirror_curvature_Rc", "m"},
    {"cavity.wavelength_lambda0", "m"},
    {"cavity.empty_finesse_F0", ""},
    {"cavity.mirror_transmission_T1", ""},
    {"cavity.mirror_transmission_T2", ""},
    {"cavity.mirror_loss_per_mirror", ""},
    {"beam.waist_w0", "m"},
    {"beam.center_x0", "m"},
    {"beam.center_y0", "m"},
    {"beam.offset_dx", "m"},
    {"beam.offset_dy", "m"},
    {"drive.resonant_output_power", "w"},
    {"drive.cavity_linewidth_fwhm", "hz"},
    {"drive.detuning", "hz"},
    {"coupling.g_factor", ""},
    {"environment.room_temperature", "k"},
    {"ted.youngs_E", "pa"},
    {"ted.expansion_alpha", "per_k"},
    {"ted.heat_capacity_cp", "j_per_kg_k"},
    {"ted.conductivity_kappa", "w_per_m_k"},
    {"ted.bath_temperature", "k"},
    {"ted.dilution_factor", ""},
    {"linearized.mechanical_frequency", "hz"},
    {"linearized.q_factor", ""},
    {"linearized.cavity_linewidth_fwhm", "hz"},
    {"linearized.detuning", "hz"},
    {"linearized.thermal_occupation", ""},
    {"linearized.g_eff", "hz"},
};

std::string full_key(const KeyDef& k) {
  std::string out(k.stem);
  if (!k.unit.empty()) {
    out += '_';
    out += k.unit;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

struct Entry {
  double value = 0.0;
  int line = 0;
};

class ConfigReader {
 public:
  explicit ConfigReader(std::string_view source) : source_(source) {}

  void add(std::string_view key, std::string_view text, int line) {
    const std::string k(key);
    if (entries_.count(k) != 0) {
      fail(line, "duplicate key " + k + " (first set on line " + std::to_string(entries_[k].line) + ")");
    }
    if (k.rfind("mode.", 0) == 0) {
      add_mode(k, text, line);
      return;
    }
    check_known(k, line);
    entries_[k] = Entry{parse_number(k, text, line), line};
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  double get(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(std::string(source_) + ": missing key " + key);
    return it->second.value;
  }

  double get_or(const std::string& key, double fallback) const {
    return has(key) ? get(key) : fallback;
  }

  const std::vector<ModeSetting>& modes() const { return modes_; }

  // Rethrow a validation error with the line of the key it names.
  [[noreturn]] void rethrow_with_line(const DomainError& e) const {
    const std::string what = e.what();
    int line = 0;
    std::size_t best = 0;
    for (const auto& [key, entry] : entries_) {
      if (what.find(key) != std::string::npos && key.size() > best) {
        best = key.size();
        line = entry.line;
      }
    }
    if (line > 0) fail(line, what);
    throw ConfigError(std::string(source_) + ": " + what);
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(std::string(source_) + ":" + std::to_string(line) + ": " + msg);
  }

 private:
  void check_known(const std::string& key, int line) const {
    for (const auto& def : kKeys) {
      if (key == full_key(def)) return;
    }
    for (const auto& def : kKeys) {
      const std::string prefix = std::string(def.stem) + "_";
      if (!def.unit.empty() && key.rfind(prefix, 0) == 0) {
        fail(line, "unit-suffix mismatch for " + key + ": expected " + full_key(def));
      }
    }
    fail(line, "unknown key " + key);
  }

  double parse_number(const std::string& key, std::string_view text, int line) const {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
      fail(line, "value of " + key + " is not a finite number: '" + std::string(text) + "'");
    }
    return v;
  }

  // mode.<j>_<k>.q_factor
  void add_mode(const std::string& key, std::string_view text, int line) {
    const std::string_view rest = std::string_view(key).substr(5);
    const auto dot = rest.find('.');
    const auto under = rest.find('_');
    if (dot == std::string_view::npos || under == std::string_view::npos || under > dot ||
        rest.substr(dot + 1) != "q_factor") {
      fail(line, "mode keys look like mode.<j>_<k>.q_factor, got " + key);
    }
    ModeSetting m;
    const auto parse_int = [&](std::string_view s, int& out) {
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || ptr != s.data() + s.size()) fail(line, "bad mode index in " + key);
    };
    parse_int(rest.substr(0, under), m.index.j);
    parse_int(rest.substr(under + 1, dot - under - 1), m.index.k);
    m.q_factor = parse_number(key, text, line);
    try {
      m.index.validate();
    } catch (const DomainError& e) {
      fail(line, key + ": " + e.what());
    }
    if (!(m.q_factor > 0.0)) fail(line, key + " must be positive");
    modes_.push_back(m);
    entries_[key] = Entry{m.q_factor, line};
  }

  std::string_view source_;
  std::map<std::string, Entry> entries_;
  std::vector<ModeSetting> modes_;
};

}  // namespace

Scenario parse_config_text(std::string_view text, std::string_view source_name) {
  ConfigReader r(source_name);
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.remove_prefix(3);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) r.fail(line_no, "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) r.fail(line_no, "empty key");
    if (value.empty()) r.fail(line_no, "empty value for " + std::string(key));
    r.add(key, value, line_no);
  }

  Scenario s;
  try {
    s.membrane.side_d_m = r.get("membrane.side_d_m");
    s.membrane.thickness_t_m = r.get("membrane.thickness_t_m");
    s.membrane.stress_T_pa = r.get("membrane.stress_T_pa");
    s.membrane.density_rho_kg_m3 = r.get("membrane.density_rho_kg_m3");
    s.membrane.index_re = r.get("membrane.index_re");
    s.membrane.index_im = r.get_or("membrane.index_im", 0.0);
    s.membrane.validate();

    const double L = r.get("cavity.length_L_m");
    const double rc = r.get("cavity.mirror_curvature_Rc_m");
    const double lambda = r.get("cavity.wavelength_lambda0_m");
    const bool by_finesse = r.has("cavity.empty_finesse_F0");
    const bool by_mirrors = r.has("cavity.mirror_transmission_T1") ||
                            r.has("cavity.mirror_transmission_T2");
    if (by_finesse == by_mirrors) {
      throw ConfigError(std::string(source_name) +
                        ": give either cavity.empty_finesse_F0 or cavity.mirror_transmission_T1/T2");
    }
    if (by_finesse) {
      if (r.has("cavity.mirror_loss_per_mirror")) {
        throw ConfigError(std::string(source_name) +
                          ": cavity.mirror_loss_per_mirror needs explicit mirror transmissions");
      }
      s.cavity = CavitySpec::with_finesse(L, rc, lambda, r.get("cavity.empty_finesse_F0"));
    } else {
      s.cavity.length_L_m = L;
      s.cavity.mirror_curvature_Rc_m = rc;
      s.cavity.wavelength_lambda0_m = lambda;
      s.cavity.mirror_transmission_T1 = r.get("cavity.mirror_transmission_T1");
      s.cavity.mirror_transmission_T2 = r.get("cavity.mirror_transmission_T2");
      s.cavity.mirror_loss_per_mirror = r.get_or("cavity.mirror_loss_per_mirror", 0.0);
    }
    s.cavity.validate();

    s.beam.waist_w0_m = r.has("beam.waist_w0_m") ? r.get("beam.waist_w0_m") : cavity_waist(s.cavity);
    const bool absolute = r.has("beam.center_x0_m") || r.has("beam.center_y0_m");
    const bool relative = r.has("beam.offset_dx_m") || r.has("beam.offset_dy_m");
    if (absolute && relative) {
      throw ConfigError(std::string(source_name) +
                        ": give either beam.center_x0_m/center_y0_m or beam.offset_dx_m/offset_dy_m");
    }
    const double half = 0.5 * s.membrane.side_d_m;
    if (absolute) {
      s.beam.center_x0_m = r.get("beam.center_x0_m");
      s.beam.center_y0_m = r.get("beam.center_y0_m");
    } else {
      s.beam.center_x0_m = half + r.get_or("beam.offset_dx_m", 0.0);
      s.beam.center_y0_m = half + r.get_or("beam.offset_dy_m", 0.0);
    }
    try {
      s.beam.validate(s.membrane);
    } catch (const DomainError& e) {
      if (relative) {
        const std::string what = e.what();
        const std::string key = what.find("x0") != std::string::npos ? "beam.offset_dx_m" : "beam.offset_dy_m";
        throw DomainError(key + " puts the beam off the membrane");
      }
      throw;
    }

    s.drive.resonant_output_power_w = r.get("drive.resonant_output_power_w");
    s.drive.cavity_linewidth_gamma = to_angular(r.get("drive.cavity_linewidth_fwhm_hz"));
    s.drive.detuning_Delta = to_angular(r.get_or("drive.detuning_hz", 0.0));
    s.drive.optical_omega0 = kTwoPi * kSpeedOfLight / s.cavity.wavelength_lambda0_m;
    s.drive.validate();

    s.g_factor = r.get_or("coupling.g_factor", kDefaultCouplingFactor);
    if (!(s.g_factor > 0.0)) throw DomainError("coupling.g_factor must be positive");
    s.room_temperature_k = r.get_or("environment.room_temperature_k", 295.0);
    if (!(s.room_temperature_k > 0.0)) {
      throw DomainError("environment.room_temperature_k must be positive");
    }

    s.modes = r.modes();
    if (s.modes.empty()) {
      throw ConfigError(std::string(source_name) + ": missing key mode.<j>_<k>.q_factor (need at least one mode)");
    }

    const char* ted_keys[] = {"ted.youngs_E_pa", "ted.expansion_alpha_per_k",
                              "ted.heat_capacity_cp_j_per_kg_k", "ted.conductivity_kappa_w_per_m_k"};
    if (std::any_of(std::begin(ted_keys), std::end(ted_keys), [&](const char* k) { return r.has(k); }) ||
        r.has("ted.bath_temperature_k") || r.has("ted.dilution_factor")) {
      TedMaterial t;
      t.youngs_E_pa = r.get("ted.youngs_E_pa");
      t.expansion_alpha_per_k = r.get("ted.expansion_alpha_per_k");
      t.heat_capacity_cp_j_per_kg_k = r.get("ted.heat_capacity_cp_j_per_kg_k");
      t.conductivity_kappa_w_per_m_k = r.get("ted.conductivity_kappa_w_per_m_k");
      t.bath_temperature_k = r.get_or("ted.bath_temperature_k", s.room_temperature_k);
      t.dilution_factor = r.get_or("ted.dilution_factor", 1.0);
      t.validate();
      s.ted = t;
    }

    if (r.has("linearized.mechanical_frequency_hz") || r.has("linearized.q_factor") ||
        r.has("linearized.cavity_linewidth_fwhm_hz") || r.has("linearized.detuning_hz") ||
        r.has("linearized.thermal_occupation") || r.has("linearized.g_eff_hz")) {
      LinearizedSettings l;
      l.mechanical_frequency_hz = r.get("linearized.mechanical_frequency_hz");
      l.q_factor = r.get("linearized.q_factor");
      l.cavity_linewidth_fwhm_hz = r.get("linearized.cavity_linewidth_fwhm_hz");
      l.detuning_hz = r.get("linearized.detuning_hz");
      if (!(l.mechanical_frequency_hz > 0.0)) {
        throw DomainError("linearized.mechanical_frequency_hz must be positive");
      }
      if (!(l.q_factor > 0.0)) throw DomainError("linearized.q_factor must be positive");
      if (!(l.cavity_linewidth_fwhm_hz > 0.0)) {
        throw DomainError("linearized.cavity_linewidth_fwhm_hz must be positive");
      }
      l.thermal_occupation = r.get_or(
          "linearized.thermal_occupation",
          thermal_occupation(s.room_temperature_k, to_angular(l.mechanical_frequency_hz)));
      if (!(l.thermal_occupation >= 0.0)) {
        throw DomainError("linearized.thermal_occupation must be >= 0");
      }
      l.g_eff_hz = r.get_or("linearized.g_eff_hz", 0.0);
      if (!(l.g_eff_hz >= 0.0)) throw DomainError("linearized.g_eff_hz must be >= 0");
      s.linearized = l;
    }
  } catch (const DomainError& e) {
    r.rethrow_with_line(e);
  }
  return s;
}

Scenario parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

}  // namespace optomech
