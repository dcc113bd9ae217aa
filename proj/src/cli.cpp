#include "optomech/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "optomech/cavity.hpp"
#include "optomech/config.hpp"
#include "optomech/constants.hpp"
#include "optomech/cooling.hpp"
#include "optomech/coupling.hpp"
#include "optomech/csv.hpp"
#include "optomech/errors.hpp"
#include "optomech/membrane.hpp"

namespace optomech {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class HelpRequested : public std::exception {
 public:
  explicit HelpRequested(std::string text) : text_(std::move(text)) {}
  const char* what() const noexcept override { return text_.c_str(); }

 private:
  std::string text_;
};

class Digest {
 public:
  void add(std::string_view bytes) {
    for (const unsigned char c : bytes) {
      hash_ ^= c;
      hash_ *= 0x100000001b3ULL;
    }
    // Separator so ("ab","c") and ("a","bc") differ.
    hash_ ^= 0xff;
    hash_ *= 0x100000001b3ULL;
  }
  void add_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    add(buf.str());
  }
  std::string hex() const {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << hash_;
    return out.str();
  }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

std::vector<double> linear_grid(double lo, double hi, int steps, const char* flag) {
  if (steps < 1) throw ConfigError(std::string(flag) + " must be >= 1");
  if (!(std::isfinite(lo) && std::isfinite(hi))) throw ConfigError(std::string(flag) + " range must be finite");
  if (steps > 1 && !(hi > lo)) throw ConfigError(std::string(flag) + " needs max > min");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    out.push_back(steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1));
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, int steps, const char* flag) {
  if (!(lo > 0.0)) throw ConfigError(std::string(flag) + " range must be positive");
  std::vector<double> out = linear_grid(std::log(lo), std::log(hi), steps, flag);
  for (double& v : out) v = std::exp(v);
  out.front() = lo;
  if (steps > 1) out.back() = hi;
  return out;
}

ModeIndex parse_mode(const std::string& text) {
  ModeIndex idx;
  char comma = 0;
  std::istringstream in(text);
  if (!(in >> idx.j >> comma >> idx.k) || comma != ',' || !(in >> std::ws).eof()) {
    throw ConfigError("--mode expects j,k (for example 6,6), got '" + text + "'");
  }
  try {
    idx.validate();
  } catch (const DomainError& e) {
    throw ConfigError(std::string("--mode: ") + e.what());
  }
  return idx;
}

const ModeSetting& find_mode(const Scenario& s, const std::string& mode_flag) {
  if (mode_flag.empty()) return s.modes.front();
  const ModeIndex idx = parse_mode(mode_flag);
  for (const auto& m : s.modes) {
    if (m.index == idx) return m;
  }
  throw ConfigError("mode " + mode_flag + " has no mode." + std::to_string(idx.j) + "_" +
                    std::to_string(idx.k) + ".q_factor entry in the config");
}

LinearizedSystem linearized_system(const Scenario& s) {
  if (!s.linearized) throw ConfigError("this command needs the linearized.* config section");
  const LinearizedSettings& l = *s.linearized;
  LinearizedSystem sys;
  sys.omega_m = to_angular(l.mechanical_frequency_hz);
  sys.gamma_m = sys.omega_m / l.q_factor;
  sys.kappa_gamma = to_angular(l.cavity_linewidth_fwhm_hz);
  sys.detuning_Delta = to_angular(l.detuning_hz);
  sys.g_eff = to_angular(l.g_eff_hz);
  sys.n_bath = l.thermal_occupation;
  return sys;
}

struct Context {
  std::filesystem::path out_dir;
  RunReport report;

  void write(const std::string& name, const CsvWriter& csv) {
    std::filesystem::create_directories(out_dir);
    const auto path = out_dir / name;
    write_file_atomic(path, csv.str());
    report.outputs.push_back(path);
  }
  void note(const std::string& key, double value) {
    report.summary.push_back(key + " = " + format_double(value));
  }
};

struct Options {
  std::string config;
  std::string out = ".";
  int jmax = 8;
  std::string mode;
  std::string trace;
  std::string scan;
  std::string convention = "field";
  double frequency_hz = kNaN;
  double freq_min = 1e5, freq_max = 1e8;
  int freq_steps = 200;
  double dz_min = -185e-6, dz_max = 185e-6;
  int dz_steps = 75;
  double im_max = 1e-3;
  double det_min = kNaN, det_max = kNaN;
  int det_steps = 200;
  double geff_min = kNaN, geff_max = kNaN;
  int geff_steps = 200;
  double gamma_min = 1e5, gamma_max = 1e7;
  int gamma_steps = 41;
  double omega_min = kNaN, omega_max = kNaN;
  int omega_steps = 801;
};

void cmd_modes(const Scenario& s, const Options& o, Context& ctx) {
  if (o.jmax < 1) throw ConfigError("--jmax must be >= 1");
  CsvWriter csv({"j", "k", "frequency_hz", "effective_mass_kg", "x_zp_m", "thermal_occupation",
                 "q_factor", "q_frequency_product_hz"});
  for (int j = 1; j <= o.jmax; ++j) {
    for (int k = 1; k <= o.jmax; ++k) {
      const ModeIndex idx{j, k};
      double q = kNaN;
      for (const auto& m : s.modes) {
        if (m.index == idx) q = m.q_factor;
      }
      const MechanicalMode mode = build_mode(s.membrane, idx, std::isnan(q) ? 1.0 : q);
      const double nu = mode_frequency(s.membrane, idx);
      csv.add_row({double(j), double(k), nu, mode.m_eff, mode.x_zp,
                   thermal_occupation(s.room_temperature_k, mode.omega_m), q, q * nu});
    }
  }
  ctx.write("modes.csv", csv);
  ctx.note("q_frequency_threshold_hz", kBoltzmann * s.room_temperature_k / kPlanck);
}

void cmd_ringdown(const Scenario& s, const Options& o, Context& ctx) {
  if (o.trace.empty()) throw ConfigError("ringdown-fit needs --trace <csv>");
  AmplitudeConvention conv;
  if (o.convention == "field") {
    conv = AmplitudeConvention::kField;
  } else if (o.convention == "energy") {
    conv = AmplitudeConvention::kEnergy;
  } else {
    throw ConfigError("--amplitude-convention must be field or energy");
  }
  double nu = o.frequency_hz;
  double j = kNaN, k = kNaN;
  if (std::isnan(nu)) {
    const ModeSetting& m = find_mode(s, o.mode);
    nu = mode_frequency(s.membrane, m.index);
    j = m.index.j;
    k = m.index.k;
  } else if (!(nu > 0.0)) {
    throw ConfigError("--frequency-hz must be positive");
  }
  const RingdownFit fit = fit_ringdown(read_ringdown_csv(o.trace, nu), conv);
  CsvWriter csv({"j", "k", "frequency_hz", "q_factor", "damping_gamma_m_hz", "rms_log_residual",
                 "amplitude0"});
  csv.add_row({j, k, nu, fit.q_factor, to_hz(fit.gamma_m), fit.rms_residual, fit.amplitude0});
  ctx.write("ringdown_fit.csv", csv);
  ctx.note("q_factor", fit.q_factor);
}

void cmd_ted(const Scenario& s, const Options& o, Context& ctx) {
  if (!s.ted) throw ConfigError("ted-limit needs the ted.* config section");
  CsvWriter csv({"frequency_hz", "q_ted", "q_frequency_product_hz"});
  for (const double nu : log_grid(o.freq_min, o.freq_max, o.freq_steps, "--freq-steps")) {
    const double q = ted_q_limit(*s.ted, s.membrane, to_angular(nu));
    csv.add_row({nu, q, q * nu});
  }
  ctx.write("ted_limit.csv", csv);
}

void cmd_finesse_scan(const Scenario& s, const Options& o, Context& ctx) {
  const auto grid = linear_grid(o.dz_min, o.dz_max, o.dz_steps, "--dz-steps");
  const auto env = finesse_envelope(s.cavity, s.membrane, grid);
  CsvWriter csv({"dz_m", "finesse", "envelope_min", "envelope_max"});
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double f = finesse_at_position(s.cavity, s.membrane, MembranePlacement{grid[i], 0.0});
    csv.add_row({grid[i], f, env[i].f_min, env[i].f_max});
  }
  ctx.write("finesse_scan.csv", csv);
  ctx.note("empty_finesse", s.cavity.empty_finesse());
}

void cmd_fit_absorption(const Scenario& s, const Options& o, Context& ctx) {
  if (o.scan.empty()) throw ConfigError("fit-absorption needs --scan <csv>");
  const FinesseScan scan = read_finesse_scan_csv(o.scan);
  AbsorptionFitOptions opt;
  opt.im_upper = o.im_max;
  const AbsorptionFit fit = fit_absorption(scan, s.cavity, s.membrane, opt);
  CsvWriter csv({"index_im", "rms_residual", "points", "objective_evaluations"});
  csv.add_row({fit.im_n, fit.rms_residual, double(scan.points.size()),
               double(fit.objective_evaluations)});
  ctx.write("absorption_fit.csv", csv);

  MembraneSpec fitted = s.membrane;
  fitted.index_im = fit.im_n;
  std::vector<double> dz;
  for (const auto& p : scan.points) dz.push_back(p.dz_m);
  const auto model = envelope_maximum(s.cavity, fitted, dz);
  CsvWriter res({"dz_m", "finesse_measured", "finesse_model", "residual"});
  for (std::size_t i = 0; i < dz.size(); ++i) {
    res.add_row({dz[i], scan.points[i].finesse, model[i], scan.points[i].finesse - model[i]});
  }
  ctx.write("absorption_residuals.csv", res);
  ctx.note("index_im", fit.im_n);
}

void cmd_overlap(const Scenario& s, const Options& o, Context& ctx) {
  if (o.jmax < 1) throw ConfigError("--jmax must be >= 1");
  CsvWriter csv({"j", "k", "frequency_hz", "eta", "g_hz_per_m"});
  for (int j = 1; j <= o.jmax; ++j) {
    for (int k = 1; k <= o.jmax; ++k) {
      const ModeIndex idx{j, k};
      const double eta = overlap_eta(s.beam, s.membrane, idx);
      csv.add_row({double(j), double(k), mode_frequency(s.membrane, idx), eta,
                   to_hz(linear_coupling_g(eta, s.cavity, s.g_factor))});
    }
  }
  ctx.write("overlap.csv", csv);
  ctx.note("waist_w0_m", s.beam.waist_w0_m);
}

void cmd_cooling_sweep(const Scenario& s, const Options& o, Context& ctx) {
  const ModeSetting& setting = find_mode(s, o.mode);
  const MechanicalMode mode = build_mode(s.membrane, setting.index, setting.q_factor);
  const double eta = overlap_eta(s.beam, s.membrane, setting.index);
  const double g = linear_coupling_g(eta, s.cavity, s.g_factor);
  const double fwhm = to_hz(s.drive.cavity_linewidth_gamma);
  const double lo = std::isnan(o.det_min) ? -8.0 * fwhm : o.det_min;
  const double hi = std::isnan(o.det_max) ? -0.02 * fwhm : o.det_max;

  CsvWriter csv({"detuning_hz", "intracavity_photons", "g_eff_hz", "gamma_opt_hz", "gamma_eff_hz",
                 "temperature_k", "occupation_weak", "stable"});
  int unstable = 0;
  for (const double det : linear_grid(lo, hi, o.det_steps, "--detuning-steps")) {
    DriveField drive = s.drive;
    drive.detuning_Delta = to_angular(det);
    const double photons = intracavity_photons(drive);
    LinearizedSystem sys;
    sys.omega_m = mode.omega_m;
    sys.gamma_m = mode.gamma_m;
    sys.kappa_gamma = drive.cavity_linewidth_gamma;
    sys.detuning_Delta = drive.detuning_Delta;
    sys.g_eff = effective_coupling(g, mode.x_zp, std::sqrt(photons));
    sys.n_bath = thermal_occupation(s.room_temperature_k, mode.omega_m);
    CoolingResult r = weak_coupling_rates(sys);
    const bool stable = r.gamma_eff > 0.0;
    if (stable) {
      r = weak_coupling_model(sys, s.room_temperature_k);
    } else {
      ++unstable;
    }
    csv.add_row({det, photons, to_hz(sys.g_eff), to_hz(r.gamma_opt), to_hz(r.gamma_eff),
                 r.temperature_eff, r.occupation_weak, stable ? 1.0 : 0.0});
  }
  if (unstable > 0) {
    ctx.report.warnings.push_back(std::to_string(unstable) +
                                  " detunings are anti-damped (gamma_eff <= 0); temperature left empty");
  }
  ctx.write("cooling_sweep.csv", csv);
  ctx.note("eta", eta);
}

void cmd_occupation(const Scenario& s, const Options& o, Context& ctx) {
  const LinearizedSystem sys = linearized_system(s);
  const double nu_m = s.linearized->mechanical_frequency_hz;
  const double lo = std::isnan(o.geff_min) ? 1e-3 * nu_m : o.geff_min;
  const double hi = std::isnan(o.geff_max) ? 0.5 * nu_m : o.geff_max;
  if (!(lo >= 0.0)) throw ConfigError("--geff-min must be >= 0");
  std::vector<double> grid = linear_grid(lo, hi, o.geff_steps, "--geff-steps");
  for (double& g : grid) g = to_angular(g);
  const auto points = occupation_vs_coupling(sys, grid);
  CsvWriter csv({"g_eff_hz", "occupation", "stable"});
  double best = std::numeric_limits<double>::infinity();
  double best_g = kNaN;
  int unstable = 0;
  for (const auto& p : points) {
    csv.add_row({to_hz(p.g_eff), p.occupation, p.stable ? 1.0 : 0.0});
    if (!p.stable) ++unstable;
    if (p.stable && p.occupation < best) {
      best = p.occupation;
      best_g = p.g_eff;
    }
  }
  if (unstable > 0) {
    ctx.report.warnings.push_back(std::to_string(unstable) + " coupling values are unstable");
  }
  ctx.write("occupation.csv", csv);
  if (std::isfinite(best)) {
    ctx.note("min_occupation", best);
    ctx.note("min_occupation_g_eff_hz", to_hz(best_g));
  }
}

void cmd_nms_map(const Scenario& s, const Options& o, Context& ctx) {
  const LinearizedSystem sys = linearized_system(s);
  if (!(sys.g_eff > 0.0)) throw ConfigError("nms-map needs linearized.g_eff_hz > 0");
  const double nu_m = s.linearized->mechanical_frequency_hz;
  const double g_hz = s.linearized->g_eff_hz;
  const double lo = std::isnan(o.omega_min) ? nu_m - 4.0 * g_hz : o.omega_min;
  const double hi = std::isnan(o.omega_max) ? nu_m + 4.0 * g_hz : o.omega_max;
  const auto freq = linear_grid(lo, hi, o.omega_steps, "--omega-steps");
  std::vector<double> omega(freq.size());
  std::transform(freq.begin(), freq.end(), omega.begin(), [](double f) { return to_angular(f); });
  std::vector<double> gammas = log_grid(o.gamma_min, o.gamma_max, o.gamma_steps, "--gamma-steps");
  for (double& g : gammas) g = to_angular(g);

  const auto rows = nms_map(sys, gammas, omega);
  CsvWriter map({"linewidth_fwhm_hz", "frequency_hz", "s_bb_per_hz"});
  CsvWriter peaks({"linewidth_fwhm_hz", "peak_count", "splitting_hz"});
  int unstable = 0;
  for (const auto& row : rows) {
    if (!row.stable) {
      ++unstable;
      peaks.add_row({to_hz(row.kappa_gamma), kNaN, kNaN});
      continue;
    }
    for (std::size_t i = 0; i < omega.size(); ++i) {
      map.add_row({to_hz(row.kappa_gamma), freq[i], row.s_bb[i]});
    }
    const auto p = spectrum_peaks(omega, row.s_bb);
    const double split = p.size() >= 2 ? to_hz(p.back() - p.front()) : kNaN;
    peaks.add_row({to_hz(row.kappa_gamma), double(p.size()), split});
  }
  if (unstable > 0) ctx.report.warnings.push_back(std::to_string(unstable) + " linewidths are unstable");
  ctx.write("nms_map.csv", map);
  ctx.write("nms_peaks.csv", peaks);
}

}  // namespace

RunReport run_command(const std::vector<std::string>& args) {
  CLI::App app{"Membrane-in-the-middle cavity optomechanics toolkit", "optomech"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  Options o;

  using Runner = std::function<void(const Scenario&, const Options&, Context&)>;
  std::vector<std::pair<CLI::App*, Runner>> commands;
  auto add = [&](const char* name, const char* help, Runner run) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "Scenario config file")->required();
    sub->add_option("--out", o.out, "Output directory");
    commands.emplace_back(sub, std::move(run));
    return sub;
  };

  auto* modes = add("modes", "Mode frequency table for j,k <= jmax", cmd_modes);
  modes->add_option("--jmax", o.jmax, "Largest mode index");

  auto* ring = add("ringdown-fit", "Q from a ringdown trace CSV", cmd_ringdown);
  ring->add_option("--trace", o.trace, "CSV with time_s,amplitude")->required();
  ring->add_option("--mode", o.mode, "Mode j,k (default: first configured mode)");
  ring->add_option("--frequency-hz", o.frequency_hz, "Mode frequency, overrides --mode");
  ring->add_option("--amplitude-convention", o.convention, "field or energy");

  auto* ted = add("ted-limit", "Thermoelastic Q limit versus frequency", cmd_ted);
  ted->add_option("--freq-min-hz", o.freq_min);
  ted->add_option("--freq-max-hz", o.freq_max);
  ted->add_option("--freq-steps", o.freq_steps);

  auto* scan = add("finesse-scan", "Model finesse and its envelope versus membrane position",
                   cmd_finesse_scan);
  scan->add_option("--dz-min", o.dz_min, "Smallest offset [m]");
  scan->add_option("--dz-max", o.dz_max, "Largest offset [m]");
  scan->add_option("--dz-steps", o.dz_steps);

  auto* fit = add("fit-absorption", "Fit Im(n) to a measured finesse scan", cmd_fit_absorption);
  fit->add_option("--scan", o.scan, "CSV with dz_m,finesse[,finesse_sigma]")->required();
  fit->add_option("--im-max", o.im_max, "Upper bound of the Im(n) search");

  auto* ov = add("overlap", "Mode overlap and linear coupling table", cmd_overlap);
  ov->add_option("--jmax", o.jmax, "Largest mode index");

  auto* cool = add("cooling-sweep", "Weak-coupling damping and temperature versus detuning",
                   cmd_cooling_sweep);
  cool->add_option("--mode", o.mode, "Mode j,k (default: first configured mode)");
  cool->add_option("--detuning-min", o.det_min, "[Hz]");
  cool->add_option("--detuning-max", o.det_max, "[Hz]");
  cool->add_option("--detuning-steps", o.det_steps);

  auto* occ = add("occupation", "Exact phonon occupation versus g_eff", cmd_occupation);
  occ->add_option("--geff-min", o.geff_min, "[Hz]");
  occ->add_option("--geff-max", o.geff_max, "[Hz]");
  occ->add_option("--geff-steps", o.geff_steps);

  auto* nms = add("nms-map", "S_bb over cavity linewidth and frequency", cmd_nms_map);
  nms->add_option("--gamma-min", o.gamma_min, "Smallest cavity FWHM [Hz]");
  nms->add_option("--gamma-max", o.gamma_max, "Largest cavity FWHM [Hz]");
  nms->add_option("--gamma-steps", o.gamma_steps);
  nms->add_option("--omega-min", o.omega_min, "Lowest spectrum frequency [Hz]");
  nms->add_option("--omega-max", o.omega_max, "Highest spectrum frequency [Hz]");
  nms->add_option("--omega-steps", o.omega_steps);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    for (const auto& [sub, run] : commands) {
      if (sub->parsed()) throw HelpRequested(sub->help());
    }
    throw HelpRequested(app.help());
  } catch (const CLI::CallForAllHelp&) {
    throw HelpRequested(app.help("", CLI::AppFormatMode::All));
  } catch (const CLI::ParseError& e) {
    throw ConfigError(std::string("usage: ") + e.what());
  }

  for (const auto& [sub, run] : commands) {
    if (!sub->parsed()) continue;
    Context ctx;
    ctx.out_dir = o.out;
    ctx.report.command = sub->get_name();
    const Scenario scenario = parse_config(o.config);

    Digest digest;
    for (const auto& a : args) digest.add(a);
    digest.add_file(o.config);
    if (!o.trace.empty()) digest.add_file(o.trace);
    if (!o.scan.empty()) digest.add_file(o.scan);
    ctx.report.input_digest = digest.hex();

    run(scenario, o, ctx);

    std::ostringstream text;
    text << "command = " << ctx.report.command << "\n";
    text << "input_digest = " << ctx.report.input_digest << "\n";
    for (const auto& line : ctx.report.summary) text << line << "\n";
    for (const auto& p : ctx.report.outputs) text << "output = " << p.filename().string() << "\n";
    for (const auto& w : ctx.report.warnings) text << "warning = " << w << "\n";
    const auto report_path = ctx.out_dir / (ctx.report.command + ".report.txt");
    write_file_atomic(report_path, text.str());
    ctx.report.outputs.push_back(report_path);
    return ctx.report;
  }
  throw ConfigError("no subcommand given");
}

int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const RunReport report = run_command(args);
    out << report.command << ": digest " << report.input_digest << "\n";
    for (const auto& line : report.summary) out << "  " << line << "\n";
    for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    for (const auto& p : report.outputs) out << "  wrote " << p.string() << "\n";
    return 0;
  } catch (const HelpRequested& h) {
    out << h.what();
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kData);
  }
}

}  // namespace optomech
