#include "optomech/cavity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <boost/math/tools/minima.hpp>

#include "optomech/constants.hpp"
#include "optomech/csv.hpp"
#include "optomech/errors.hpp"

namespace optomech {

namespace {

using cplx = std::complex<double>;

constexpr double kInvPhi = 0.6180339887498949;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw DomainError(std::string(name) + " must be positive and finite");
  }
}

// Golden-section search for the maximum of f on [a, b].
template <class F>
std::pair<double, double> golden_maximum(F&& f, double a, double b, int iterations) {
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int i = 0; i < iterations; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
    }
  }
  return f1 >= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

template <class F>
std::pair<double, double> golden_minimum(F&& f, double a, double b, int iterations) {
  auto [x, fx] = golden_maximum([&](double v) { return -f(v); }, a, b, iterations);
  return {x, -fx};
}

}  // namespace

CavitySpec CavitySpec::with_finesse(double length_m, double curvature_m, double wavelength_m,
                                    double empty_finesse) {
  require_positive(empty_finesse, "cavity.empty_finesse_F0");
  if (empty_finesse <= kPi) throw DomainError("cavity.empty_finesse_F0 must exceed pi");
  CavitySpec spec;
  spec.length_L_m = length_m;
  spec.mirror_curvature_Rc_m = curvature_m;
  spec.wavelength_lambda0_m = wavelength_m;
  spec.mirror_transmission_T1 = kPi / empty_finesse;
  spec.mirror_transmission_T2 = kPi / empty_finesse;
  return spec;
}

void CavitySpec::validate() const {
  require_positive(length_L_m, "cavity.length_L_m");
  require_positive(mirror_curvature_Rc_m, "cavity.mirror_curvature_Rc_m");
  require_positive(wavelength_lambda0_m, "cavity.wavelength_lambda0_m");
  if (!(length_L_m < 2.0 * mirror_curvature_Rc_m)) {
    throw DomainError("cavity is not stable: need cavity.length_L_m < 2 * cavity.mirror_curvature_Rc_m");
  }
  if (!(mirror_loss_per_mirror >= 0.0)) throw DomainError("cavity.mirror_loss_per_mirror must be >= 0");
  for (auto [t, name] : {std::pair{mirror_transmission_T1, "cavity.mirror_transmission_T1"},
                         std::pair{mirror_transmission_T2, "cavity.mirror_transmission_T2"}}) {
    if (!(t > 0.0 && t + mirror_loss_per_mirror < 1.0)) {
      throw DomainError(std::string(name) + " must lie in (0, 1 - loss)");
    }
  }
}

double CavitySpec::empty_finesse() const {
  return kTwoPi / (mirror_transmission_T1 + mirror_transmission_T2 + 2.0 * mirror_loss_per_mirror);
}

double CavitySpec::fsr_hz() const { return kSpeedOfLight / (2.0 * length_L_m); }

double CavitySpec::carrier_hz() const { return kSpeedOfLight / wavelength_lambda0_m; }

double CavitySpec::line_center_hz() const {
  return std::round(2.0 * length_L_m / wavelength_lambda0_m) * fsr_hz();
}

SlabResponse slab_response(double index_re, double index_im, double thickness_m,
                           double wavelength_m) {
  require_positive(wavelength_m, "wavelength");
  if (!(thickness_m >= 0.0)) throw DomainError("slab thickness must be >= 0");
  const cplx n{index_re, index_im};
  const cplx r01 = (1.0 - n) / (1.0 + n);
  const cplx delta = kTwoPi * n * thickness_m / wavelength_m;
  const cplx e1 = std::exp(cplx{0.0, 1.0} * delta);
  const cplx e2 = e1 * e1;
  const cplx den = 1.0 - r01 * r01 * e2;
  SlabResponse out;
  out.r_amplitude = r01 * (1.0 - e2) / den;
  out.t_amplitude = (1.0 - r01 * r01) * e1 / den;
  out.R = std::norm(out.r_amplitude);
  out.T = std::norm(out.t_amplitude);
  // A lossless film absorbs nothing; don't report the rounding of 1 - R - T.
  out.A = index_im == 0.0 ? 0.0 : 1.0 - out.R - out.T;
  return out;
}

CompositeCavity::CompositeCavity(const CavitySpec& cavity, const MembraneSpec& membrane,
                                 const MembranePlacement& placement)
    : cavity_(cavity),
      index_(membrane.index_re, membrane.index_im),
      thickness_m_(membrane.thickness_t_m) {
  cavity.validate();
  if (!(membrane.index_re >= 1.0)) throw DomainError("membrane.index_re must be >= 1");
  if (!(membrane.index_im >= 0.0)) throw DomainError("membrane.index_im must be >= 0");
  if (!(membrane.thickness_t_m >= 0.0)) throw DomainError("membrane.thickness_t_m must be >= 0");
  const long double half = 0.5L * cavity.length_L_m;
  const long double dz = static_cast<long double>(placement.dz_coarse_m) + placement.dz_fine_m;
  const long double gap_left = half + dz - 0.5L * thickness_m_;
  const long double gap_right = half - dz - 0.5L * thickness_m_;
  if (!(gap_left > 0.0L && gap_right > 0.0L)) {
    throw DomainError("membrane offset " + format_double(placement.offset_m()) + " m places it outside the cavity");
  }
  line_center_hz_ = cavity.line_center_hz();
  auto split = [](long double gap, double& hi, double& lo) {
    const long double per_hz = gap / static_cast<long double>(kSpeedOfLight);
    hi = static_cast<double>(per_hz);
    lo = static_cast<double>(per_hz - hi);
  };
  split(gap_left, left_hi_, left_lo_);
  split(gap_right, right_hi_, right_lo_);
  auto mirror = [&](double t_power) {
    const double r = std::sqrt(1.0 - t_power - cavity.mirror_loss_per_mirror);
    return Mirror{r, -r, std::sqrt(t_power)};
  };
  input_ = mirror(cavity.mirror_transmission_T1);
  output_ = mirror(cavity.mirror_transmission_T2);
}

namespace {

// The gap phases are a few thousand radians and the finesse amplifies any
// rounding in them. nu * (hi + lo) is formed with an exact product (fma) and
// reduced to one turn before the sincos.
std::complex<double> gap_phasor(double nu, double hi, double lo) {
  const double p = nu * hi;
  const double e = std::fma(nu, hi, -p) + nu * lo;
  const double frac = (p - std::floor(p)) + e;
  return std::polar(1.0, kTwoPi * frac);
}

}  // namespace

std::complex<double> CompositeCavity::amplitude(double detuning_hz) const {
  const double nu = line_center_hz_ + detuning_hz;
  const double k = kTwoPi * nu / kSpeedOfLight;

  // Membrane as a symmetric two-port.
  const cplx r01 = (1.0 - index_) / (1.0 + index_);
  const cplx e1 = std::exp(cplx{0.0, k * thickness_m_} * index_);
  const cplx e2 = e1 * e1;
  const cplx den = 1.0 - r01 * r01 * e2;
  const cplx rs = r01 * (1.0 - e2) / den;
  const cplx ts = (1.0 - r01 * r01) * e1 / den;

  // Element matrix (1/t) [[1, -r_R], [r_L, t^2 - r_L r_R]] maps left-side
  // (forward, backward) amplitudes to right-side ones; only M00 of the
  // product is needed.
  const cplx p1 = gap_phasor(nu, left_hi_, left_lo_);
  const cplx p2 = gap_phasor(nu, right_hi_, right_lo_);
  const cplx u0 = std::conj(p1) / input_.t;
  const cplx u1 = -input_.r_inside * p1 / input_.t;
  const cplx a = (u0 + u1 * rs) / ts;
  const cplx b = (-u0 * rs + u1 * (ts * ts - rs * rs)) / ts;
  // Output mirror seen from inside reflects r_L = -sqrt(R).
  const cplx m00 = (a * std::conj(p2) + b * p2 * output_.r_inside) / output_.t;
  return 1.0 / m00;
}

double composite_transmission(const CavitySpec& cavity, const MembraneSpec& membrane,
                              const MembranePlacement& placement, double detuning_hz) {
  return CompositeCavity(cavity, membrane, placement).transmission(detuning_hz);
}

Resonance locate_resonance(const CompositeCavity& cavity, const ResonanceSearch& search) {
  if (search.points_per_fsr < 16) throw DomainError("resonance prescan needs >= 16 points per FSR");
  if (!(search.window_fsr > 0.0)) throw DomainError("resonance search window must be positive");
  const double fsr = cavity.cavity().fsr_hz();
  const double step = fsr / search.points_per_fsr;

  double window = search.window_fsr;
  std::vector<double> samples;
  long best = -1;
  double start = 0.0;
  while (true) {
    const long count = std::max<long>(8, std::lround(window * search.points_per_fsr));
    start = search.hint_hz - 0.5 * step * static_cast<double>(count);
    samples.resize(static_cast<std::size_t>(count));
    for (long i = 0; i < count; ++i) {
      samples[static_cast<std::size_t>(i)] = cavity.transmission(start + step * static_cast<double>(i));
    }
    double best_distance = std::numeric_limits<double>::infinity();
    for (long i = 1; i + 1 < count; ++i) {
      const auto s = static_cast<std::size_t>(i);
      if (samples[s] > samples[s - 1] && samples[s] >= samples[s + 1]) {
        const double distance = std::abs(start + step * static_cast<double>(i) - search.hint_hz);
        if (distance < best_distance) {
          best_distance = distance;
          best = i;
        }
      }
    }
    if (best >= 0) break;
    window *= 2.0;
    if (window > search.max_window_fsr) {
      throw SearchFailure("no transmission resonance within " + format_double(search.max_window_fsr) +
                          " FSR of the search hint");
    }
  }

  const double coarse = start + step * static_cast<double>(best);
  const auto t_of = [&](double d) { return cavity.transmission(d); };
  auto [peak, t_peak] = golden_maximum(t_of, coarse - step, coarse + step, 40);
  if (samples[static_cast<std::size_t>(best)] > t_peak) {
    peak = coarse;
    t_peak = samples[static_cast<std::size_t>(best)];
  }
  if (!(t_peak > 0.0)) throw SearchFailure("resonance has zero transmission");
  const double half = 0.5 * t_peak;

  // Step outward until below half maximum, then bisect.
  auto crossing = [&](double direction) {
    double inner = peak;
    double s = 0.25 * step;
    while (t_of(peak + direction * s) > half) {
      inner = peak + direction * s;
      s *= 2.0;
      if (s > fsr) throw SearchFailure("resonance half-maximum not found within one FSR");
    }
    double outer = peak + direction * s;
    for (int i = 0; i < 200 && std::abs(outer - inner) > 1e-3; ++i) {
      const double mid = 0.5 * (inner + outer);
      (t_of(mid) > half ? inner : outer) = mid;
    }
    return 0.5 * (inner + outer);
  };
  const double hi = crossing(+1.0);
  const double lo = crossing(-1.0);

  Resonance out;
  out.detuning_hz = peak;
  out.peak_transmission = t_peak;
  out.fwhm_hz = hi - lo;
  out.finesse = fsr / out.fwhm_hz;
  return out;
}

double finesse_at_position(const CavitySpec& cavity, const MembraneSpec& membrane,
                           const MembranePlacement& placement, double hint_hz) {
  ResonanceSearch search;
  search.hint_hz = hint_hz;
  return locate_resonance(CompositeCavity(cavity, membrane, placement), search).finesse;
}

namespace {

constexpr double kTrackWindowFsr = 0.25;
constexpr double kLocalWindowFsr = 0.002;

struct FineSweep {
  std::vector<double> fine_m;
  std::vector<Resonance> resonances;
};

void check_distinct_positions(const FinesseScan& scan) {
  std::vector<double> dz;
  dz.reserve(scan.points.size());
  for (const auto& p : scan.points) dz.push_back(p.dz_m);
  std::sort(dz.begin(), dz.end());
  const auto dup = std::adjacent_find(dz.begin(), dz.end());
  if (dup != dz.end()) throw DataError("finesse scan repeats dz = " + format_double(*dup));
}

void check_envelope_options(const EnvelopeOptions& options) {
  if (options.fine_steps < 4) throw DomainError("envelope needs at least 4 fine steps");
  if (options.refine_iterations < 0) throw DomainError("envelope refine iterations must be >= 0");
}

// Follows one resonance across dz_fine in [0, lambda0/2).
FineSweep sweep_fine(const CavitySpec& cavity, const MembraneSpec& membrane, double dz,
                     int fine_steps) {
  FineSweep sweep;
  const double period = 0.5 * cavity.wavelength_lambda0_m;
  ResonanceSearch search;
  for (int i = 0; i < fine_steps; ++i) {
    const double fine = period * i / fine_steps;
    const CompositeCavity cc(cavity, membrane, MembranePlacement{dz, fine});
    const Resonance res = locate_resonance(cc, search);
    sweep.fine_m.push_back(fine);
    sweep.resonances.push_back(res);
    search.hint_hz = res.detuning_hz;
    search.window_fsr = kTrackWindowFsr;
  }
  return sweep;
}

// Finesse at dz + fine with the resonance searched near hint.
double tracked_finesse(const CavitySpec& cavity, const MembraneSpec& membrane, double dz,
                       double fine, double hint, double window_fsr) {
  ResonanceSearch search;
  search.hint_hz = hint;
  search.window_fsr = window_fsr;
  return locate_resonance(CompositeCavity(cavity, membrane, MembranePlacement{dz, fine}), search)
      .finesse;
}

struct ExtremeLocation {
  double value = 0.0;
  double fine_m = 0.0;
  double detuning_hz = 0.0;
};

ExtremeLocation refine_extreme(const CavitySpec& cavity, const MembraneSpec& membrane, double dz,
                               const FineSweep& sweep, bool maximum, int iterations) {
  std::size_t idx = 0;
  for (std::size_t i = 1; i < sweep.resonances.size(); ++i) {
    const double f = sweep.resonances[i].finesse;
    if (maximum ? f > sweep.resonances[idx].finesse : f < sweep.resonances[idx].finesse) idx = i;
  }
  ExtremeLocation best{sweep.resonances[idx].finesse, sweep.fine_m[idx],
                       sweep.resonances[idx].detuning_hz};
  if (iterations == 0) return best;
  const double h = 0.5 * cavity.wavelength_lambda0_m / static_cast<double>(sweep.fine_m.size());
  const double hint = best.detuning_hz;
  auto f = [&](double fine) {
    return tracked_finesse(cavity, membrane, dz, fine, hint, kTrackWindowFsr);
  };
  const auto [x, fx] = maximum ? golden_maximum(f, best.fine_m - h, best.fine_m + h, iterations)
                               : golden_minimum(f, best.fine_m - h, best.fine_m + h, iterations);
  if (maximum ? fx > best.value : fx < best.value) {
    ResonanceSearch search;
    search.hint_hz = hint;
    search.window_fsr = kTrackWindowFsr;
    best = {fx, x,
            locate_resonance(CompositeCavity(cavity, membrane, MembranePlacement{dz, x}), search)
                .detuning_hz};
  }
  return best;
}

}  // namespace

std::vector<EnvelopePoint> finesse_envelope(const CavitySpec& cavity, const MembraneSpec& membrane,
                                            std::span<const double> dz_coarse_grid,
                                            const EnvelopeOptions& options) {
  check_envelope_options(options);
  std::vector<EnvelopePoint> out;
  out.reserve(dz_coarse_grid.size());
  for (const double dz : dz_coarse_grid) {
    const FineSweep sweep = sweep_fine(cavity, membrane, dz, options.fine_steps);
    EnvelopePoint p;
    p.dz_m = dz;
    p.f_max = refine_extreme(cavity, membrane, dz, sweep, true, options.refine_iterations).value;
    p.f_min = refine_extreme(cavity, membrane, dz, sweep, false, options.refine_iterations).value;
    out.push_back(p);
  }
  return out;
}

std::vector<double> envelope_maximum(const CavitySpec& cavity, const MembraneSpec& membrane,
                                     std::span<const double> dz_grid,
                                     const EnvelopeOptions& options) {
  check_envelope_options(options);
  std::vector<double> out;
  out.reserve(dz_grid.size());
  for (const double dz : dz_grid) {
    const FineSweep sweep = sweep_fine(cavity, membrane, dz, options.fine_steps);
    out.push_back(refine_extreme(cavity, membrane, dz, sweep, true, options.refine_iterations).value);
  }
  return out;
}

AbsorptionFit fit_absorption(const FinesseScan& scan, const CavitySpec& cavity,
                             const MembraneSpec& membrane, const AbsorptionFitOptions& options) {
  check_envelope_options(options.envelope);
  if (scan.points.size() >= 2 &&
      std::all_of(scan.points.begin(), scan.points.end(),
                  [&](const FinessePoint& p) { return p.dz_m == scan.points.front().dz_m; })) {
    throw FitDegenerateError("finesse scan has every point at the same dz; Im(n) is not identifiable");
  }
  if (scan.points.size() < 5) {
    throw InsufficientDataError("absorption fit needs at least 5 finesse points, got " +
                                std::to_string(scan.points.size()));
  }
  check_distinct_positions(scan);
  if (!(options.im_lower >= 0.0 && options.im_upper > options.im_lower)) {
    throw DomainError("absorption fit bounds must satisfy 0 <= lower < upper");
  }
  for (const auto& p : scan.points) {
    if (!std::isfinite(p.dz_m) || !(p.finesse > 0.0) || !std::isfinite(p.finesse)) {
      throw DataError("finesse scan contains a non-finite or non-positive entry at dz = " +
                      format_double(p.dz_m));
    }
  }

  // The lossless sweep fixes which resonance is followed at each fine step.
  // Absorption barely moves resonance frequencies, so each objective
  // evaluation re-scores the same resonances with a tiny search window.
  MembraneSpec lossless = membrane;
  lossless.index_im = 0.0;
  std::vector<FineSweep> cache;
  cache.reserve(scan.points.size());
  for (const auto& p : scan.points) {
    cache.push_back(sweep_fine(cavity, lossless, p.dz_m, options.envelope.fine_steps));
  }

  const double h = 0.5 * cavity.wavelength_lambda0_m / options.envelope.fine_steps;
  int evaluations = 0;
  auto model_max = [&](const MembraneSpec& m, std::size_t i) {
    const double dz = scan.points[i].dz_m;
    const FineSweep& sweep = cache[i];
    auto local = [&](double fine, double hint) {
      try {
        return tracked_finesse(cavity, m, dz, fine, hint, kLocalWindowFsr);
      } catch (const SearchFailure&) {
        return tracked_finesse(cavity, m, dz, fine, hint, 1.0);
      }
    };
    std::size_t best = 0;
    double f_best = -1.0;
    for (std::size_t j = 0; j < sweep.fine_m.size(); ++j) {
      const double f = local(sweep.fine_m[j], sweep.resonances[j].detuning_hz);
      if (f > f_best) {
        f_best = f;
        best = j;
      }
    }
    const double hint = sweep.resonances[best].detuning_hz;
    const double x0 = sweep.fine_m[best];
    const auto [x, fx] = golden_maximum([&](double fine) { return local(fine, hint); }, x0 - h,
                                        x0 + h, options.envelope.refine_iterations);
    return std::max(fx, f_best);
  };
  auto sse = [&](double im) {
    ++evaluations;
    MembraneSpec m = membrane;
    m.index_im = im;
    double total = 0.0;
    for (std::size_t i = 0; i < scan.points.size(); ++i) {
      const double r = scan.points[i].finesse - model_max(m, i);
      total += r * r;
    }
    return total;
  };

  std::uintmax_t max_iter = 100;
  const auto [im, best] = boost::math::tools::brent_find_minima(
      sse, options.im_lower, options.im_upper, 40, max_iter);
  AbsorptionFit fit;
  fit.im_n = im;
  fit.rms_residual = std::sqrt(best / static_cast<double>(scan.points.size()));
  fit.objective_evaluations = evaluations;
  return fit;
}

FinesseScan read_finesse_scan_csv(std::istream& in, std::string_view source_name) {
  const CsvTable table = read_csv(in, source_name);
  const int c_dz = table.column("dz_m");
  const int c_f = table.column("finesse");
  const int c_sigma = table.column("finesse_sigma");
  if (c_dz < 0 || c_f < 0) {
    throw DataError(std::string(source_name) + ": finesse scan needs columns dz_m and finesse");
  }
  FinesseScan scan;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    FinessePoint p;
    p.dz_m = row[static_cast<std::size_t>(c_dz)];
    p.finesse = row[static_cast<std::size_t>(c_f)];
    if (!std::isfinite(p.dz_m) || !std::isfinite(p.finesse) || !(p.finesse > 0.0)) {
      throw DataError(std::string(source_name) + ": data row " + std::to_string(i + 1) +
                      " needs finite dz_m and positive finesse");
    }
    if (c_sigma >= 0 && std::isfinite(row[static_cast<std::size_t>(c_sigma)])) {
      p.finesse_sigma = row[static_cast<std::size_t>(c_sigma)];
    }
    scan.points.push_back(p);
  }
  check_distinct_positions(scan);
  return scan;
}

FinesseScan read_finesse_scan_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open finesse scan " + path.string());
  return read_finesse_scan_csv(in, path.string());
}

}  // namespace optomech
