#include <doctest.h>

#include <cmath>
#include <random>

#include "optomech/constants.hpp"
#include "optomech/coupling.hpp"
#include "optomech/errors.hpp"
#include "oracles.hpp"

using namespace optomech;

namespace {

CavitySpec cavity() { return CavitySpec::with_finesse(0.74e-3, 0.05, 935e-9, 9160.0); }

MembraneSpec film() { return {0.5e-3, 50e-9, 0.9e9, 2700.0, 2.0, 0.6e-5}; }

DriveField drive(double delta_hz) {
  DriveField d;
  d.detuning_Delta = kTwoPi * delta_hz;
  d.resonant_output_power_w = 10e-6;
  d.optical_omega0 = kTwoPi * kSpeedOfLight / 935e-9;
  d.cavity_linewidth_gamma = kTwoPi * 25e6;
  return d;
}

}  // namespace

TEST_CASE("cavity waist") {
  const double w0 = cavity_waist(cavity());
  CHECK(w0 == doctest::Approx(35.7123e-6).epsilon(1e-5));
  // confocal: w0^2 = lambda Rc / 2 pi
  const auto conf = CavitySpec::with_finesse(0.05, 0.05, 935e-9, 9160.0);
  CHECK(cavity_waist(conf) == doctest::Approx(std::sqrt(935e-9 * 0.05 / kTwoPi)).epsilon(1e-14));
  const auto edge = CavitySpec::with_finesse(0.1 * (1 - 1e-12), 0.05, 935e-9, 9160.0);
  CHECK(cavity_waist(edge) < 1e-2 * cavity_waist(conf));
}

TEST_CASE("overlap matches the separable one-dimensional product") {
  std::mt19937_64 rng(41);
  const auto m = film();
  const double d = m.side_d_m;
  std::uniform_real_distribution<double> ux(0.0, d), uw(10e-6, 80e-6);
  std::uniform_int_distribution<int> ui(1, 8);
  for (int i = 0; i < 1000; ++i) {
    const GaussianBeam b{uw(rng), ux(rng), ux(rng)};
    const int j = ui(rng), k = ui(rng);
    const double eta = overlap_eta(b, m, {j, k});
    REQUIRE(std::abs(eta - oracle::overlap_separable(j, k, d, b.center_x0_m, b.center_y0_m,
                                                     b.waist_w0_m)) < 1e-8);
    REQUIRE(eta <= 1.0);
    REQUIRE(eta >= 0.0);
  }
}

TEST_CASE("overlap far from the edges matches the whole-plane closed form") {
  const auto m = film();
  const double d = m.side_d_m;
  const double w = cavity_waist(cavity());
  const GaussianBeam b{w, d / 2 + 45e-6, d / 2 + 120e-6};
  const double closed = std::abs(oracle::gauss_sine(kPi / d, b.center_x0_m, w) *
                                 oracle::gauss_sine(kPi / d, b.center_y0_m, w));
  CHECK(overlap_eta(b, m, {1, 1}) == doctest::Approx(closed).epsilon(1e-10));
  CHECK(overlap_eta(b, m, {1, 1}) == doctest::Approx(0.691268).epsilon(1e-5));
  CHECK(overlap_eta(b, m, {6, 6}) == doctest::Approx(0.619444).epsilon(1e-5));
}

TEST_CASE("overlap symmetry, nodes and the narrow-beam limit") {
  std::mt19937_64 rng(43);
  const auto m = film();
  const double d = m.side_d_m;
  std::uniform_real_distribution<double> ux(0.0, d), uw(10e-6, 80e-6);
  std::uniform_int_distribution<int> ui(1, 8);
  for (int i = 0; i < 1000; ++i) {
    const GaussianBeam b{uw(rng), ux(rng), ux(rng)};
    const GaussianBeam mirrored{b.waist_w0_m, d - b.center_x0_m, b.center_y0_m};
    const ModeIndex idx{ui(rng), ui(rng)};
    REQUIRE(overlap_eta(mirrored, m, idx) ==
            doctest::Approx(overlap_eta(b, m, idx)).epsilon(1e-9).scale(1e-3));
  }
  CHECK(overlap_eta({30e-6, d / 2, d / 2}, m, {2, 2}) < 1e-12);
  CHECK(overlap_eta({1e-8, d / 2, d / 2}, m, {1, 1}) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_THROWS_AS(overlap_eta({0.0, d / 2, d / 2}, m, {1, 1}), DomainError);
  CHECK_THROWS_AS(overlap_eta({30e-6, -1e-6, d / 2}, m, {1, 1}), DomainError);
}

TEST_CASE("linear coupling g") {
  const auto c = cavity();
  const double omega_c = kTwoPi * kSpeedOfLight / 935e-9;
  CHECK(linear_coupling_g(0.63, c) == doctest::Approx(0.85 * 0.63 * omega_c / 0.74e-3));
  CHECK(linear_coupling_g(0.63, c) == doctest::Approx(1.46e18).epsilon(0.01));
  CHECK(linear_coupling_g(0.0, c) == 0.0);
  auto c2 = c;
  c2.length_L_m *= 2.0;
  CHECK(linear_coupling_g(0.5, c2) == doctest::Approx(0.5 * linear_coupling_g(0.5, c)));
  CHECK_THROWS_AS(linear_coupling_g(1.1, c), DomainError);
  CHECK_THROWS_AS(linear_coupling_g(0.5, c, 0.0), DomainError);
}

TEST_CASE("intracavity photons") {
  // the frozen value used hbar rounded to 10 digits
  CHECK(intracavity_photons(drive(-25e6)) == doctest::Approx(239720.397265789).epsilon(1e-9));
  const auto d0 = drive(0.0);
  CHECK(intracavity_photons(d0) ==
        doctest::Approx(4.0 * 10e-6 / (kHbar * d0.optical_omega0 * d0.cavity_linewidth_gamma)));
  CHECK(intracavity_photons(drive(1e12)) < 1e-6 * intracavity_photons(d0));
  auto bad = drive(0.0);
  bad.cavity_linewidth_gamma = 0.0;
  CHECK_THROWS_AS(intracavity_photons(bad), DomainError);
}

TEST_CASE("effective coupling and cavity response") {
  CHECK(to_hz(effective_coupling(1.46e18, 4.46e-16, 1e4)) == doctest::Approx(1.036e6).epsilon(1e-3));
  CHECK_THROWS_AS(effective_coupling(-1.0, 1.0, 1.0), DomainError);
  CHECK(cavity_response_h(kTwoPi * 4.82e6, -kTwoPi * 12.5e6, kTwoPi * 25e6) ==
        doctest::Approx(0.994503396874747).epsilon(1e-12));
}

TEST_CASE("calibration chain round-trips") {
  std::mt19937_64 rng(47);
  std::uniform_real_distribution<double> ul(-30.0, -20.0), udel(-60e6, 60e6), ug(17.0, 19.0);
  const auto mode = build_mode(film(), {6, 6}, 1.5e6);
  for (int i = 0; i < 1000; ++i) {
    const double x2 = std::pow(10.0, ul(rng));
    double dl = udel(rng);
    if (std::abs(dl) < 1e3) dl = 1e3;
    const auto dr = drive(dl);
    const double g = std::pow(10.0, ug(rng));
    const double ratio = photocurrent_ratio_for_displacement(x2, dr, g, mode.omega_m);
    const PhotocurrentRecord rec{2e-3, 2e-3 * std::sqrt(ratio)};
    REQUIRE(displacement_from_photocurrent(rec, dr, g, mode.omega_m) ==
            doctest::Approx(x2).epsilon(1e-12));
  }
  // room-temperature equipartition closes the loop
  const double x2_room = kBoltzmann * 295.0 / (mode.m_eff * mode.omega_m * mode.omega_m);
  CHECK(x2_room == doctest::Approx(5.3e-25).epsilon(0.02));
  const auto dr = drive(-12.5e6);
  const double g = 1.46e18;
  const double ratio = photocurrent_ratio_for_displacement(x2_room, dr, g, mode.omega_m);
  const PhotocurrentRecord rec{1e-3, 1e-3 * std::sqrt(ratio)};
  const double t = mode_temperature(displacement_from_photocurrent(rec, dr, g, mode.omega_m), mode);
  CHECK(t == doctest::Approx(295.0).epsilon(1e-9));
}

TEST_CASE("calibration error paths") {
  const auto mode = build_mode(film(), {6, 6}, 1.5e6);
  CHECK_THROWS_AS(displacement_from_photocurrent({1e-3, 1e-6}, drive(0.0), 1e18, mode.omega_m),
                  DomainError);
  CHECK_THROWS_AS(displacement_from_photocurrent({1e-3, 1e-6}, drive(-1e6), 0.0, mode.omega_m),
                  DomainError);
  CHECK_THROWS_AS(displacement_from_photocurrent({0.0, 1e-6}, drive(-1e6), 1e18, mode.omega_m),
                  DataError);
  CHECK_THROWS_AS(mode_temperature(-1.0, mode), DomainError);
}
