#pragma once

#include <numbers>

namespace optomech {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// CODATA 2018 exact / recommended values, SI.
inline constexpr double kSpeedOfLight = 299792458.0;   // m/s
inline constexpr double kPlanck = 6.62607015e-34;      // J s
inline constexpr double kHbar = kPlanck / kTwoPi;      // J s
inline constexpr double kBoltzmann = 1.380649e-23;     // J/K

// Frequencies cross the I/O boundary in Hz and live internally in rad/s.
constexpr double to_angular(double hz) { return kTwoPi * hz; }
constexpr double to_hz(double rad_per_s) { return rad_per_s / kTwoPi; }

}  // namespace optomech
