#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optomech/cavity.hpp"
#include "optomech/coupling.hpp"
#include "optomech/membrane.hpp"

namespace optomech {

struct ModeSetting {
  ModeIndex index;
  double q_factor = 0.0;
};

// Parameters of the linearized model given directly, in Hz.
struct LinearizedSettings {
  double mechanical_frequency_hz = 0.0;
  double q_factor = 0.0;
  double cavity_linewidth_fwhm_hz = 0.0;
  double detuning_hz = 0.0;
  double thermal_occupation = 0.0;
  double g_eff_hz = 0.0;
};

struct Scenario {
  MembraneSpec membrane;
  CavitySpec cavity;
  GaussianBeam beam;
  DriveField drive;
  std::vector<ModeSetting> modes;
  double room_temperature_k = 295.0;
  double g_factor = kDefaultCouplingFactor;
  std::optional<TedMaterial> ted;
  std::optional<LinearizedSettings> linearized;
};

// `key = value` lines with dotted keys; '#' starts a comment. Errors carry
// source:line and the offending key.
Scenario parse_config_text(std::string_view text, std::string_view source_name = "<config>");
Scenario parse_config(const std::filesystem::path& path);

}  // namespace optomech
