#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace optomech {

struct RunReport {
  std::string command;
  std::string input_digest;  // FNV-1a 64 of argv, config and data files
  std::vector<std::filesystem::path> outputs;
  std::vector<std::string> warnings;
  std::vector<std::string> summary;  // key = value lines
};

// Runs one subcommand; args exclude the program name. Usage problems throw
// ConfigError, everything else propagates the library's error types.
RunReport run_command(const std::vector<std::string>& args);

// Process entry point: prints the summary or the error and returns the exit status.
int run_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace optomech
