#pragma once

#include <memory>
#include <string>

#include <CLI11.hpp>

namespace forge::cli {

struct GlobalOptions {
  std::string store_dir;
  std::string format = "table";  // table | records
  std::string providers_file;
  std::string graph_file;
  bool verbose = false;
};

// Exit status for a command that ran but reports a negative outcome
// (degraded regression, rejected bootstrap, invalid plan).
inline constexpr int kExitNegative = 3;

// Registers every subcommand on `app`; `exit_code` receives the status of
// the command that ran.
void register_commands(CLI::App& app, GlobalOptions& options, int& exit_code);

}  // namespace forge::cli
