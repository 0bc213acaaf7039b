#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "forge/error.hpp"

int main(int argc, char** argv) {
  // Logs go to stderr so stdout stays machine-readable.
  spdlog::set_default_logger(spdlog::stderr_color_mt("forge"));
  spdlog::set_level(spdlog::level::warn);

  CLI::App app{"forge: code-task benchmark generation and judge validation"};
  app.require_subcommand(1);
  forge::cli::GlobalOptions options;
  if (const char* dir = std::getenv("LAAJ_STORE_DIR")) options.store_dir = dir;
  app.add_option("--store", options.store_dir, "store directory (default $LAAJ_STORE_DIR or .forge-store)");
  app.add_option("--format", options.format, "output format")->check(CLI::IsMember({"table", "records"}));
  app.add_option("--providers", options.providers_file, "provider profiles (JSON)");
  app.add_option("--graph", options.graph_file, "generation graph file (TSV or JSON)");
  app.add_flag("-v,--verbose", options.verbose, "log progress to stderr");
  app.parse_complete_callback([&] {
    if (options.verbose) spdlog::set_level(spdlog::level::info);
  });

  int exit_code = 0;
  forge::cli::register_commands(app, options, exit_code);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const forge::Error& e) {
    std::cerr << "forge: " << forge::to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "forge: " << e.what() << "\n";
    return 1;
  }
  return exit_code;
}
