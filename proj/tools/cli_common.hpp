#pragma once

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "privprof/error.hpp"
#include "privprof/rng.hpp"

namespace privprof::cli {

// Stable process exit codes.
enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kConfigError = 2,
  kConnection = 3,
  kHandshake = 4,
  kEmptyText = 5,
  kExtraction = 6,
  kProtocolError = 7,
};

inline int exit_code(Errc c) {
  switch (c) {
    case Errc::kConfig:
    case Errc::kValidationError:
    case Errc::kIoFailure:
    case Errc::kParseError:
    case Errc::kUnsupportedRing:
    case Errc::kPartyMismatch:
    case Errc::kDimensionMismatch:
    case Errc::kOverflow:
      return kConfigError;
    case Errc::kChannelClosed:
      return kConnection;
    case Errc::kHandshakeMismatch:
      return kHandshake;
    case Errc::kEmptyText:
      return kEmptyText;
    case Errc::kLexiconMissing:
    case Errc::kBadDimension:
      return kExtraction;
    default:
      return kProtocolError;
  }
}

// Logs go to stderr; SPDLOG_LEVEL (e.g. "debug") overrides the default info.
inline void init_logging(const char* name) {
  auto logger = spdlog::stderr_color_mt(name);
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  spdlog::cfg::load_env_levels();
  crypto_init();
}

inline void add_config_option(CLI::App& app) {
  app.set_config("--config", "", "INI/TOML file with option defaults; flags on the command line win");
}

// Runs `body` and maps failures to exit codes.
template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return kInternal;
  }
}

// CLI11 parse errors become configuration errors; --help exits 0.
inline int parse_exit(CLI::App& app, const CLI::ParseError& e) {
  const int rc = app.exit(e);
  return rc == 0 ? kOk : kConfigError;
}

}  // namespace privprof::cli
