#pragma once

#include <cstdint>
#include <string>

#include "config.hpp"

namespace labvar::cli {

/// Flags shared by the subcommands; unset entries fall back to the
/// configuration file's values.
struct CommonFlags {
  std::string out_dir;  ///< overrides [output] directory when nonempty
  bool has_seed = false;
  std::uint64_t seed = 0;  ///< overrides the jitter / sampling seed
  bool quiet = false;
  int levels = 3;  ///< converge only
};

/// Exit codes follow the stable contract: 0 success, 1 verification failure,
/// 2 configuration error (thrown as ConfigError to the caller), 3 solver
/// failure.
int cmd_derive(const RunConfig& cfg, const CommonFlags& fl);
int cmd_check(const RunConfig& cfg, const CommonFlags& fl);
int cmd_run(const RunConfig& cfg, const CommonFlags& fl);
int cmd_converge(const RunConfig& cfg, const CommonFlags& fl);

}  // namespace labvar::cli
