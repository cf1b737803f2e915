#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "labvar/swmodels.hpp"

namespace labvar::cli {

/// Thrown on malformed or semantically invalid configuration.  The message
/// carries "path:line:" when the offending source line is known.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything a command needs, with the documented defaults.  Parsed from an
/// INI-style file of `[section]` headers and `key = value` lines; `#` and `;`
/// start comments.  `print_default_config` emits the full annotated format.
struct RunConfig {
  // [model]
  std::string model_kind = "salmon";  ///< salmon | sg | custom
  double f = 1.0;
  double g = 1.0;
  Gauge gauge = Gauge::Symmetric;
  std::string lagrangian;  ///< density text, custom models only

  // [mesh]
  int nx = 8, ny = 8;
  double lx = 1.0, ly = 1.0;
  bool periodic = true;
  int degree = 1;
  double perturb_amplitude = 0.0;
  std::uint64_t perturb_seed = 1;
  std::string mesh_file;  ///< excludes the structured-mesh keys

  // [time]
  double t0 = 0.0, t1 = 1.0;
  int slabs = 10;

  // [initial]
  std::string initial_kind = "rest";  ///< rest | rigid-rotation | shear | file
  double omega = 0.1;                 ///< rigid-rotation rate
  double shear_c = 0.1;               ///< shear strength (key `c`)
  std::string initial_file;           ///< state snapshot, kind = file only

  // [solver]
  double tolerance = 1e-10;
  int max_iterations = 30;
  double backtrack = 0.5;

  // [diagnostics]
  std::vector<std::string> symmetries{"all"};
  std::vector<std::string> phi_family{"all"};
  std::optional<double> bump_center_a;  ///< default: domain center
  std::optional<double> bump_center_b;
  std::optional<double> bump_radius;  ///< default: quarter of the shorter side
  int hat_count = 3;

  // [output]
  std::string output_directory = "out";
};

/// Parses and validates; throws ConfigError with `path:line:` diagnostics.
RunConfig parse_config(std::istream& in, const std::string& path);
RunConfig load_config(const std::string& path);

/// The complete annotated default configuration (also the format reference).
void print_default_config(std::ostream& out);

}  // namespace labvar::cli
