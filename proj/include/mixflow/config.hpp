#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>

#include "mixflow/params.hpp"
#include "mixflow/pga.hpp"
#include "mixflow/solver.hpp"

namespace mixflow {

using ConfigMap = std::map<std::string, std::string>;

/// Everything one CLI run needs.
struct RunConfig {
  ClassParams params;
  SolverConfig solver;
  PgaConfig pga;

  std::filesystem::path net_file;
  std::filesystem::path trips_file;
  std::filesystem::path paths_file;   // optional path dump for `solve`
  std::filesystem::path flows_file;   // path flows for `check`
  std::filesystem::path output_dir = "out";

  // Synthesized demand, used when no trips file is given and synth_pairs > 0.
  std::uint64_t seed = 1;
  std::size_t synth_pairs = 0;
  double synth_low = 50.0;
  double synth_high = 500.0;

  double check_tol = 1e-3;  // relative to the gap denominator / total demand; CSV flows carry 6 digits
  unsigned threads = 1;     // 0 = hardware default

  void validate() const;
};

/// Parses flat `key = value` text; `#` starts a comment. Throws ParseError.
ConfigMap parse_config(std::istream& in, const std::string& name = "<config>");
ConfigMap read_config_file(const std::filesystem::path& file);

/// Applies recognised keys onto `config`. Throws ValidationError for an
/// unknown key or a malformed value.
void apply_config(RunConfig& config, const ConfigMap& values);

}  // namespace mixflow
