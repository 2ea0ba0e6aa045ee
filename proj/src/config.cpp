#include "mixflow/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>

namespace mixflow {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_value(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end)
    throw ValidationError("config key '" + key + "': cannot parse '" + text + "'");
  return value;
}

}  // namespace

void RunConfig::validate() const {
  params.validate();
  solver.validate();
  pga.validate();
  if (!(check_tol > 0.0)) throw ValidationError("check_tol must be positive");
  if (synth_pairs > 0 && !(synth_low > 0.0 && synth_high >= synth_low))
    throw ValidationError("synthetic demand range must satisfy 0 < synth_low <= synth_high");
}

ConfigMap parse_config(std::istream& in, const std::string& name) {
  ConfigMap values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(name, line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError(name, line_no, "empty key");
    values[key] = value;
  }
  return values;
}

ConfigMap read_config_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot open config file " + file.string());
  return parse_config(in, file.string());
}

void apply_config(RunConfig& c, const ConfigMap& values) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  auto real = [](double& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_value<double>(k, v); };
  };
  auto integer = [](int& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_value<int>(k, v); };
  };
  auto size = [](std::size_t& field) -> Setter {
    return [&field](const std::string& k, const std::string& v) { field = parse_value<std::size_t>(k, v); };
  };
  auto path = [](std::filesystem::path& field) -> Setter {
    return [&field](const std::string&, const std::string& v) { field = v; };
  };

  const std::map<std::string, Setter> setters{
      {"net", path(c.net_file)},
      {"trips", path(c.trips_file)},
      {"paths", path(c.paths_file)},
      {"flows", path(c.flows_file)},
      {"output_dir", path(c.output_dir)},
      {"seed", [&c](const std::string& k, const std::string& v) { c.seed = parse_value<std::uint64_t>(k, v); }},
      {"synth_pairs", size(c.synth_pairs)},
      {"synth_low", real(c.synth_low)},
      {"synth_high", real(c.synth_high)},
      {"check_tol", real(c.check_tol)},
      {"threads", [&c](const std::string& k, const std::string& v) {
         c.threads = parse_value<unsigned>(k, v);
         c.pga.threads = c.threads;
       }},
      // Class parameters.
      {"penetration", real(c.params.penetration)},
      {"av_capacity_ratio", real(c.params.av_capacity_ratio)},
      {"vot_rv", real(c.params.vot_rv)},
      {"vot_av", real(c.params.vot_av)},
      {"fuel_price", real(c.params.fuel_price)},
      {"theta", real(c.params.theta)},
      {"nesting", real(c.params.nesting)},
      {"mu_rv", real(c.params.mu_rv)},
      {"mu_av", real(c.params.mu_av)},
      {"flow_floor", real(c.params.flow_floor)},
      // Solver.
      {"gap", real(c.solver.gap_tol)},
      {"gamma_init", real(c.solver.gamma_init)},
      {"gamma_growth", real(c.solver.gamma_growth)},
      {"lambda2", real(c.solver.lambda2)},
      {"max_iters", integer(c.solver.max_iters)},
      {"h_floor", real(c.solver.h_floor)},
      {"mode", [&c](const std::string& k, const std::string& v) {
         if (v == "modified") c.solver.mode = SolverMode::Modified;
         else if (v == "baseline") c.solver.mode = SolverMode::Baseline;
         else throw ValidationError("config key '" + k + "': expected 'modified' or 'baseline'");
       }},
      // Path generation.
      {"k", size(c.pga.k)},
      {"outer_tol", real(c.pga.outer_tol)},
      {"inner_gap", real(c.pga.inner_gap)},
      {"final_gap", real(c.pga.final_gap)},
      {"max_outer", integer(c.pga.max_outer)},
  };

  for (const auto& [key, value] : values) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ValidationError("unknown config key '" + key + "'");
    it->second(key, value);
  }
}

}  // namespace mixflow
