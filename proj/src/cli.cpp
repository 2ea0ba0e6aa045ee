#include "mixflow/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mixflow/config.hpp"
#include "mixflow/diagnostics.hpp"
#include "mixflow/io.hpp"
#include "mixflow/pga.hpp"

namespace mixflow::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Network load_topology(const RunConfig& cfg) {
  std::ifstream in(cfg.net_file);
  if (!in) throw Error("cannot open net file " + cfg.net_file.string());
  const auto net = read_net_file(in, cfg.params.av_capacity_ratio, cfg.net_file.string());
  return make_network(net, {}, cfg.params.penetration);
}

Network load_inputs(const RunConfig& cfg) {
  if (cfg.net_file.empty()) throw Error("no net file given (--net or key 'net')");
  if (!cfg.trips_file.empty()) return load_network(cfg.net_file, cfg.trips_file, cfg.params);
  if (cfg.synth_pairs == 0) throw Error("no trips file given (--trips or key 'trips')");
  const Network topology = load_topology(cfg);
  Network network = topology.with_demand(synthesize_demand(
      topology, cfg.synth_pairs, cfg.synth_low, cfg.synth_high, cfg.params.penetration, cfg.seed));
  if (auto report = validate(network); !report.ok()) throw ValidationError(report.summary());
  return network;
}

std::ofstream open_output(const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw Error("cannot write " + file.string());
  return out;
}

void write_solution(const fs::path& dir, const AssignmentProblem& problem, const SolveResult& r) {
  auto links = open_output(dir / "link_flows.csv");
  write_link_flows_csv(links, problem.network(), r.flows);
  auto paths = open_output(dir / "path_flows.csv");
  write_path_flows_csv(paths, problem, r.flows);
  auto trace = open_output(dir / "trace.csv");
  write_trace_csv(trace, r.trace);
}

json solve_summary(const std::string& command, const SolverConfig& solver, const SolveResult& r) {
  return json{{"schema_version", kSummarySchemaVersion},
              {"command", command},
              {"mode", solver.mode == SolverMode::Modified ? "modified" : "baseline"},
              {"gap", r.gap},
              {"iterations", r.iterations},
              {"total_cost", r.total_cost},
              {"wall_seconds", r.seconds},
              {"converged", r.converged}};
}

void write_json(const fs::path& file, const json& j) {
  auto out = open_output(file);
  out << j.dump(2) << '\n';
}

int cmd_solve(const RunConfig& cfg, std::ostream& out) {
  const Network network = load_inputs(cfg);
  PathSet paths;
  if (cfg.paths_file.empty()) {
    paths = generate_paths(network, free_flow_links(network, cfg.params), cfg.pga.k, cfg.threads);
  } else {
    std::ifstream in(cfg.paths_file);
    if (!in) throw Error("cannot open path file " + cfg.paths_file.string());
    paths = read_path_dump(in, network, cfg.paths_file.string());
  }
  const AssignmentProblem problem(network, std::move(paths));
  const SolveResult r = solve(problem, cfg.params, cfg.solver);

  fs::create_directories(cfg.output_dir);
  write_solution(cfg.output_dir, problem, r);
  json summary = solve_summary("solve", cfg.solver, r);
  summary["path_count"] = problem.paths().size();
  write_json(cfg.output_dir / "summary.json", summary);

  out << (r.converged ? "converged" : "not converged") << " after " << r.iterations
      << " iterations, gap " << r.gap << ", total cost " << std::setprecision(10) << r.total_cost << '\n';
  return r.converged ? kOk : kNotConverged;
}

int cmd_pga(const RunConfig& cfg, std::ostream& out) {
  const Network network = load_inputs(cfg);
  PgaConfig pga = cfg.pga;
  pga.threads = cfg.threads;
  const PgaResult r = pga_solve(network, cfg.params, pga, cfg.solver);
  const AssignmentProblem problem(network, r.paths);

  fs::create_directories(cfg.output_dir);
  write_solution(cfg.output_dir, problem, r.final);
  auto outer = open_output(cfg.output_dir / "outer_trace.csv");
  write_outer_trace_csv(outer, r.outer);
  auto dump = open_output(cfg.output_dir / "paths.txt");
  write_path_dump(dump, network, r.paths, r.final.costs.links);

  json summary = solve_summary("pga", cfg.solver, r.final);
  summary["stabilized"] = r.stabilized;
  summary["outer_iterations"] = r.outer.size();
  summary["path_count"] = r.paths.size();
  json rows = json::array();
  for (const OuterRow& row : r.outer)
    rows.push_back({{"m", row.m},
                    {"new_paths", row.new_paths},
                    {"total_cost", row.total_cost},
                    {"E", row.m >= 2 ? json(row.E) : json(nullptr)},
                    {"inner_iters", row.inner_iters}});
  summary["outer"] = rows;
  write_json(cfg.output_dir / "summary.json", summary);

  out << "pga: " << r.outer.size() << " outer iterations, " << r.paths.size() << " paths, final gap "
      << r.final.gap << ", total cost " << std::setprecision(10) << r.final.total_cost << '\n';
  return r.final.converged && r.stabilized ? kOk : kNotConverged;
}

int cmd_ksp(const RunConfig& cfg, NodeId origin, NodeId destination, const std::string& cls,
            std::ostream& out) {
  if (cfg.net_file.empty()) throw Error("no net file given (--net or key 'net')");
  const Network network = load_topology(cfg);
  if (auto report = validate(network); !report.ok()) throw ValidationError(report.summary());
  const VehicleClass c = parse_vehicle_class(cls);
  const LinkStates links = free_flow_links(network, cfg.params);
  const auto paths = yen_k_shortest(network, links.cost(c), origin, destination, cfg.pga.k);
  out << std::setprecision(6);
  for (std::size_t i = 0; i < paths.size(); ++i)
    out << i + 1 << ' ' << path_cost(paths[i].links, links.cost(c)) << ' '
        << format_node_sequence(node_sequence(network, paths[i])) << '\n';
  return kOk;
}

int cmd_check(const RunConfig& cfg, std::ostream& out) {
  const Network network = load_inputs(cfg);
  if (cfg.flows_file.empty()) throw Error("no flows file given (--flows or key 'flows')");
  std::ifstream in(cfg.flows_file);
  if (!in) throw Error("cannot open flows file " + cfg.flows_file.string());
  const PathFlowTable table = read_path_flows_csv(in, network, cfg.flows_file.string());
  if (table.rows == 0) throw Error("flows file " + cfg.flows_file.string() + " has no rows");

  const AssignmentProblem problem(network, table.paths);
  const FlowState flows = flows_from_table(problem, table);
  const PathCosts costs = evaluate_costs(problem, flows, cfg.params);
  const EquilibriumReport report = ncp_residual(problem, flows.path_flow, costs.perceived);
  const double tc = total_cost(flows, costs.perceived);
  double demand = 0.0;
  for (const OdPair& od : network.od_pairs()) demand += od.demand_rv + od.demand_av;

  // Same scale as the solver's relative gap, so tol compares directly with G.
  const double scale = gap_denominator(flows, costs.cost);
  write_report(out, report);
  const double relative = scale > 0.0 ? report.ncp_residual / scale : report.ncp_residual;
  out << "total_cost = " << std::setprecision(17) << tc << '\n'
      << "relative_residual = " << relative << '\n';
  const bool pass = report.ncp_residual <= cfg.check_tol * scale &&
                    report.feasibility_violation <= cfg.check_tol * demand;
  out << "status = " << (pass ? "pass" : "fail") << '\n';
  return pass ? kOk : kCheckFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mixed regular/autonomous vehicle stochastic traffic assignment"};
  app.name("mixflow");
  app.require_subcommand(1);

  std::string config_file;
  std::vector<std::string> sets;
  ConfigMap flags;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_file, "key = value config file (default $MIXFLOW_CONFIG)");
    sub->add_option("-s,--set", sets, "override a config key, key=value (repeatable)");
  };
  auto bind = [&](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags[key] = v; }, help);
  };
  auto network_inputs = [&](CLI::App* sub) {
    bind(sub, "--net", "net", "net file (TNTP)");
    bind(sub, "--trips", "trips", "trips file (TNTP)");
    bind(sub, "--penetration", "penetration", "AV share of demand");
    bind(sub, "--synth-pairs", "synth_pairs", "synthesize this many OD pairs when no trips file is given");
    bind(sub, "--seed", "seed", "seed for synthesized demand");
  };
  auto solver_options = [&](CLI::App* sub) {
    bind(sub, "--mode", "mode", "modified | baseline");
    bind(sub, "--gap", "gap", "relative gap tolerance");
    bind(sub, "--max-iters", "max_iters", "iteration limit");
    bind(sub, "-o,--out", "output_dir", "output directory");
    bind(sub, "--threads", "threads", "worker threads for path generation (0 = hardware)");
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "assign demand over k shortest free-flow paths");
  common(solve_cmd);
  network_inputs(solve_cmd);
  solver_options(solve_cmd);
  bind(solve_cmd, "--k", "k", "paths per OD and class");
  bind(solve_cmd, "--paths", "paths", "path dump to use instead of generating paths");

  CLI::App* pga_cmd = app.add_subcommand("pga", "alternate path generation and assignment");
  common(pga_cmd);
  network_inputs(pga_cmd);
  solver_options(pga_cmd);
  bind(pga_cmd, "--k", "k", "paths generated per OD and class per outer iteration");
  bind(pga_cmd, "--outer-tol", "outer_tol", "stop when |E(m)| falls to this value");
  bind(pga_cmd, "--inner-gap", "inner_gap", "gap of intermediate assignments");
  bind(pga_cmd, "--final-gap", "final_gap", "gap of the closing assignment");
  bind(pga_cmd, "--max-outer", "max_outer", "outer iteration limit");

  NodeId origin = 0;
  NodeId destination = 0;
  std::string cls = "rv";
  CLI::App* ksp_cmd = app.add_subcommand("ksp", "print the k cheapest loop-free paths at free flow");
  common(ksp_cmd);
  bind(ksp_cmd, "--net", "net", "net file (TNTP)");
  bind(ksp_cmd, "--k", "k", "number of paths");
  ksp_cmd->add_option("--origin", origin, "origin node")->required();
  ksp_cmd->add_option("--dest", destination, "destination node")->required();
  ksp_cmd->add_option("--class", cls, "rv | av");

  CLI::App* check_cmd = app.add_subcommand("check", "equilibrium report for a path flow file");
  common(check_cmd);
  network_inputs(check_cmd);
  bind(check_cmd, "--flows", "flows", "path flows CSV (od,class,path_key,flow)");
  bind(check_cmd, "--tol", "check_tol", "residual tolerance relative to the gap denominator (default 1e-3)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  try {
    RunConfig cfg;
    if (config_file.empty())
      if (const char* env = std::getenv("MIXFLOW_CONFIG"); env && *env) config_file = env;
    if (!config_file.empty()) apply_config(cfg, read_config_file(config_file));
    ConfigMap overrides;
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
      overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    for (const auto& [k, v] : flags) overrides[k] = v;
    apply_config(cfg, overrides);
    cfg.validate();

    if (solve_cmd->parsed()) return cmd_solve(cfg, out);
    if (pga_cmd->parsed()) return cmd_pga(cfg, out);
    if (ksp_cmd->parsed()) return cmd_ksp(cfg, origin, destination, cls, out);
    return cmd_check(cfg, out);
  } catch (const std::exception& e) {
    err << "mixflow: " << e.what() << '\n';
    return kInputError;
  }
}

}  // namespace mixflow::cli
