#include "mixflow/pga.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace mixflow {

void PgaConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("pga config: " + what); };
  if (k < 1) fail("k must be at least 1");
  if (!(outer_tol > 0.0)) fail("outer tolerance must be positive");
  if (!(final_gap > 0.0)) fail("final gap must be positive");
  if (!(inner_gap >= final_gap)) fail("inner gap must not be tighter than the final gap");
  if (max_outer < 1) fail("max_outer must be at least 1");
}

FlowState carry_flows(const AssignmentProblem& from, const FlowState& flows,
                      const AssignmentProblem& to) {
  FlowState out;
  for (VehicleClass c : kVehicleClasses) {
    const auto i = class_index(c);
    out.path_flow[i] = Eigen::VectorXd::Zero(to.path_count(c));
    const auto old_groups = from.groups(c);
    const auto new_groups = to.groups(c);
    if (old_groups.size() != new_groups.size()) throw Error("path sets cover different OD pairs");
    for (std::size_t gi = 0; gi < old_groups.size(); ++gi) {
      const PathGroup& og = old_groups[gi];
      const PathGroup& ng = new_groups[gi];
      const auto old_paths = from.paths().paths(og.od, c);
      for (Eigen::Index k = 0; k < og.size; ++k) {
        const auto pos = to.paths().find(ng.od, c, old_paths[static_cast<std::size_t>(k)]);
        if (!pos) throw Error("target path set drops a path of the source");
        out.path_flow[i](ng.offset + static_cast<Eigen::Index>(*pos)) = flows.path_flow[i](og.offset + k);
      }
    }
  }
  load_links(to, out);
  return out;
}

PgaResult pga_solve(const Network& network, const ClassParams& params, const PgaConfig& pga,
                    const SolverConfig& solver) {
  params.validate();
  solver.validate();
  pga.validate();
  using Clock = std::chrono::steady_clock;

  SolverConfig inner_cfg = solver;
  inner_cfg.gap_tol = pga.inner_gap;

  PgaResult result;
  PathSet paths(network.od_count());
  std::optional<AssignmentProblem> problem;
  SolveResult inner;
  LinkStates link_costs = free_flow_links(network, params);
  double tc_prev = std::numeric_limits<double>::quiet_NaN();

  for (int m = 1; m <= pga.max_outer; ++m) {
    const auto start = Clock::now();
    const PathSet generated = generate_paths(network, link_costs, pga.k, pga.threads);
    auto [merged, added] = merge_path_sets(paths, generated);
    AssignmentProblem next(network, std::move(merged));
    if (problem) {
      const FlowState carried = carry_flows(*problem, inner.flows, next);
      inner = solve(next, params, inner_cfg, &carried);
    } else {
      inner = solve(next, params, inner_cfg);
    }
    problem.emplace(std::move(next));
    paths = problem->paths();
    link_costs = inner.costs.links;

    OuterRow row;
    row.m = m;
    row.new_paths = added;
    row.total_cost = inner.total_cost;
    row.E = m >= 2 ? outer_error(inner.total_cost, tc_prev) : std::numeric_limits<double>::quiet_NaN();
    row.inner_iters = inner.iterations;
    row.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    result.outer.push_back(row);
    tc_prev = inner.total_cost;

    if (m >= 2 && std::abs(row.E) <= pga.outer_tol) {
      result.stabilized = true;
      break;
    }
  }

  SolverConfig final_cfg = solver;
  final_cfg.gap_tol = pga.final_gap;
  result.final = solve(*problem, params, final_cfg, &inner.flows);
  result.paths = problem->paths();
  return result;
}

}  // namespace mixflow
