#include "mixflow/solver.hpp"

#include <chrono>
#include <limits>
#include <string>

namespace mixflow {

namespace {

std::string describe(const Network& network, const PathGroup& g) {
  const OdPair& od = network.od(g.od);
  return "od " + std::to_string(g.od) + " (" + std::to_string(od.origin) + "->" +
         std::to_string(od.destination) + ") class " + std::string(to_string(g.cls));
}

}  // namespace

AssignmentProblem::AssignmentProblem(const Network& network, PathSet paths)
    : network_(&network), paths_(std::move(paths)) {
  if (paths_.od_count() != network.od_count())
    throw Error("path set covers " + std::to_string(paths_.od_count()) + " OD pairs, network has " +
                std::to_string(network.od_count()));
  const auto n_links = static_cast<Eigen::Index>(network.link_count());
  for (VehicleClass c : kVehicleClasses) {
    auto& groups = groups_[class_index(c)];
    std::vector<Eigen::Triplet<double>> entries;
    Eigen::Index offset = 0;
    for (std::size_t od = 0; od < network.od_count(); ++od) {
      const auto set = paths_.paths(od, c);
      const OdPair& w = network.od(od);
      std::vector<std::vector<std::size_t>> members;
      for (std::size_t k = 0; k < set.size(); ++k) {
        if (!connects(network, set[k], w.origin, w.destination))
          throw Error("path " + path_key(network, set[k]) + " does not connect od " +
                      std::to_string(od));
        for (std::size_t a : set[k].links)
          entries.emplace_back(static_cast<Eigen::Index>(a), offset + static_cast<Eigen::Index>(k), 1.0);
        members.push_back(set[k].links);
      }
      groups.push_back({od, c, offset, static_cast<Eigen::Index>(set.size()), w.demand(c)});
      if (c == VehicleClass::Regular) overlaps_.push_back(build_overlap(network, members));
      offset += static_cast<Eigen::Index>(set.size());
    }
    auto& m = incidence_[class_index(c)];
    m.resize(n_links, offset);
    m.setFromTriplets(entries.begin(), entries.end());
  }
}

void SolverConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("solver config: " + what); };
  if (!(gap_tol > 0.0)) fail("gap tolerance must be positive");
  if (!(gamma_init > 0.0)) fail("initial gamma must be positive");
  if (!(gamma_growth >= 0.0)) fail("gamma growth must be nonnegative");
  if (max_iters < 1) fail("max_iters must be at least 1");
  if (!(h_floor > 0.0)) fail("h floor must be positive");
}

FlowState init_uniform(const AssignmentProblem& problem) {
  FlowState state;
  for (VehicleClass c : kVehicleClasses) {
    auto& f = state.path_flow[class_index(c)];
    f = Eigen::VectorXd::Zero(problem.path_count(c));
    for (const PathGroup& g : problem.groups(c)) {
      if (g.demand > 0.0 && g.size == 0)
        throw SolverError(describe(problem.network(), g) + " has demand but no paths");
      if (g.size > 0) f.segment(g.offset, g.size).setConstant(g.demand / static_cast<double>(g.size));
    }
  }
  load_links(problem, state);
  return state;
}

void load_links(const AssignmentProblem& problem, FlowState& flows) {
  for (VehicleClass c : kVehicleClasses)
    flows.link_flow[class_index(c)] = problem.incidence(c) * flows.paths(c);
}

PathCosts evaluate_costs(const AssignmentProblem& problem, const FlowState& flows,
                         const ClassParams& params) {
  PathCosts out;
  out.links = evaluate_links(problem.network(), flows.links(VehicleClass::Regular),
                             flows.links(VehicleClass::Autonomous), params);
  for (VehicleClass c : kVehicleClasses) {
    const auto i = class_index(c);
    out.cost[i] = problem.incidence(c).transpose() * out.links.cost(c);
    out.perceived[i] = out.cost[i];
  }

  const auto rv = class_index(VehicleClass::Regular);
  const auto groups = problem.groups(VehicleClass::Regular);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const PathGroup& g = groups[gi];
    if (g.size == 0 || !(g.demand > 0.0)) continue;
    const auto c = out.cost[rv].segment(g.offset, g.size);
    const Eigen::VectorXd h =
        cnl_commonality<double>(problem.overlap(gi), c, params.theta, params.nesting);
    const auto f = flows.path_flow[rv].segment(g.offset, g.size);
    auto perceived = out.perceived[rv].segment(g.offset, g.size);
    for (Eigen::Index k = 0; k < g.size; ++k)
      perceived(k) = perceived_cost_rv(f(k), g.demand, c(k), h(k), params);
  }
  return out;
}

ClassVectors compute_phi(const AssignmentProblem& problem, const FlowState& flows,
                         const ClassVectors& perceived, const std::array<double, 2>& mu) {
  ClassVectors phi;
  for (VehicleClass c : kVehicleClasses) {
    const auto i = class_index(c);
    phi[i] = Eigen::VectorXd::Zero(problem.path_count(c));
    for (const PathGroup& g : problem.groups(c)) {
      if (g.size < 2) continue;
      phi[i].segment(g.offset, g.size) =
          swap_direction(flows.path_flow[i].segment(g.offset, g.size),
                         perceived[i].segment(g.offset, g.size), mu[i]);
    }
  }
  return phi;
}

double compute_h(const ClassVectors& path_flow, const ClassVectors& phi, double h_floor) {
  double h = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& f = path_flow[i];
    const auto& p = phi[i];
    for (Eigen::Index k = 0; k < f.size(); ++k)
      if (f(k) != 0.0 && p(k) <= 0.0) h = std::max(h, -p(k) / f(k));
  }
  return h > h_floor ? h : h_floor;
}

double compute_O(const ClassVectors& phi) {
  return phi[0].cwiseAbs().sum() + phi[1].cwiseAbs().sum();
}

StepSize step_size(int n, double h, double O, double O_prev, double gamma_prev,
                   const SolverConfig& config) {
  StepSize s;
  if (n <= 1) {
    s.gamma = config.gamma_init;
    s.beta = 1.0 / (h * s.gamma);
    return s;
  }
  s.gamma = gamma_prev + config.gamma_growth;
  if (config.mode == SolverMode::Baseline || O > O_prev) {
    s.beta = 1.0 / (h * s.gamma);
  } else {
    s.beta = O_prev > 0.0 ? (1.0 / h) * (O / O_prev) : 0.0;
  }
  return s;
}

void update_flows(const AssignmentProblem& problem, FlowState& flows, const ClassVectors& phi,
                  double beta) {
  for (VehicleClass c : kVehicleClasses) {
    const auto i = class_index(c);
    for (const PathGroup& g : problem.groups(c)) {
      if (g.size == 0) continue;
      auto f = flows.path_flow[i].segment(g.offset, g.size);
      f += beta * phi[i].segment(g.offset, g.size);
      const double lowest = f.minCoeff();
      if (lowest < -1e-9 * g.demand)
        throw SolverError("step size drove a path flow negative (" + std::to_string(lowest) +
                          ") on " + describe(problem.network(), g));
      f = f.cwiseMax(0.0);
    }
  }
  load_links(problem, flows);
}

double gap_denominator(const FlowState& flows, const ClassVectors& cost) {
  return flows.path_flow[0].dot(cost[0]) + flows.path_flow[1].dot(cost[1]);
}

double relative_gap(const AssignmentProblem& problem, const FlowState& flows, const PathCosts& costs) {
  double excess = 0.0;
  for (VehicleClass c : kVehicleClasses) {
    const auto i = class_index(c);
    for (const PathGroup& g : problem.groups(c)) {
      if (g.size == 0 || !(g.demand > 0.0)) continue;
      const auto f = flows.path_flow[i].segment(g.offset, g.size);
      const auto C = costs.perceived[i].segment(g.offset, g.size);
      excess += f.dot((C.array() - C.minCoeff()).matrix());
    }
  }
  const double total = gap_denominator(flows, costs.cost);
  if (!(total > 0.0)) throw SolverError("relative gap undefined: no demand on the network");
  return excess / total;
}

double total_cost(const FlowState& flows, const ClassVectors& perceived) {
  return flows.path_flow[0].dot(perceived[0]) + flows.path_flow[1].dot(perceived[1]);
}

SolveResult solve(const AssignmentProblem& problem, const ClassParams& params,
                  const SolverConfig& config, const FlowState* initial) {
  params.validate();
  config.validate();
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  };

  SolveResult result;
  FlowState& flows = result.flows;
  if (initial) {
    flows = *initial;
    load_links(problem, flows);
  } else {
    flows = init_uniform(problem);
  }
  const std::array<double, 2> mu = config.mode == SolverMode::Baseline
                                       ? std::array<double, 2>{1.0, 1.0}
                                       : std::array<double, 2>{params.mu_rv, params.mu_av};

  double O_prev = 0.0;
  double gamma_prev = config.gamma_init;
  for (int n = 1; n <= config.max_iters; ++n) {
    flows.iteration = n;
    PathCosts costs = evaluate_costs(problem, flows, params);
    for (VehicleClass c : kVehicleClasses) {
      const auto& C = costs.perceived[class_index(c)];
      if (!C.allFinite()) {
        for (const PathGroup& g : problem.groups(c))
          if (!C.segment(g.offset, g.size).allFinite())
            throw SolverError("non-finite perceived cost at iteration " + std::to_string(n) + " on " +
                              describe(problem.network(), g));
      }
    }

    TraceRow row;
    row.n = n;
    row.gap = relative_gap(problem, flows, costs);
    row.total_cost = total_cost(flows, costs.perceived);
    const ClassVectors phi = compute_phi(problem, flows, costs.perceived, mu);
    row.O = compute_O(phi);
    row.gamma = gamma_prev;

    if (row.gap <= config.gap_tol) {
      row.millis = elapsed_ms();
      result.trace.push_back(row);
      result.converged = true;
      result.costs = std::move(costs);
      break;
    }

    const double h = compute_h(flows.path_flow, phi, config.h_floor);
    const StepSize step = step_size(n, h, row.O, O_prev, gamma_prev, config);
    row.beta = step.beta;
    row.gamma = step.gamma;
    update_flows(problem, flows, phi, step.beta);
    row.millis = elapsed_ms();
    result.trace.push_back(row);
    O_prev = row.O;
    gamma_prev = step.gamma;
  }

  if (!result.converged) result.costs = evaluate_costs(problem, flows, params);
  result.iterations = static_cast<int>(result.trace.size());
  result.gap = relative_gap(problem, flows, result.costs);
  result.total_cost = total_cost(flows, result.costs.perceived);
  result.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

}  // namespace mixflow
