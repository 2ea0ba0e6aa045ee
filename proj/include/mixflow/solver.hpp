#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mixflow/costs.hpp"
#include "mixflow/network.hpp"
#include "mixflow/paths.hpp"

namespace mixflow {

/// One vector per vehicle class, indexed by class_index().
using ClassVectors = std::array<Eigen::VectorXd, 2>;

struct PathGroup {
  std::size_t od = 0;
  VehicleClass cls = VehicleClass::Regular;
  Eigen::Index offset = 0;  // first path of the group in the class vector
  Eigen::Index size = 0;
  double demand = 0.0;
};

/// A network together with a fixed path set, flattened for the iteration:
/// per class, all paths sit in one vector grouped by OD, and a sparse
/// link-by-path incidence matrix maps path flows to link flows.
///
/// Holds a reference to `network`, which must outlive the problem.
class AssignmentProblem {
 public:
  AssignmentProblem(const Network& network, PathSet paths);

  const Network& network() const noexcept { return *network_; }
  const PathSet& paths() const noexcept { return paths_; }

  std::span<const PathGroup> groups(VehicleClass c) const { return groups_[class_index(c)]; }
  const Eigen::SparseMatrix<double>& incidence(VehicleClass c) const {
    return incidence_[class_index(c)];
  }
  Eigen::Index path_count(VehicleClass c) const { return incidence_[class_index(c)].cols(); }
  /// Nest structure of RV group `group`.
  const OverlapStructure& overlap(std::size_t group) const { return overlaps_.at(group); }

 private:
  const Network* network_;
  PathSet paths_;
  std::array<std::vector<PathGroup>, 2> groups_;
  std::array<Eigen::SparseMatrix<double>, 2> incidence_;
  std::vector<OverlapStructure> overlaps_;
};

struct FlowState {
  ClassVectors path_flow;
  ClassVectors link_flow;
  int iteration = 0;

  const Eigen::VectorXd& paths(VehicleClass c) const { return path_flow[class_index(c)]; }
  const Eigen::VectorXd& links(VehicleClass c) const { return link_flow[class_index(c)]; }
};

enum class SolverMode { Modified, Baseline };

struct SolverConfig {
  double gap_tol = 1e-4;
  double gamma_init = 9.5;
  double gamma_growth = 1e-4;  // lambda_1
  double lambda2 = 1e-4;       // accepted for completeness; has no effect
  int max_iters = 10000;
  SolverMode mode = SolverMode::Modified;
  double h_floor = 1e-10;

  void validate() const;
};

struct TraceRow {
  int n = 0;
  double gap = 0.0;
  double O = 0.0;
  double total_cost = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double millis = 0.0;
};

using ConvergenceTrace = std::vector<TraceRow>;

/// Observed and perceived path costs for one loading of the network.
struct PathCosts {
  LinkStates links;
  ClassVectors cost;
  ClassVectors perceived;
};

struct StepSize {
  double beta = 0.0;
  double gamma = 0.0;
};

struct SolveResult {
  FlowState flows;
  PathCosts costs;  // at `flows`
  ConvergenceTrace trace;
  bool converged = false;
  int iterations = 0;
  double gap = 0.0;
  double total_cost = 0.0;
  double seconds = 0.0;
};

// ---------------------------------------------------------------------------
// Group-level kernels.

/// Flow swapping direction within one path group: every pair of paths
/// exchanges flow from the dearer to the cheaper one in proportion to the
/// source flow and the cost difference raised to `mu`. Sums to zero.
template <typename DerivedF, typename DerivedC>
Eigen::VectorXd swap_direction(const Eigen::MatrixBase<DerivedF>& flow,
                               const Eigen::MatrixBase<DerivedC>& perceived, double mu) {
  const Eigen::Index n = flow.size();
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index g = k + 1; g < n; ++g) {
      const double diff = perceived(g) - perceived(k);
      if (diff == 0.0) continue;
      // Flow leaves the dearer path towards the cheaper one.
      const Eigen::Index from = diff > 0.0 ? g : k;
      const Eigen::Index to = diff > 0.0 ? k : g;
      const double excess = std::abs(diff);
      const double moved = flow(from) * (mu == 1.0 ? excess : std::pow(excess, mu));
      phi(to) += moved;
      phi(from) -= moved;
    }
  }
  return phi;
}

// ---------------------------------------------------------------------------
// Iteration steps.

/// Demand spread evenly over each group's paths. Throws SolverError for a
/// group with positive demand and no paths.
FlowState init_uniform(const AssignmentProblem& problem);

/// Recomputes link flows from path flows via the incidence matrices.
void load_links(const AssignmentProblem& problem, FlowState& flows);

/// Link costs, path costs and perceived path costs at the current flows.
PathCosts evaluate_costs(const AssignmentProblem& problem, const FlowState& flows,
                         const ClassParams& params);

/// Swap direction for every path. `mu` holds the swapping degree per class.
ClassVectors compute_phi(const AssignmentProblem& problem, const FlowState& flows,
                         const ClassVectors& perceived, const std::array<double, 2>& mu);

/// Largest -phi/f over paths with positive flow and nonpositive phi, floored
/// at `h_floor`.
double compute_h(const ClassVectors& path_flow, const ClassVectors& phi, double h_floor);

/// Sum of |phi| over all paths.
double compute_O(const ClassVectors& phi);

StepSize step_size(int n, double h, double O, double O_prev, double gamma_prev,
                   const SolverConfig& config);

/// f += beta * phi, then clamps rounding negatives and reloads link flows.
/// Throws SolverError if any flow falls below -1e-9 times its group demand.
void update_flows(const AssignmentProblem& problem, FlowState& flows, const ClassVectors& phi,
                  double beta);

/// Sum of f * c over all paths with the observed generalized cost c. Unlike
/// the perceived total it stays positive: the RV entropy term is negative
/// whenever a path carries less than the whole group demand.
double gap_denominator(const FlowState& flows, const ClassVectors& cost);

/// Demand-weighted excess of perceived cost over the group minimum,
/// relative to gap_denominator.
double relative_gap(const AssignmentProblem& problem, const FlowState& flows, const PathCosts& costs);

double total_cost(const FlowState& flows, const ClassVectors& perceived);

/// Runs the flow-swapping iteration until the relative gap reaches
/// config.gap_tol or config.max_iters is exhausted. Starts from `initial`
/// when given, otherwise from the uniform split.
SolveResult solve(const AssignmentProblem& problem, const ClassParams& params,
                  const SolverConfig& config, const FlowState* initial = nullptr);

}  // namespace mixflow
