#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "mixflow/solver.hpp"

namespace mixflow {

/// Link flows per class, accumulated path by path from the path link lists
/// (no incidence matrix involved).
ClassVectors link_flows_from_paths(const Network& network, const PathSet& paths,
                                   const ClassVectors& path_flow);

struct GroupMinCost {
  std::size_t od = 0;
  VehicleClass cls = VehicleClass::Regular;
  double value = 0.0;
};

/// How far a flow pattern is from satisfying the complementarity system
///   f (C - min C) = 0,  C - min C >= 0,  sum f = q,  f >= 0.
struct EquilibriumReport {
  double ncp_residual = 0.0;                   // sum |f (C - min C)|, $ veh/h
  double max_complementarity_violation = 0.0;  // max over used paths of min(f, C - min C)
  double feasibility_violation = 0.0;          // sum |sum f - q| + sum max(-f, 0), veh/h
  std::vector<GroupMinCost> min_cost;          // per group with at least one path
};

/// A path counts as used when its flow exceeds 1e-6 of the group demand.
EquilibriumReport ncp_residual(const AssignmentProblem& problem, const ClassVectors& path_flow,
                               const ClassVectors& perceived);

/// L1 distance to the reference link flows, relative to the reference total.
/// Throws Error if the reference carries no flow.
double flow_deviation(const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref);

/// Coefficient of determination of `x` against `x_ref`. Throws Error if the
/// reference is constant.
double r_squared(const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref);

/// `key = value` lines.
void write_report(std::ostream& out, const EquilibriumReport& report);
/// `metric,value` rows followed by `min_cost,<od>,<class>,<value>` rows.
void write_report_csv(std::ostream& out, const EquilibriumReport& report);

}  // namespace mixflow
