#include "mixflow/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

namespace mixflow {

ClassVectors link_flows_from_paths(const Network& network, const PathSet& paths,
                                   const ClassVectors& path_flow) {
  ClassVectors x;
  for (VehicleClass c : kVehicleClasses) {
    const auto i = class_index(c);
    x[i] = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(network.link_count()));
    Eigen::Index k = 0;
    for (std::size_t od = 0; od < paths.od_count(); ++od)
      for (const Path& p : paths.paths(od, c)) {
        for (std::size_t a : p.links) x[i](static_cast<Eigen::Index>(a)) += path_flow[i](k);
        ++k;
      }
  }
  return x;
}

EquilibriumReport ncp_residual(const AssignmentProblem& problem, const ClassVectors& path_flow,
                               const ClassVectors& perceived) {
  EquilibriumReport r;
  for (VehicleClass c : kVehicleClasses) {
    const auto i = class_index(c);
    for (const PathGroup& g : problem.groups(c)) {
      double assigned = 0.0;
      for (Eigen::Index k = g.offset; k < g.offset + g.size; ++k) {
        assigned += path_flow[i](k);
        r.feasibility_violation += std::max(-path_flow[i](k), 0.0);
      }
      r.feasibility_violation += std::abs(assigned - g.demand);
      if (g.size == 0) continue;

      double lowest = std::numeric_limits<double>::infinity();
      for (Eigen::Index k = g.offset; k < g.offset + g.size; ++k) lowest = std::min(lowest, perceived[i](k));
      r.min_cost.push_back({g.od, c, lowest});

      const double used = 1e-6 * g.demand;
      for (Eigen::Index k = g.offset; k < g.offset + g.size; ++k) {
        const double f = path_flow[i](k);
        const double excess = perceived[i](k) - lowest;
        r.ncp_residual += std::abs(f * excess);
        if (f > used)
          r.max_complementarity_violation = std::max(r.max_complementarity_violation, std::min(f, excess));
      }
    }
  }
  return r;
}

double flow_deviation(const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref) {
  if (x.size() != x_ref.size()) throw Error("flow vectors differ in length");
  const double ref_total = x_ref.sum();
  if (!(ref_total > 0.0)) throw Error("reference link flows sum to zero");
  return (x - x_ref).cwiseAbs().sum() / ref_total;
}

double r_squared(const Eigen::VectorXd& x, const Eigen::VectorXd& x_ref) {
  if (x.size() != x_ref.size()) throw Error("flow vectors differ in length");
  const double mean = x_ref.mean();
  const double ss_tot = (x_ref.array() - mean).square().sum();
  if (!(ss_tot > 0.0)) throw Error("reference link flows are constant");
  const double ss_res = (x - x_ref).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

void write_report(std::ostream& out, const EquilibriumReport& report) {
  const auto old = out.precision(17);
  out << "ncp_residual = " << report.ncp_residual << '\n'
      << "max_complementarity_violation = " << report.max_complementarity_violation << '\n'
      << "feasibility_violation = " << report.feasibility_violation << '\n'
      << "groups = " << report.min_cost.size() << '\n';
  out.precision(old);
}

void write_report_csv(std::ostream& out, const EquilibriumReport& report) {
  const auto old = out.precision(6);
  out << "metric,value\n"
      << "ncp_residual," << report.ncp_residual << '\n'
      << "max_complementarity_violation," << report.max_complementarity_violation << '\n'
      << "feasibility_violation," << report.feasibility_violation << '\n';
  for (const auto& m : report.min_cost)
    out << "min_cost," << m.od << ',' << to_string(m.cls) << ',' << m.value << '\n';
  out.precision(old);
}

}  // namespace mixflow
