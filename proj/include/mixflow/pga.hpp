#pragma once

#include <cstddef>
#include <vector>

#include "mixflow/solver.hpp"

namespace mixflow {

struct PgaConfig {
  std::size_t k = 10;       // paths generated per (OD, class) and outer iteration
  double outer_tol = 1e-3;  // stop generating once |E(m)| <= outer_tol
  double inner_gap = 0.1;   // solver gap for the intermediate assignments
  double final_gap = 1e-4;  // solver gap for the closing assignment
  int max_outer = 20;
  unsigned threads = 1;

  void validate() const;
};

struct OuterRow {
  int m = 0;
  std::size_t new_paths = 0;
  double total_cost = 0.0;
  double E = 0.0;  // NaN for m = 1
  int inner_iters = 0;
  double seconds = 0.0;
};

struct PgaResult {
  PathSet paths;          // final path set; `final.flows` is indexed by it
  SolveResult final;      // closing assignment at the tight gap
  std::vector<OuterRow> outer;
  bool stabilized = false;  // false if max_outer ran out first
};

/// Relative change of total cost between consecutive outer iterations.
inline double outer_error(double tc, double tc_prev) { return (tc - tc_prev) / tc; }

/// Flows of `flows` (indexed by `from`) re-indexed for `to`, whose path set
/// must extend that of `from`; paths only in `to` start empty.
FlowState carry_flows(const AssignmentProblem& from, const FlowState& flows,
                      const AssignmentProblem& to);

/// Alternates k-shortest path generation on current link costs with an
/// assignment over the growing path set until total cost stabilises, then
/// solves once more to the tight gap.
PgaResult pga_solve(const Network& network, const ClassParams& params, const PgaConfig& pga,
                    const SolverConfig& solver);

}  // namespace mixflow
