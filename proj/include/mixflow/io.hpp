#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mixflow/pga.hpp"
#include "mixflow/solver.hpp"

namespace mixflow {

// CSV outputs. Numbers carry 6 significant digits.

/// `link_id,x_rv,x_av`
void write_link_flows_csv(std::ostream& out, const Network& network, const FlowState& flows);
/// `od,class,path_key,flow`
void write_path_flows_csv(std::ostream& out, const AssignmentProblem& problem, const FlowState& flows);
/// `n,G,O,TC,beta,gamma,millis`
void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace);
/// `m,new_paths,TC,E,inner_iters,seconds`
void write_outer_trace_csv(std::ostream& out, const std::vector<OuterRow>& rows);

/// Path flows read back from a `od,class,path_key,flow` file.
struct PathFlowTable {
  PathSet paths;
  std::vector<std::vector<double>> flows;  // per group, index 2 * od + class
  std::size_t rows = 0;
};

/// Throws ParseError on a bad header, malformed row, unknown link, or a
/// path that does not connect its OD pair.
PathFlowTable read_path_flows_csv(std::istream& in, const Network& network,
                                  const std::string& name = "<flows>");

/// Flow state for a problem built from `table.paths`.
FlowState flows_from_table(const AssignmentProblem& problem, const PathFlowTable& table);

}  // namespace mixflow
