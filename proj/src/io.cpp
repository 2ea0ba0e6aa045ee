#include "mixflow/io.hpp"

#include <istream>
#include <ostream>
#include <sstream>

namespace mixflow {

namespace {

class PrecisionGuard {
 public:
  explicit PrecisionGuard(std::ostream& os) : os_(os), flags_(os.flags()), precision_(os.precision(6)) {
    os_.unsetf(std::ios::floatfield);
  }
  ~PrecisionGuard() {
    os_.flags(flags_);
    os_.precision(precision_);
  }

 private:
  std::ostream& os_;
  std::ios::fmtflags flags_;
  std::streamsize precision_;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    fields.push_back(field);
  }
  return fields;
}

}  // namespace

void write_link_flows_csv(std::ostream& out, const Network& network, const FlowState& flows) {
  PrecisionGuard guard(out);
  out << "link_id,x_rv,x_av\n";
  const auto& xr = flows.links(VehicleClass::Regular);
  const auto& xa = flows.links(VehicleClass::Autonomous);
  for (std::size_t a = 0; a < network.link_count(); ++a) {
    const auto i = static_cast<Eigen::Index>(a);
    out << network.link(a).id << ',' << xr(i) << ',' << xa(i) << '\n';
  }
}

void write_path_flows_csv(std::ostream& out, const AssignmentProblem& problem, const FlowState& flows) {
  PrecisionGuard guard(out);
  out << "od,class,path_key,flow\n";
  for (std::size_t od = 0; od < problem.network().od_count(); ++od)
    for (VehicleClass c : kVehicleClasses) {
      const PathGroup& g = problem.groups(c)[od];
      const auto set = problem.paths().paths(od, c);
      for (std::size_t k = 0; k < set.size(); ++k)
        out << od << ',' << to_string(c) << ',' << path_key(problem.network(), set[k]) << ','
            << flows.paths(c)(g.offset + static_cast<Eigen::Index>(k)) << '\n';
    }
}

void write_trace_csv(std::ostream& out, const ConvergenceTrace& trace) {
  PrecisionGuard guard(out);
  out << "n,G,O,TC,beta,gamma,millis\n";
  for (const TraceRow& r : trace)
    out << r.n << ',' << r.gap << ',' << r.O << ',' << r.total_cost << ',' << r.beta << ',' << r.gamma
        << ',' << r.millis << '\n';
}

void write_outer_trace_csv(std::ostream& out, const std::vector<OuterRow>& rows) {
  PrecisionGuard guard(out);
  out << "m,new_paths,TC,E,inner_iters,seconds\n";
  for (const OuterRow& r : rows) {
    out << r.m << ',' << r.new_paths << ',' << r.total_cost << ',';
    if (r.E == r.E) out << r.E;
    out << ',' << r.inner_iters << ',' << r.seconds << '\n';
  }
}

PathFlowTable read_path_flows_csv(std::istream& in, const Network& network, const std::string& name) {
  PathFlowTable table;
  table.paths = PathSet(network.od_count());
  table.flows.resize(2 * network.od_count());
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv(line);
    if (!header) {
      if (fields != std::vector<std::string>{"od", "class", "path_key", "flow"})
        throw ParseError(name, line_no, "expected header 'od,class,path_key,flow'");
      header = true;
      continue;
    }
    if (fields.size() != 4) throw ParseError(name, line_no, "expected 4 fields");
    try {
      std::size_t used = 0;
      const unsigned long od = std::stoul(fields[0], &used);
      if (used != fields[0].size() || od >= network.od_count()) throw Error("OD index out of range");
      const VehicleClass c = parse_vehicle_class(fields[1]);
      const double flow = std::stod(fields[3], &used);
      if (used != fields[3].size()) throw Error("malformed flow");
      Path p = path_from_key(network, fields[2]);
      const OdPair& w = network.od(od);
      if (!connects(network, p, w.origin, w.destination)) throw Error("path does not connect its OD pair");
      if (!table.paths.insert(od, c, std::move(p))) throw Error("duplicate path");
      table.flows[2 * od + class_index(c)].push_back(flow);
      ++table.rows;
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(name, line_no, e.what());
    }
  }
  if (!header) throw ParseError(name, line_no, "empty flows file");
  return table;
}

FlowState flows_from_table(const AssignmentProblem& problem, const PathFlowTable& table) {
  FlowState state;
  for (VehicleClass c : kVehicleClasses) {
    const auto i = class_index(c);
    state.path_flow[i] = Eigen::VectorXd::Zero(problem.path_count(c));
    for (const PathGroup& g : problem.groups(c)) {
      const auto& values = table.flows.at(2 * g.od + i);
      for (Eigen::Index k = 0; k < g.size; ++k) state.path_flow[i](g.offset + k) = values.at(static_cast<std::size_t>(k));
    }
  }
  load_links(problem, state);
  return state;
}

}  // namespace mixflow
