#include "mixflow/network.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <sstream>

namespace mixflow {

namespace {

constexpr std::size_t kUnknown = std::numeric_limits<std::size_t>::max();

std::uint64_t pair_key(NodeId from, NodeId to) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(from)) << 32) |
         static_cast<std::uint32_t>(to);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

// Returns the integer after a `<TAG>` metadata marker, if present.
std::optional<long long> metadata_value(std::string_view line, std::string_view tag) {
  if (line.substr(0, tag.size()) != tag) return std::nullopt;
  long long v = 0;
  if (!parse_number(line.substr(tag.size()), v)) return std::nullopt;
  return v;
}

std::vector<std::string> header_columns(std::string_view line) {
  line.remove_prefix(1);  // '~'
  const bool tabbed = line.find('\t') != std::string_view::npos;
  std::vector<std::string> cols;
  if (tabbed) {
    std::size_t start = 0;
    while (start <= line.size()) {
      const auto pos = line.find('\t', start);
      const auto piece = trim(line.substr(start, pos == std::string_view::npos ? line.size() - start
                                                                                 : pos - start));
      if (!piece.empty() && piece != ";") cols.emplace_back(piece);
      if (pos == std::string_view::npos) break;
      start = pos + 1;
    }
  } else {
    for (auto tok : split_ws(line))
      if (tok != ";") cols.emplace_back(tok);
  }
  for (auto& c : cols)
    std::transform(c.begin(), c.end(), c.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return cols;
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

VehicleClass parse_vehicle_class(std::string_view text) {
  if (text == "rv" || text == "RV" || text == "regular") return VehicleClass::Regular;
  if (text == "av" || text == "AV" || text == "autonomous") return VehicleClass::Autonomous;
  throw Error("unknown vehicle class '" + std::string(text) + "'");
}

ParseError::ParseError(const std::string& file, std::size_t line, const std::string& message)
    : Error(file + ":" + std::to_string(line) + ": " + message), line_(line) {}

DemandSplit split_demand(double total, double penetration) {
  if (!(penetration >= 0.0 && penetration <= 1.0))
    throw ValidationError("penetration rate must lie in [0, 1], got " + format_shortest(penetration));
  if (!(total >= 0.0)) throw ValidationError("total demand must be nonnegative");
  const double autonomous = penetration * total;
  return {total - autonomous, autonomous};
}

std::string format_shortest(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------

Network::Network(std::vector<NodeId> nodes, std::vector<Link> links, std::vector<OdPair> od_pairs)
    : nodes_(std::move(nodes)), links_(std::move(links)), od_pairs_(std::move(od_pairs)) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) node_lookup_.emplace(nodes_[i], i);
  out_links_.resize(nodes_.size());
  tail_.resize(links_.size(), kUnknown);
  head_.resize(links_.size(), kUnknown);
  lengths_.resize(static_cast<Eigen::Index>(links_.size()));
  free_times_.resizeLike(lengths_);
  cap_rv_.resizeLike(lengths_);
  cap_av_.resizeLike(lengths_);
  for (std::size_t i = 0; i < links_.size(); ++i) {
    const Link& l = links_[i];
    link_lookup_.emplace(l.id, i);
    pair_lookup_.emplace(pair_key(l.from_node, l.to_node), i);
    if (auto t = node_lookup_.find(l.from_node); t != node_lookup_.end()) tail_[i] = t->second;
    if (auto h = node_lookup_.find(l.to_node); h != node_lookup_.end()) head_[i] = h->second;
    if (tail_[i] != kUnknown && head_[i] != kUnknown) out_links_[tail_[i]].push_back(i);
    const auto e = static_cast<Eigen::Index>(i);
    lengths_[e] = l.length;
    free_times_[e] = l.free_time;
    cap_rv_[e] = l.cap_rv;
    cap_av_[e] = l.cap_av;
  }
}

std::optional<std::size_t> Network::node_index(NodeId id) const {
  if (auto it = node_lookup_.find(id); it != node_lookup_.end()) return it->second;
  return std::nullopt;
}

std::optional<std::size_t> Network::link_index(LinkId id) const {
  if (auto it = link_lookup_.find(id); it != link_lookup_.end()) return it->second;
  return std::nullopt;
}

std::optional<std::size_t> Network::link_between(NodeId from, NodeId to) const {
  if (auto it = pair_lookup_.find(pair_key(from, to)); it != pair_lookup_.end()) return it->second;
  return std::nullopt;
}

Network Network::with_demand(std::vector<OdPair> od_pairs) const {
  return Network(nodes_, links_, std::move(od_pairs));
}

bool Network::reachable(NodeId origin, NodeId destination) const {
  const auto o = node_index(origin);
  const auto d = node_index(destination);
  if (!o || !d) return false;
  std::vector<char> seen(nodes_.size(), 0);
  std::queue<std::size_t> frontier;
  frontier.push(*o);
  seen[*o] = 1;
  while (!frontier.empty()) {
    const auto u = frontier.front();
    frontier.pop();
    if (u == *d) return true;
    for (auto a : out_links_[u]) {
      const auto v = head_[a];
      if (!seen[v]) {
        seen[v] = 1;
        frontier.push(v);
      }
    }
  }
  return false;
}

// ---------------------------------------------------------------------------

std::string ValidationReport::summary() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i].entity << ": " << violations[i].message;
  }
  return os.str();
}

ValidationReport validate(const Network& network) {
  ValidationReport report;
  auto flag = [&](std::string entity, std::string message) {
    report.violations.push_back({std::move(entity), std::move(message)});
  };

  std::set<NodeId> node_ids;
  for (NodeId n : network.nodes()) {
    if (n <= 0) flag("node " + std::to_string(n), "node ids must be positive");
    if (!node_ids.insert(n).second) flag("node " + std::to_string(n), "duplicate node id");
  }

  std::set<LinkId> link_ids;
  std::set<std::pair<NodeId, NodeId>> endpoints;
  for (const Link& l : network.links()) {
    const std::string who = "link " + std::to_string(l.id);
    if (!link_ids.insert(l.id).second) flag(who, "duplicate link id");
    if (!node_ids.count(l.from_node) || !node_ids.count(l.to_node))
      flag(who, "endpoint is not a network node");
    if (l.from_node == l.to_node) flag(who, "self loop");
    if (!endpoints.insert({l.from_node, l.to_node}).second)
      flag(who, "second link between nodes " + std::to_string(l.from_node) + " and " +
                    std::to_string(l.to_node));
    if (!positive_finite(l.length)) flag(who, "nonpositive length");
    if (!positive_finite(l.free_time)) flag(who, "nonpositive free flow time");
    if (!positive_finite(l.cap_rv)) flag(who, "nonpositive capacity");
    if (!positive_finite(l.cap_av)) flag(who, "nonpositive AV capacity");
  }

  std::set<std::pair<NodeId, NodeId>> seen_od;
  for (const OdPair& od : network.od_pairs()) {
    const std::string who = "od " + std::to_string(od.origin) + "->" + std::to_string(od.destination);
    if (od.origin == od.destination) flag(who, "origin equals destination");
    if (!seen_od.insert({od.origin, od.destination}).second) flag(who, "duplicate OD pair");
    if (!(od.demand_rv >= 0.0) || !(od.demand_av >= 0.0)) flag(who, "negative demand");
    if (!(od.demand_rv + od.demand_av > 0.0)) flag(who, "zero total demand");
    if (!node_ids.count(od.origin) || !node_ids.count(od.destination)) {
      flag(who, "endpoint is not a network node");
    } else if (od.origin != od.destination && !network.reachable(od.origin, od.destination)) {
      flag(who, "destination unreachable from origin");
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

NetFileData read_net_file(std::istream& in, double av_capacity_ratio, const std::string& name) {
  NetFileData data;
  long long declared_links = -1;
  bool in_metadata = true;
  std::optional<std::size_t> av_column;
  std::string raw;
  std::size_t line_no = 0;
  NodeId max_node = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (in_metadata) {
      if (line.front() != '<') {
        // Files without a metadata block start directly with records.
        in_metadata = false;
      } else {
        if (line.rfind("<END OF METADATA>", 0) == 0) {
          in_metadata = false;
        } else if (auto v = metadata_value(line, "<NUMBER OF NODES>")) {
          if (*v < 0) throw ParseError(name, line_no, "negative node count");
          data.node_count = static_cast<std::size_t>(*v);
        } else if (auto v2 = metadata_value(line, "<NUMBER OF LINKS>")) {
          declared_links = *v2;
        }
        continue;
      }
    }
    if (line.front() == '~') {
      const auto cols = header_columns(line);
      av_column.reset();
      for (std::size_t i = 0; i < cols.size(); ++i)
        if (cols[i] == "capacity_av") av_column = i;
      continue;
    }
    if (line.front() == '#') continue;

    auto tokens = split_ws(line);
    while (!tokens.empty() && tokens.back() == ";") tokens.pop_back();
    if (!tokens.empty() && tokens.back().back() == ';') tokens.back().remove_suffix(1);
    if (tokens.size() < 5)
      throw ParseError(name, line_no, "expected at least 5 fields per link record");

    Link link;
    link.id = static_cast<LinkId>(data.links.size() + 1);
    if (!parse_number(tokens[0], link.from_node) || !parse_number(tokens[1], link.to_node))
      throw ParseError(name, line_no, "node ids must be integers");
    if (!parse_number(tokens[2], link.cap_rv) || !parse_number(tokens[3], link.length) ||
        !parse_number(tokens[4], link.free_time))
      throw ParseError(name, line_no, "malformed numeric field");
    if (av_column) {
      if (*av_column >= tokens.size() || !parse_number(tokens[*av_column], link.cap_av))
        throw ParseError(name, line_no, "missing or malformed capacity_av field");
    } else {
      link.cap_av = av_capacity_ratio * link.cap_rv;
    }
    max_node = std::max({max_node, link.from_node, link.to_node});
    data.links.push_back(link);
  }
  if (declared_links >= 0 && static_cast<std::size_t>(declared_links) != data.links.size())
    throw ParseError(name, line_no,
                     "header declares " + std::to_string(declared_links) + " links, found " +
                         std::to_string(data.links.size()));
  if (data.node_count == 0) data.node_count = static_cast<std::size_t>(std::max(max_node, 0));
  return data;
}

std::vector<TripRecord> read_trips_file(std::istream& in, const std::string& name) {
  std::vector<TripRecord> trips;
  std::optional<NodeId> origin;
  bool in_metadata = true;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '~' || line.front() == '#') continue;
    if (in_metadata && line.front() == '<') {
      if (line.rfind("<END OF METADATA>", 0) == 0) in_metadata = false;
      continue;
    }
    in_metadata = false;
    if (line.rfind("Origin", 0) == 0) {
      NodeId o = 0;
      if (!parse_number(line.substr(6), o)) throw ParseError(name, line_no, "malformed Origin line");
      origin = o;
      continue;
    }
    if (!origin) throw ParseError(name, line_no, "demand entry before any Origin line");
    std::size_t start = 0;
    while (start < line.size()) {
      auto pos = line.find(';', start);
      const auto piece = trim(line.substr(start, pos == std::string_view::npos ? line.size() - start
                                                                                : pos - start));
      start = pos == std::string_view::npos ? line.size() : pos + 1;
      if (piece.empty()) continue;
      const auto colon = piece.find(':');
      TripRecord rec;
      rec.origin = *origin;
      if (colon == std::string_view::npos || !parse_number(piece.substr(0, colon), rec.destination) ||
          !parse_number(piece.substr(colon + 1), rec.total))
        throw ParseError(name, line_no, "expected 'destination : flow;'");
      if (!(rec.total >= 0.0) || !std::isfinite(rec.total))
        throw ParseError(name, line_no, "demand must be finite and nonnegative");
      if (rec.total == 0.0 || rec.origin == rec.destination) continue;
      trips.push_back(rec);
    }
  }
  return trips;
}

Network make_network(const NetFileData& net, std::span<const TripRecord> trips, double penetration) {
  std::vector<NodeId> nodes(net.node_count);
  for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = static_cast<NodeId>(i + 1);
  std::vector<OdPair> ods;
  ods.reserve(trips.size());
  for (const auto& t : trips) {
    const auto split = split_demand(t.total, penetration);
    ods.push_back({t.origin, t.destination, split.regular, split.autonomous, t.total});
  }
  return Network(std::move(nodes), net.links, std::move(ods));
}

Network load_network(const std::filesystem::path& net_file, const std::filesystem::path& trips_file,
                     const ClassParams& params) {
  std::ifstream net_in(net_file);
  if (!net_in) throw Error("cannot open net file " + net_file.string());
  std::ifstream trips_in(trips_file);
  if (!trips_in) throw Error("cannot open trips file " + trips_file.string());
  const auto net = read_net_file(net_in, params.av_capacity_ratio, net_file.string());
  const auto trips = read_trips_file(trips_in, trips_file.string());
  Network network = make_network(net, trips, params.penetration);
  if (auto report = validate(network); !report.ok()) throw ValidationError(report.summary());
  return network;
}

void write_net_file(std::ostream& out, const Network& network) {
  out << "<NUMBER OF NODES> " << network.node_count() << "\n";
  out << "<NUMBER OF LINKS> " << network.link_count() << "\n";
  out << "<END OF METADATA>\n\n";
  out << "~\tinit_node\tterm_node\tcapacity\tlength\tfree_flow_time\tcapacity_av\t;\n";
  for (const Link& l : network.links()) {
    out << '\t' << l.from_node << '\t' << l.to_node << '\t' << format_shortest(l.cap_rv) << '\t'
        << format_shortest(l.length) << '\t' << format_shortest(l.free_time) << '\t'
        << format_shortest(l.cap_av) << "\t;\n";
  }
}

void write_trips_file(std::ostream& out, const Network& network) {
  double total = 0.0;
  for (const auto& od : network.od_pairs()) total += od.demand_total;
  out << "<NUMBER OF ZONES> " << network.node_count() << "\n";
  out << "<TOTAL OD FLOW> " << format_shortest(total) << "\n";
  out << "<END OF METADATA>\n";
  std::optional<NodeId> current;
  for (const auto& od : network.od_pairs()) {
    if (od.origin != current) {
      if (current) out << "\n";
      out << "\nOrigin " << od.origin << "\n";
      current = od.origin;
    }
    out << '\t' << od.destination << " :\t" << format_shortest(od.demand_total) << ';';
  }
  if (current) out << "\n";
}

std::vector<OdPair> synthesize_demand(const Network& network, std::size_t pair_count, double low,
                                      double high, double penetration, std::uint64_t seed) {
  if (!(low > 0.0) || !(high >= low)) throw ValidationError("demand range must satisfy 0 < low <= high");
  std::vector<std::pair<NodeId, NodeId>> candidates;
  for (NodeId o : network.nodes())
    for (NodeId d : network.nodes())
      if (o != d && network.reachable(o, d)) candidates.emplace_back(o, d);
  if (candidates.size() < pair_count)
    throw ValidationError("network has only " + std::to_string(candidates.size()) +
                          " connected OD pairs, " + std::to_string(pair_count) + " requested");
  std::mt19937_64 rng(seed);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  candidates.resize(pair_count);
  std::sort(candidates.begin(), candidates.end());
  return synthesize_demand(candidates, low, high, penetration, seed ^ 0x9e3779b97f4a7c15ULL);
}

std::vector<OdPair> synthesize_demand(std::span<const std::pair<NodeId, NodeId>> pairs, double low,
                                      double high, double penetration, std::uint64_t seed) {
  if (!(low > 0.0) || !(high >= low)) throw ValidationError("demand range must satisfy 0 < low <= high");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> draw(low, high);
  std::vector<OdPair> ods;
  ods.reserve(pairs.size());
  for (auto [o, d] : pairs) {
    // Whole vehicles keep fixture files short and exactly representable.
    const double total = std::round(draw(rng));
    const auto split = split_demand(total, penetration);
    ods.push_back({o, d, split.regular, split.autonomous, total});
  }
  return ods;
}

}  // namespace mixflow
