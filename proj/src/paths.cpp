#include "mixflow/paths.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>
#include <thread>

namespace mixflow {

Path make_path(const Network& network, std::vector<std::size_t> links) {
  Path p;
  p.links = std::move(links);
  for (std::size_t a : p.links) p.length += network.link(a).length;
  return p;
}

Path path_from_nodes(const Network& network, std::span<const NodeId> nodes) {
  std::vector<std::size_t> links;
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const auto a = network.link_between(nodes[i], nodes[i + 1]);
    if (!a)
      throw Error("no link from node " + std::to_string(nodes[i]) + " to node " +
                  std::to_string(nodes[i + 1]));
    links.push_back(*a);
  }
  return make_path(network, std::move(links));
}

Path path_from_key(const Network& network, std::string_view key) {
  std::vector<std::size_t> links;
  std::size_t start = 0;
  while (start <= key.size()) {
    const auto pos = key.find('-', start);
    const auto tok = key.substr(start, pos == std::string_view::npos ? key.size() - start : pos - start);
    LinkId id = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), id);
    if (ec != std::errc() || ptr != tok.data() + tok.size())
      throw Error("malformed path key '" + std::string(key) + "'");
    const auto a = network.link_index(id);
    if (!a) throw Error("path key references unknown link " + std::to_string(id));
    links.push_back(*a);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return make_path(network, std::move(links));
}

std::vector<NodeId> node_sequence(const Network& network, const Path& path) {
  std::vector<NodeId> nodes;
  if (path.links.empty()) return nodes;
  nodes.push_back(network.link(path.links.front()).from_node);
  for (std::size_t a : path.links) nodes.push_back(network.link(a).to_node);
  return nodes;
}

std::string format_node_sequence(std::span<const NodeId> nodes) {
  std::string s;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(nodes[i]);
  }
  return s;
}

std::string path_key(const Network& network, const Path& path) {
  std::string s;
  for (std::size_t i = 0; i < path.links.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(network.link(path.links[i]).id);
  }
  return s;
}

bool connects(const Network& network, const Path& path, NodeId origin, NodeId destination) {
  if (path.links.empty()) return false;
  std::set<NodeId> visited{origin};
  NodeId at = origin;
  for (std::size_t a : path.links) {
    const Link& l = network.link(a);
    if (l.from_node != at) return false;
    if (!visited.insert(l.to_node).second) return false;
    at = l.to_node;
  }
  return at == destination;
}

// ---------------------------------------------------------------------------

std::size_t PathSet::size() const noexcept {
  std::size_t n = 0;
  for (const auto& g : groups_) n += g.size();
  return n;
}

bool PathSet::insert(std::size_t od, VehicleClass c, Path path) {
  if (contains(od, c, path)) return false;
  groups_.at(2 * od + class_index(c)).push_back(std::move(path));
  return true;
}

std::optional<std::size_t> PathSet::find(std::size_t od, VehicleClass c, const Path& path) const {
  const auto& g = group(od, c);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g[i].links == path.links) return i;
  return std::nullopt;
}

int PathSet::incidence(std::size_t od, VehicleClass c, std::size_t path, std::size_t link) const {
  const Path& p = group(od, c).at(path);
  return std::find(p.links.begin(), p.links.end(), link) != p.links.end() ? 1 : 0;
}

std::pair<PathSet, std::size_t> merge_path_sets(const PathSet& current, const PathSet& generated) {
  PathSet merged = current;
  std::size_t added = 0;
  const std::size_t ods = std::min(current.od_count(), generated.od_count());
  for (std::size_t od = 0; od < ods; ++od)
    for (VehicleClass c : kVehicleClasses)
      for (const Path& p : generated.paths(od, c))
        if (merged.insert(od, c, p)) ++added;
  return {std::move(merged), added};
}

// ---------------------------------------------------------------------------
// Yen's k shortest loopless paths.

namespace {

struct Candidate {
  double cost = 0.0;
  std::vector<NodeId> nodes;
  std::vector<std::size_t> links;

  bool operator<(const Candidate& o) const {
    if (cost != o.cost) return cost < o.cost;
    return nodes < o.nodes;
  }
};

class SpurSearch {
 public:
  SpurSearch(const Network& network, const Eigen::VectorXd& costs)
      : net_(network), costs_(costs), in_links_(network.node_count()) {
    for (std::size_t a = 0; a < network.link_count(); ++a) in_links_[network.head(a)].push_back(a);
  }

  // Cheapest path from `source` to `target` avoiding the blocked nodes and
  // links; among equal-cost paths the one with the smallest node sequence.
  std::optional<std::vector<std::size_t>> run(std::size_t source, std::size_t target,
                                              const std::vector<char>& blocked_node,
                                              const std::vector<char>& blocked_link) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t n = net_.node_count();
    dist_.assign(n, inf);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist_[target] = 0.0;
    heap.push({0.0, target});
    // Distances to the target over the reversed graph.
    while (!heap.empty()) {
      auto [d, v] = heap.top();
      heap.pop();
      if (d > dist_[v]) continue;
      for (std::size_t a : in_links_[v]) {
        const std::size_t u = net_.tail(a);
        if (blocked_link[a] || blocked_node[u]) continue;
        const double nd = d + costs_(static_cast<Eigen::Index>(a));
        if (nd < dist_[u]) {
          dist_[u] = nd;
          heap.push({nd, u});
        }
      }
    }
    if (dist_[source] == inf) return std::nullopt;

    std::vector<std::size_t> links;
    std::size_t at = source;
    while (at != target) {
      std::optional<std::size_t> best;
      for (std::size_t a : net_.out_links(at)) {
        const std::size_t v = net_.head(a);
        if (blocked_link[a] || blocked_node[v] || dist_[v] == inf) continue;
        const double through = costs_(static_cast<Eigen::Index>(a)) + dist_[v];
        const double tol = 1e-12 * std::max(1.0, std::abs(dist_[at]));
        if (std::abs(through - dist_[at]) > tol) continue;
        if (!best || net_.link(a).to_node < net_.link(*best).to_node) best = a;
      }
      if (!best || links.size() > net_.node_count()) return std::nullopt;
      links.push_back(*best);
      at = net_.head(*best);
    }
    return links;
  }

 private:
  const Network& net_;
  const Eigen::VectorXd& costs_;
  std::vector<std::vector<std::size_t>> in_links_;
  std::vector<double> dist_;
};

Candidate make_candidate(const Network& network, const Eigen::VectorXd& costs,
                         std::vector<std::size_t> links) {
  Candidate c;
  c.links = std::move(links);
  c.cost = path_cost(c.links, costs);
  c.nodes.push_back(network.link(c.links.front()).from_node);
  for (std::size_t a : c.links) c.nodes.push_back(network.link(a).to_node);
  return c;
}

}  // namespace

std::vector<Path> yen_k_shortest(const Network& network, const Eigen::VectorXd& link_costs,
                                 NodeId origin, NodeId destination, std::size_t k) {
  const auto s = network.node_index(origin);
  const auto t = network.node_index(destination);
  if (!s) throw Error("origin node " + std::to_string(origin) + " is not in the network");
  if (!t) throw Error("destination node " + std::to_string(destination) + " is not in the network");
  if (k == 0) throw Error("k must be at least 1");
  if (static_cast<std::size_t>(link_costs.size()) != network.link_count())
    throw Error("link cost vector does not match the network");
  if (!(link_costs.array() > 0.0).all()) throw Error("k-shortest paths need positive link costs");
  if (*s == *t) throw Error("origin equals destination");

  SpurSearch search(network, link_costs);
  std::vector<char> blocked_node(network.node_count(), 0);
  std::vector<char> blocked_link(network.link_count(), 0);

  std::vector<Candidate> accepted;
  auto first = search.run(*s, *t, blocked_node, blocked_link);
  if (!first)
    throw Error("no path from node " + std::to_string(origin) + " to node " +
                std::to_string(destination));
  accepted.push_back(make_candidate(network, link_costs, std::move(*first)));

  std::set<Candidate> pending;
  while (accepted.size() < k) {
    const Candidate& prev = accepted.back();
    for (std::size_t i = 0; i + 1 < prev.nodes.size(); ++i) {
      std::fill(blocked_node.begin(), blocked_node.end(), 0);
      std::fill(blocked_link.begin(), blocked_link.end(), 0);
      for (std::size_t j = 0; j < i; ++j) blocked_node[*network.node_index(prev.nodes[j])] = 1;
      for (const Candidate& p : accepted) {
        if (p.links.size() > i && std::equal(prev.links.begin(), prev.links.begin() + i, p.links.begin()))
          blocked_link[p.links[i]] = 1;
      }
      const std::size_t spur_node = network.tail(prev.links[i]);
      auto spur = search.run(spur_node, *t, blocked_node, blocked_link);
      if (!spur) continue;
      std::vector<std::size_t> links(prev.links.begin(), prev.links.begin() + i);
      links.insert(links.end(), spur->begin(), spur->end());
      pending.insert(make_candidate(network, link_costs, std::move(links)));
    }
    if (pending.empty()) break;
    accepted.push_back(*pending.begin());
    pending.erase(pending.begin());
  }

  std::vector<Path> out;
  out.reserve(accepted.size());
  for (auto& c : accepted) out.push_back(make_path(network, std::move(c.links)));
  return out;
}

PathSet generate_paths(const Network& network, const LinkStates& links, std::size_t k,
                       unsigned threads) {
  struct Task {
    std::size_t od;
    VehicleClass cls;
    std::vector<Path> result;
    std::exception_ptr error;
  };
  std::vector<Task> tasks;
  for (std::size_t od = 0; od < network.od_count(); ++od)
    for (VehicleClass c : kVehicleClasses)
      if (network.od(od).demand(c) > 0.0) tasks.push_back({od, c, {}, nullptr});

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      Task& task = tasks[i];
      const OdPair& od = network.od(task.od);
      try {
        task.result = yen_k_shortest(network, links.cost(task.cls), od.origin, od.destination, k);
      } catch (...) {
        task.error = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(tasks.size(), 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  PathSet set(network.od_count());
  for (auto& task : tasks) {
    if (task.error) std::rethrow_exception(task.error);
    for (auto& p : task.result) set.insert(task.od, task.cls, std::move(p));
  }
  return set;
}

void write_path_dump(std::ostream& out, const Network& network, const PathSet& paths,
                     const LinkStates& links) {
  const auto old_flags = out.flags();
  const auto old_precision = out.precision(6);
  for (std::size_t od = 0; od < paths.od_count(); ++od)
    for (VehicleClass c : kVehicleClasses)
      for (const Path& p : paths.paths(od, c))
        out << od << ' ' << to_string(c) << ' ' << path_cost(p.links, links.cost(c)) << ' '
            << format_node_sequence(node_sequence(network, p)) << '\n';
  out.flags(old_flags);
  out.precision(old_precision);
}

PathSet read_path_dump(std::istream& in, const Network& network, const std::string& name) {
  PathSet set(network.od_count());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    std::istringstream is(line);
    std::size_t od = 0;
    std::string cls, cost, seq;
    if (!(is >> od >> cls >> cost >> seq)) throw ParseError(name, line_no, "expected 4 fields");
    if (od >= network.od_count()) throw ParseError(name, line_no, "OD index out of range");
    std::vector<NodeId> nodes;
    std::istringstream ns(seq);
    std::string tok;
    while (std::getline(ns, tok, '-')) {
      try {
        nodes.push_back(std::stoi(tok));
      } catch (const std::exception&) {
        throw ParseError(name, line_no, "malformed node sequence");
      }
    }
    try {
      const VehicleClass c = parse_vehicle_class(cls);
      Path p = path_from_nodes(network, nodes);
      const OdPair& w = network.od(od);
      if (!connects(network, p, w.origin, w.destination))
        throw Error("path does not connect its OD pair");
      set.insert(od, c, std::move(p));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(name, line_no, e.what());
    }
  }
  return set;
}

}  // namespace mixflow
