#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mixflow/params.hpp"
#include "mixflow/types.hpp"

namespace mixflow {

using NodeId = int;
using LinkId = int;

struct Link {
  LinkId id = 0;
  NodeId from_node = 0;
  NodeId to_node = 0;
  double length = 0.0;     // miles
  double free_time = 0.0;  // minutes
  double cap_rv = 0.0;     // veh/h with an all-RV stream
  double cap_av = 0.0;     // veh/h with an all-AV stream
};

struct OdPair {
  NodeId origin = 0;
  NodeId destination = 0;
  double demand_rv = 0.0;
  double demand_av = 0.0;
  /// Total demand as read from the trips file. Kept so that writing a
  /// network reproduces the input exactly regardless of the class split.
  double demand_total = 0.0;

  double demand(VehicleClass c) const noexcept {
    return c == VehicleClass::Regular ? demand_rv : demand_av;
  }
};

struct DemandSplit {
  double regular = 0.0;
  double autonomous = 0.0;
};

/// Splits total OD demand by the AV penetration rate. The regular share is
/// the remainder, so the two parts add back to `total` within one ulp.
DemandSplit split_demand(double total, double penetration);

/// Directed road network plus per-class OD demand. Immutable once built.
///
/// External node and link ids are kept as given; everything internal is
/// indexed densely from zero in input order.
class Network {
 public:
  Network() = default;
  Network(std::vector<NodeId> nodes, std::vector<Link> links, std::vector<OdPair> od_pairs);

  std::span<const NodeId> nodes() const noexcept { return nodes_; }
  std::span<const Link> links() const noexcept { return links_; }
  std::span<const OdPair> od_pairs() const noexcept { return od_pairs_; }

  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t link_count() const noexcept { return links_.size(); }
  std::size_t od_count() const noexcept { return od_pairs_.size(); }

  const Link& link(std::size_t index) const { return links_.at(index); }
  const OdPair& od(std::size_t index) const { return od_pairs_.at(index); }

  std::optional<std::size_t> node_index(NodeId id) const;
  std::optional<std::size_t> link_index(LinkId id) const;
  /// Dense index of the link from `from` to `to`, if any.
  std::optional<std::size_t> link_between(NodeId from, NodeId to) const;

  /// Dense link indices leaving the node at dense index `node`.
  std::span<const std::size_t> out_links(std::size_t node) const { return out_links_.at(node); }
  std::size_t tail(std::size_t link) const { return tail_[link]; }
  std::size_t head(std::size_t link) const { return head_[link]; }

  const Eigen::VectorXd& lengths() const noexcept { return lengths_; }
  const Eigen::VectorXd& free_times() const noexcept { return free_times_; }
  const Eigen::VectorXd& capacities_rv() const noexcept { return cap_rv_; }
  const Eigen::VectorXd& capacities_av() const noexcept { return cap_av_; }

  /// Same topology with a different demand table.
  Network with_demand(std::vector<OdPair> od_pairs) const;

  /// True if some directed path leads from `origin` to `destination`.
  bool reachable(NodeId origin, NodeId destination) const;

 private:
  std::vector<NodeId> nodes_;
  std::vector<Link> links_;
  std::vector<OdPair> od_pairs_;

  std::unordered_map<NodeId, std::size_t> node_lookup_;
  std::unordered_map<LinkId, std::size_t> link_lookup_;
  std::unordered_map<std::uint64_t, std::size_t> pair_lookup_;
  std::vector<std::vector<std::size_t>> out_links_;
  // Endpoints as dense node indices; npos-like max() for unknown nodes.
  std::vector<std::size_t> tail_;
  std::vector<std::size_t> head_;

  Eigen::VectorXd lengths_;
  Eigen::VectorXd free_times_;
  Eigen::VectorXd cap_rv_;
  Eigen::VectorXd cap_av_;
};

struct Violation {
  std::string entity;  // e.g. "link 7", "od 3->12"
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const noexcept { return violations.empty(); }
  std::string summary() const;
};

/// Checks every Network invariant and lists each violation. Never throws.
ValidationReport validate(const Network& network);

// TNTP-compatible text formats.

struct NetFileData {
  std::size_t node_count = 0;
  std::vector<Link> links;
};

struct TripRecord {
  NodeId origin = 0;
  NodeId destination = 0;
  double total = 0.0;
};

/// Parses a net file. Links without a `capacity_av` column get
/// cap_av = av_capacity_ratio * cap_rv.
NetFileData read_net_file(std::istream& in, double av_capacity_ratio,
                          const std::string& name = "<net>");
/// Parses a trips file; zero-demand and diagonal entries are dropped.
std::vector<TripRecord> read_trips_file(std::istream& in, const std::string& name = "<trips>");

/// Loads and validates a network. Throws ParseError or ValidationError.
Network load_network(const std::filesystem::path& net_file,
                     const std::filesystem::path& trips_file, const ClassParams& params);

/// Builds a validated network from parsed records.
Network make_network(const NetFileData& net, std::span<const TripRecord> trips, double penetration);

void write_net_file(std::ostream& out, const Network& network);
void write_trips_file(std::ostream& out, const Network& network);

/// Draws `pair_count` connected OD pairs uniformly at random (without
/// replacement) with total demand uniform in [low, high], split by `penetration`.
std::vector<OdPair> synthesize_demand(const Network& network, std::size_t pair_count, double low,
                                      double high, double penetration, std::uint64_t seed);

/// Same draw of totals over a fixed list of OD pairs.
std::vector<OdPair> synthesize_demand(std::span<const std::pair<NodeId, NodeId>> pairs, double low,
                                      double high, double penetration, std::uint64_t seed);

/// Shortest decimal representation that parses back to the same double.
std::string format_shortest(double value);

}  // namespace mixflow
