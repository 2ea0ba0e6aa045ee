#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mixflow/costs.hpp"
#include "mixflow/network.hpp"

namespace mixflow {

/// A loop-free route, stored as dense link indices. Identity is the link
/// sequence; the cached length is a convenience.
struct Path {
  std::vector<std::size_t> links;
  double length = 0.0;

  bool operator==(const Path& other) const { return links == other.links; }
};

Path make_path(const Network& network, std::vector<std::size_t> links);

/// Builds a path from a node sequence. Throws Error if two consecutive nodes
/// are not joined by a link.
Path path_from_nodes(const Network& network, std::span<const NodeId> nodes);

/// Builds a path from its canonical key ("3-7-12", link ids).
Path path_from_key(const Network& network, std::string_view key);

std::vector<NodeId> node_sequence(const Network& network, const Path& path);
std::string format_node_sequence(std::span<const NodeId> nodes);

/// Canonical key: external link ids joined by '-'.
std::string path_key(const Network& network, const Path& path);

/// True if the links chain from `origin` to `destination` without
/// revisiting a node.
bool connects(const Network& network, const Path& path, NodeId origin, NodeId destination);

/// Per (OD, class) ordered collections of distinct paths.
class PathSet {
 public:
  PathSet() = default;
  explicit PathSet(std::size_t od_count) : groups_(2 * od_count) {}

  std::size_t od_count() const noexcept { return groups_.size() / 2; }
  std::size_t size() const noexcept;

  std::span<const Path> paths(std::size_t od, VehicleClass c) const { return group(od, c); }

  /// Appends `path` unless an identical one is already present.
  bool insert(std::size_t od, VehicleClass c, Path path);
  std::optional<std::size_t> find(std::size_t od, VehicleClass c, const Path& path) const;
  bool contains(std::size_t od, VehicleClass c, const Path& path) const {
    return find(od, c, path).has_value();
  }

  /// 1 if `link` lies on path number `path` of group (od, c). Throws
  /// std::out_of_range for an unknown path.
  int incidence(std::size_t od, VehicleClass c, std::size_t path, std::size_t link) const;

  bool operator==(const PathSet&) const = default;

 private:
  const std::vector<Path>& group(std::size_t od, VehicleClass c) const {
    return groups_.at(2 * od + class_index(c));
  }
  std::vector<std::vector<Path>> groups_;
};

/// Union by canonical key. Paths already in `current` keep their position;
/// new ones are appended in the order they appear in `generated`.
std::pair<PathSet, std::size_t> merge_path_sets(const PathSet& current, const PathSet& generated);

/// Up to `k` loop-free paths from `origin` to `destination` in nondecreasing
/// cost order (Yen). Equal costs are ordered by node sequence. Link costs
/// must be positive. Throws Error for unknown nodes or when no path exists.
std::vector<Path> yen_k_shortest(const Network& network, const Eigen::VectorXd& link_costs,
                                 NodeId origin, NodeId destination, std::size_t k);

/// k-shortest paths for every OD and class with positive demand, each class
/// using its own link costs. `threads == 0` picks the hardware default.
PathSet generate_paths(const Network& network, const LinkStates& links, std::size_t k,
                       unsigned threads = 1);

/// `od_index class cost node_sequence`, one path per line.
void write_path_dump(std::ostream& out, const Network& network, const PathSet& paths,
                     const LinkStates& links);
PathSet read_path_dump(std::istream& in, const Network& network, const std::string& name = "<paths>");

}  // namespace mixflow
