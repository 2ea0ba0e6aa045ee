#include "mixflow/costs.hpp"

#include <string>
#include <unordered_map>

namespace mixflow {

void ClassParams::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("class parameters: " + what); };
  if (!(theta > 0.0)) fail("theta must be positive");
  if (!(nesting > 0.0 && nesting <= 1.0)) fail("nesting coefficient must lie in (0, 1]");
  if (!(vot_av >= 0.0 && vot_rv >= vot_av)) fail("require vot_rv >= vot_av >= 0");
  if (!(fuel_price >= 0.0)) fail("fuel price must be nonnegative");
  if (!(mu_rv > 0.0 && mu_av > 0.0)) fail("flow swapping degrees must be positive");
  if (!(penetration >= 0.0 && penetration <= 1.0)) fail("penetration must lie in [0, 1]");
  if (!(av_capacity_ratio > 0.0)) fail("AV capacity ratio must be positive");
  if (!(flow_floor > 0.0)) fail("flow floor must be positive");
}

LinkStates evaluate_links(const Network& network, const Eigen::VectorXd& x_rv,
                          const Eigen::VectorXd& x_av, const ClassParams& params) {
  const auto n = static_cast<Eigen::Index>(network.link_count());
  LinkStates s;
  s.x_rv = x_rv;
  s.x_av = x_av;
  s.capacity.resize(n);
  s.time.resize(n);
  s.fuel.resize(n);
  const auto& cap_rv = network.capacities_rv();
  const auto& cap_av = network.capacities_av();
  const auto& t0 = network.free_times();
  const auto& len = network.lengths();
  for (Eigen::Index a = 0; a < n; ++a) {
    s.capacity(a) = mixed_capacity(x_rv(a), x_av(a), cap_rv(a), cap_av(a));
    s.time(a) = link_travel_time(x_rv(a), x_av(a), t0(a), s.capacity(a));
    s.fuel(a) = fuel_cost(len(a), s.time(a));
  }
  const Eigen::VectorXd fuel_dollars = params.fuel_price * s.fuel;
  s.cost_rv = params.vot_rv * s.time + fuel_dollars;
  s.cost_av = params.vot_av * s.time + fuel_dollars;
  return s;
}

LinkStates free_flow_links(const Network& network, const ClassParams& params) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(network.link_count()));
  return evaluate_links(network, zero, zero, params);
}

OverlapStructure build_overlap(const Network& network,
                               std::span<const std::vector<std::size_t>> path_links) {
  OverlapStructure o;
  o.path_nests.resize(path_links.size());
  std::unordered_map<std::size_t, std::size_t> nest_of_link;
  const auto& len = network.lengths();
  for (std::size_t k = 0; k < path_links.size(); ++k) {
    double path_length = 0.0;
    for (std::size_t a : path_links[k]) path_length += len(static_cast<Eigen::Index>(a));
    for (std::size_t a : path_links[k]) {
      auto [it, inserted] = nest_of_link.try_emplace(a, o.nest_links.size());
      if (inserted) {
        o.nest_links.push_back(a);
        o.nest_paths.emplace_back();
      }
      const double alpha = overlap_alpha(len(static_cast<Eigen::Index>(a)), path_length, true);
      o.nest_paths[it->second].push_back({k, alpha});
      o.path_nests[k].push_back({it->second, alpha});
    }
  }
  return o;
}

}  // namespace mixflow
