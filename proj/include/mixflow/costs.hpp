#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "mixflow/network.hpp"
#include "mixflow/params.hpp"

namespace mixflow {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Link level

/// Capacity of a link carrying a mix of RV and AV flow: the flow-share
/// weighted harmonic mean of the two pure-class capacities. An empty link
/// is treated as all-RV.
template <typename Scalar>
Scalar mixed_capacity(Scalar x_rv, Scalar x_av, Scalar cap_rv, Scalar cap_av) {
  const Scalar total = x_rv + x_av;
  if (!(total > Scalar(0))) return cap_rv;
  const Scalar share_rv = x_rv / total;
  const Scalar share_av = x_av / total;
  return Scalar(1) / (share_rv / cap_rv + share_av / cap_av);
}

/// BPR travel time in minutes.
template <typename Scalar>
Scalar link_travel_time(Scalar x_rv, Scalar x_av, Scalar free_time, Scalar capacity) {
  const Scalar ratio = (x_rv + x_av) / capacity;
  const Scalar sq = ratio * ratio;
  return free_time * (Scalar(1) + Scalar(0.15) * sq * sq);
}

/// Fuel burnt on a link, in gallons. `time` is in minutes; the empirical
/// curve is calibrated on speeds in miles per hour.
template <typename Scalar>
Scalar fuel_cost(Scalar length, Scalar time) {
  using std::pow;
  const Scalar speed_mph = length / (time / Scalar(60));
  return length / Scalar(36.44) * (Scalar(14.58) * pow(speed_mph, Scalar(-0.625)));
}

/// Generalized cost in dollars for a class with value of time `vot`.
template <typename Scalar>
Scalar link_generalized_cost(Scalar time, Scalar fuel, Scalar vot, Scalar fuel_price) {
  return time * vot + fuel_price * fuel;
}

/// Per-link quantities for one loading of the network, stored column-wise.
struct LinkStates {
  Eigen::VectorXd x_rv;
  Eigen::VectorXd x_av;
  Eigen::VectorXd capacity;
  Eigen::VectorXd time;
  Eigen::VectorXd fuel;
  Eigen::VectorXd cost_rv;
  Eigen::VectorXd cost_av;

  const Eigen::VectorXd& cost(VehicleClass c) const {
    return c == VehicleClass::Regular ? cost_rv : cost_av;
  }
};

/// Evaluates mixed capacity, time, fuel and both class costs on every link.
LinkStates evaluate_links(const Network& network, const Eigen::VectorXd& x_rv,
                          const Eigen::VectorXd& x_av, const ClassParams& params);

/// Link costs with no flow on the network.
LinkStates free_flow_links(const Network& network, const ClassParams& params);

// ---------------------------------------------------------------------------
// Path level

/// Sum of member-link costs. `links` holds dense link indices.
template <typename Derived>
typename Derived::Scalar path_cost(std::span<const std::size_t> links,
                                   const Eigen::MatrixBase<Derived>& link_costs) {
  typename Derived::Scalar sum(0);
  for (std::size_t a : links) sum += link_costs(static_cast<Eigen::Index>(a));
  return sum;
}

/// Length share of link `link_length` in a path of length `path_length`;
/// zero when the link is not on the path.
inline double overlap_alpha(double link_length, double path_length, bool on_path) {
  return on_path ? link_length / path_length : 0.0;
}

/// Sparse nest structure of one OD's RV path set for the cross-nested logit:
/// each link used by at least one path is a nest, and each path belongs to
/// the nests of its links with allocation alpha = link length / path length.
struct OverlapStructure {
  struct Member {
    std::size_t index;  // path index within the group, or nest index
    double alpha;
  };
  std::vector<std::size_t> nest_links;             // dense link index per nest
  std::vector<std::vector<Member>> nest_paths;     // per nest: paths using it
  std::vector<std::vector<Member>> path_nests;     // per path: nests it uses

  std::size_t path_count() const noexcept { return path_nests.size(); }
};

/// Builds the nest structure for paths given as dense link-index sequences.
OverlapStructure build_overlap(const Network& network,
                               std::span<const std::vector<std::size_t>> path_links);

namespace detail {

template <typename Scalar>
Scalar log_sum_exp(std::span<const Scalar> values) {
  using std::exp;
  using std::log;
  if (values.empty()) return -std::numeric_limits<Scalar>::infinity();
  const Scalar peak = *std::max_element(values.begin(), values.end());
  if (!(peak > -std::numeric_limits<Scalar>::infinity())) return peak;
  Scalar sum(0);
  for (const Scalar& v : values) sum += exp(v - peak);
  return peak + log(sum);
}

}  // namespace detail

/// Commonality term H of every path in an OD's RV path set, evaluated in the
/// log domain so that large costs neither overflow nor underflow:
///
///   log S_b = LSE_l (ln alpha_bl - theta c_l) / u
///   H_k     = LSE_b [ ln(alpha_bk) / u + (u - 1) log S_b ]
///
/// With u = 1 the nests collapse and H is identically zero.
template <typename Scalar>
VectorX<Scalar> cnl_commonality(const OverlapStructure& overlap,
                                const Eigen::Ref<const VectorX<Scalar>>& costs, Scalar theta,
                                Scalar nesting) {
  using std::log;
  const auto n_paths = static_cast<Eigen::Index>(overlap.path_count());
  VectorX<Scalar> h = VectorX<Scalar>::Zero(n_paths);
  if (nesting == Scalar(1)) return h;

  const Scalar inv_u = Scalar(1) / nesting;
  std::vector<Scalar> log_s(overlap.nest_paths.size());
  std::vector<Scalar> scratch;
  for (std::size_t b = 0; b < overlap.nest_paths.size(); ++b) {
    scratch.clear();
    for (const auto& m : overlap.nest_paths[b])
      scratch.push_back(inv_u * (log(Scalar(m.alpha)) -
                                 theta * costs(static_cast<Eigen::Index>(m.index))));
    log_s[b] = detail::log_sum_exp<Scalar>(scratch);
  }
  for (Eigen::Index k = 0; k < n_paths; ++k) {
    scratch.clear();
    for (const auto& m : overlap.path_nests[static_cast<std::size_t>(k)])
      scratch.push_back(inv_u * log(Scalar(m.alpha)) + (nesting - Scalar(1)) * log_s[m.index]);
    h(k) = detail::log_sum_exp<Scalar>(scratch);
  }
  return h;
}

/// H of the single path `k` of the set.
template <typename Scalar>
Scalar cnl_commonality(std::size_t k, const OverlapStructure& overlap,
                       const Eigen::Ref<const VectorX<Scalar>>& costs, Scalar theta,
                       Scalar nesting) {
  return cnl_commonality<Scalar>(overlap, costs, theta, nesting)(static_cast<Eigen::Index>(k));
}

/// Perceived cost of an RV path under the cross-nested logit equilibrium.
/// The path flow is floored at params.flow_floor inside the logarithm.
inline double perceived_cost_rv(double flow, double demand, double cost, double commonality,
                                const ClassParams& params) {
  const double scale = params.nesting / params.theta;
  const double f = std::max(flow, params.flow_floor);
  return cost - scale * commonality + scale * std::log(f / demand);
}

/// AVs perceive the observed cost.
inline double perceived_cost_av(double cost) { return cost; }

}  // namespace mixflow
