#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "mixflow/costs.hpp"

namespace mixflow {
namespace {

using Big = boost::multiprecision::cpp_bin_float_50;

// Direct transliteration of the commonality term in 50-digit arithmetic:
//   H_k = ln sum_b alpha_bk^(1/u) (sum_l alpha_bl^(1/u) exp(-theta c_l / u))^(u - 1)
Big naive_commonality(const Network& net, const std::vector<std::vector<std::size_t>>& paths,
                      const std::vector<double>& cost, double theta, double u, std::size_t k) {
  auto alpha = [&](std::size_t b, std::size_t p) -> Big {
    Big len = 0;
    bool on = false;
    for (std::size_t a : paths[p]) {
      len += net.link(a).length;
      on = on || a == b;
    }
    return on ? Big(net.link(b).length) / len : Big(0);
  };
  const Big inv_u = Big(1) / Big(u);
  Big outer = 0;
  for (std::size_t b = 0; b < net.link_count(); ++b) {
    const Big abk = alpha(b, k);
    if (abk == 0) continue;
    Big inner = 0;
    for (std::size_t l = 0; l < paths.size(); ++l) {
      const Big abl = alpha(b, l);
      if (abl == 0) continue;
      inner += pow(abl, inv_u) * exp(-Big(theta) * Big(cost[l]) / Big(u));
    }
    outer += pow(abk, inv_u) * pow(inner, Big(u) - 1);
  }
  return log(outer);
}

// 1 -> 4 by a two-link path and a three-link path sharing link 1-2, plus a
// disjoint two-link path through node 5. Every link has unit length.
Network overlap_network() {
  std::vector<Link> links{{1, 1, 2, 1, 1, 1000, 2000}, {2, 2, 4, 1, 1, 1000, 2000},
                          {3, 2, 3, 1, 1, 1000, 2000}, {4, 3, 4, 1, 1, 1000, 2000},
                          {5, 1, 5, 1, 1, 1000, 2000}, {6, 5, 4, 1, 1, 1000, 2000}};
  return Network({1, 2, 3, 4, 5}, links, {});
}
const std::vector<std::vector<std::size_t>> kOverlapPaths{{0, 1}, {0, 2, 3}, {4, 5}};

TEST(MixedCapacity, Examples) {
  EXPECT_DOUBLE_EQ(mixed_capacity(300.0, 0.0, 2000.0, 4000.0), 2000.0);
  EXPECT_DOUBLE_EQ(mixed_capacity(123.0, 456.0, 1500.0, 1500.0), 1500.0);
  EXPECT_NEAR(mixed_capacity(300.0, 300.0, 2000.0, 4000.0), 2666.67, 0.01);
  EXPECT_DOUBLE_EQ(mixed_capacity(0.0, 0.0, 2000.0, 4000.0), 2000.0);
}

TEST(MixedCapacity, BracketedByClassCapacities) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> flow(0.0, 5000.0), cap(100.0, 10000.0);
  for (int i = 0; i < 20000; ++i) {
    const double qr = cap(rng), qa = cap(rng);
    const double q = mixed_capacity(flow(rng), flow(rng), qr, qa);
    EXPECT_GE(q, std::min(qr, qa) * (1 - 1e-15));
    EXPECT_LE(q, std::max(qr, qa) * (1 + 1e-15));
  }
}

TEST(TravelTime, Examples) {
  EXPECT_EQ(link_travel_time(0.0, 0.0, 10.0, 1000.0), 10.0);
  EXPECT_DOUBLE_EQ(link_travel_time(600.0, 400.0, 10.0, 1000.0), 11.5);
  EXPECT_DOUBLE_EQ(link_travel_time(1200.0, 800.0, 10.0, 1000.0), 34.0);
}

TEST(TravelTime, MonotoneInEachClass) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> flow(0.0, 3000.0), step(0.0, 100.0);
  for (int i = 0; i < 5000; ++i) {
    const double xr = flow(rng), xa = flow(rng), d = step(rng);
    EXPECT_LE(link_travel_time(xr, xa, 5.0, 1200.0), link_travel_time(xr + d, xa, 5.0, 1200.0));
    EXPECT_LE(link_travel_time(xr, xa, 5.0, 1200.0), link_travel_time(xr, xa + d, 5.0, 1200.0));
    // Equal class capacities: the composite time only sees total flow.
    const double q0 = mixed_capacity(xr, xa, 900.0, 900.0);
    const double q1 = mixed_capacity(xr + d, xa, 900.0, 900.0);
    EXPECT_LE(link_travel_time(xr, xa, 5.0, q0), link_travel_time(xr + d, xa, 5.0, q1));
  }
}

TEST(FuelCost, Examples) {
  // 1 mph: one mile takes an hour.
  EXPECT_NEAR(fuel_cost(1.0, 60.0), 0.4001, 1e-4);
  EXPECT_NEAR(fuel_cost(3.0, 180.0), 3 * 14.58 / 36.44, 1e-12);
  EXPECT_NEAR(fuel_cost(1.0, 2.0), 0.0478, 0.0005);
  // Shrinking length at a fixed 30 mph.
  EXPECT_LT(fuel_cost(1e-9, 2e-9), 1e-9);
}

TEST(GeneralizedCost, Examples) {
  EXPECT_EQ(link_generalized_cost(10.0, 0.05, 0.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(link_generalized_cost(10.0, 0.05, 1.0, 5.5), 10.275);
  EXPECT_GT(link_generalized_cost(10.0, 0.05, 1.0, 5.5), link_generalized_cost(10.0, 0.05, 0.5, 5.5));
}

TEST(EvaluateLinks, MatchesScalarFunctions) {
  const Network net = overlap_network();
  ClassParams p;
  Eigen::VectorXd xr(6), xa(6);
  xr << 100, 200, 300, 0, 50, 900;
  xa << 0, 300, 100, 0, 500, 900;
  const LinkStates s = evaluate_links(net, xr, xa, p);
  for (Eigen::Index a = 0; a < 6; ++a) {
    const Link& l = net.link(static_cast<std::size_t>(a));
    const double q = mixed_capacity(xr(a), xa(a), l.cap_rv, l.cap_av);
    const double t = link_travel_time(xr(a), xa(a), l.free_time, q);
    const double e = fuel_cost(l.length, t);
    EXPECT_DOUBLE_EQ(s.capacity(a), q);
    EXPECT_DOUBLE_EQ(s.time(a), t);
    EXPECT_DOUBLE_EQ(s.cost_rv(a), t * p.vot_rv + p.fuel_price * e);
    EXPECT_DOUBLE_EQ(s.cost_av(a), t * p.vot_av + p.fuel_price * e);
  }
  const LinkStates f = free_flow_links(net, p);
  EXPECT_TRUE(f.time.isApprox(net.free_times()));
}

TEST(PathCost, Examples) {
  Eigen::VectorXd c(3);
  c << 3, 4, 9;
  EXPECT_EQ(path_cost(std::vector<std::size_t>{}, c), 0.0);
  EXPECT_EQ(path_cost(std::vector<std::size_t>{2}, c), 9.0);
  EXPECT_EQ(path_cost(std::vector<std::size_t>{0, 1}, c), 7.0);
}

TEST(OverlapAlpha, Examples) {
  EXPECT_EQ(overlap_alpha(2.0, 5.0, false), 0.0);
  EXPECT_EQ(overlap_alpha(3.0, 3.0, true), 1.0);
  EXPECT_DOUBLE_EQ(overlap_alpha(2.0, 5.0, true), 0.4);
}

TEST(Overlap, WeightsOfEveryPathSumToOne) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> len(0.01, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Link> links;
    for (int i = 1; i <= 6; ++i) links.push_back({i, i, i + 1, len(rng), 1, 100, 200});
    const Network net({1, 2, 3, 4, 5, 6, 7}, links, {});
    const std::vector<std::vector<std::size_t>> paths{{0, 1, 2, 3, 4, 5}, {2}, {1, 2, 3}};
    const OverlapStructure o = build_overlap(net, paths);
    for (const auto& nests : o.path_nests) {
      double sum = 0.0;
      for (const auto& m : nests) sum += m.alpha;
      EXPECT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Commonality, VanishesAtUnitNesting) {
  const Network net = overlap_network();
  const OverlapStructure o = build_overlap(net, kOverlapPaths);
  const Eigen::Vector3d c(3.0, 7.0, 1.0);
  const Eigen::VectorXd h = cnl_commonality<double>(o, c, 0.1, 1.0);
  EXPECT_TRUE((h.array() == 0.0).all());
}

TEST(Commonality, DisjointSymmetricPathsAgree) {
  const Network net({1, 2, 3, 4}, {{1, 1, 2, 1, 1, 1, 2}, {2, 2, 4, 1, 1, 1, 2}, {3, 1, 3, 1, 1, 1, 2}, {4, 3, 4, 1, 1, 1, 2}}, {});
  const std::vector<std::vector<std::size_t>> paths{{0, 1}, {2, 3}};
  const Eigen::Vector2d c(4.0, 4.0);
  const Eigen::VectorXd h = cnl_commonality<double>(build_overlap(net, paths), c, 0.3, 0.5);
  EXPECT_EQ(h(0), h(1));
}

TEST(Commonality, MatchesExtendedPrecisionOracle) {
  const Network net = overlap_network();
  const OverlapStructure o = build_overlap(net, kOverlapPaths);
  const std::vector<double> cost{1.0, 1.0, 1.0};
  const Eigen::Vector3d c(1.0, 1.0, 1.0);
  const Eigen::VectorXd h = cnl_commonality<double>(o, c, 1.0, 0.5);
  for (std::size_t k = 0; k < 3; ++k) {
    const double want = static_cast<double>(naive_commonality(net, kOverlapPaths, cost, 1.0, 0.5, k));
    EXPECT_NEAR(h(static_cast<Eigen::Index>(k)), want, 1e-12 * std::max(1.0, std::abs(want)));
    EXPECT_DOUBLE_EQ(cnl_commonality<double>(k, o, c, 1.0, 0.5), h(static_cast<Eigen::Index>(k)));
  }
}

TEST(Commonality, LogDomainMatchesNaiveFormOnRandomInstances) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> cost(0.5, 60.0), theta(0.01, 1.0), nest(0.05, 1.0);
  std::uniform_real_distribution<double> len(0.2, 4.0);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Link> links{{1, 1, 2, len(rng), 1, 1, 2}, {2, 2, 4, len(rng), 1, 1, 2},
                            {3, 2, 3, len(rng), 1, 1, 2}, {4, 3, 4, len(rng), 1, 1, 2},
                            {5, 1, 5, len(rng), 1, 1, 2}, {6, 5, 4, len(rng), 1, 1, 2},
                            {7, 1, 3, len(rng), 1, 1, 2}};
    const Network net({1, 2, 3, 4, 5}, links, {});
    const std::vector<std::vector<std::size_t>> paths{{0, 1}, {0, 2, 3}, {4, 5}, {6, 3}};
    std::vector<double> cv(paths.size());
    Eigen::VectorXd c(4);
    for (int k = 0; k < 4; ++k) c(k) = cv[static_cast<std::size_t>(k)] = cost(rng);
    const double th = theta(rng), u = nest(rng);
    const Eigen::VectorXd h = cnl_commonality<double>(build_overlap(net, paths), c, th, u);
    for (std::size_t k = 0; k < paths.size(); ++k) {
      const double want = static_cast<double>(naive_commonality(net, paths, cv, th, u, k));
      EXPECT_NEAR(h(static_cast<Eigen::Index>(k)), want, 1e-9 * std::max(1.0, std::abs(want)))
          << "trial " << trial << " theta " << th << " u " << u;
    }
  }
}

TEST(Commonality, StaysFiniteForLargeCosts) {
  const Network net = overlap_network();
  const Eigen::Vector3d c(5e4, 5.1e4, 5e4);
  const Eigen::VectorXd h = cnl_commonality<double>(build_overlap(net, kOverlapPaths), c, 1.0, 0.1);
  EXPECT_TRUE(h.allFinite());
}

TEST(PerceivedCost, Examples) {
  ClassParams p;
  p.nesting = 1.0;
  EXPECT_DOUBLE_EQ(perceived_cost_rv(250.0, 250.0, 12.5, 0.0, p), 12.5);
  p.nesting = 0.5;
  EXPECT_LT(perceived_cost_rv(50.0, 250.0, 12.5, 0.3, p), 12.5 - (0.5 / 0.1) * 0.3);
  EXPECT_EQ(perceived_cost_av(0.0), 0.0);
  EXPECT_EQ(perceived_cost_av(17.3), 17.3);
}

TEST(PerceivedCost, MultinomialLogitReductionAtUnitNesting) {
  ClassParams p;
  p.nesting = 1.0;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.01, 100.0);
  for (int i = 0; i < 1000; ++i) {
    const double f = u(rng), q = f + u(rng), c = u(rng);
    EXPECT_DOUBLE_EQ(perceived_cost_rv(f, q, c, 0.0, p), c + (1.0 / p.theta) * std::log(f / q));
  }
}

TEST(PerceivedCost, FlowFloorKeepsLogFinite) {
  ClassParams p;
  const double c = perceived_cost_rv(0.0, 100.0, 5.0, 0.0, p);
  EXPECT_TRUE(std::isfinite(c));
  EXPECT_DOUBLE_EQ(c, 5.0 + 5.0 * std::log(1e-9 / 100.0));
}

TEST(PerceivedCost, AvIsBitExactIdentity) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double c = u(rng);
    EXPECT_EQ(perceived_cost_av(c), c);
  }
}

TEST(ClassParams, Validation) {
  EXPECT_NO_THROW(ClassParams{}.validate());
  ClassParams p;
  p.nesting = 0.0;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.nesting = 1.2;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.theta = -1;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.penetration = 2;
  EXPECT_THROW(p.validate(), ValidationError);
}

}  // namespace
}  // namespace mixflow
