#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oracles.hpp"
#include "percoflow/percoflow.hpp"

using namespace percoflow;

namespace {

std::set<std::vector<std::int64_t>> as_set(const std::vector<LatticePoint>& pts, std::size_t d) {
  std::set<std::vector<std::int64_t>> out;
  for (const auto& p : pts) out.insert(std::vector<std::int64_t>(p.begin(), p.begin() + d));
  return out;
}

void expect_matches_oracle(const Domain& dom, std::int64_t n) {
  const DiscreteDomain dd = discretize(dom, n);
  const auto o = oracle::discretize(dom, n);
  const std::size_t d = dom.dim();
  EXPECT_EQ(as_set(dd.omega, d), o.omega) << "n=" << n;
  EXPECT_EQ(as_set(dd.gamma, d), o.gamma) << "n=" << n;
  EXPECT_EQ(as_set(dd.gamma1, d), o.gamma1) << "n=" << n;
  EXPECT_EQ(as_set(dd.gamma2, d), o.gamma2) << "n=" << n;
}

Domain random_box_domain(std::mt19937_64& rng, std::size_t d) {
  std::uniform_int_distribution<int> num(-6, 6), len(1, 9), den(1, 5);
  std::vector<Interval> bounds;
  for (std::size_t k = 0; k < d; ++k) {
    const Rational lo(num(rng), den(rng));
    bounds.push_back({lo, lo + Rational(len(rng), den(rng))});
  }
  BoxFaceTags tags(2 * d, FaceTag::neutral);
  std::uniform_int_distribution<std::size_t> axis(0, d - 1);
  const std::size_t a = axis(rng);
  tags[face_index(a, false)] = FaceTag::source;
  tags[face_index(a, true)] = FaceTag::sink;
  return make_box_domain(bounds, tags);
}

}  // namespace

TEST(Discretize, UnitSquareN4) {
  const DiscreteDomain dd = discretize(unit_cube_domain(2), 4);
  EXPECT_EQ(dd.omega.size(), 25u);
  EXPECT_EQ(dd.gamma.size(), 16u);
  EXPECT_EQ(dd.gamma1.size(), 5u);
  for (const auto& z : dd.gamma1) EXPECT_EQ(z[0], 0);
  EXPECT_EQ(dd.gamma2.size(), 5u);
  expect_matches_oracle(unit_cube_domain(2), 4);
}

TEST(Discretize, TinyDomainAgreesWithOracle) {
  const Domain tiny = make_box_domain({{Rational(0), Rational(1, 10)}, {Rational(0), Rational(1, 10)}},
                                      {FaceTag::source, FaceTag::sink, FaceTag::neutral,
                                       FaceTag::neutral});
  const DiscreteDomain dd = discretize(tiny, 1);
  // d∞(z, (0,1/10)²) < 1 keeps z ∈ {0,1}². Column 0 is within 1 of both
  // tagged faces; column 1 is at distance exactly 1 from the source face.
  EXPECT_EQ(dd.omega.size(), 4u);
  EXPECT_TRUE(dd.gamma1.empty());
  EXPECT_EQ(dd.gamma2.size(), 2u);
  expect_matches_oracle(tiny, 1);
}

TEST(Discretize, CubeCountsUpTo16) {
  for (std::size_t d : {2u, 3u}) {
    for (std::int64_t n = 1; n <= 16; ++n) {
      const DiscreteDomain dd = discretize(unit_cube_domain(d), n);
      EXPECT_EQ(dd.omega.size(), static_cast<std::size_t>(std::pow(n + 1, d)));
    }
  }
}

TEST(Discretize, RandomDomainsMatchOracleAndDisjoint) {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 100; ++t) {
    const Domain dom = random_box_domain(rng, 2);
    for (std::int64_t n = 2; n <= 8; ++n) {
      const DiscreteDomain dd = discretize(dom, n);
      std::set<LatticePoint> g1(dd.gamma1.begin(), dd.gamma1.end());
      for (const auto& z : dd.gamma2) EXPECT_FALSE(g1.count(z));
      if (t < 20) expect_matches_oracle(dom, n);
    }
  }
}

TEST(Discretize, MultiBoxMatchesOracle) {
  const Box a{{{Rational(0), Rational(1)}, {Rational(0), Rational(1, 2)}}};
  const Box b{{{Rational(0), Rational(1)}, {Rational(1, 2), Rational(5, 3)}}};
  const Box c{{{Rational(1), Rational(7, 4)}, {Rational(1, 3), Rational(1, 2)}}};
  const Domain dom(2, {a, b, c}, {{0, 0, false, FaceTag::source}, {2, 0, true, FaceTag::sink}});
  for (std::int64_t n = 1; n <= 12; ++n) expect_matches_oracle(dom, n);
  const Domain cube3 = unit_cube_domain(3, 1);
  for (std::int64_t n = 1; n <= 5; ++n) expect_matches_oracle(cube3, n);
}

TEST(Discretize, GammaHasOutsideNeighbour) {
  const DiscreteDomain dd = discretize(unit_cube_domain(3), 5);
  std::set<LatticePoint> omega(dd.omega.begin(), dd.omega.end());
  for (const auto& z : dd.gamma) {
    bool outside = false;
    for (std::size_t k = 0; k < 3; ++k) {
      outside = outside || !omega.count(shifted(z, k, 1)) || !omega.count(shifted(z, k, -1));
    }
    EXPECT_TRUE(outside);
    EXPECT_TRUE(omega.count(z));
  }
}

TEST(InducedGraph, Counts) {
  const LatticeGraph g = induced_graph(discretize(unit_cube_domain(2), 4));
  EXPECT_EQ(g.num_vertices(), 25u);
  EXPECT_EQ(g.num_edges(), 40u);
  const LatticeGraph single(2, 1, {LatticePoint{}});
  EXPECT_EQ(single.num_edges(), 0u);
  const LatticeGraph pair(2, 1, {LatticePoint{0, 0}, LatticePoint{0, 1}});
  EXPECT_EQ(pair.num_edges(), 1u);
}

TEST(InducedGraph, EdgesCanonicalAndInside) {
  const DiscreteDomain dd = discretize(unit_cube_domain(3), 4);
  const LatticeGraph g = induced_graph(dd);
  std::set<LatticePoint> omega(dd.omega.begin(), dd.omega.end());
  std::set<LatticeEdge> seen;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const LatticeEdge& edge = g.edges()[e];
    EXPECT_TRUE(omega.count(edge.lower));
    EXPECT_TRUE(omega.count(edge.upper()));
    EXPECT_TRUE(seen.insert(edge).second);
    EXPECT_EQ(canonical_edge(edge.upper(), edge.lower), edge);
    EXPECT_EQ(g.edge_index(edge), e);
    const auto [u, v] = g.graph().edges[e];
    EXPECT_EQ(g.vertices()[u], edge.lower);
    EXPECT_EQ(g.vertices()[v], edge.upper());
  }
  EXPECT_TRUE(std::is_sorted(g.vertices().begin(), g.vertices().end()));
}

TEST(OrientedEdgeTest, Canonical) {
  const LatticePoint x{1, 2}, y{1, 3};
  const OrientedEdge fwd(x, y), back(y, x);
  EXPECT_EQ(fwd.edge(), back.edge());
  EXPECT_TRUE(fwd.follows_axis());
  EXPECT_FALSE(back.follows_axis());
  EXPECT_THROW(OrientedEdge(x, LatticePoint{2, 3}), Error);
}

TEST(EdgeInRegion, BoxAndCylinder) {
  const Box open{{{Rational(0), Rational(1)}, {Rational(0), Rational(1)}}};
  // Along the boundary line y = 0: not inside the open box.
  EXPECT_FALSE(edge_in_region(LatticeEdge{{0, 0}, 0}, 2, 4, open));
  EXPECT_TRUE(edge_in_region(LatticeEdge{{0, 1}, 0}, 2, 4, open));
  // Crossing x = 1.
  EXPECT_FALSE(edge_in_region(LatticeEdge{{4, 1}, 0}, 2, 4, open));

  const Hyperrectangle a({0.5, 0.0}, UnitVector({0.0, 1.0}), {1.0});
  const Cylinder c(a, 0.5);
  // Boundary edge of the closed cylinder counts as inside.
  EXPECT_TRUE(edge_in_region(LatticeEdge{{0, -2}, 0}, 2, 4, c));
  EXPECT_FALSE(edge_in_region(LatticeEdge{{0, 2}, 1}, 2, 4, c));
  // One endpoint on the boundary, interior inside.
  const LatticeEdge e{{2, 1}, 1};
  EXPECT_TRUE(edge_in_region(e, 2, 4, c));
  // Sampled-point check at 64 interior points.
  const Vec p = position(e.lower, 2, 4), q = position(e.upper(), 2, 4);
  bool all = true;
  for (int i = 1; i <= 64; ++i) {
    const double t = i / 65.0;
    all = all && c.contains(Vec{p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])});
  }
  EXPECT_TRUE(all);
}
