#include <gtest/gtest.h>

#include "oracles.hpp"
#include "percoflow/percoflow.hpp"

using namespace percoflow;

namespace {

const Domain& square() {
  static const Domain d = unit_cube_domain(2);
  return d;
}

}  // namespace

TEST(RunPhi, ConstantSquareExact) {
  for (std::int64_t n : {2, 4, 8, 16}) {
    const PhiRun run = run_phi(square(), CapacityLaw::constant(1), n, 1);
    EXPECT_EQ(run.value, (n + 1) * kQuantScale);
    EXPECT_EQ(run.cut_size, static_cast<std::size_t>(n + 1));
    EXPECT_FALSE(run.structural_zero);
    EXPECT_EQ(run.flow.cut.capacity, run.value);
  }
  EXPECT_EQ(run_phi(square(), CapacityLaw::constant(0), 8, 1).value, 0);
}

TEST(RunPhi, CubeConstantLaw) {
  const PhiRun run = run_phi(unit_cube_domain(3), CapacityLaw::constant(1), 4, 1);
  EXPECT_EQ(run.value, 25 * kQuantScale);
}

TEST(RunPhi, MatchesExhaustiveCutOnTinyMesh) {
  const PhiInstance inst = make_phi_instance(square(), 2);
  for (std::uint64_t s = 0; s < 30; ++s) {
    const PhiRun run = run_phi(inst, CapacityLaw::uniform_int(0, 3), s);
    EXPECT_EQ(run.value, oracle::min_cut(inst.graph.graph(), inst.sources, inst.sinks, run.caps));
  }
}

TEST(SourceCluster, ConstantSquareColumn) {
  const PhiInstance inst = make_phi_instance(square(), 8);
  const PhiRun run = run_phi(inst, CapacityLaw::constant(1), 1);
  const ClusterSummary c = source_cluster(inst, run, square());
  EXPECT_EQ(c.vertices.size(), 9u);
  EXPECT_TRUE(c.boundary_is_cut);
  EXPECT_DOUBLE_EQ(c.perimeter, 9.0 / 8.0);
  EXPECT_EQ(c.volume, Rational(1, 16));
}

TEST(SourceCluster, BoundaryEqualsCutsetAndDuality) {
  const PhiInstance inst = make_phi_instance(square(), 8);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const PhiRun run = run_phi(inst, CapacityLaw::bernoulli(0.6), s);
    const ClusterSummary c = source_cluster(inst, run, square());
    EXPECT_TRUE(c.boundary_is_cut) << s;
    EXPECT_EQ(run.value, cut_capacity(run.flow.cut.edges, run.caps));
    EXPECT_DOUBLE_EQ(c.perimeter, static_cast<double>(run.cut_size) / 8.0);
    EXPECT_GE(c.volume, Rational(0));
    EXPECT_LE(c.volume, Rational(1));
    EXPECT_TRUE(verify_stream(run.flow.stream, inst.graph.graph(), inst.sources, inst.sinks, run.caps,
                              run.value));
  }
}

TEST(PhiSamples, MatchSingleRunsAndWorkerCounts) {
  const PhiInstance inst = make_phi_instance(square(), 6);
  const auto law = CapacityLaw::exponential(1.0);
  const auto a = phi_samples(inst, law, 9, 50, 1);
  const auto b = phi_samples(inst, law, 9, 50, 3);
  for (std::size_t r = 0; r < a.size(); ++r) {
    EXPECT_EQ(a[r].value, b[r].value);
    EXPECT_EQ(a[r].cut_size, b[r].cut_size);
    const PhiRun run = run_phi(inst, law, derive_seed(9, {6, r}));
    EXPECT_EQ(a[r].value, run.value);
    EXPECT_EQ(a[r].cut_size, run.cut_size);
  }
}

TEST(Rate, ZeroLambdaWithoutAtomHasNoHits) {
  RateOptions opt{{4, 6}, 200, 3, 2};
  const auto est = estimate_rate(square(), CapacityLaw::constant(1), 0.0, opt);
  for (const auto& p : est.points) {
    EXPECT_EQ(p.hits, 0u);
    EXPECT_EQ(p.p_hat, 0.0);
    EXPECT_FALSE(p.rate);
  }
  EXPECT_FALSE(est.verdict.all_positive);
}

TEST(Rate, ThresholdIsInclusive) {
  // φ_4 = 5 exactly; λ n^{d-1} = 5 counts as a hit, anything smaller does not.
  const PhiSample s{5 * kQuantScale, 5};
  const std::vector<PhiSample> xs(10, s);
  EXPECT_EQ(rate_point(4, 2, xs, 1.25).hits, 10u);
  EXPECT_EQ(rate_point(4, 2, xs, 1.2499).hits, 0u);
  const auto full = rate_point(4, 2, xs, 1.25);
  EXPECT_EQ(full.rate, 0.0);
}

TEST(Rate, VerdictLogic) {
  auto pt = [](std::int64_t n, std::size_t hits, std::size_t reps) {
    RatePoint p;
    p.n = n;
    p.replicas = reps;
    p.hits = hits;
    p.p_hat = static_cast<double>(hits) / static_cast<double>(reps);
    p.wilson = wilson_interval(hits, reps);
    if (hits) p.rate = -std::log(p.p_hat) / static_cast<double>(n);
    return p;
  };
  const std::vector<RatePoint> rising{pt(4, 1000, 10000), pt(8, 50, 10000), pt(12, 0, 10000)};
  const auto v = rate_verdict(rising, 2);
  EXPECT_TRUE(v.all_positive);
  EXPECT_TRUE(v.monotone_beyond_noise);
  EXPECT_EQ(v.points_with_hits, 2u);
  const std::vector<RatePoint> falling{pt(4, 10, 10000), pt(8, 5000, 10000)};
  EXPECT_FALSE(rate_verdict(falling, 2).monotone_beyond_noise);
}

TEST(Rate, DeterministicAcrossWorkers) {
  RateOptions opt{{4, 6}, 300, 11, 1};
  const auto a = estimate_rate(square(), CapacityLaw::bernoulli(0.6), 0.3, opt);
  opt.workers = 4;
  const auto b = estimate_rate(square(), CapacityLaw::bernoulli(0.6), 0.3, opt);
  ASSERT_EQ(a.points.size(), b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    EXPECT_EQ(a.points[i].hits, b.points[i].hits);
    EXPECT_EQ(a.points[i].rate, b.points[i].rate);
  }
}

TEST(FlatLayer, EmpiricalZeroProbabilityAboveBound) {
  const double p = 0.6;
  const std::size_t reps = 20000;
  RateOptions opt{{4}, reps, 17, 2};
  const auto est = estimate_rate(square(), CapacityLaw::bernoulli(p), 0.0, opt);
  const double bound = flat_layer_zero_bound(p, 4, 2);
  EXPECT_NEAR(bound, 1 - std::pow(1 - std::pow(0.4, 5), 4), 1e-15);
  const double se = std::sqrt(bound * (1 - bound) / static_cast<double>(reps));
  EXPECT_GE(est.points[0].p_hat, bound - 3 * se);
  EXPECT_LE(est.points[0].wilson.lo, est.points[0].p_hat);
}

TEST(Cutset, ConstantSquare) {
  CutsetOptions opt{{2, 4, 8}, {1.0, 1.5, 2.0}, 20, 1, 2};
  const auto s = cutset_tail(square(), CapacityLaw::constant(1), opt);
  for (const auto& m : s.per_mesh) {
    const double expect = 1.0 + 1.0 / static_cast<double>(m.n);
    EXPECT_DOUBLE_EQ(m.q50, expect);
    EXPECT_DOUBLE_EQ(m.q99, expect);
    EXPECT_EQ(m.tails[0], 1.0);
    EXPECT_EQ(m.tails[2], 0.0);
  }
  EXPECT_DOUBLE_EQ(s.beta_star, 3.0);
  EXPECT_TRUE(s.tails_monotone_in_beta);
  EXPECT_TRUE(s.tail_shrinks);
}

TEST(Cutset, TailsNonincreasingInBeta) {
  CutsetOptions opt{{4, 6}, {2.0, 0.5, 1.0, 1.5, 3.0}, 400, 5, 2};
  const auto s = cutset_tail(square(), CapacityLaw::bernoulli(0.6), opt);
  EXPECT_TRUE(std::is_sorted(s.betas.begin(), s.betas.end()));
  for (const auto& m : s.per_mesh) {
    EXPECT_LE(m.q50, m.q90);
    EXPECT_LE(m.q90, m.q99);
    for (std::size_t i = 1; i < m.tails.size(); ++i) EXPECT_LE(m.tails[i], m.tails[i - 1]);
  }
  EXPECT_TRUE(s.tails_monotone_in_beta);
}

TEST(Cutset, TailShrinksDecision) {
  const std::vector<std::size_t> reps{1000, 1000, 1000};
  const std::vector<double> flat{0.01, 0.01, 0.0};
  EXPECT_TRUE(tail_shrinks(flat, reps));
  const std::vector<double> up{0.0, 0.01, 0.05};
  EXPECT_FALSE(tail_shrinks(up, reps));
}

TEST(Instance, DomainWithoutSinkIsRejected) {
  try {
    make_box_domain({{Rational(0), Rational(1)}, {Rational(0), Rational(1)}},
                    {FaceTag::source, FaceTag::neutral, FaceTag::neutral, FaceTag::neutral});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoSourceOrSink);
  }
}
