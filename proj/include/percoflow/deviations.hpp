#pragma once

// φ_n = φ(Γ¹_n → Γ²_n in Ω_n), the cutset ℰ_n and its source cluster, and the
// Monte Carlo estimators for lower deviations of φ_n and for card(ℰ_n).

#include <chrono>
#include <cmath>
#include <optional>
#include <vector>

#include "percoflow/capacities.hpp"
#include "percoflow/geometry.hpp"
#include "percoflow/lattice.hpp"
#include "percoflow/maxflow.hpp"
#include "percoflow/montecarlo.hpp"

namespace percoflow {

struct PhiInstance {
  DiscreteDomain discrete;
  LatticeGraph graph;
  std::vector<VertexId> sources;  // Γ¹_n
  std::vector<VertexId> sinks;    // Γ²_n

  std::int64_t mesh() const { return discrete.mesh; }
  std::size_t dim() const { return discrete.dim; }
  bool structurally_zero() const { return sources.empty() || sinks.empty(); }
};

inline PhiInstance make_phi_instance(const Domain& domain, std::int64_t n) {
  DiscreteDomain dd = discretize(domain, n);
  LatticeGraph graph = induced_graph(dd);
  auto sources = graph.indices_of(dd.gamma1);
  auto sinks = graph.indices_of(dd.gamma2);
  return PhiInstance{std::move(dd), std::move(graph), std::move(sources), std::move(sinks)};
}

inline double surface_scale(std::int64_t n, std::size_t d) {
  return std::pow(static_cast<double>(n), static_cast<double>(d - 1));
}

struct PhiRun {
  std::int64_t n = 0;
  std::uint64_t seed = 0;
  CapacityLaw law;
  Capacity value = 0;
  std::size_t cut_size = 0;
  bool structural_zero = false;  // Γ¹_n or Γ²_n empty: no flow can exist
  std::vector<Capacity> caps;
  FlowResult flow;
  double seconds = 0.0;

  double real_value() const { return dequantize(value); }
};

inline PhiRun run_phi(const PhiInstance& inst, const CapacityLaw& law, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  PhiRun run;
  run.n = inst.mesh();
  run.seed = seed;
  run.law = law;
  run.caps = CapacityField(law, seed).capacities(inst.graph.edges());
  if (inst.structurally_zero()) {
    run.structural_zero = true;
  } else {
    run.flow = max_flow(inst.graph.graph(), inst.sources, inst.sinks, run.caps);
    run.value = run.flow.value;
    run.cut_size = run.flow.cut.edges.size();
  }
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

inline PhiRun run_phi(const Domain& domain, const CapacityLaw& law, std::int64_t n,
                      std::uint64_t seed) {
  return run_phi(make_phi_instance(domain, n), law, seed);
}

struct ClusterSummary {
  std::vector<VertexId> vertices;  // Ẽ_n
  std::size_t boundary_size = 0;   // card(∂ᵉẼ_n)
  bool boundary_is_cut = false;    // ∂ᵉẼ_n = ℰ_n
  double perimeter = 0.0;          // card(∂ᵉẼ_n) / n^{d-1}
  Rational volume{0};              // L^d(E_n)
};

namespace detail {

inline Rational cube_box_overlap(const LatticePoint& z, std::int64_t n, const Box& box) {
  Rational vol(1);
  for (std::size_t k = 0; k < box.dim(); ++k) {
    const Rational lo(2 * z[k] - 1, 2 * n), hi(2 * z[k] + 1, 2 * n);
    const Rational a = std::max(lo, box.axes[k].lo), b = std::min(hi, box.axes[k].hi);
    if (b <= a) return Rational(0);
    vol *= b - a;
  }
  return vol;
}

}  // namespace detail

// Ẽ_n: vertices joined to Γ¹_n by edges outside ℰ_n. E_n is the union of the
// cubes of side 1/n centred on Ẽ_n, intersected with Ω.
inline ClusterSummary source_cluster(const PhiInstance& inst, const PhiRun& run,
                                     const Domain& domain) {
  ClusterSummary out;
  const Graph& g = inst.graph.graph();
  std::vector<char> in_cut(g.num_edges(), 0);
  for (EdgeId e : run.flow.cut.edges) in_cut[e] = 1;
  const Incidence inc(g);
  std::vector<char> seen(g.num_vertices, 0);
  std::vector<VertexId> queue(inst.sources.begin(), inst.sources.end());
  for (VertexId s : inst.sources) seen[s] = 1;
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const VertexId u = queue[qi];
    for (std::size_t i = inc.offset[u]; i < inc.offset[u + 1]; ++i) {
      const EdgeId e = inc.incidence[i];
      if (in_cut[e]) continue;
      const VertexId w = g.edges[e][0] == u ? g.edges[e][1] : g.edges[e][0];
      if (!seen[w]) {
        seen[w] = 1;
        queue.push_back(w);
      }
    }
  }
  for (VertexId v = 0; v < g.num_vertices; ++v) {
    if (seen[v]) out.vertices.push_back(v);
  }
  std::vector<EdgeId> boundary;
  for (EdgeId e = 0; e < g.num_edges(); ++e) {
    if (seen[g.edges[e][0]] != seen[g.edges[e][1]]) boundary.push_back(e);
  }
  out.boundary_size = boundary.size();
  out.boundary_is_cut = boundary == run.flow.cut.edges;
  out.perimeter = static_cast<double>(boundary.size()) / surface_scale(inst.mesh(), inst.dim());
  for (VertexId v : out.vertices) {
    for (const auto& box : domain.boxes()) {
      out.volume += detail::cube_box_overlap(inst.graph.vertices()[v], inst.mesh(), box);
    }
  }
  return out;
}

struct PhiSample {
  Capacity value = 0;
  std::size_t cut_size = 0;
};

// φ_n and card(ℰ_n) for replicas 0..count-1 with capacities seeded by
// derive_seed(seed, {n, replica}).
inline std::vector<PhiSample> phi_samples(const PhiInstance& inst, const CapacityLaw& law,
                                          std::uint64_t seed, std::size_t count,
                                          unsigned workers) {
  std::vector<PhiSample> out(count);
  if (inst.structurally_zero()) return out;
  const auto n = static_cast<std::uint64_t>(inst.mesh());
  struct Context {
    MaxFlowSolver solver;
    std::vector<Capacity> caps;
    FlowResult result;
  };
  run_replicas(
      count, workers,
      [&] { return Context{MaxFlowSolver(inst.graph.graph(), inst.sources, inst.sinks), {}, {}}; },
      [&](Context& ctx, std::size_t r) {
        CapacityField(law, derive_seed(seed, {n, r})).fill(inst.graph.edges(), ctx.caps);
        ctx.solver.solve(ctx.caps, ctx.result);
        out[r] = {ctx.result.value, ctx.result.cut.edges.size()};
      });
  return out;
}

struct RatePoint {
  std::int64_t n = 0;
  std::size_t replicas = 0;
  std::size_t hits = 0;
  double p_hat = 0.0;
  ProportionInterval wilson;
  std::optional<double> rate;  // r_n = -log p̂ / n^{d-1}, when hits > 0

  // Wilson interval mapped to the rate scale.
  std::optional<std::pair<double, double>> rate_interval(std::size_t d) const {
    if (hits == 0) return std::nullopt;
    const double s = surface_scale(n, d);
    return std::make_pair(-std::log(wilson.hi) / s, -std::log(wilson.lo) / s);
  }
};

struct RateVerdict {
  bool all_positive = false;       // every defined r_n > 0
  bool monotone_beyond_noise = false;
  std::optional<double> first_rate, last_rate, first_half_width;
  std::size_t points_with_hits = 0;
};

struct RateEstimate {
  double lambda = 0.0;
  std::size_t dim = 0;
  std::vector<RatePoint> points;
  RateVerdict verdict;
};

inline RatePoint rate_point(std::int64_t n, std::size_t d, std::span<const PhiSample> samples,
                            double lambda) {
  RatePoint pt;
  pt.n = n;
  pt.replicas = samples.size();
  const double bound = lambda * surface_scale(n, d) * static_cast<double>(kQuantScale);
  const auto limit = static_cast<Capacity>(std::floor(bound));
  for (const auto& s : samples) pt.hits += s.value <= limit ? 1 : 0;
  pt.p_hat = pt.replicas ? static_cast<double>(pt.hits) / static_cast<double>(pt.replicas) : 0.0;
  pt.wilson = wilson_interval(pt.hits, pt.replicas);
  if (pt.hits > 0) pt.rate = -std::log(pt.p_hat) / surface_scale(n, d);
  return pt;
}

// Every defined r_n is positive, and the rate at the largest mesh with hits
// is at least the rate at the smallest such mesh minus that point's Wilson
// half-width on the rate scale.
inline RateVerdict rate_verdict(std::span<const RatePoint> points, std::size_t d) {
  RateVerdict v;
  v.all_positive = true;
  const RatePoint* first = nullptr;
  const RatePoint* last = nullptr;
  for (const auto& p : points) {
    if (!p.rate) continue;
    ++v.points_with_hits;
    v.all_positive = v.all_positive && *p.rate > 0;
    if (!first) first = &p;
    last = &p;
  }
  if (!first) {
    v.all_positive = false;
    return v;
  }
  const auto iv = first->rate_interval(d);
  v.first_rate = first->rate;
  v.last_rate = last->rate;
  v.first_half_width = 0.5 * (iv->second - iv->first);
  v.monotone_beyond_noise = *last->rate >= *first->rate - *v.first_half_width;
  return v;
}

struct RateOptions {
  std::vector<std::int64_t> meshes;
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  unsigned workers = default_workers();
};

inline RateEstimate estimate_rate(const Domain& domain, const CapacityLaw& law, double lambda,
                                  const RateOptions& opt) {
  RateEstimate out;
  out.lambda = lambda;
  out.dim = domain.dim();
  for (std::int64_t n : opt.meshes) {
    const PhiInstance inst = make_phi_instance(domain, n);
    const auto samples = phi_samples(inst, law, opt.seed, opt.replicas, opt.workers);
    out.points.push_back(rate_point(n, out.dim, samples, lambda));
  }
  out.verdict = rate_verdict(out.points, out.dim);
  return out;
}

struct CutsetMesh {
  std::int64_t n = 0;
  std::size_t replicas = 0;
  double q50 = 0.0, q90 = 0.0, q99 = 0.0;  // of card(ℰ_n)/n^{d-1}
  std::vector<double> tails;                // P̂[card(ℰ_n) >= β n^{d-1}] per β
};

struct CutsetStats {
  std::vector<double> betas;
  std::vector<CutsetMesh> per_mesh;
  double beta_star = 0.0;  // 2 × the 99th percentile at the smallest mesh
  std::vector<double> tail_at_beta_star;
  bool tails_monotone_in_beta = true;
  bool tail_shrinks = false;  // at β*, along n
};

inline CutsetMesh cutset_mesh(std::int64_t n, std::size_t d, std::span<const PhiSample> samples,
                              std::span<const double> betas) {
  CutsetMesh m;
  m.n = n;
  m.replicas = samples.size();
  const double s = surface_scale(n, d);
  std::vector<double> norm;
  norm.reserve(samples.size());
  for (const auto& x : samples) norm.push_back(static_cast<double>(x.cut_size) / s);
  m.q50 = quantile(norm, 0.50);
  m.q90 = quantile(norm, 0.90);
  m.q99 = quantile(norm, 0.99);
  for (double beta : betas) {
    std::size_t k = 0;
    for (const auto& x : samples) k += static_cast<double>(x.cut_size) >= beta * s ? 1 : 0;
    m.tails.push_back(samples.empty() ? 0.0 : static_cast<double>(k) / static_cast<double>(samples.size()));
  }
  return m;
}

inline std::vector<double> tail_at(std::int64_t n, std::size_t d,
                                   std::span<const PhiSample> samples, double beta) {
  const double b[1] = {beta};
  return cutset_mesh(n, d, samples, b).tails;
}

struct CutsetOptions {
  std::vector<std::int64_t> meshes;
  std::vector<double> betas;
  std::size_t replicas = 1000;
  std::uint64_t seed = 1;
  unsigned workers = default_workers();
};

// The tail at β* along n is nonincreasing up to Wilson noise and ends no
// higher than it starts.
inline bool tail_shrinks(std::span<const double> tails, std::span<const std::size_t> replicas) {
  if (tails.empty()) return false;
  std::vector<std::size_t> hits(tails.size());
  for (std::size_t i = 0; i < tails.size(); ++i) {
    hits[i] = static_cast<std::size_t>(std::llround(tails[i] * static_cast<double>(replicas[i])));
  }
  return no_significant_increase(hits, replicas) && tails.back() <= tails.front();
}

inline CutsetStats cutset_tail(const Domain& domain, const CapacityLaw& law,
                               const CutsetOptions& opt) {
  CutsetStats out;
  out.betas = opt.betas;
  std::sort(out.betas.begin(), out.betas.end());
  const std::size_t d = domain.dim();
  std::vector<std::vector<PhiSample>> all;
  for (std::int64_t n : opt.meshes) {
    const PhiInstance inst = make_phi_instance(domain, n);
    all.push_back(phi_samples(inst, law, opt.seed, opt.replicas, opt.workers));
    out.per_mesh.push_back(cutset_mesh(n, d, all.back(), out.betas));
    const auto& tails = out.per_mesh.back().tails;
    for (std::size_t i = 1; i < tails.size(); ++i) {
      out.tails_monotone_in_beta = out.tails_monotone_in_beta && tails[i] <= tails[i - 1];
    }
  }
  if (out.per_mesh.empty()) return out;
  out.beta_star = 2.0 * out.per_mesh.front().q99;
  std::vector<std::size_t> reps;
  for (std::size_t i = 0; i < all.size(); ++i) {
    out.tail_at_beta_star.push_back(tail_at(opt.meshes[i], d, all[i], out.beta_star).front());
    reps.push_back(all[i].size());
  }
  out.tail_shrinks = tail_shrinks(out.tail_at_beta_star, reps);
  return out;
}

// P[φ_n = 0] is at least the probability that one of the n flat layers of
// (n+1)^{d-1} edges crossing the unit cube between source and sink faces is
// entirely closed, for bernoulli(p) capacities.
inline double flat_layer_zero_bound(double p, std::int64_t n, std::size_t d) {
  const double layer = std::pow(static_cast<double>(n + 1), static_cast<double>(d - 1));
  const double closed = std::pow(1.0 - p, layer);
  return 1.0 - std::pow(1.0 - closed, static_cast<double>(n));
}

}  // namespace percoflow
