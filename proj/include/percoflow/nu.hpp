#pragma once

// Monte Carlo estimation of the flow constant ν(v) from τ_n, tables of ν over
// a direction grid, the homogeneous extension ν₀ and the structural checks
// (weak triangle inequality, midpoint convexity).

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "percoflow/capacities.hpp"
#include "percoflow/cylinder.hpp"
#include "percoflow/errors.hpp"
#include "percoflow/geometry.hpp"
#include "percoflow/maxflow.hpp"
#include "percoflow/montecarlo.hpp"

namespace percoflow {

inline constexpr std::size_t kMinReplicas = 30;

struct NuOptions {
  std::vector<std::int64_t> meshes{8, 16};
  std::size_t replicas = 100;
  double side = 1.0;  // every side of A
  double h = 0.5;
  std::uint64_t seed = 1;
  unsigned workers = default_workers();
};

struct MeshStat {
  std::int64_t n = 0;
  std::size_t replicas = 0;
  double mean = 0.0;  // of τ_n / (n^{d-1} H^{d-1}(A))
  double stddev = 0.0;
  double stderr_mean = 0.0;
};

struct NuEstimate {
  Vec v;
  std::vector<MeshStat> per_mesh;
  double nu_hat = 0.0;  // largest-mesh mean
  double stderr_nu = 0.0;
  double trend_slope = 0.0;  // d(mean)/d(1/n)
  std::size_t replicas = 0;
  double side = 1.0;
  double h = 0.5;
  CapacityLaw law;
  std::uint64_t seed = 0;
  bool low_replicas = false;
};

namespace detail {

inline std::uint64_t direction_key(std::span<const double> v) {
  std::uint64_t h = 0x6e75ULL;
  for (double x : v) h = hash_combine(h, std::bit_cast<std::uint64_t>(x + 0.0));
  return h;
}

inline constexpr std::uint64_t kTailStream = 0x7461696cULL;

inline Hyperrectangle default_base(const UnitVector& v, double side) {
  const std::size_t d = v.dim();
  return Hyperrectangle(Vec(d, 0.0), v, Vec(d - 1, side));
}

inline double area_scale(std::int64_t n, std::size_t d, double area) {
  return std::pow(static_cast<double>(n), static_cast<double>(d - 1)) * area;
}

// τ_n for every replica of one mesh, in quantized units, indexed by replica.
inline std::vector<Capacity> tau_samples(const CylinderInstance& inst, const CapacityLaw& law,
                                         std::uint64_t seed, std::uint64_t stream,
                                         std::size_t replicas, unsigned workers) {
  std::vector<Capacity> out(replicas);
  const auto n = static_cast<std::uint64_t>(inst.mesh());
  const Graph& g = inst.graph.graph();
  struct Context {
    MaxFlowSolver solver;
    std::vector<Capacity> caps;
    FlowResult result;
  };
  run_replicas(
      replicas, workers,
      [&] { return Context{MaxFlowSolver(g, inst.upper, inst.lower), {}, {}}; },
      [&](Context& ctx, std::size_t r) {
        CapacityField field(law, derive_seed(seed, {stream, n, r}));
        field.fill(inst.graph.edges(), ctx.caps);
        ctx.solver.solve(ctx.caps, ctx.result);
        out[r] = ctx.result.value;
      });
  return out;
}

}  // namespace detail

inline NuEstimate estimate_nu(const UnitVector& v, const CapacityLaw& law,
                              const NuOptions& opt) {
  if (opt.meshes.empty()) throw Error(ErrorKind::InvalidArgument, "no meshes given");
  if (!std::is_sorted(opt.meshes.begin(), opt.meshes.end()) ||
      std::adjacent_find(opt.meshes.begin(), opt.meshes.end()) != opt.meshes.end()) {
    throw Error(ErrorKind::InvalidArgument, "meshes must be strictly increasing");
  }
  if (opt.replicas == 0) throw Error(ErrorKind::InvalidArgument, "replicas must be >= 1");
  const std::size_t d = v.dim();
  const Hyperrectangle base = detail::default_base(v, opt.side);
  const std::uint64_t key = detail::direction_key(v.components());

  NuEstimate est;
  est.v = v.components();
  est.replicas = opt.replicas;
  est.side = opt.side;
  est.h = opt.h;
  est.law = law;
  est.seed = opt.seed;
  est.low_replicas = opt.replicas < kMinReplicas;

  std::vector<double> inv_n, means;
  for (std::int64_t n : opt.meshes) {
    const CylinderInstance inst = build_cylinder_instance(base, opt.h, n);
    const auto taus = detail::tau_samples(inst, law, opt.seed, key, opt.replicas, opt.workers);
    const double scale = detail::area_scale(n, d, base.area());
    std::vector<double> xs(taus.size());
    for (std::size_t r = 0; r < taus.size(); ++r) xs[r] = dequantize(taus[r]) / scale;
    const SampleSummary s = summarize(xs);
    est.per_mesh.push_back({n, opt.replicas, s.mean, s.stddev, s.stderr_mean});
    inv_n.push_back(1.0 / static_cast<double>(n));
    means.push_back(s.mean);
  }
  est.nu_hat = est.per_mesh.back().mean;
  est.stderr_nu = est.per_mesh.back().stderr_mean;
  est.trend_slope = ols_slope(inv_n, means);
  return est;
}

// d = 2: 36 directions in 10° steps. d = 3: the 26 face, edge and corner
// directions of the cube.
inline std::vector<UnitVector> direction_grid(std::size_t d) {
  std::vector<UnitVector> out;
  auto clean = [](double x) { return std::abs(x) < 1e-15 ? 0.0 : x; };
  if (d == 2) {
    for (int k = 0; k < 36; ++k) {
      const double t = static_cast<double>(k) * std::numbers::pi / 18.0;
      Vec w{clean(std::cos(t)), clean(std::sin(t))};
      out.push_back(UnitVector::normalized(w));
    }
    return out;
  }
  if (d == 3) {
    for (int x = -1; x <= 1; ++x) {
      for (int y = -1; y <= 1; ++y) {
        for (int z = -1; z <= 1; ++z) {
          if (x == 0 && y == 0 && z == 0) continue;
          out.push_back(UnitVector::normalized(
              {static_cast<double>(x), static_cast<double>(y), static_cast<double>(z)}));
        }
      }
    }
    return out;
  }
  throw Error(ErrorKind::InvalidArgument, "direction grids exist for d = 2, 3");
}

struct NuValue {
  double value = 0.0;
  double stderr_value = 0.0;
};

// ν over a finite set of directions. Values at other unit vectors are
// interpolated linearly inside the cone of the enclosing grid directions,
// which is exact for ν₀ that is linear on each cone.
class NuTable {
 public:
  // Largest angle between directions bracketing a query.
  static constexpr double kMaxGap2d = 45.0;
  static constexpr double kMaxGap3d = 60.0;

  NuTable() = default;
  NuTable(std::size_t dim, std::vector<NuEstimate> entries)
      : dim_(dim), entries_(std::move(entries)) {
    if (entries_.empty()) throw Error(ErrorKind::InvalidArgument, "empty nu table");
    for (const auto& e : entries_) {
      if (e.v.size() != dim_) throw Error(ErrorKind::InvalidArgument, "direction dimension");
      UnitVector check(e.v);
      if (e.nu_hat < 0 || e.stderr_nu < 0) {
        throw Error(ErrorKind::InvalidArgument, "negative nu or stderr");
      }
    }
    if (dim_ == 3) build_cones();
  }

  template <class F>
  static NuTable from_function(std::size_t dim, const std::vector<UnitVector>& grid, F&& f) {
    std::vector<NuEstimate> entries;
    for (const auto& v : grid) {
      NuEstimate e;
      e.v = v.components();
      e.nu_hat = f(v.components());
      entries.push_back(std::move(e));
    }
    return NuTable(dim, std::move(entries));
  }

  std::size_t dim() const { return dim_; }
  const std::vector<NuEstimate>& entries() const { return entries_; }

  double nu_min() const {
    double m = entries_.front().nu_hat;
    for (const auto& e : entries_) m = std::min(m, e.nu_hat);
    return m;
  }
  double nu_max() const {
    double m = entries_.front().nu_hat;
    for (const auto& e : entries_) m = std::max(m, e.nu_hat);
    return m;
  }
  double stderr_max() const {
    double m = 0.0;
    for (const auto& e : entries_) m = std::max(m, e.stderr_nu);
    return m;
  }

  // ν(u) for a unit vector u.
  NuValue at(std::span<const double> u) const {
    if (u.size() != dim_) throw Error(ErrorKind::InvalidArgument, "direction dimension");
    for (const auto& e : entries_) {
      if (angle(u, e.v) < 1e-9) return {e.nu_hat, e.stderr_nu};
    }
    if (dim_ == 2) return at_2d(u);
    if (dim_ == 3) return at_3d(u);
    throw Error(ErrorKind::MissingDirection, "no grid entry for this direction");
  }

 private:
  static double angle(std::span<const double> a, std::span<const double> b) {
    const double c = dot(a, b) / (norm2(a) * norm2(b));
    return std::acos(std::clamp(c, -1.0, 1.0));
  }

  static double degrees(double rad) { return rad * 180.0 / std::numbers::pi; }

  NuValue combine(std::span<const std::size_t> idx, std::span<const double> coef) const {
    NuValue out;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.value += coef[i] * entries_[idx[i]].nu_hat;
      out.stderr_value += coef[i] * entries_[idx[i]].stderr_nu;
    }
    return out;
  }

  NuValue at_2d(std::span<const double> u) const {
    const double theta = std::atan2(u[1], u[0]);
    std::optional<std::size_t> left, right;
    double best_left = 10.0, best_right = 10.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      double delta = std::atan2(entries_[i].v[1], entries_[i].v[0]) - theta;
      delta = std::remainder(delta, 2 * std::numbers::pi);
      if (delta > 0 && delta < best_left) {
        best_left = delta;
        left = i;
      }
      if (delta < 0 && -delta < best_right) {
        best_right = -delta;
        right = i;
      }
    }
    if (!left || !right || degrees(best_left + best_right) > kMaxGap2d + 1e-9) {
      throw Error(ErrorKind::MissingDirection, "direction not bracketed by the nu table");
    }
    const Vec& a = entries_[*right].v;
    const Vec& b = entries_[*left].v;
    const double det = a[0] * b[1] - a[1] * b[0];
    const double ca = (u[0] * b[1] - u[1] * b[0]) / det;
    const double cb = (a[0] * u[1] - a[1] * u[0]) / det;
    const std::size_t idx[2] = {*right, *left};
    const double coef[2] = {ca, cb};
    return combine(idx, coef);
  }

  void build_cones() {
    const double limit = (kMaxGap3d + 1e-9) * std::numbers::pi / 180.0;
    struct Cone {
      double spread;
      std::array<std::size_t, 3> idx;
    };
    std::vector<Cone> cones;
    const std::size_t m = entries_.size();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        const double aij = angle(entries_[i].v, entries_[j].v);
        if (aij > limit) continue;
        for (std::size_t k = j + 1; k < m; ++k) {
          const double aik = angle(entries_[i].v, entries_[k].v);
          const double ajk = angle(entries_[j].v, entries_[k].v);
          if (aik > limit || ajk > limit) continue;
          if (std::abs(det3(entries_[i].v, entries_[j].v, entries_[k].v)) < 1e-9) continue;
          cones.push_back({aij + aik + ajk, {i, j, k}});
        }
      }
    }
    std::stable_sort(cones.begin(), cones.end(),
                     [](const Cone& a, const Cone& b) { return a.spread < b.spread; });
    cones_.clear();
    for (const auto& c : cones) cones_.push_back(c.idx);
  }

  static double det3(std::span<const double> a, std::span<const double> b,
                     std::span<const double> c) {
    return a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
           a[2] * (b[0] * c[1] - b[1] * c[0]);
  }

  NuValue at_3d(std::span<const double> u) const {
    for (const auto& cone : cones_) {
      const Vec& a = entries_[cone[0]].v;
      const Vec& b = entries_[cone[1]].v;
      const Vec& c = entries_[cone[2]].v;
      const double det = det3(a, b, c);
      const double coef[3] = {det3(u, b, c) / det, det3(a, u, c) / det, det3(a, b, u) / det};
      if (coef[0] < -1e-12 || coef[1] < -1e-12 || coef[2] < -1e-12) continue;
      const double clamped[3] = {std::max(coef[0], 0.0), std::max(coef[1], 0.0),
                                 std::max(coef[2], 0.0)};
      return combine(cone, clamped);
    }
    throw Error(ErrorKind::MissingDirection, "direction not bracketed by the nu table");
  }

  std::size_t dim_ = 0;
  std::vector<NuEstimate> entries_;
  std::vector<std::array<std::size_t, 3>> cones_;
};

inline NuTable build_nu_table(std::size_t d, const CapacityLaw& law, const NuOptions& opt,
                              const std::vector<UnitVector>& grid) {
  std::vector<NuEstimate> entries;
  entries.reserve(grid.size());
  for (const auto& v : grid) entries.push_back(estimate_nu(v, law, opt));
  return NuTable(d, std::move(entries));
}

inline NuTable build_nu_table(std::size_t d, const CapacityLaw& law, const NuOptions& opt) {
  return build_nu_table(d, law, opt, direction_grid(d));
}

// ν₀(w) = |w| ν(w/|w|), ν₀(0) = 0.
inline NuValue nu0_value(std::span<const double> w, const NuTable& table) {
  const double len = norm2(w);
  if (len == 0.0) return {};
  const NuValue u = table.at(scaled(w, 1.0 / len));
  return {len * u.value, len * u.stderr_value};
}

inline double nu0(std::span<const double> w, const NuTable& table) {
  return nu0_value(w, table).value;
}

// ν₀((u+w)/2) <= (ν₀(u)+ν₀(w))/2 up to `sigmas` combined standard errors.
inline bool midpoint_convex(std::span<const double> u, std::span<const double> w,
                            const NuTable& table, double sigmas = 3.0) {
  Vec mid(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) mid[k] = 0.5 * (u[k] + w[k]);
  const NuValue m = nu0_value(mid, table);
  const NuValue a = nu0_value(u, table);
  const NuValue b = nu0_value(w, table);
  const double margin =
      sigmas * std::sqrt(m.stderr_value * m.stderr_value +
                         0.25 * (a.stderr_value * a.stderr_value + b.stderr_value * b.stderr_value));
  return m.value <= 0.5 * (a.value + b.value) + margin;
}

struct TriangleSide {
  double lhs = 0.0;     // H¹([PQ]) ν(v_R)
  double rhs = 0.0;     // H¹([PR]) ν(v_Q) + H¹([QR]) ν(v_P)
  double margin = 0.0;  // sigmas * combined standard error
  bool violated = false;
};

struct TriangleReport {
  std::array<TriangleSide, 3> sides;
  bool violated = false;
};

namespace detail {

// Unit normal to [PQ] inside the plane of PQR, pointing away from R.
inline Vec outer_normal(const Vec& p, const Vec& q, const Vec& r) {
  const Vec u = axpy(-1.0, p, q);
  Vec w = axpy(-1.0, r, p);
  w = axpy(-dot(w, u) / dot(u, u), u, w);
  return scaled(w, 1.0 / norm2(w));
}

}  // namespace detail

// Checks H¹([AB]) ν(v_C) <= H¹([AC]) ν(v_B) + H¹([BC]) ν(v_A) for the three
// labellings of the triangle, where v_X is the normal of the side opposite X.
inline TriangleReport check_weak_triangle(const NuTable& table, const Vec& a, const Vec& b,
                                          const Vec& c, double sigmas = 3.0) {
  const std::size_t d = table.dim();
  if (a.size() != d || b.size() != d || c.size() != d) {
    throw Error(ErrorKind::InvalidArgument, "triangle dimension mismatch");
  }
  const Vec ab = axpy(-1.0, a, b), ac = axpy(-1.0, a, c);
  // Gram determinant |ab|²|ac|² - (ab·ac)², relative to |ab|²|ac|².
  const double ab2 = dot(ab, ab), ac2 = dot(ac, ac), proj = dot(ab, ac);
  if (!(ab2 > 0) || !(ac2 > 0) || !(ab2 * ac2 - proj * proj > 1e-12 * ab2 * ac2)) {
    throw Error(ErrorKind::DegenerateTriangle, "triangle is degenerate");
  }
  const std::array<const Vec*, 3> pts{&a, &b, &c};
  TriangleReport report;
  for (std::size_t rot = 0; rot < 3; ++rot) {
    const Vec& p = *pts[rot];
    const Vec& q = *pts[(rot + 1) % 3];
    const Vec& r = *pts[(rot + 2) % 3];
    const NuValue nr = table.at(detail::outer_normal(p, q, r));
    const NuValue nq = table.at(detail::outer_normal(p, r, q));
    const NuValue np = table.at(detail::outer_normal(q, r, p));
    const double lpq = norm2(axpy(-1.0, p, q));
    const double lpr = norm2(axpy(-1.0, p, r));
    const double lqr = norm2(axpy(-1.0, q, r));
    TriangleSide& s = report.sides[rot];
    s.lhs = lpq * nr.value;
    s.rhs = lpr * nq.value + lqr * np.value;
    s.margin = sigmas * std::sqrt(lpq * lpq * nr.stderr_value * nr.stderr_value +
                                  lpr * lpr * nq.stderr_value * nq.stderr_value +
                                  lqr * lqr * np.stderr_value * np.stderr_value);
    s.violated = s.lhs > s.rhs + s.margin;
    report.violated = report.violated || s.violated;
  }
  return report;
}

struct TailPoint {
  std::int64_t n = 0;
  std::size_t replicas = 0;
  std::size_t hits = 0;
  double p_hat = 0.0;
  ProportionInterval wilson;
  std::optional<double> rate;  // -log p̂ / n^{d-1}
};

struct TailEstimate {
  double nu_hat = 0.0;
  double eps = 0.0;
  std::vector<TailPoint> points;
  bool decreasing = true;  // no significant increase of p̂ along n
};

// Empirical P[τ_n <= (ν̂ - ε) n^{d-1} H^{d-1}(A)] per mesh.
inline TailEstimate tau_lower_tail(const UnitVector& v, const CapacityLaw& law, double nu_hat,
                                   double eps, const NuOptions& opt) {
  if (!(eps > 0) || !(eps < nu_hat) ) {
    throw Error(ErrorKind::InvalidArgument, "need 0 < eps < nu_hat");
  }
  const std::size_t d = v.dim();
  const Hyperrectangle base = detail::default_base(v, opt.side);
  const std::uint64_t key = hash_combine(detail::direction_key(v.components()),
                                         detail::kTailStream);
  TailEstimate out;
  out.nu_hat = nu_hat;
  out.eps = eps;
  std::vector<std::size_t> hits, trials;
  for (std::int64_t n : opt.meshes) {
    const CylinderInstance inst = build_cylinder_instance(base, opt.h, n);
    const auto taus = detail::tau_samples(inst, law, opt.seed, key, opt.replicas, opt.workers);
    const double bound = (nu_hat - eps) * detail::area_scale(n, d, base.area());
    const auto limit = static_cast<Capacity>(std::floor(bound * static_cast<double>(kQuantScale)));
    TailPoint pt;
    pt.n = n;
    pt.replicas = taus.size();
    pt.hits = static_cast<std::size_t>(
        std::count_if(taus.begin(), taus.end(), [&](Capacity t) { return t <= limit; }));
    pt.p_hat = static_cast<double>(pt.hits) / static_cast<double>(pt.replicas);
    pt.wilson = wilson_interval(pt.hits, pt.replicas);
    if (pt.hits > 0) {
      pt.rate = -std::log(pt.p_hat) / std::pow(static_cast<double>(n), static_cast<double>(d - 1));
    }
    hits.push_back(pt.hits);
    trials.push_back(pt.replicas);
    out.points.push_back(pt);
  }
  out.decreasing = no_significant_increase(hits, trials);
  return out;
}

}  // namespace percoflow
