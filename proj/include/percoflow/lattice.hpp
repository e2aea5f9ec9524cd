#pragma once

// The rescaled lattice Z^d/n: vertices, canonical edges, the discrete
// domain (Ω_n, Γ_n, Γ¹_n, Γ²_n) and induced graphs.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "percoflow/errors.hpp"
#include "percoflow/geometry.hpp"
#include "percoflow/graph.hpp"

namespace percoflow {

inline constexpr std::size_t kMaxDim = 4;

// Unscaled integer coordinates z; the point is z/n. Unused trailing
// coordinates stay zero.
using LatticePoint = std::array<std::int64_t, kMaxDim>;

struct LatticePointHash {
  std::size_t operator()(const LatticePoint& p) const noexcept {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (std::int64_t c : p) {
      h ^= static_cast<std::uint64_t>(c) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

inline LatticePoint shifted(LatticePoint p, std::size_t axis, std::int64_t by) {
  p[axis] += by;
  return p;
}

// Edge joining `lower` and lower + e_axis.
struct LatticeEdge {
  LatticePoint lower{};
  std::uint8_t axis = 0;

  LatticePoint upper() const { return shifted(lower, axis, 1); }

  friend auto operator<=>(const LatticeEdge&, const LatticeEdge&) = default;
};

inline std::optional<std::size_t> adjacency_axis(const LatticePoint& x,
                                                 const LatticePoint& y) {
  std::optional<std::size_t> axis;
  for (std::size_t k = 0; k < kMaxDim; ++k) {
    const std::int64_t diff = y[k] - x[k];
    if (diff == 0) continue;
    if ((diff != 1 && diff != -1) || axis) return std::nullopt;
    axis = k;
  }
  return axis;
}

inline LatticeEdge canonical_edge(const LatticePoint& x, const LatticePoint& y) {
  auto axis = adjacency_axis(x, y);
  if (!axis) throw Error(ErrorKind::InvalidArgument, "points are not lattice neighbours");
  return LatticeEdge{y[*axis] > x[*axis] ? x : y, static_cast<std::uint8_t>(*axis)};
}

// ⟨⟨x,y⟩⟩, oriented from x towards y.
struct OrientedEdge {
  LatticePoint from{};
  LatticePoint to{};

  OrientedEdge(const LatticePoint& x, const LatticePoint& y) : from(x), to(y) {
    canonical_edge(x, y);
  }

  LatticeEdge edge() const { return canonical_edge(from, to); }
  bool follows_axis() const { return edge().lower == from; }
};

inline Vec position(const LatticePoint& z, std::size_t dim, std::int64_t mesh) {
  Vec p(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    p[k] = static_cast<double>(z[k]) / static_cast<double>(mesh);
  }
  return p;
}

inline RationalPoint rational_position(const LatticePoint& z, std::size_t dim,
                                       std::int64_t mesh) {
  RationalPoint p(dim);
  for (std::size_t k = 0; k < dim; ++k) p[k] = Rational(z[k], mesh);
  return p;
}

// Induced subgraph of Z^d/n on a vertex set. Vertices are sorted
// lexicographically; edges are ordered by (lower vertex, axis).
class LatticeGraph {
 public:
  LatticeGraph(std::size_t dim, std::int64_t mesh, std::vector<LatticePoint> vertices)
      : dim_(dim), mesh_(mesh), vertices_(std::move(vertices)) {
    if (dim == 0 || dim > kMaxDim) {
      throw Error(ErrorKind::InvalidArgument, "unsupported lattice dimension");
    }
    if (mesh < 1) throw Error(ErrorKind::InvalidArgument, "mesh must be >= 1");
    std::sort(vertices_.begin(), vertices_.end());
    vertices_.erase(std::unique(vertices_.begin(), vertices_.end()), vertices_.end());
    index_.reserve(vertices_.size());
    for (VertexId i = 0; i < vertices_.size(); ++i) index_.emplace(vertices_[i], i);
    graph_.num_vertices = vertices_.size();
    for (VertexId i = 0; i < vertices_.size(); ++i) {
      for (std::size_t k = 0; k < dim_; ++k) {
        if (auto j = index_of(shifted(vertices_[i], k, 1))) {
          edges_.push_back(LatticeEdge{vertices_[i], static_cast<std::uint8_t>(k)});
          graph_.edges.push_back({i, *j});
        }
      }
    }
  }

  std::size_t dim() const { return dim_; }
  std::int64_t mesh() const { return mesh_; }
  const std::vector<LatticePoint>& vertices() const { return vertices_; }
  const std::vector<LatticeEdge>& edges() const { return edges_; }
  const Graph& graph() const { return graph_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_edges() const { return edges_.size(); }

  std::optional<VertexId> index_of(const LatticePoint& p) const {
    auto it = index_.find(p);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<EdgeId> edge_index(const LatticeEdge& e) const {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), e,
                               [](const LatticeEdge& a, const LatticeEdge& b) {
                                 return a < b;
                               });
    if (it == edges_.end() || *it != e) return std::nullopt;
    return static_cast<EdgeId>(it - edges_.begin());
  }

  Vec position_of(VertexId v) const { return position(vertices_[v], dim_, mesh_); }

  std::vector<VertexId> indices_of(std::span<const LatticePoint> points) const {
    std::vector<VertexId> out;
    out.reserve(points.size());
    for (const auto& p : points) {
      auto i = index_of(p);
      if (!i) throw Error(ErrorKind::InvalidArgument, "point is not a graph vertex");
      out.push_back(*i);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::size_t dim_;
  std::int64_t mesh_;
  std::vector<LatticePoint> vertices_;
  std::vector<LatticeEdge> edges_;
  Graph graph_;
  std::unordered_map<LatticePoint, VertexId, LatticePointHash> index_;
};

struct DiscreteDomain {
  std::size_t dim = 0;
  std::int64_t mesh = 1;
  std::vector<LatticePoint> omega;   // Ω_n
  std::vector<LatticePoint> gamma;   // Γ_n
  std::vector<LatticePoint> gamma1;  // Γ¹_n (sources)
  std::vector<LatticePoint> gamma2;  // Γ²_n (sinks)
};

namespace detail {

inline std::int64_t floor_div(const Rational& r) {
  const std::int64_t p = r.numerator(), q = r.denominator();
  return p >= 0 ? p / q : -((-p + q - 1) / q);
}

inline std::int64_t ceil_div(const Rational& r) { return -floor_div(-r); }

}  // namespace detail

// Ω_n = {x : d∞(x,Ω) < 1/n}; Γ_n = vertices of Ω_n with a lattice neighbour
// outside Ω_n; Γⁱ_n = {x ∈ Γ_n : d∞(x,Γⁱ) < 1/n, d∞(x,Γ^{3-i}) >= 1/n}.
// All distances are exact.
inline DiscreteDomain discretize(const Domain& domain, std::int64_t n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "mesh must be >= 1");
  const std::size_t d = domain.dim();
  if (d > kMaxDim) throw Error(ErrorKind::InvalidArgument, "unsupported dimension");
  DiscreteDomain out;
  out.dim = d;
  out.mesh = n;

  for (const auto& box : domain.boxes()) {
    // d∞(z/n, box) < 1/n  <=>  n*lo - 1 < z < n*hi + 1 on every axis.
    std::array<std::int64_t, kMaxDim> lo{}, hi{};
    for (std::size_t k = 0; k < d; ++k) {
      lo[k] = detail::floor_div(box.axes[k].lo * n - 1) + 1;
      hi[k] = detail::ceil_div(box.axes[k].hi * n + 1) - 1;
    }
    LatticePoint z{};
    for (std::size_t k = 0; k < d; ++k) z[k] = lo[k];
    while (true) {
      out.omega.push_back(z);
      std::size_t k = 0;
      for (; k < d; ++k) {
        if (++z[k] <= hi[k]) break;
        z[k] = lo[k];
      }
      if (k == d) break;
    }
  }
  std::sort(out.omega.begin(), out.omega.end());
  out.omega.erase(std::unique(out.omega.begin(), out.omega.end()), out.omega.end());
  if (out.omega.empty()) {
    throw Error(ErrorKind::EmptyDiscretization, "Ω_n is empty");
  }

  std::unordered_set<LatticePoint, LatticePointHash> members(out.omega.begin(),
                                                             out.omega.end());
  const Rational threshold(1, n);
  for (const auto& z : out.omega) {
    bool boundary = false;
    for (std::size_t k = 0; k < d && !boundary; ++k) {
      boundary = !members.contains(shifted(z, k, 1)) ||
                 !members.contains(shifted(z, k, -1));
    }
    if (!boundary) continue;
    out.gamma.push_back(z);
    const RationalPoint x = rational_position(z, d, n);
    const auto d1 = linf_distance(x, domain, FaceTag::source);
    const auto d2 = linf_distance(x, domain, FaceTag::sink);
    const bool near1 = d1 && *d1 < threshold;
    const bool near2 = d2 && *d2 < threshold;
    if (near1 && !near2) out.gamma1.push_back(z);
    if (near2 && !near1) out.gamma2.push_back(z);
  }
  return out;
}

inline LatticeGraph induced_graph(const DiscreteDomain& d) {
  return LatticeGraph(d.dim, d.mesh, d.omega);
}

// Is the open segment (x/n, y/n) inside the open box? Exact.
inline bool edge_in_region(const LatticeEdge& e, std::size_t dim, std::int64_t mesh,
                           const Box& open_box) {
  for (std::size_t k = 0; k < dim; ++k) {
    const Rational a(e.lower[k], mesh);
    const auto& iv = open_box.axes[k];
    if (k == e.axis) {
      if (a < iv.lo || a + Rational(1, mesh) > iv.hi) return false;
    } else if (!(iv.lo < a && a < iv.hi)) {
      return false;
    }
  }
  return true;
}

template <class Region>
  requires requires(const Region& r, std::span<const double> p) {
    { r.contains_open_segment(p, p) } -> std::convertible_to<bool>;
  }
bool edge_in_region(const LatticeEdge& e, std::size_t dim, std::int64_t mesh,
                    const Region& region) {
  return region.contains_open_segment(position(e.lower, dim, mesh),
                                      position(e.upper(), dim, mesh));
}

}  // namespace percoflow
