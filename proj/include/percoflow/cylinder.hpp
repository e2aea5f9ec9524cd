#pragma once

// Flows through cylinders cyl(A,h): τ(A,h) between the two lateral halves and
// φ(A,h) from bottom to top.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "percoflow/capacities.hpp"
#include "percoflow/geometry.hpp"
#include "percoflow/lattice.hpp"
#include "percoflow/maxflow.hpp"

namespace percoflow {

struct CylinderInstance {
  Cylinder cylinder;
  LatticeGraph graph;             // cyl ∩ Z^d/n and the edges inside it
  std::vector<VertexId> upper;    // A₁ʰ: positive side of hyp(A)
  std::vector<VertexId> lower;    // A₂ʰ: negative side of hyp(A)
  std::vector<VertexId> top;      // T(A,h)
  std::vector<VertexId> bottom;   // B(A,h)

  std::int64_t mesh() const { return graph.mesh(); }
};

namespace detail {

inline std::vector<LatticePoint> lattice_points_in(const Cylinder& c, std::int64_t n) {
  const Hyperrectangle& a = c.base();
  const std::size_t d = a.dim();
  if (d > kMaxDim) throw Error(ErrorKind::InvalidArgument, "unsupported dimension");
  // Axis-aligned bounding box of the cylinder.
  Vec lo(d), hi(d);
  for (std::size_t k = 0; k < d; ++k) {
    double reach = c.half_height() * std::abs(a.normal()[k]);
    for (std::size_t i = 0; i < a.frame().size(); ++i) {
      reach += 0.5 * a.sides()[i] * std::abs(a.frame()[i][k]);
    }
    lo[k] = a.center()[k] - reach;
    hi[k] = a.center()[k] + reach;
  }
  std::array<std::int64_t, kMaxDim> zlo{}, zhi{};
  for (std::size_t k = 0; k < d; ++k) {
    zlo[k] = static_cast<std::int64_t>(std::floor(lo[k] * static_cast<double>(n))) - 1;
    zhi[k] = static_cast<std::int64_t>(std::ceil(hi[k] * static_cast<double>(n))) + 1;
  }
  std::vector<LatticePoint> out;
  LatticePoint z{};
  for (std::size_t k = 0; k < d; ++k) z[k] = zlo[k];
  while (true) {
    if (c.contains(position(z, d, n))) out.push_back(z);
    std::size_t k = 0;
    for (; k < d; ++k) {
      if (++z[k] <= zhi[k]) break;
      z[k] = zlo[k];
    }
    if (k == d) break;
  }
  return out;
}

}  // namespace detail

// Builds the lattice instance of cyl(A,h) at mesh n. The lateral halves are
// labelled by the sign of (x - center).v; vertices on hyp(A) belong to
// neither. Top/bottom membership uses closed-face intersection.
inline CylinderInstance build_cylinder_instance(const Hyperrectangle& base, double h,
                                                std::int64_t n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "mesh must be >= 1");
  Cylinder c(base, h);
  const std::size_t d = base.dim();
  LatticeGraph graph(d, n, detail::lattice_points_in(c, n));
  if (graph.num_edges() == 0) {
    throw Error(ErrorKind::EmptyInstance, "cylinder contains no lattice edge");
  }
  CylinderInstance inst{std::move(c), std::move(graph), {}, {}, {}, {}};
  const auto& verts = inst.graph.vertices();
  for (VertexId i = 0; i < verts.size(); ++i) {
    const Vec x = position(verts[i], d, n);
    bool exits = false, hits_top = false, hits_bottom = false;
    for (std::size_t k = 0; k < d; ++k) {
      for (std::int64_t step : {1, -1}) {
        const LatticePoint y = shifted(verts[i], k, step);
        if (inst.graph.index_of(y)) continue;
        exits = true;
        const Vec yp = position(y, d, n);
        hits_top = hits_top || inst.cylinder.segment_meets_face(x, yp, +1);
        hits_bottom = hits_bottom || inst.cylinder.segment_meets_face(x, yp, -1);
      }
    }
    if (!exits) continue;
    const double s = base.height(x);
    if (s > kGeometryTolerance) inst.upper.push_back(i);
    if (s < -kGeometryTolerance) inst.lower.push_back(i);
    if (hits_top) inst.top.push_back(i);
    if (hits_bottom) inst.bottom.push_back(i);
  }
  return inst;
}

// τ(A,h) = φ(A₁ʰ → A₂ʰ in cyl(A,h)), in quantized units.
inline Capacity tau(const CylinderInstance& inst, std::span<const Capacity> caps) {
  return max_flow(inst.graph.graph(), inst.upper, inst.lower, caps).value;
}

inline Capacity tau(const CylinderInstance& inst, const CapacityField& field) {
  return tau(inst, field.capacities(inst.graph.edges()));
}

// φ(A,h) = φ(B(A,h) → T(A,h) in cyl(A,h)).
inline Capacity phi_cyl(const CylinderInstance& inst, std::span<const Capacity> caps) {
  return max_flow(inst.graph.graph(), inst.bottom, inst.top, caps).value;
}

inline Capacity phi_cyl(const CylinderInstance& inst, const CapacityField& field) {
  return phi_cyl(inst, field.capacities(inst.graph.edges()));
}

}  // namespace percoflow
