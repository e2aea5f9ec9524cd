#pragma once

// The surface energy I_Ω(F) of polyhedral sets and an upper estimate of
// φ_Ω = inf I_Ω(F) over half-space cuts of Ω.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "percoflow/clip.hpp"
#include "percoflow/geometry.hpp"
#include "percoflow/nu.hpp"

namespace percoflow {

struct EnergyValue {
  double value = 0.0;
  double interior = 0.0;  // ∫_{∂F∩Ω} ν(v_F)
  double sink = 0.0;      // ∫_{Γ²∩∂F} ν(v_Ω)
  double source = 0.0;    // ∫_{Γ¹∩∂(Ω\F)} ν(v_Ω)
  double stderr_value = 0.0;  // propagated from the table, linearly
};

inline EnergyValue energy(const SurfaceSet& f, const NuTable& table) {
  if (f.dim != table.dim()) throw Error(ErrorKind::InvalidArgument, "dimension mismatch");
  EnergyValue e;
  for (const auto& facet : f.facets) {
    if (facet.location == FacetLocation::neutral_boundary || facet.area <= 0) continue;
    const NuValue nu = table.at(facet.normal);
    const double term = facet.area * nu.value;
    e.stderr_value += facet.area * nu.stderr_value;
    switch (facet.location) {
      case FacetLocation::interior: e.interior += term; break;
      case FacetLocation::on_sink: e.sink += term; break;
      case FacetLocation::on_source: e.source += term; break;
      case FacetLocation::neutral_boundary: break;
    }
  }
  e.value = e.interior + e.sink + e.source;
  return e;
}

struct CutFamily {
  std::vector<UnitVector> directions;
  // Offsets as fractions of the range of x.v over Ω, strictly inside (0,1).
  std::vector<double> fractions;

  static CutFamily regular(std::vector<UnitVector> directions, std::size_t steps = 20) {
    CutFamily f;
    f.directions = std::move(directions);
    for (std::size_t k = 1; k < steps; ++k) {
      f.fractions.push_back(static_cast<double>(k) / static_cast<double>(steps));
    }
    return f;
  }
};

struct Candidate {
  SurfaceKind kind = SurfaceKind::empty;
  Vec v;  // halfspace only
  double c = 0.0;
  EnergyValue energy;
};

struct PhiOmegaResult {
  double phi_omega_hat = 0.0;  // upper bound for φ_Ω over the family
  Candidate argmin;
  std::vector<Candidate> trace;
};

// Range of x.v over the closure of Ω.
inline std::pair<double, double> projection_range(const Domain& domain, std::span<const double> v) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& box : domain.boxes()) {
    double a = 0.0, b = 0.0;
    for (std::size_t k = 0; k < domain.dim(); ++k) {
      const double x0 = to_double(box.axes[k].lo) * v[k];
      const double x1 = to_double(box.axes[k].hi) * v[k];
      a += std::min(x0, x1);
      b += std::max(x0, x1);
    }
    lo = std::min(lo, a);
    hi = std::max(hi, b);
  }
  return {lo, hi};
}

inline PhiOmegaResult phi_omega_search(const Domain& domain, const NuTable& table,
                                       const CutFamily& family) {
  PhiOmegaResult out;
  out.trace.push_back({SurfaceKind::empty, {}, 0.0, energy(empty_surface(domain), table)});
  out.trace.push_back({SurfaceKind::whole, {}, 0.0, energy(whole_surface(domain), table)});
  for (const auto& v : family.directions) {
    const auto [lo, hi] = projection_range(domain, v.components());
    for (double t : family.fractions) {
      const double c = lo + t * (hi - lo);
      out.trace.push_back(
          {SurfaceKind::halfspace, v.components(), c, energy(halfspace_clip(domain, v, c), table)});
    }
  }
  // First minimum in trace order.
  auto best = std::min_element(out.trace.begin(), out.trace.end(),
                               [](const Candidate& a, const Candidate& b) {
                                 return a.energy.value < b.energy.value;
                               });
  out.argmin = *best;
  out.phi_omega_hat = best->energy.value;
  return out;
}

inline const char* to_string(SurfaceKind kind) {
  switch (kind) {
    case SurfaceKind::empty: return "empty";
    case SurfaceKind::whole: return "whole";
    case SurfaceKind::halfspace: return "halfspace";
  }
  return "halfspace";
}

}  // namespace percoflow
