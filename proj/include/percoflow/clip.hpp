#pragma once

// Half-space clipping of box domains.
//
// The measure of a box cut by {w.x <= c} is computed recursively over
// dimension with the divergence theorem: the clipped box faces are
// lower-dimensional instances of the same problem, the cut facet area
// follows from the closure relation sum_f A_f n_f = 0, and the volume from
// (1/m) sum_f A_f (n_f . p_f). With a rational scalar type every quantity
// except the cut area (which needs |w|) is exact.

#include <cmath>
#include <cstddef>
#include <vector>

#include "percoflow/geometry.hpp"

namespace percoflow {

template <class Scalar>
Scalar scalar_from(const Rational& r) {
  if constexpr (std::is_floating_point_v<Scalar>) {
    return static_cast<Scalar>(to_double(r));
  } else {
    return Scalar(r.numerator()) / Scalar(r.denominator());
  }
}

namespace detail {

// Measure of [0,s] (product) intersected with the closed half-space
// {w.y <= c}. `s` and `w` have the same length m >= 0.
template <class Scalar>
Scalar clipped_measure(const std::vector<Scalar>& s,
                       const std::vector<Scalar>& w, const Scalar& c) {
  const std::size_t m = s.size();
  const Scalar zero(0);
  bool w_zero = true;
  for (const auto& wk : w) {
    if (wk != zero) w_zero = false;
  }
  if (m == 0 || w_zero) {
    if (c < zero) return zero;
    Scalar full(1);
    for (const auto& sk : s) full *= sk;
    return full;
  }
  if (m == 1) {
    // {y in [0,s] : w y <= c}
    Scalar t = c / w[0];
    if (w[0] > zero) {
      if (t <= zero) return zero;
      return t < s[0] ? t : s[0];
    }
    if (t >= s[0]) return zero;
    return t > zero ? s[0] - t : s[0];
  }
  Scalar weighted_faces(0);  // sum over upper faces of A_hi * s_k
  Scalar cut_times_norm(0);  // A_cut * |w|
  Scalar norm_sq(0);
  std::vector<Scalar> s_sub(m - 1), w_sub(m - 1);
  for (std::size_t k = 0; k < m; ++k) {
    for (std::size_t j = 0, i = 0; j < m; ++j) {
      if (j == k) continue;
      s_sub[i] = s[j];
      w_sub[i] = w[j];
      ++i;
    }
    Scalar lower = clipped_measure(s_sub, w_sub, c);
    Scalar upper = clipped_measure(s_sub, w_sub, Scalar(c - w[k] * s[k]));
    weighted_faces += upper * s[k];
    cut_times_norm += w[k] * (lower - upper);
    norm_sq += w[k] * w[k];
  }
  return (weighted_faces + cut_times_norm * c / norm_sq) / Scalar(m);
}

}  // namespace detail

// Everything known about box ∩ {w.x <= c} and box ∩ {w.x >= c}.
template <class Scalar>
struct BoxCut {
  Scalar volume_below{};
  Scalar volume_above{};
  // Indexed by face_index(axis, upper).
  std::vector<Scalar> face_below;
  std::vector<Scalar> face_above;
  // Area of the cut plane inside the box, times |w|.
  Scalar cut_times_norm{};
};

template <class Scalar>
BoxCut<Scalar> cut_box(const Box& box, const std::vector<Scalar>& w,
                       const Scalar& c) {
  const std::size_t d = box.dim();
  std::vector<Scalar> s(d);
  Scalar shift(0);
  for (std::size_t k = 0; k < d; ++k) {
    s[k] = scalar_from<Scalar>(box.axes[k].length());
    shift += w[k] * scalar_from<Scalar>(box.axes[k].lo);
  }
  const Scalar c0 = c - shift;
  std::vector<Scalar> neg_w(w);
  for (auto& x : neg_w) x = -x;

  BoxCut<Scalar> out;
  out.volume_below = detail::clipped_measure(s, w, c0);
  out.volume_above = detail::clipped_measure(s, neg_w, Scalar(-c0));
  out.face_below.assign(2 * d, Scalar(0));
  out.face_above.assign(2 * d, Scalar(0));
  std::vector<Scalar> s_sub(d - 1), w_sub(d - 1), nw_sub(d - 1);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t j = 0, i = 0; j < d; ++j) {
      if (j == k) continue;
      s_sub[i] = s[j];
      w_sub[i] = w[j];
      nw_sub[i] = -w[j];
      ++i;
    }
    for (bool upper : {false, true}) {
      const Scalar offset = upper ? Scalar(w[k] * s[k]) : Scalar(0);
      const std::size_t f = face_index(k, upper);
      out.face_below[f] = detail::clipped_measure(s_sub, w_sub, Scalar(c0 - offset));
      out.face_above[f] = detail::clipped_measure(s_sub, nw_sub, Scalar(offset - c0));
    }
    out.cut_times_norm +=
        w[k] * (out.face_below[face_index(k, false)] - out.face_below[face_index(k, true)]);
  }
  return out;
}

// Volumes of Ω ∩ {w.x <= c} and Ω ∩ {w.x >= c}; exact for rational Scalar.
template <class Scalar>
std::pair<Scalar, Scalar> clip_volumes(const Domain& domain,
                                       const std::vector<Scalar>& w,
                                       const Scalar& c) {
  Scalar below(0), above(0);
  for (const auto& b : domain.boxes()) {
    auto cut = cut_box(b, w, c);
    below += cut.volume_below;
    above += cut.volume_above;
  }
  return {below, above};
}

// ---------------------------------------------------------------------------
// Polyhedral surface sets.

enum class FacetLocation {
  interior,          // ∂F ∩ Ω
  on_sink,           // Γ² ∩ ∂(F ∩ Ω)
  on_source,         // Γ¹ ∩ ∂(Ω \ F)
  neutral_boundary,  // other pieces of ∂F on Γ; carry no energy
};

inline const char* to_string(FacetLocation loc) {
  switch (loc) {
    case FacetLocation::interior: return "interior";
    case FacetLocation::on_sink: return "on_sink";
    case FacetLocation::on_source: return "on_source";
    case FacetLocation::neutral_boundary: return "neutral_boundary";
  }
  return "neutral_boundary";
}

struct SurfaceFacet {
  FacetLocation location;
  double area;
  Vec normal;
};

enum class SurfaceKind { empty, whole, halfspace };

struct SurfaceSet {
  std::size_t dim = 0;
  SurfaceKind kind = SurfaceKind::halfspace;
  Vec cut_normal;  // halfspace only
  double cut_offset = 0.0;
  double volume = 0.0;             // L^d(F)
  double complement_volume = 0.0;  // L^d(Ω \ F)
  std::vector<SurfaceFacet> facets;

  double area(FacetLocation loc) const {
    double a = 0.0;
    for (const auto& f : facets) {
      if (f.location == loc) a += f.area;
    }
    return a;
  }

  // Perimeter of F inside Ω; for polyhedra the interior facet area.
  double perimeter() const { return area(FacetLocation::interior); }
};

inline SurfaceSet empty_surface(const Domain& domain) {
  SurfaceSet s;
  s.dim = domain.dim();
  s.kind = SurfaceKind::empty;
  s.complement_volume = to_double(domain.volume());
  for (const auto& f : domain.facets()) {
    if (f.tag == FaceTag::source) {
      s.facets.push_back({FacetLocation::on_source, to_double(domain.facet_area(f)),
                          domain.facet_normal(f)});
    }
  }
  return s;
}

inline SurfaceSet whole_surface(const Domain& domain) {
  SurfaceSet s;
  s.dim = domain.dim();
  s.kind = SurfaceKind::whole;
  s.volume = to_double(domain.volume());
  for (const auto& f : domain.facets()) {
    auto loc = f.tag == FaceTag::sink ? FacetLocation::on_sink
                                      : FacetLocation::neutral_boundary;
    s.facets.push_back({loc, to_double(domain.facet_area(f)), domain.facet_normal(f)});
  }
  return s;
}

// F = Ω ∩ {x.v <= c}, decomposed into the cut facets inside Ω and the pieces
// of tagged boundary facets bounding F (or, for source facets, Ω \ F).
inline SurfaceSet halfspace_clip(const Domain& domain, const UnitVector& v,
                                 double c) {
  const std::size_t d = domain.dim();
  if (v.dim() != d) throw Error(ErrorKind::InvalidArgument, "normal dimension mismatch");
  SurfaceSet s;
  s.dim = d;
  s.kind = SurfaceKind::halfspace;
  s.cut_normal = v.components();
  s.cut_offset = c;
  const Vec& w = v.components();

  std::vector<bool> below_empty(domain.boxes().size());
  std::vector<bool> above_empty(domain.boxes().size());
  std::vector<BoxCut<double>> cuts;
  for (std::size_t b = 0; b < domain.boxes().size(); ++b) {
    const Box& box = domain.boxes()[b];
    cuts.push_back(cut_box(box, w, c));
    const double vol = to_double(box.volume());
    below_empty[b] = cuts[b].volume_below <= 1e-12 * vol;
    above_empty[b] = cuts[b].volume_above <= 1e-12 * vol;
    if (!below_empty[b]) s.volume += cuts[b].volume_below;
    if (!above_empty[b]) s.complement_volume += cuts[b].volume_above;
    if (!below_empty[b] && !above_empty[b] && cuts[b].cut_times_norm > 0) {
      s.facets.push_back({FacetLocation::interior, cuts[b].cut_times_norm, w});
    }
  }

  // A cut plane lying exactly on a face shared by two boxes is interior to Ω
  // but is invisible to the per-box computation above.
  std::size_t axis = d;
  std::size_t nonzero = 0;
  for (std::size_t k = 0; k < d; ++k) {
    if (std::abs(w[k]) > kUnitTolerance) {
      axis = k;
      ++nonzero;
    }
  }
  if (nonzero == 1) {
    const double t = c / w[axis];
    const auto& boxes = domain.boxes();
    for (std::size_t a = 0; a < boxes.size(); ++a) {
      if (std::abs(to_double(boxes[a].axes[axis].hi) - t) > kGeometryTolerance) continue;
      for (std::size_t b = 0; b < boxes.size(); ++b) {
        if (boxes[b].axes[axis].lo != boxes[a].axes[axis].hi) continue;
        double shared = 1.0;
        for (std::size_t k = 0; k < d; ++k) {
          if (k == axis) continue;
          Rational o = std::min(boxes[a].axes[k].hi, boxes[b].axes[k].hi) -
                       std::max(boxes[a].axes[k].lo, boxes[b].axes[k].lo);
          shared *= o > 0 ? to_double(o) : 0.0;
        }
        if (shared > 0) s.facets.push_back({FacetLocation::interior, shared, w});
      }
    }
  }

  for (const auto& f : domain.facets()) {
    const auto& cut = cuts[f.box];
    const std::size_t idx = face_index(f.axis, f.upper);
    const double in_f = below_empty[f.box] ? 0.0 : cut.face_below[idx];
    const double in_complement = above_empty[f.box] ? 0.0 : cut.face_above[idx];
    const Vec n = domain.facet_normal(f);
    if (f.tag == FaceTag::sink && in_f > 0) {
      s.facets.push_back({FacetLocation::on_sink, in_f, n});
    } else if (in_f > 0) {
      s.facets.push_back({FacetLocation::neutral_boundary, in_f, n});
    }
    if (f.tag == FaceTag::source && in_complement > 0) {
      s.facets.push_back({FacetLocation::on_source, in_complement, n});
    }
  }
  return s;
}

}  // namespace percoflow
