#pragma once

// Continuous objects: exact-rational box domains with tagged boundary
// facets, and floating-point hyperrectangles, cylinders and balls.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

#include "percoflow/errors.hpp"

namespace percoflow {

using Rational = boost::rational<std::int64_t>;

// Boost 1.74's mixed rational/integer operator== recurses forever under the
// C++20 rewritten-comparison rules. Compare against Rational(k) instead.
bool operator==(const Rational&, int) = delete;
bool operator==(int, const Rational&) = delete;
bool operator==(const Rational&, std::int64_t) = delete;
bool operator==(std::int64_t, const Rational&) = delete;
using RationalPoint = std::vector<Rational>;
using Vec = std::vector<double>;

inline constexpr double kUnitTolerance = 1e-12;
inline constexpr double kGeometryTolerance = 1e-12;

inline double to_double(const Rational& r) {
  return static_cast<double>(r.numerator()) /
         static_cast<double>(r.denominator());
}

// Accepts "p/q", "p" and finite decimals such as "-0.25".
inline Rational parse_rational(std::string_view text) {
  auto fail = [&] {
    return Error(ErrorKind::ParseError,
                 "not a rational: '" + std::string(text) + "'");
  };
  auto parse_int = [&](std::string_view s) -> std::int64_t {
    if (s.empty()) throw fail();
    std::size_t i = 0;
    bool negative = false;
    if (s[0] == '-' || s[0] == '+') {
      negative = s[0] == '-';
      i = 1;
    }
    if (i == s.size()) throw fail();
    std::int64_t value = 0;
    for (; i < s.size(); ++i) {
      if (s[i] < '0' || s[i] > '9') throw fail();
      if (value > (INT64_MAX - 9) / 10) throw fail();
      value = value * 10 + (s[i] - '0');
    }
    return negative ? -value : value;
  };
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    std::int64_t q = parse_int(text.substr(slash + 1));
    if (q == 0) throw fail();
    return Rational(parse_int(text.substr(0, slash)), q);
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    std::string_view frac = text.substr(dot + 1);
    if (frac.size() > 15) throw fail();
    std::string digits(text.substr(0, dot));
    bool negative = !digits.empty() && digits[0] == '-';
    if (digits.empty() || digits == "-" || digits == "+") digits += "0";
    std::int64_t whole = parse_int(digits);
    std::int64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    if (frac.find_first_of("+-") != std::string_view::npos) throw fail();
    std::int64_t part = frac.empty() ? 0 : parse_int(frac);
    Rational magnitude = Rational(whole < 0 ? -whole : whole) +
                         Rational(part, scale);
    return negative ? -magnitude : magnitude;
  }
  return Rational(parse_int(text));
}

inline std::string format_rational(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

// ---------------------------------------------------------------------------
// Small dense vector helpers.

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline Vec axpy(double alpha, std::span<const double> x,
                std::span<const double> y) {
  Vec out(y.begin(), y.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += alpha * x[i];
  return out;
}

inline Vec scaled(std::span<const double> x, double alpha) {
  Vec out(x.begin(), x.end());
  for (double& c : out) c *= alpha;
  return out;
}

class UnitVector {
 public:
  explicit UnitVector(Vec components) : v_(std::move(components)) {
    if (v_.empty() || std::abs(norm2(v_) - 1.0) > kUnitTolerance) {
      throw Error(ErrorKind::InvalidArgument, "vector is not unit length");
    }
  }

  static UnitVector normalized(Vec w) {
    double len = norm2(w);
    if (!(len > 0.0) || !std::isfinite(len)) {
      throw Error(ErrorKind::InvalidArgument, "cannot normalize zero vector");
    }
    for (double& c : w) c /= len;
    return UnitVector(std::move(w));
  }

  static UnitVector axis(std::size_t dim, std::size_t k, double sign = 1.0) {
    Vec w(dim, 0.0);
    w[k] = sign < 0 ? -1.0 : 1.0;
    return UnitVector(std::move(w));
  }

  std::size_t dim() const { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  const Vec& components() const { return v_; }
  operator std::span<const double>() const { return v_; }

  UnitVector operator-() const { return UnitVector(scaled(v_, -1.0)); }

 private:
  Vec v_;
};

// ---------------------------------------------------------------------------
// Axis-aligned boxes and domains.

struct Interval {
  Rational lo;
  Rational hi;

  Rational length() const { return hi - lo; }
};

struct Box {
  std::vector<Interval> axes;

  std::size_t dim() const { return axes.size(); }

  Rational volume() const {
    Rational v(1);
    for (const auto& a : axes) v *= a.length();
    return v;
  }
};

// L-infinity distance from x to the closure of `box` (equal to the distance
// to the open box). Degenerate boxes (facets) are allowed.
inline Rational linf_distance(const RationalPoint& x, const Box& box) {
  Rational best(0);
  for (std::size_t k = 0; k < box.dim(); ++k) {
    Rational gap(0);
    if (x[k] < box.axes[k].lo) gap = box.axes[k].lo - x[k];
    if (x[k] > box.axes[k].hi) gap = x[k] - box.axes[k].hi;
    best = std::max(best, gap);
  }
  return best;
}

enum class FaceTag { source, sink, neutral };

inline const char* to_string(FaceTag tag) {
  switch (tag) {
    case FaceTag::source: return "source";
    case FaceTag::sink: return "sink";
    case FaceTag::neutral: return "neutral";
  }
  return "neutral";
}

// Closed face of one domain box, normal to `axis`, on the upper or lower side.
struct Facet {
  std::size_t box = 0;
  std::size_t axis = 0;
  bool upper = false;
  FaceTag tag = FaceTag::neutral;

  double normal_sign() const { return upper ? 1.0 : -1.0; }
};

class Domain {
 public:
  // Validating constructor. Box interiors must be pairwise disjoint and the
  // union connected; facets must lie on the outer boundary.
  Domain(std::size_t dim, std::vector<Box> boxes, std::vector<Facet> facets)
      : dim_(dim), boxes_(std::move(boxes)), facets_(std::move(facets)) {
    validate();
  }

  std::size_t dim() const { return dim_; }
  const std::vector<Box>& boxes() const { return boxes_; }
  const std::vector<Facet>& facets() const { return facets_; }

  Rational volume() const {
    Rational v(0);
    for (const auto& b : boxes_) v += b.volume();
    return v;
  }

  Box facet_box(const Facet& f) const {
    Box face = boxes_[f.box];
    const Rational c = f.upper ? face.axes[f.axis].hi : face.axes[f.axis].lo;
    face.axes[f.axis] = Interval{c, c};
    return face;
  }

  Rational facet_area(const Facet& f) const {
    Rational a(1);
    for (std::size_t k = 0; k < dim_; ++k) {
      if (k != f.axis) a *= boxes_[f.box].axes[k].length();
    }
    return a;
  }

  Vec facet_normal(const Facet& f) const {
    Vec n(dim_, 0.0);
    n[f.axis] = f.normal_sign();
    return n;
  }

  Rational tagged_area(FaceTag tag) const {
    Rational a(0);
    for (const auto& f : facets_) {
      if (f.tag == tag) a += facet_area(f);
    }
    return a;
  }

  bool has_tag(FaceTag tag) const {
    return std::any_of(facets_.begin(), facets_.end(),
                       [&](const Facet& f) { return f.tag == tag; });
  }

 private:
  static Rational overlap(const Interval& a, const Interval& b) {
    return std::min(a.hi, b.hi) - std::max(a.lo, b.lo);
  }

  void validate() const {
    if (dim_ < 2) throw Error(ErrorKind::InvalidDomain, "dimension must be >= 2");
    if (boxes_.empty()) throw Error(ErrorKind::EmptyBox, "domain has no boxes");
    for (const auto& b : boxes_) {
      if (b.dim() != dim_) {
        throw Error(ErrorKind::InvalidDomain, "box dimension mismatch");
      }
      for (const auto& a : b.axes) {
        if (!(a.lo < a.hi)) {
          throw Error(ErrorKind::EmptyBox,
                      "interval [" + format_rational(a.lo) + "," +
                          format_rational(a.hi) + "] is empty");
        }
      }
    }
    const std::size_t m = boxes_.size();
    std::vector<std::size_t> parent(m);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](std::size_t i) {
      while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
      }
      return i;
    };
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        std::size_t positive = 0;
        std::size_t touching_axis = dim_;
        for (std::size_t k = 0; k < dim_; ++k) {
          Rational o = overlap(boxes_[i].axes[k], boxes_[j].axes[k]);
          if (o > 0) {
            ++positive;
          } else if (o == Rational(0)) {
            touching_axis = k;
          }
        }
        if (positive == dim_) {
          throw Error(ErrorKind::InvalidDomain, "box interiors overlap");
        }
        if (positive + 1 == dim_ && touching_axis < dim_) {
          parent[find(i)] = find(j);
        }
      }
    }
    for (std::size_t i = 1; i < m; ++i) {
      if (find(i) != find(0)) {
        throw Error(ErrorKind::InvalidDomain, "domain is not connected");
      }
    }

    for (std::size_t i = 0; i < facets_.size(); ++i) {
      const Facet& f = facets_[i];
      if (f.box >= m || f.axis >= dim_) {
        throw Error(ErrorKind::InvalidDomain, "facet references unknown box");
      }
      for (std::size_t j = 0; j < i; ++j) {
        const Facet& g = facets_[j];
        if (g.box == f.box && g.axis == f.axis && g.upper == f.upper) {
          throw Error(ErrorKind::InvalidDomain, "duplicate facet");
        }
      }
      // The slab just outside the facet must not be covered by another box.
      const Box& b = boxes_[f.box];
      const Rational c = f.upper ? b.axes[f.axis].hi : b.axes[f.axis].lo;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == f.box) continue;
        const Box& other = boxes_[j];
        const Rational start =
            f.upper ? other.axes[f.axis].lo : other.axes[f.axis].hi;
        if (start != c) continue;
        bool transverse = true;
        for (std::size_t k = 0; k < dim_; ++k) {
          if (k != f.axis && !(overlap(b.axes[k], other.axes[k]) > 0)) {
            transverse = false;
          }
        }
        if (transverse) {
          throw Error(ErrorKind::InvalidDomain,
                      "facet is not on the domain boundary");
        }
      }
    }
    if (!has_tag(FaceTag::source) || !has_tag(FaceTag::sink)) {
      throw Error(ErrorKind::NoSourceOrSink,
                  "domain needs at least one source and one sink facet");
    }
    for (const auto& f : facets_) {
      if (f.tag != FaceTag::source) continue;
      const Box fb = facet_box(f);
      for (const auto& g : facets_) {
        if (g.tag != FaceTag::sink) continue;
        const Box gb = facet_box(g);
        bool meet = true;
        for (std::size_t k = 0; k < dim_; ++k) {
          if (overlap(fb.axes[k], gb.axes[k]) < 0) meet = false;
        }
        if (meet) {
          throw Error(ErrorKind::InvalidDomain,
                      "source and sink facets intersect");
        }
      }
    }
  }

  std::size_t dim_;
  std::vector<Box> boxes_;
  std::vector<Facet> facets_;
};

// Face tags of a single box, indexed as 2*axis + (upper ? 1 : 0).
using BoxFaceTags = std::vector<FaceTag>;

inline std::size_t face_index(std::size_t axis, bool upper) {
  return 2 * axis + (upper ? 1 : 0);
}

inline Domain make_box_domain(const std::vector<Interval>& bounds,
                              const BoxFaceTags& tags) {
  const std::size_t d = bounds.size();
  for (const auto& a : bounds) {
    if (!(a.lo < a.hi)) {
      throw Error(ErrorKind::EmptyBox, "interval [" + format_rational(a.lo) +
                                           "," + format_rational(a.hi) +
                                           "] is empty");
    }
  }
  if (tags.size() != 2 * d) {
    throw Error(ErrorKind::InvalidArgument, "need one tag per box face");
  }
  std::vector<Facet> facets;
  for (std::size_t k = 0; k < d; ++k) {
    for (bool upper : {false, true}) {
      facets.push_back(Facet{0, k, upper, tags[face_index(k, upper)]});
    }
  }
  return Domain(d, {Box{bounds}}, std::move(facets));
}

// (0,1)^d with the lower face of `axis` as source and the upper face as sink.
inline Domain unit_cube_domain(std::size_t d, std::size_t axis = 0) {
  std::vector<Interval> bounds(d, Interval{Rational(0), Rational(1)});
  BoxFaceTags tags(2 * d, FaceTag::neutral);
  tags[face_index(axis, false)] = FaceTag::source;
  tags[face_index(axis, true)] = FaceTag::sink;
  return make_box_domain(bounds, tags);
}

inline Rational linf_distance(const RationalPoint& x, const Domain& domain) {
  std::optional<Rational> best;
  for (const auto& b : domain.boxes()) {
    Rational dist = linf_distance(x, b);
    if (!best || dist < *best) best = dist;
  }
  return *best;
}

inline Rational linf_distance(const RationalPoint& x, const Domain& domain,
                              const Facet& facet) {
  return linf_distance(x, domain.facet_box(facet));
}

// Distance to the union of all facets carrying `tag`; nullopt if none do.
inline std::optional<Rational> linf_distance(const RationalPoint& x,
                                             const Domain& domain,
                                             FaceTag tag) {
  std::optional<Rational> best;
  for (const auto& f : domain.facets()) {
    if (f.tag != tag) continue;
    Rational dist = linf_distance(x, domain, f);
    if (!best || dist < *best) best = dist;
  }
  return best;
}

// ---------------------------------------------------------------------------
// Hyperrectangles, cylinders and balls (floating point).

class Hyperrectangle {
 public:
  // Builds an orthonormal frame spanning the hyperplane orthogonal to
  // `normal` from the coordinate axes least aligned with it.
  Hyperrectangle(Vec center, UnitVector normal, Vec sides)
      : center_(std::move(center)), normal_(std::move(normal)),
        sides_(std::move(sides)) {
    const std::size_t d = normal_.dim();
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
      return std::abs(normal_[a]) < std::abs(normal_[b]);
    });
    for (std::size_t idx : order) {
      if (frame_.size() + 1 == d) break;
      Vec u(d, 0.0);
      u[idx] = 1.0;
      u = axpy(-dot(u, normal_), normal_, u);
      for (const auto& f : frame_) u = axpy(-dot(u, f), f, u);
      double len = norm2(u);
      if (len < 1e-6) continue;
      frame_.push_back(scaled(u, 1.0 / len));
    }
    check();
  }

  Hyperrectangle(Vec center, UnitVector normal, std::vector<Vec> frame,
                 Vec sides)
      : center_(std::move(center)), normal_(std::move(normal)),
        frame_(std::move(frame)), sides_(std::move(sides)) {
    check();
  }

  std::size_t dim() const { return normal_.dim(); }
  const Vec& center() const { return center_; }
  const UnitVector& normal() const { return normal_; }
  const std::vector<Vec>& frame() const { return frame_; }
  const Vec& sides() const { return sides_; }

  double area() const {
    double a = 1.0;
    for (double s : sides_) a *= s;
    return a;
  }

  // Signed offset of p along the normal, measured from the center.
  double height(std::span<const double> p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - center_[i]) * normal_[i];
    return s;
  }

  double frame_coordinate(std::span<const double> p, std::size_t i) const {
    double s = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) s += (p[k] - center_[k]) * frame_[i][k];
    return s;
  }

  bool within_sides(std::span<const double> p,
                    double tol = kGeometryTolerance) const {
    for (std::size_t i = 0; i < frame_.size(); ++i) {
      if (std::abs(frame_coordinate(p, i)) > sides_[i] / 2 + tol) return false;
    }
    return true;
  }

 private:
  void check() const {
    const std::size_t d = normal_.dim();
    if (center_.size() != d || sides_.size() + 1 != d || frame_.size() + 1 != d) {
      throw Error(ErrorKind::InvalidArgument, "hyperrectangle dimension mismatch");
    }
    for (double s : sides_) {
      if (!(s > 0)) throw Error(ErrorKind::InvalidArgument, "side lengths must be > 0");
    }
    for (std::size_t i = 0; i < frame_.size(); ++i) {
      if (std::abs(dot(frame_[i], normal_)) > kUnitTolerance ||
          std::abs(norm2(frame_[i]) - 1.0) > kUnitTolerance) {
        throw Error(ErrorKind::InvalidArgument, "frame is not orthonormal");
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (std::abs(dot(frame_[i], frame_[j])) > kUnitTolerance) {
          throw Error(ErrorKind::InvalidArgument, "frame is not orthonormal");
        }
      }
    }
  }

  Vec center_;
  UnitVector normal_;
  std::vector<Vec> frame_;
  Vec sides_;
};

// {x + t v | x in A, t in [-h, h]}.
class Cylinder {
 public:
  Cylinder(Hyperrectangle base, double half_height)
      : base_(std::move(base)), h_(half_height) {
    if (!(half_height > 0)) {
      throw Error(ErrorKind::NonpositiveHeight, "cylinder half-height must be > 0");
    }
  }

  const Hyperrectangle& base() const { return base_; }
  double half_height() const { return h_; }
  std::size_t dim() const { return base_.dim(); }

  bool contains(std::span<const double> p, double tol = kGeometryTolerance) const {
    return std::abs(base_.height(p)) <= h_ + tol && base_.within_sides(p, tol);
  }

  // Closed convex set: an open segment lies inside iff both endpoints do.
  bool contains_open_segment(std::span<const double> a,
                             std::span<const double> b) const {
    return contains(a) && contains(b);
  }

  // Does the closed segment [a,b] meet the face A + side*h*v (side = +1 for
  // the top, -1 for the bottom)? Segments parallel to the face plane are
  // classified by their midpoint.
  bool segment_meets_face(std::span<const double> a, std::span<const double> b,
                          int side, double tol = kGeometryTolerance) const {
    const double target = side > 0 ? h_ : -h_;
    const double sa = base_.height(a);
    const double sb = base_.height(b);
    Vec p(a.size());
    if (std::abs(sb - sa) <= tol) {
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = 0.5 * (a[i] + b[i]);
    } else {
      double t = std::clamp((target - sa) / (sb - sa), 0.0, 1.0);
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = a[i] + t * (b[i] - a[i]);
    }
    return std::abs(base_.height(p) - target) <= tol && base_.within_sides(p, tol);
  }

 private:
  Hyperrectangle base_;
  double h_;
};

inline Cylinder cyl(const Hyperrectangle& base, double half_height) {
  return Cylinder(base, half_height);
}

// Closed ball B(x, r) with the half-balls B+/B- and the disc of normal v.
class Ball {
 public:
  Ball(Vec center, double radius) : center_(std::move(center)), r_(radius) {
    if (radius < 0) throw Error(ErrorKind::InvalidArgument, "negative radius");
  }

  const Vec& center() const { return center_; }
  double radius() const { return r_; }

  bool contains(std::span<const double> y, double tol = kGeometryTolerance) const {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - center_[i]) * (y[i] - center_[i]);
    return std::sqrt(s) <= r_ + tol;
  }

  bool contains_open_segment(std::span<const double> a,
                             std::span<const double> b) const {
    return contains(a) && contains(b);
  }

  bool in_upper_half(std::span<const double> y, const UnitVector& v,
                     double tol = kGeometryTolerance) const {
    return contains(y, tol) && offset(y, v) >= -tol;
  }

  bool in_lower_half(std::span<const double> y, const UnitVector& v,
                     double tol = kGeometryTolerance) const {
    return contains(y, tol) && offset(y, v) <= tol;
  }

  bool in_disc(std::span<const double> y, const UnitVector& v,
               double tol = kGeometryTolerance) const {
    return contains(y, tol) && std::abs(offset(y, v)) <= tol;
  }

 private:
  double offset(std::span<const double> y, const UnitVector& v) const {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - center_[i]) * v[i];
    return s;
  }

  Vec center_;
  double r_;
};

// Volume of the unit ball in R^d.
inline double unit_ball_volume(std::size_t d) {
  const double half = static_cast<double>(d) / 2.0;
  return std::pow(std::numbers::pi, half) / std::tgamma(half + 1.0);
}

}  // namespace percoflow
