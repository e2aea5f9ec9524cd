#pragma once

// Capacity laws and the counter-based capacity field t(e).

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "percoflow/errors.hpp"
#include "percoflow/lattice.hpp"

namespace percoflow {

using Capacity = std::int64_t;

// Capacities are quantized to integer multiples of 1/kQuantScale.
inline constexpr Capacity kQuantScale = Capacity{1} << 20;

inline double dequantize(Capacity q) {
  return static_cast<double>(q) / static_cast<double>(kQuantScale);
}

inline Capacity quantize(double t) {
  return static_cast<Capacity>(std::llround(t * static_cast<double>(kQuantScale)));
}

// Bond percolation thresholds on Z^d. p_c(2) = 1/2 is Kesten's theorem;
// p_c(3) is the numerical estimate 0.2488126 (Lorenz & Ziff 1998).
inline constexpr double kBondThreshold2d = 0.5;
inline constexpr double kBondThreshold3d = 0.2488126;

inline double bond_percolation_threshold(std::size_t d) {
  if (d == 2) return kBondThreshold2d;
  if (d == 3) return kBondThreshold3d;
  throw Error(ErrorKind::InvalidArgument, "p_c(d) is only tabulated for d = 2, 3");
}

class CapacityLaw {
 public:
  enum class Kind { constant, bernoulli, two_point, uniform_int, exponential };

  CapacityLaw() = default;  // constant(0)

  static CapacityLaw constant(double a) {
    CapacityLaw law(Kind::constant);
    law.a_ = a;
    law.check();
    return law;
  }
  // t = a with probability p, else 0.
  static CapacityLaw bernoulli(double p, double a = 1.0) {
    CapacityLaw law(Kind::bernoulli);
    law.p_ = p;
    law.a_ = a;
    law.check();
    return law;
  }
  // t = a with probability p, else b.
  static CapacityLaw two_point(double p, double a, double b) {
    CapacityLaw law(Kind::two_point);
    law.p_ = p;
    law.a_ = a;
    law.b_ = b;
    law.check();
    return law;
  }
  // Uniform on the integers lo..hi.
  static CapacityLaw uniform_int(std::int64_t lo, std::int64_t hi) {
    CapacityLaw law(Kind::uniform_int);
    law.lo_ = lo;
    law.hi_ = hi;
    law.check();
    return law;
  }
  // Exponential(rate) conditioned on t < 40/rate.
  static CapacityLaw exponential(double rate) {
    CapacityLaw law(Kind::exponential);
    law.rate_ = rate;
    law.check();
    return law;
  }

  Kind kind() const { return kind_; }
  double p() const { return p_; }
  double a() const { return a_; }
  double b() const { return b_; }
  std::int64_t lo() const { return lo_; }
  std::int64_t hi() const { return hi_; }
  double rate() const { return rate_; }
  double truncation() const { return kind_ == Kind::exponential ? 40.0 / rate_ : 0.0; }

  // Λ(0) = P[t = 0].
  double atom0() const {
    switch (kind_) {
      case Kind::constant: return a_ == 0.0 ? 1.0 : 0.0;
      case Kind::bernoulli: return a_ == 0.0 ? 1.0 : 1.0 - p_;
      case Kind::two_point:
        return (a_ == 0.0 ? p_ : 0.0) + (b_ == 0.0 ? 1.0 - p_ : 0.0);
      case Kind::uniform_int:
        return lo_ == 0 ? 1.0 / static_cast<double>(hi_ - lo_ + 1) : 0.0;
      case Kind::exponential: return 0.0;
    }
    return 0.0;
  }

  double mean() const {
    switch (kind_) {
      case Kind::constant: return a_;
      case Kind::bernoulli: return p_ * a_;
      case Kind::two_point: return p_ * a_ + (1.0 - p_) * b_;
      case Kind::uniform_int: return 0.5 * static_cast<double>(lo_ + hi_);
      case Kind::exponential: {
        const double t = truncation();
        const double tail = std::exp(-rate_ * t);
        return 1.0 / rate_ - t * tail / (1.0 - tail);
      }
    }
    return 0.0;
  }

  // Every supported law is bounded, hence has all exponential moments.
  bool has_exp_moment() const { return true; }

  bool integer_valued() const {
    auto integral = [](double x) { return std::floor(x) == x; };
    switch (kind_) {
      case Kind::constant: return integral(a_);
      case Kind::bernoulli: return integral(a_);
      case Kind::two_point: return integral(a_) && integral(b_);
      case Kind::uniform_int: return true;
      case Kind::exponential: return false;
    }
    return false;
  }

  // Inverse CDF; u in [0,1).
  double quantile(double u) const {
    switch (kind_) {
      case Kind::constant: return a_;
      case Kind::bernoulli: return u < p_ ? a_ : 0.0;
      case Kind::two_point: return u < p_ ? a_ : b_;
      case Kind::uniform_int: {
        const auto span = static_cast<double>(hi_ - lo_ + 1);
        auto k = static_cast<std::int64_t>(u * span);
        if (k > hi_ - lo_) k = hi_ - lo_;
        return static_cast<double>(lo_ + k);
      }
      case Kind::exponential: {
        const double mass = -std::expm1(-rate_ * truncation());
        return -std::log1p(-u * mass) / rate_;
      }
    }
    return 0.0;
  }

  double max_value() const {
    switch (kind_) {
      case Kind::constant: return a_;
      case Kind::bernoulli: return a_;
      case Kind::two_point: return std::max(a_, b_);
      case Kind::uniform_int: return static_cast<double>(hi_);
      case Kind::exponential: return truncation();
    }
    return 0.0;
  }

  std::string describe() const;

  friend bool operator==(const CapacityLaw&, const CapacityLaw&) = default;

 private:
  explicit CapacityLaw(Kind kind) : kind_(kind) {}

  void check() const {
    auto bad = [](const char* what) { return Error(ErrorKind::InvalidArgument, what); };
    auto finite_nonneg = [](double x) { return std::isfinite(x) && x >= 0.0; };
    switch (kind_) {
      case Kind::constant:
        if (!finite_nonneg(a_)) throw bad("constant law needs a >= 0");
        break;
      case Kind::bernoulli:
        if (!(p_ >= 0.0 && p_ <= 1.0)) throw bad("bernoulli law needs p in [0,1]");
        if (!finite_nonneg(a_)) throw bad("bernoulli law needs a >= 0");
        break;
      case Kind::two_point:
        if (!(p_ >= 0.0 && p_ <= 1.0)) throw bad("two_point law needs p in [0,1]");
        if (!finite_nonneg(a_) || !finite_nonneg(b_)) throw bad("two_point values must be >= 0");
        break;
      case Kind::uniform_int:
        if (lo_ < 0 || hi_ < lo_) throw bad("uniform_int law needs 0 <= lo <= hi");
        break;
      case Kind::exponential:
        if (!(rate_ > 0.0) || !std::isfinite(rate_)) throw bad("exponential law needs rate > 0");
        break;
    }
    if (max_value() * static_cast<double>(kQuantScale) > 9.0e15) {
      throw bad("capacity values too large to quantize exactly");
    }
  }

  Kind kind_ = Kind::constant;
  double p_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
  std::int64_t lo_ = 0;
  std::int64_t hi_ = 0;
  double rate_ = 0.0;
};

inline std::string CapacityLaw::describe() const {
  auto num = [](double x) {
    std::string s = std::to_string(x);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };
  switch (kind_) {
    case Kind::constant: return "constant(" + num(a_) + ")";
    case Kind::bernoulli: return "bernoulli(" + num(p_) + "," + num(a_) + ")";
    case Kind::two_point: return "two_point(" + num(p_) + "," + num(a_) + "," + num(b_) + ")";
    case Kind::uniform_int:
      return "uniform_int(" + std::to_string(lo_) + "," + std::to_string(hi_) + ")";
    case Kind::exponential: return "exponential(" + num(rate_) + ")";
  }
  return "?";
}

struct LawReport {
  double atom0 = 0.0;
  double mean = 0.0;
  bool has_exp_moment = true;
  double critical = 0.0;  // p_c(d)
  bool subcritical = false;  // Λ(0) < 1 - p_c(d): ν is not identically zero
};

inline LawReport law_checks(const CapacityLaw& law, std::size_t d) {
  LawReport r;
  r.atom0 = law.atom0();
  r.mean = law.mean();
  r.has_exp_moment = law.has_exp_moment();
  r.critical = bond_percolation_threshold(d);
  r.subcritical = r.atom0 < 1.0 - r.critical;
  return r;
}

// ---------------------------------------------------------------------------
// Counter-based randomness.

// SplitMix64 finalizer.
inline constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  return mix64(h ^ mix64(v + 0x632be59bd9b4e019ULL));
}

// Sub-seed for an independent work item, e.g. (seed, mesh, replica).
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(seed ^ 0xd1b54a32d192ed03ULL);
  for (std::uint64_t v : path) h = hash_combine(h, v);
  return h;
}

inline double to_unit_interval(std::uint64_t h) {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// t(e) as a pure function of (seed, canonical edge).
class CapacityField {
 public:
  CapacityField(CapacityLaw law, std::uint64_t seed) : law_(law), seed_(seed) {}

  const CapacityLaw& law() const { return law_; }
  std::uint64_t seed() const { return seed_; }

  double uniform(const LatticeEdge& e) const {
    std::uint64_t h = mix64(seed_ ^ 0xa0761d6478bd642fULL);
    for (std::int64_t c : e.lower) h = hash_combine(h, static_cast<std::uint64_t>(c));
    h = hash_combine(h, e.axis);
    return to_unit_interval(h);
  }

  double sample(const LatticeEdge& e) const { return law_.quantile(uniform(e)); }

  Capacity quantized(const LatticeEdge& e) const { return quantize(sample(e)); }

  void fill(std::span<const LatticeEdge> edges, std::vector<Capacity>& out) const {
    out.resize(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) out[i] = quantized(edges[i]);
  }

  std::vector<Capacity> capacities(std::span<const LatticeEdge> edges) const {
    std::vector<Capacity> out;
    fill(edges, out);
    return out;
  }

 private:
  CapacityLaw law_;
  std::uint64_t seed_;
};

}  // namespace percoflow
