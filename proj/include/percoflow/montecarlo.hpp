#pragma once

// Replica scheduling and the small statistics toolkit shared by the
// estimators. Replica results are written to per-index slots, so aggregates
// do not depend on the number of workers or on scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace percoflow {

inline unsigned default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Calls fn(context, index) for index in [0, count), with one context per
// worker created by make_context().
template <class MakeContext, class Fn>
void run_replicas(std::size_t count, unsigned workers, MakeContext&& make_context, Fn&& fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    try {
      auto context = make_context();
      for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        fn(context, i);
      }
    } catch (...) {
      std::lock_guard lock(failure_mutex);
      if (!failure) failure = std::current_exception();
      next.store(count);
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
  }
  if (failure) std::rethrow_exception(failure);
}

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;
  double stderr_mean = 0.0;
};

inline SampleSummary summarize(std::span<const double> xs) {
  SampleSummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    const double delta = x - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (x - mean);
  }
  s.mean = mean;
  if (xs.size() > 1) {
    s.stddev = std::sqrt(m2 / static_cast<double>(xs.size() - 1));
    s.stderr_mean = s.stddev / std::sqrt(static_cast<double>(xs.size()));
  }
  return s;
}

// Empirical quantile with the "nearest rank" rule.
inline double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(xs.size())));
  rank = std::clamp<std::size_t>(rank, 1, xs.size());
  return xs[rank - 1];
}

inline constexpr double kZ95 = 1.959963984540054;

struct ProportionInterval {
  double lo = 0.0;
  double hi = 1.0;
};

// Wilson score interval for a binomial proportion.
inline ProportionInterval wilson_interval(std::size_t hits, std::size_t trials, double z = kZ95) {
  if (trials == 0) return {};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double center = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

// Ordinary least-squares slope of y against x.
inline double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() < 2) return 0.0;
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxx > 0 ? sxy / sxx : 0.0;
}

// One-sided two-proportion z statistic for H1: p_b > p_a.
inline double increase_z(std::size_t hits_a, std::size_t n_a, std::size_t hits_b, std::size_t n_b) {
  const double pa = static_cast<double>(hits_a) / static_cast<double>(n_a);
  const double pb = static_cast<double>(hits_b) / static_cast<double>(n_b);
  const double pooled = static_cast<double>(hits_a + hits_b) / static_cast<double>(n_a + n_b);
  const double se = std::sqrt(pooled * (1 - pooled) *
                              (1.0 / static_cast<double>(n_a) + 1.0 / static_cast<double>(n_b)));
  if (se == 0.0) return 0.0;
  return (pb - pa) / se;
}

inline constexpr double kZOneSided95 = 1.6448536269514722;

// True when no consecutive step of the sequence is a significant increase
// at the 5% level (one-sided two-proportion test).
inline bool no_significant_increase(std::span<const std::size_t> hits,
                                    std::span<const std::size_t> trials) {
  for (std::size_t i = 1; i < hits.size(); ++i) {
    if (increase_z(hits[i - 1], trials[i - 1], hits[i], trials[i]) > kZOneSided95) return false;
  }
  return true;
}

}  // namespace percoflow
