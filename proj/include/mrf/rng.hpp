#ifndef MRF_RNG_HPP
#define MRF_RNG_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <thread>
#include <vector>

namespace mrf {

/// splitmix64 finalizer.  All randomness in the library is derived from this
/// mixer so that results are bit-reproducible across platforms (the standard
/// <random> distributions are not).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t hash_u64(std::uint64_t seed, std::uint64_t v) noexcept {
  return mix64(seed + kGolden * (v + 0x632be59bd9b4e019ULL));
}

inline std::uint64_t hash_str(std::uint64_t seed, std::string_view tag) noexcept {
  std::uint64_t h = mix64(seed + kGolden);
  for (unsigned char ch : tag) h = hash_u64(h, ch);
  return h;
}

/// splitmix64 sequence generator.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept { return mix64(state_ += kGolden); }

  /// Uniform in [0,1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n) noexcept {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

  /// Standard normal via the polar method (one value cached).
  double normal() noexcept {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    cached_ = v * m;
    have_cached_ = true;
    return u * m;
  }

  /// Poisson sample.  Knuth product for small means, additive split for
  /// large ones (a Poisson(m) is a sum of two independent Poisson(m/2)).
  std::uint64_t poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
    if (mean == 0.0) return 0;
    if (mean > 60.0) return poisson(mean / 2.0) + poisson(mean / 2.0);
    const double limit = std::exp(-mean);
    std::uint64_t k = 0;
    double prod = uniform();
    while (prod > limit) {
      ++k;
      prod *= uniform();
    }
    return k;
  }

 private:
  std::uint64_t state_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

/// Splittable stream derivation: (master seed, module tag, replica index)
/// fully determine the stream, so replicas are independent and every run is
/// reproducible from the master seed alone.
inline Stream derive_stream(std::uint64_t master, std::string_view tag, std::uint64_t replica = 0) {
  return Stream(hash_u64(hash_str(master, tag), replica));
}

/// Deterministic parallel reduction.  The index range is split into
/// contiguous chunks, one accumulator per chunk, merged in chunk order, so
/// the result does not depend on thread scheduling (each body(index) must
/// derive its own randomness from the index).
template <class Acc, class Body, class Merge>
Acc parallel_reduce(std::size_t n, unsigned threads, Acc init, Body body, Merge merge) {
  if (threads <= 1 || n < 2048) {
    Acc acc = init;
    for (std::size_t i = 0; i < n; ++i) body(acc, i);
    return acc;
  }
  const std::size_t nchunks = threads;
  std::vector<Acc> partial(nchunks, init);
  std::vector<std::thread> pool;
  pool.reserve(nchunks);
  for (std::size_t t = 0; t < nchunks; ++t) {
    const std::size_t lo = n * t / nchunks;
    const std::size_t hi = n * (t + 1) / nchunks;
    pool.emplace_back([&, lo, hi, t] {
      for (std::size_t i = lo; i < hi; ++i) body(partial[t], i);
    });
  }
  for (auto& th : pool) th.join();
  Acc acc = init;
  for (std::size_t t = 0; t < nchunks; ++t) merge(acc, partial[t]);
  return acc;
}

/// Running mean / variance accumulator (Welford).
class Welford {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const Welford& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double d = o.mean_ - mean_;
    const std::uint64_t n = n_ + o.n_;
    m2_ += o.m2_ + d * d * (static_cast<double>(n_) * static_cast<double>(o.n_)) / static_cast<double>(n);
    mean_ += d * static_cast<double>(o.n_) / static_cast<double>(n);
    n_ = n;
  }

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace mrf

#endif  // MRF_RNG_HPP
