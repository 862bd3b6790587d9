#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace clda {

// Seedable generator with portable output. All draws go through
// next_u64(); std::random distributions are avoided because their
// output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Child seed for an independent stream: hash(parent_seed, label).
  static std::uint64_t derive_seed(std::uint64_t parent, std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ull ^ parent;
    for (unsigned char c : label) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return mix64(h);
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53 bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n). Lemire's multiply-shift, unbiased.
  std::uint64_t next_below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    std::uint64_t lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t t = (-n) % n;
      while (lo < t) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Standard normal via Box-Muller (one value per call).
  double next_normal() {
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  // Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
  double next_gamma(double shape) {
    if (shape < 1.0) {
      double u = next_double();
      while (u <= 0.0) u = next_double();
      return next_gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = next_normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = next_double();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
        return d * v;
      }
    }
  }

  // Symmetric Dirichlet(conc) draw into out.
  void next_dirichlet(double conc, std::span<double> out) {
    double sum = 0.0;
    for (double& x : out) {
      x = next_gamma(conc);
      sum += x;
    }
    for (double& x : out) x /= sum;
  }

  // Index sampled proportionally to non-negative weights.
  std::size_t next_discrete(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double target = next_double() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (target < acc) return i;
    }
    return weights.size() - 1;
  }

  // Poisson(mean) by inversion for small means, normal approx otherwise.
  std::uint64_t next_poisson(double mean) {
    if (mean < 60.0) {
      double p = std::exp(-mean);
      double cum = p;
      double u = next_double();
      std::uint64_t k = 0;
      while (u > cum && k < 10000) {
        ++k;
        p *= mean / static_cast<double>(k);
        cum += p;
      }
      return k;
    }
    double x = mean + std::sqrt(mean) * next_normal();
    return x < 0.0 ? 0 : static_cast<std::uint64_t>(x + 0.5);
  }

  friend std::ostream& operator<<(std::ostream& os, const Rng& r) {
    return os << r.gen_;
  }
  friend std::istream& operator>>(std::istream& is, Rng& r) {
    return is >> r.gen_;
  }

  bool operator==(const Rng& other) const { return gen_ == other.gen_; }

 private:
  static std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 gen_;
};

}  // namespace clda
