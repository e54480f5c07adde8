#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace dcm {

/// Seedable generator with explicit stream splitting. A stream is derived
/// from (master seed, path of indices) by splitmix64 mixing, so replicate r
/// of a study always sees the same draws regardless of scheduling. All
/// distribution samplers are implemented here from raw 64-bit output, which
/// keeps sequences identical across standard libraries.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(mix(seed)) {}

  static Rng stream(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = mix(master);
    for (std::uint64_t idx : path) s = mix(s ^ mix(idx + 0x9e3779b97f4a7c15ull));
    return Rng(s);
  }

  std::uint64_t next() { return gen_(); }

  /// Uniform on [0,1) with 53-bit resolution.
  double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * u01(); }

  std::uint64_t uniformInt(std::uint64_t n) {
    // rejection to avoid modulo bias
    const std::uint64_t limit = n * (UINT64_MAX / n);
    std::uint64_t v;
    do { v = gen_(); } while (v >= limit);
    return v % n;
  }

  /// Index sampled proportionally to the (unnormalized) weights.
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0))
      throw std::domain_error("categorical: nonpositive total weight");
    double u = u01() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u < 0.0) return i;
    }
    return weights.size() - 1;
  }

  double normal() {
    // Marsaglia polar
    double u, v, s;
    do {
      u = 2.0 * u01() - 1.0;
      v = 2.0 * u01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return u * std::sqrt(-2.0 * std::log(s) / s);
  }

  /// Gamma(shape, 1) via Marsaglia-Tsang, boosted for shape < 1.
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::domain_error("gamma: shape <= 0");
    if (shape < 1.0) {
      const double u = u01();
      return gamma(shape + 1.0) * std::pow(u > 0.0 ? u : 0x1.0p-53, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = u01();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
        return d * v;
    }
  }

  double gamma(double shape, double rate) { return gamma(shape) / rate; }

  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

  std::vector<double> dirichlet(const std::vector<double>& alpha) {
    std::vector<double> out(alpha.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) sum += out[i] = gamma(alpha[i]);
    for (double& v : out) v /= sum;
    return out;
  }

private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 gen_;
};

} // namespace dcm
