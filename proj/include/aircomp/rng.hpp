// Deterministic random streams.
//
// Every stochastic quantity in the simulator is drawn from a substream keyed
// by (seed, purpose tag, indices...).  Substreams make results independent of
// evaluation order: a channel draw for round n, link (k,l) is the same whether
// it is produced inside a sweep, a training run, or a standalone test.
// Gaussian variates are generated with an explicit Box-Muller transform on top
// of mt19937_64 so that output is bit-identical across standard libraries
// (std::normal_distribution is implementation-defined).
#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace aircomp {

// SplitMix64 finalizer; good avalanche, used only for key mixing.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Folds a list of keys into a single substream seed.
inline std::uint64_t substream_seed(std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = 0x243f6a8885a308d3ULL;  // arbitrary nonzero start
  for (std::uint64_t k : keys) h = mix64(h ^ k);
  return h;
}

// Purpose tags keep substreams for different uses disjoint even when the
// integer indices collide.
enum class StreamTag : std::uint64_t {
  channel = 1,
  rx_noise = 2,
  symbols = 3,
  task_data = 4,
  subgradient = 5,
  misc = 6,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  Rng(std::uint64_t seed, StreamTag tag, std::initializer_list<std::uint64_t> idx)
      : gen_(fold(seed, tag, idx)) {}

  // Uniform in [0, 1); 53 mantissa bits.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller.  The spare variate is cached.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // CN(0, 1): real and imaginary parts each N(0, 1/2).
  std::complex<double> complex_normal() {
    const double s = std::numbers::sqrt2 / 2.0;
    const double re = normal() * s;
    const double im = normal() * s;
    return {re, im};
  }

  std::uint64_t raw() { return gen_(); }

 private:
  static std::uint64_t fold(std::uint64_t seed, StreamTag tag,
                            std::initializer_list<std::uint64_t> idx) {
    std::uint64_t h = substream_seed({seed, static_cast<std::uint64_t>(tag)});
    for (std::uint64_t k : idx) h = mix64(h ^ k);
    return h;
  }

  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace aircomp
