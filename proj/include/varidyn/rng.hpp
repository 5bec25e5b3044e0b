#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>

#include "varidyn/types.hpp"

namespace varidyn {

/// SplitMix64. Chosen over <random> engines + distributions because the
/// uint64 -> double mapping here is pinned bit-for-bit, so sampled states
/// (and therefore report files) are identical across standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  /// One point uniformly inside a box.
  Vec sample_box(const Box& box) {
    Vec q(box.dim());
    for (std::size_t i = 0; i < q.size(); ++i)
      q[i] = uniform(box.lo[i], box.hi[i]);
    return q;
  }

 private:
  std::uint64_t state_;
};

/// Additive low-discrepancy sequence based on the plastic constant
/// (the R_d / Kronecker sequence): x_k = frac(k * alpha) componentwise,
/// with alpha_j = phi_d^{-(j+1)} and phi_d the root of x^{d+1} = x + 1.
/// Gives well-spread deterministic grids for spot checks without clustering.
class KroneckerSequence {
 public:
  explicit KroneckerSequence(std::size_t dim) : alpha_(dim) {
    double phi = plastic_constant(dim);
    double a = 1.0;
    for (std::size_t j = 0; j < dim; ++j) {
      a /= phi;
      alpha_[j] = a;
    }
  }

  /// k-th point in the unit cube (k >= 0; k = 0 is the cube center offset).
  Vec point(std::size_t k) const {
    Vec x(alpha_.size());
    for (std::size_t j = 0; j < alpha_.size(); ++j) {
      double v = 0.5 + static_cast<double>(k + 1) * alpha_[j];
      x[j] = v - static_cast<std::uint64_t>(v);
    }
    return x;
  }

  /// k-th point mapped into a box.
  Vec point_in(std::size_t k, const Box& box) const {
    Vec x = point(k);
    for (std::size_t j = 0; j < x.size(); ++j)
      x[j] = box.lo[j] + (box.hi[j] - box.lo[j]) * x[j];
    return x;
  }

  /// Root of x^(d+1) = x + 1 by Newton from 1.5, converges in a handful of
  /// iterations for any d >= 1.
  static double plastic_constant(std::size_t dim) {
    double d = static_cast<double>(dim);
    double x = 1.5;
    for (int it = 0; it < 64; ++it) {
      double p = std::pow(x, d + 1.0) - x - 1.0;
      double dp = (d + 1.0) * std::pow(x, d) - 1.0;
      double step = p / dp;
      x -= step;
      if (std::fabs(step) < 1e-15) break;
    }
    return x;
  }

 private:
  Vec alpha_;
};

}  // namespace varidyn
