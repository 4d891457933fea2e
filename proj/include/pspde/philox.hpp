#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace pspde {

/// Philox4x64-10 counter-based generator.
///
/// A pure function of (counter, key): no state, so any block of any stream
/// can be generated in any order on any thread.
class Philox4x64 {
 public:
  using Counter = std::array<std::uint64_t, 4>;
  using Key = std::array<std::uint64_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      ctr = single_round(ctr, key);
    }
    return ctr;
  }

 private:
  static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
  static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
  static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
  static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

  static void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& lo, std::uint64_t& hi) {
    __extension__ using u128 = unsigned __int128;
    const u128 p = static_cast<u128>(a) * b;
    lo = static_cast<std::uint64_t>(p);
    hi = static_cast<std::uint64_t>(p >> 64);
  }

  static Counter single_round(const Counter& c, const Key& k) {
    std::uint64_t lo0, hi0, lo1, hi1;
    mulhilo(kMul0, c[0], lo0, hi0);
    mulhilo(kMul1, c[2], lo1, hi1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }
};

/// Uniform in the open interval (0, 1) with 52 random bits, symmetric about 1/2.
/// Both extremes, 2^-53 and 1 - 2^-53, are exact doubles.
inline double uniform_open(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

namespace detail {

// Central region |p - 1/2| <= 0.425 of Wichura's AS241 (PPND16).
inline double inverse_normal_central(double q) {
  const double r = 0.180625 - q * q;
  return q *
         (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
               6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
             1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
           1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
         (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
               3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
             5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
           4.2313330701600911252e+1) * r + 1.0);
}

// Tails of AS241.
inline double inverse_normal_tail(double p) {
  const double q = p - 0.5;
  double r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double x;
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
            3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
          4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
          2.05319162663775882187e+0) * r + 1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
          5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
  }
  return q < 0.0 ? -x : x;
}

}  // namespace detail

/// Standard normal quantile by Wichura's AS241 (PPND16), relative accuracy
/// about 1e-16 on (0, 1).
inline double inverse_normal_cdf(double p) {
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) return detail::inverse_normal_central(q);
  return detail::inverse_normal_tail(p);
}

/// Four standard normals from one Philox block, one per output word.
inline std::array<double, 4> normals_from_block(const std::array<std::uint64_t, 4>& bits) {
  return {inverse_normal_cdf(uniform_open(bits[0])), inverse_normal_cdf(uniform_open(bits[1])),
          inverse_normal_cdf(uniform_open(bits[2])), inverse_normal_cdf(uniform_open(bits[3]))};
}

/// Deterministic Gaussian noise addressed by (master_seed, trajectory, step, mode).
///
/// Each 64-bit Philox output word gives one normal by inversion, four per
/// block; the block counter is (mode / 4, step, trajectory, 0) and the key is
/// (master_seed, stream tag).
struct NoiseStream {
  std::uint64_t master_seed = 0;
  std::uint64_t trajectory = 0;
  std::uint64_t step = 0;

  static constexpr std::uint64_t kStreamTag = 0x5350'4445'4e6f'6973ULL;

  /// Standard normals for (trajectory, step) without touching `step`.
  void normals_at(std::uint64_t at_step, std::span<double> out) const {
    const Philox4x64::Key key{master_seed, kStreamTag};
    const std::size_t n = out.size();
    for (std::size_t base = 0; base < n; base += 4) {
      const auto bits = Philox4x64::block({base / 4, at_step, trajectory, 0}, key);
      const auto z = normals_from_block(bits);
      for (std::size_t j = 0; j < 4 && base + j < n; ++j) out[base + j] = z[j];
    }
  }

  /// Draws the normals for the current step and advances the step counter.
  void next(std::span<double> out) {
    normals_at(step, out);
    ++step;
  }

  /// A single normal, the k-th of step n.
  double normal(std::uint64_t at_step, std::size_t k) const {
    const Philox4x64::Key key{master_seed, kStreamTag};
    const auto bits = Philox4x64::block({k / 4, at_step, trajectory, 0}, key);
    return normals_from_block(bits)[k % 4];
  }
};

}  // namespace pspde
