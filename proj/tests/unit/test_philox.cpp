#include <doctest.h>

#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <vector>

#include "pspde/philox.hpp"

using namespace pspde;

TEST_CASE("philox known-answer vectors") {
  // numpy.random.Philox(key=...).random_raw after setting the counter.
  const auto a = Philox4x64::block({6, 7, 9, 11}, {0x0123456789abcdefULL, 1});
  CHECK(a[0] == 0x018fe2dbf86fe7b1ULL);
  CHECK(a[1] == 0x3ebf9425048ea85dULL);
  CHECK(a[2] == 0xdebab6256ca08c12ULL);
  CHECK(a[3] == 0xd82a9feb7efa5b01ULL);
  const auto b = Philox4x64::block({1, 0, 0, 0}, {0, 0});
  CHECK(b[0] == 0x02f4ba6408e4d89bULL);
  CHECK(b[1] == 0x3dd62b0b9ca8c5b2ULL);
  CHECK(b[2] == 0x1c8667a55d902e79ULL);
  CHECK(b[3] == 0x907d7a052fd5b4dcULL);
}

TEST_CASE("uniform_open stays inside (0,1)") {
  CHECK(uniform_open(0) == 0x1.0p-53);
  CHECK(uniform_open(~std::uint64_t{0}) == 1.0 - 0x1.0p-53);
  CHECK(std::isfinite(inverse_normal_cdf(uniform_open(0))));
  CHECK(inverse_normal_cdf(uniform_open(~std::uint64_t{0})) == -inverse_normal_cdf(uniform_open(0)));
  CHECK(uniform_open(std::uint64_t{1} << 63) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("inverse normal CDF matches erfc_inv") {
  double worst = 0.0;
  for (int i = 1; i < 20000; ++i) {
    const double p = i / 20000.0;
    const double oracle = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
    worst = std::max(worst, std::abs(inverse_normal_cdf(p) - oracle));
  }
  for (double p : {1e-300, 1e-100, 1e-20, 1e-10, 1e-5, 1.0 - 1e-10, 1.0 - 1e-5}) {
    const double oracle = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p);
    worst = std::max(worst, std::abs(inverse_normal_cdf(p) - oracle) / std::max(1.0, std::abs(oracle)));
  }
  CHECK(worst < 1e-13);
  CHECK(inverse_normal_cdf(0.5) == 0.0);
}

TEST_CASE("noise stream: normals_at and normal agree, next advances") {
  NoiseStream s{42, 7, 3};
  std::vector<double> v(11), w(11);
  s.normals_at(3, v);
  for (std::size_t k = 0; k < v.size(); ++k) CHECK(v[k] == s.normal(3, k));
  s.next(w);
  CHECK(s.step == 4);
  CHECK(v == w);
  // Prefix consistency: the first modes do not depend on K.
  std::vector<double> shorter(5);
  s.normals_at(3, shorter);
  for (std::size_t k = 0; k < shorter.size(); ++k) CHECK(shorter[k] == v[k]);
  NoiseStream other{43, 7, 3};
  CHECK(other.normal(3, 0) != v[0]);
}

TEST_CASE("noise stream: moments and serial correlation") {
  const std::size_t n = 100000;
  NoiseStream s{1, 0, 0};
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = s.normal(i, 0);
  double mean = 0.0, m2 = 0.0, m4 = 0.0, lag = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mean += x[i];
    m2 += x[i] * x[i];
    m4 += x[i] * x[i] * x[i] * x[i];
    if (i > 0) lag += x[i] * x[i - 1];
  }
  const double dn = static_cast<double>(n);
  CHECK(std::abs(mean / dn) < 4.0 / std::sqrt(dn));
  CHECK(std::abs(m2 / dn - 1.0) < 4.0 * std::sqrt(2.0 / dn));
  CHECK(std::abs(m4 / dn - 3.0) < 4.0 * std::sqrt(96.0 / dn));
  CHECK(std::abs(lag / (dn - 1.0)) < 4.0 / std::sqrt(dn));
}
