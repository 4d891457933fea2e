#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pspde/spectral_space.hpp"

using namespace pspde;
using std::numbers::pi;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST_CASE("eigenvalues of both flavors") {
  const auto s = SpectralSpace::spectral(3);
  CHECK(std::abs(s.eigenvalue(0) - 9.8696) < 5e-4);
  CHECK(std::abs(s.eigenvalue(1) - 39.478) < 5e-4);
  CHECK(std::abs(s.eigenvalue(2) - 88.826) < 5e-4);
  CHECK(s.eigenvalue(2) == doctest::Approx(9.0 * pi * pi).epsilon(1e-15));
  CHECK(s.flavor() == Flavor::SpectralGalerkin);

  const auto fd = SpectralSpace::finite_difference(0.02);
  CHECK(fd.modes() == 49);
  const double s1 = std::sin(pi * 0.01);
  CHECK(fd.eigenvalue(0) == doctest::Approx(1e4 * s1 * s1).epsilon(1e-14));
  CHECK(std::abs(fd.eigenvalue(0) - 9.8668) < 1e-3);
  CHECK(SpectralSpace::finite_difference(0.5).eigenvalue(0) == doctest::Approx(8.0).epsilon(1e-14));
  for (std::size_t k = 0; k < fd.modes(); ++k) {
    CHECK(fd.q()[k] == doctest::Approx(1.0 / fd.eigenvalue(k)).epsilon(1e-15));
  }
}

TEST_CASE("invalid sizes are rejected") {
  CHECK_THROWS_AS(SpectralSpace::finite_difference(0.03), ConfigError);
  CHECK_THROWS_AS(SpectralSpace::finite_difference(0.0), ConfigError);
  CHECK_THROWS_AS(SpectralSpace::finite_difference(1.0), ConfigError);
  CHECK_THROWS_AS(SpectralSpace::spectral(0), ConfigError);
  try {
    SpectralSpace::finite_difference(0.03);
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("0.0303") != std::string::npos);
  }
}

TEST_CASE("finite-difference symbol approaches the continuum eigenvalues") {
  const double c = std::pow(pi, 4) / 12.0;
  for (double dx : {0.1, 0.05, 0.025}) {
    const auto fd = SpectralSpace::finite_difference(dx);
    for (std::size_t k = 1; k <= 5; ++k) {
      const double kk = static_cast<double>(k);
      CHECK(std::abs(fd.eigenvalue(k - 1) - pi * pi * kk * kk) <= c * std::pow(kk, 4) * dx * dx);
    }
  }
}

TEST_CASE("basis is orthonormal and diagonalizes the tridiagonal Laplacian") {
  for (std::size_t K : {1u, 7u, 31u, 64u}) {
    const auto fd = SpectralSpace::finite_difference_modes(K);
    const double dx = fd.grid_spacing();
    double ortho = 0.0, eig = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      for (std::size_t l = 0; l < K; ++l) {
        double ip = 0.0;
        for (std::size_t i = 0; i < K; ++i) ip += dx * fd.eigenvector(k, i) * fd.eigenvector(l, i);
        ortho = std::max(ortho, std::abs(ip - (k == l ? 1.0 : 0.0)));
      }
      for (std::size_t i = 0; i < K; ++i) {
        const double left = i > 0 ? fd.eigenvector(k, i - 1) : 0.0;
        const double right = i + 1 < K ? fd.eigenvector(k, i + 1) : 0.0;
        const double lap = (left - 2.0 * fd.eigenvector(k, i) + right) / (dx * dx);
        eig = std::max(eig, std::abs(lap + fd.eigenvalue(k) * fd.eigenvector(k, i)) /
                                fd.eigenvalue(k));
      }
      // Independent evaluation of the sine basis.
      for (std::size_t i = 0; i < K; ++i) {
        const double z = static_cast<double>(i + 1) * dx;
        CHECK(fd.eigenvector(k, i) ==
              doctest::Approx(std::sqrt(2.0) * std::sin(static_cast<double>(k + 1) * pi * z))
                  .epsilon(1e-12));
      }
    }
    CHECK(ortho < 1e-12);
    CHECK(eig < 1e-10);
  }
}

TEST_CASE("Parseval and round trip") {
  std::mt19937_64 rng(5);
  const auto fd = SpectralSpace::finite_difference(0.02);
  for (int trial = 0; trial < 100; ++trial) {
    const auto u = random_vector(fd.modes(), rng);
    const auto c = fd.from_physical(u);
    double grid_norm = 0.0;
    for (double x : u) grid_norm += fd.grid_spacing() * x * x;
    CHECK(l2_norm(c.coeffs) * l2_norm(c.coeffs) == doctest::Approx(grid_norm).epsilon(1e-12));
    CHECK(max_abs_diff(fd.to_physical(c), u) < 1e-12);
  }
}

TEST_CASE("sine transform matches the dense transform") {
  std::mt19937_64 rng(9);
  for (std::size_t K : {32u, 49u, 100u, 255u}) {
    const auto sine = SpectralSpace::finite_difference_modes(K, TransformBackend::SineTransform);
    const auto dense = sine.with_backend(TransformBackend::Dense);
    CHECK(sine.backend() == TransformBackend::SineTransform);
    CHECK(dense.backend() == TransformBackend::Dense);
    const auto c = random_vector(K, rng);
    const auto u = random_vector(K, rng);
    CHECK(max_abs_diff(sine.to_physical(FieldState(c)), dense.to_physical(FieldState(c))) < 1e-10);
    CHECK(max_abs_diff(sine.from_physical(u).coeffs, dense.from_physical(u).coeffs) < 1e-10);
  }
  CHECK(SpectralSpace::finite_difference_modes(8).backend() == TransformBackend::Dense);
  CHECK(SpectralSpace::finite_difference_modes(64).backend() == TransformBackend::SineTransform);
}

TEST_CASE("project, apply_diagonal, sobolev_norm, trace_q") {
  const auto s = SpectralSpace::spectral(3);
  const FieldState y(std::vector<double>{3.0, 4.0, 0.0});
  CHECK(l2_norm(y.coeffs) == doctest::Approx(5.0));
  CHECK(sobolev_norm(s, y, 0.0) == doctest::Approx(5.0));
  const auto p = project(y, 1);
  CHECK(p.size() == 1);
  CHECK(p[0] == 3.0);
  CHECK_THROWS_AS(project(y, 5), ConfigError);

  const FieldState e1(std::vector<double>{1.0, 0.0, 0.0});
  CHECK(sobolev_norm(s, e1, 1.0) == doctest::Approx(pi).epsilon(1e-14));
  const auto d = apply_diagonal(s, 1.0, y);
  CHECK(d[0] == doctest::Approx(3.0 * pi * pi));
  CHECK(d[1] == doctest::Approx(16.0 * pi * pi));
  const auto inv = apply_diagonal(s, -1.0, d);
  CHECK(max_abs_diff(inv.coeffs, y.coeffs) < 1e-14);

  CHECK(trace_q(SpectralSpace::spectral(2), 0.0) == doctest::Approx(0.126652).epsilon(1e-5));
  CHECK(trace_q(SpectralSpace::spectral(2000), 0.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-3));
  // alpha = 1/2 gives the mode count.
  CHECK(trace_q(s, 0.5) == doctest::Approx(3.0));
}

TEST_CASE("preconditioner") {
  const auto s = SpectralSpace::finite_difference(0.1);
  const auto p1 = Preconditioner::fractional(s, 1.0);
  for (std::size_t k = 0; k < s.modes(); ++k) {
    CHECK(p1.multipliers[k] * s.eigenvalue(k) == doctest::Approx(1.0));
    CHECK(p1.sqrt_multipliers[k] * p1.sqrt_multipliers[k] == doctest::Approx(p1.multipliers[k]));
  }
  CHECK(p1.inf_lambda_p(s) == doctest::Approx(1.0));
  CHECK(p1.admissible(s));
  CHECK(p1.contraction_rate(s, 2.0) == doctest::Approx(1.0 - 2.0 / s.eigenvalue(0)));
  const auto p0 = Preconditioner::fractional(s, 0.0);
  CHECK(p0.sup() == 1.0);
  CHECK(p0.inf_lambda_p(s) == doctest::Approx(s.eigenvalue(0)));
  CHECK(Preconditioner::fractional(s, 0.5).admissible(s));
  CHECK_THROWS_AS(Preconditioner::fractional(s, 1.5), ConfigError);
  CHECK_THROWS_AS(Preconditioner::fractional(s, -0.1), ConfigError);
}
