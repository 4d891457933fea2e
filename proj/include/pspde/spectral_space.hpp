#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pspde {

/// Raised for any invalid configuration: bad sizes, step sizes outside a
/// stability window, mismatched dimensions.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Flavor { SpectralGalerkin, FiniteDifference };

/// Which physical<->coefficient transform a space uses. Auto picks the
/// discrete sine transform for large mode counts.
enum class TransformBackend { Auto, Dense, SineTransform };

std::string to_string(Flavor flavor);

/// A discretized field: coordinates <y, e_k> in the eigenbasis of -A.
struct FieldState {
  std::vector<double> coeffs;

  FieldState() = default;
  explicit FieldState(std::size_t modes) : coeffs(modes, 0.0) {}
  explicit FieldState(std::vector<double> values) : coeffs(std::move(values)) {}

  std::size_t size() const { return coeffs.size(); }
  double& operator[](std::size_t k) { return coeffs[k]; }
  double operator[](std::size_t k) const { return coeffs[k]; }
  std::span<double> span() { return coeffs; }
  std::span<const double> span() const { return coeffs; }
  bool all_finite() const;
};

namespace detail {
class SineTransformPlan;
}

/// Eigen-decomposed Dirichlet Laplacian on [0,1].
///
/// Both flavors share the interior grid z_i = i/(K+1), i = 1..K, and the
/// eigenvectors e_k(z_i) = sqrt(2) sin(k pi z_i), which are orthonormal for
/// the dx-weighted inner product <u,v> = dx * sum u_i v_i. Only the
/// eigenvalues differ: pi^2 k^2 for the spectral flavor, the closed-form
/// finite-difference symbol (4/dx^2) sin^2(k pi dx / 2) otherwise.
///
/// Immutable after construction; safe to share across threads.
class SpectralSpace {
 public:
  static SpectralSpace spectral(std::size_t modes,
                                TransformBackend backend = TransformBackend::Auto);
  /// Rejects dx not of the form 1/(K+1); the message names the nearest valid dx.
  static SpectralSpace finite_difference(double dx,
                                         TransformBackend backend = TransformBackend::Auto);
  static SpectralSpace finite_difference_modes(std::size_t modes,
                                               TransformBackend backend = TransformBackend::Auto);

  Flavor flavor() const { return flavor_; }
  std::size_t modes() const { return eigenvalues_.size(); }
  double grid_spacing() const { return dx_; }
  TransformBackend backend() const { return backend_; }

  std::span<const double> eigenvalues() const { return eigenvalues_; }
  double eigenvalue(std::size_t k) const { return eigenvalues_[k]; }
  /// q_k = 1/lambda_k, the covariance multipliers of the Q-Wiener process.
  std::span<const double> q() const { return q_; }
  /// Value of eigenvector k (0-based) at grid node i (0-based, z = (i+1) dx).
  double eigenvector(std::size_t k, std::size_t i) const { return basis_[k * modes() + i]; }
  double grid_point(std::size_t i) const { return static_cast<double>(i + 1) * dx_; }

  /// Grid values u_i = sum_k c_k e_k(z_i).
  void to_physical(std::span<const double> coeffs, std::span<double> grid) const;
  /// Coefficients c_k = dx * sum_i u_i e_k(z_i).
  void from_physical(std::span<const double> grid, std::span<double> coeffs) const;

  std::vector<double> to_physical(const FieldState& state) const;
  FieldState from_physical(std::span<const double> grid) const;

  /// The same space with a different transform backend.
  SpectralSpace with_backend(TransformBackend backend) const;

 private:
  SpectralSpace(Flavor flavor, std::size_t modes, TransformBackend backend);

  void dense_to_physical(std::span<const double> coeffs, std::span<double> grid) const;
  void dense_from_physical(std::span<const double> grid, std::span<double> coeffs) const;

  Flavor flavor_;
  double dx_;
  TransformBackend backend_;
  std::vector<double> eigenvalues_;
  std::vector<double> q_;
  std::vector<double> basis_;  // row k holds e_k on the grid
  std::shared_ptr<const detail::SineTransformPlan> dst_;
};

FieldState project(const FieldState& state, std::size_t modes);

/// Multiplies coefficient k by lambda_k^exponent, i.e. applies (-A)^exponent.
FieldState apply_diagonal(const SpectralSpace& space, double exponent, const FieldState& state);

/// |y|_beta = |(-A)^{beta/2} y|.
double sobolev_norm(const SpectralSpace& space, const FieldState& state, double beta);

/// Truncated trace Tr((-A)^{2 alpha} Q) = sum_{k<=K} lambda_k^{2 alpha - 1}.
double trace_q(const SpectralSpace& space, double alpha);

/// Euclidean norm of the coefficient vector, equal to the discrete L2 norm.
double l2_norm(std::span<const double> coeffs);

/// Diagonal preconditioner P = (-A)^{-alpha}.
struct Preconditioner {
  double alpha = 1.0;
  std::vector<double> multipliers;       // p_k = lambda_k^{-alpha}
  std::vector<double> sqrt_multipliers;  // p_k^{1/2}

  static Preconditioner fractional(const SpectralSpace& space, double alpha);

  double sup() const { return multipliers.front(); }
  /// inf_k lambda_k p_k over the truncated spectrum.
  double inf_lambda_p(const SpectralSpace& space) const;
  /// lambda_1 sup p_k <= inf lambda_k p_k, the hypothesis of the coupled
  /// contraction estimate.
  bool admissible(const SpectralSpace& space) const;
  /// gamma(P, F) = inf lambda_k p_k - sup p_k Lip(F).
  double contraction_rate(const SpectralSpace& space, double lipschitz) const;
};

}  // namespace pspde
