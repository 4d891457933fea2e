#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pspde/philox.hpp"
#include "pspde/spectral_space.hpp"

namespace pspde {

enum class NonlinearityKind { Zero, Cosine, Linear, Custom };

/// Scalar nonlinearity f lifted pointwise to fields (Nemytskii operator).
///
/// Sign convention: F = -DV with V(y) = int u(y(z)) dz and u' = -f, so the
/// Gibbs density exp(-2V) is invariant for the preconditioned dynamics.
/// `second` is only needed by the order-condition verifier.
struct Nonlinearity {
  NonlinearityKind kind = NonlinearityKind::Zero;
  std::string name;
  double lip_bound = 0.0;
  std::function<double(double)> f;
  std::function<double(double)> f_prime;
  std::function<double(double)> f_second;
  std::function<double(double)> potential;  // u, normalized with u(0) = 0

  static Nonlinearity zero();
  /// f(x) = -x + cos(x), Lipschitz constant 2.
  static Nonlinearity cosine();
  /// f(x) = -x.
  static Nonlinearity linear();
  static Nonlinearity custom(std::string name, std::function<double(double)> f,
                             std::function<double(double)> f_prime,
                             std::function<double(double)> potential, double lip_bound,
                             std::function<double(double)> f_second = {});
  /// Looks up a built-in by its CLI name: zero, cos, linear.
  static Nonlinearity by_name(const std::string& name);

  bool is_zero() const { return kind == NonlinearityKind::Zero; }

  double value(double x) const;
  double derivative(double x) const;
  double second_derivative(double x) const;
  double potential_density(double x) const;

  /// Lip(F) < lambda_1: the sufficient condition for ergodicity and the
  /// uniform contraction of the preconditioned dynamics.
  bool admissible(const SpectralSpace& space) const { return lip_bound < space.eigenvalue(0); }
};

/// Scratch buffers for drift evaluation, sized once per worker.
struct DriftWorkspace {
  std::vector<double> grid;
  std::vector<double> values;
  explicit DriftWorkspace(std::size_t modes = 0) : grid(modes), values(modes) {}
};

/// Coefficients of F^K(y) = pi^K F(pi^K y). Writes zeros for F = 0.
void apply_F(const SpectralSpace& space, const Nonlinearity& nl, std::span<const double> y,
             std::span<double> out, DriftWorkspace& ws);
FieldState apply_F(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y);

/// V(y) by the trapezoid rule on the grid including the two boundary nodes,
/// where the field vanishes.
double potential_V(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y);

/// G(y) = -y + Q F(y).
FieldState drift_G(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y);

/// P(A y + F(y)), coefficientwise -p_k lambda_k y_k + p_k F_k(y).
FieldState drift_P(const SpectralSpace& space, const Preconditioner& precond,
                   const Nonlinearity& nl, const FieldState& y);

/// Increment of the P-Wiener process over dt: sqrt(dt p_k) xi_k with xi drawn
/// from `stream` at its current step, which is then advanced.
FieldState sample_increment(const SpectralSpace& space, const Preconditioner& precond,
                            NoiseStream& stream, double dt);

}  // namespace pspde
