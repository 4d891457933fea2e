#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pspde/integrators.hpp"
#include "pspde/model.hpp"
#include "pspde/spectral_space.hpp"

namespace pspde {

// ---------------------------------------------------------------------------
// Closed-form Gaussian laws (F = 0).
//
// A linear scheme driven by Q-noise has a centered Gaussian invariant law
// with covariance (sigma^2 / 2) Q; sigma^2 = 1 means the law is exactly nu.

struct GaussianLaw {
  double variance_factor = 1.0;
  SchemeSpec scheme;
};

/// sigma_theta(dt)^2 = 2 / (2 + (2 theta - 1) dt).
double theta_variance_factor(double theta, double dt);

struct VarianceFactors {
  double chain = 1.0;
  double postprocessed = 1.0;
};

/// Chain 1 - dt/2, postprocessed exactly 1. Requires dt < 1.
VarianceFactors lm_variance_factors(double dt);
/// Chain 2/(2 + dt), postprocessed exactly 1.
VarianceFactors pie_variance_factors(double dt);
/// Stationary factor of the RK2 chain, 2 dt (1 - dt/2)^2 / (1 - a^2) with
/// a = 1 - dt + dt^2/2.
double rk2_variance_factor(double dt);

/// Stationary law of the observable of `scheme` (the postprocessed state when
/// the scheme has one). Not defined for the preconditioned linear-implicit
/// scheme, whose factor depends on the mode; see stationary_mode_variances.
GaussianLaw gaussian_law(const SchemeSpec& scheme);

/// Per-mode stationary variances of the observable of any scheme with F = 0.
std::vector<double> stationary_mode_variances(const SpectralSpace& space,
                                              const SchemeSpec& scheme);

/// E[exp(-|Y|^2)] for Y ~ N(0, (sigma^2/2) Q^K): prod_k (1 + sigma^2 q_k)^{-1/2}.
double gaussian_phi_expectation(const SpectralSpace& space, double variance_factor);
/// Same for independent centered modes with the given variances.
double gaussian_phi_expectation(std::span<const double> mode_variances);

// ---------------------------------------------------------------------------
// Small-dimension verifier of the second-order conditions.

enum class TestFunctionKind { Constant, Linear, Quadratic, ExpNorm };

std::string to_string(TestFunctionKind kind);

/// Value and derivatives up to order four of a test function at a point,
/// as dense tensors: d2[i*K+j], d3[(i*K+j)*K+k], d4[((i*K+j)*K+k)*K+l].
struct Jet {
  std::size_t dim = 0;
  double value = 0.0;
  std::vector<double> d1, d2, d3, d4;
};

/// Test function catalog with closed-form derivatives: phi = 1, phi = y_1,
/// phi = |y|^2, phi = exp(-|y|^2).
class TestFunction {
 public:
  explicit TestFunction(TestFunctionKind kind) : kind_(kind) {}
  TestFunctionKind kind() const { return kind_; }
  double value(std::span<const double> y) const;
  Jet jet(std::span<const double> y) const;

 private:
  TestFunctionKind kind_;
};

/// G, DG and D^2G at a point: dg[k*K+l] = d_l G_k, d2g[(k*K+l)*K+m] = d_l d_m G_k.
struct DriftJet {
  std::vector<double> g, dg, d2g;
};

/// Test function and drift G = -y + Q F^K with closed-form derivatives, in
/// dimension K <= 3.
class DerivativeBundle {
 public:
  static constexpr std::size_t kMaxModes = 3;

  DerivativeBundle(const SpectralSpace& space, const Nonlinearity& nl, TestFunction phi);

  std::size_t dim() const { return space_->modes(); }
  const SpectralSpace& space() const { return *space_; }
  const Nonlinearity& nonlinearity() const { return *nl_; }
  const TestFunction& phi() const { return phi_; }
  std::span<const double> q() const { return space_->q(); }

  Jet phi_jet(std::span<const double> y) const { return phi_.jet(y); }
  DriftJet drift(std::span<const double> y) const;

 private:
  const SpectralSpace* space_;
  const Nonlinearity* nl_;
  TestFunction phi_;
};

/// Coefficient of the trace term in the generator. The Ito generator of the
/// preconditioned dynamics has 1/2; other values exist only to mutation-test
/// the weak-Taylor checks.
struct GeneratorConvention {
  double trace_factor = 0.5;
};

/// L phi = D phi . G + (1/2) sum_k q_k D^2 phi (e_k, e_k).
double generator_L(const DerivativeBundle& bundle, std::span<const double> y,
                   GeneratorConvention convention = {});
/// Coefficient of dt^2 in the one-step weak expansion of the LM scheme.
double operator_A1(const DerivativeBundle& bundle, std::span<const double> y);
/// Coefficient of dt in the weak expansion of the LM postprocessor:
/// (1/8) sum_i q_i D^2 phi (e_i, e_i).
double operator_A1bar(const DerivativeBundle& bundle, std::span<const double> y);
/// [L, A1bar] phi = -(1/8) sum_i q_i D phi . D^2G(e_i,e_i)
///                  -(1/4) sum_i q_i D^2 phi (DG e_i, e_i).
double commutator_LA1bar(const DerivativeBundle& bundle, std::span<const double> y);
/// L(A1bar phi) - A1bar(L phi) by fourth-order central differences of the
/// closed forms of A1bar phi and L phi; an independent route to the commutator.
double commutator_LA1bar_bruteforce(const DerivativeBundle& bundle, std::span<const double> y,
                                    double h = 1e-2);

/// Raised when the Gauss-Hermite average is not converged.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor Gauss-Hermite average against mu_star^K: the Gaussian nu^K
/// reweighted by exp(-2V) and normalized on the same grid.
class GibbsQuadrature {
 public:
  GibbsQuadrature(const SpectralSpace& space, const Nonlinearity& nl, std::size_t nodes_per_dim);

  std::size_t size() const { return weights_.size(); }
  double expectation(const std::function<double(std::span<const double>)>& fn) const;

 private:
  std::size_t dim_;
  std::vector<double> points_;  // size() x dim_
  std::vector<double> weights_;
};

/// |<A1 phi + [L, A1bar] phi>_{mu_star^K}| with the finer of 40 and 60 nodes
/// per dimension; throws QuadratureError if the two differ by more than 1e-6.
double order2_condition_residual(const DerivativeBundle& bundle, std::size_t nodes = 40,
                                 std::size_t refined_nodes = 60);

struct IntegrationByPartsResiduals {
  double fourth_vs_third = 0.0;  // <sum q_i q_j D^4 phi> + 2 <sum q_i D^3 phi(e_i,e_i,G)>
  double third_vs_second = 0.0;  // <sum q_i D^3 phi(e_i,e_i,G)> + <sum q_i D^2 phi(DG e_i,e_i)> + 2 <D^2 phi(G,G)>
};
IntegrationByPartsResiduals integration_by_parts_residuals(const DerivativeBundle& bundle,
                                                           std::size_t nodes = 40);

/// <L phi>_{mu_star^K}, zero for the invariant law.
double generator_stationarity_residual(const DerivativeBundle& bundle, std::size_t nodes = 40,
                                       GeneratorConvention convention = {});

/// E[phi(Y_1) | Y_0 = y0] and E[phi(Ybar_0) | Y_0 = y0] for the LM scheme,
/// by tensor Gauss-Hermite quadrature over the K normals of one step.
struct OneStepExpectation {
  double chain = 0.0;
  double postprocessed = 0.0;
};
OneStepExpectation lm_one_step_expectation(const DerivativeBundle& bundle,
                                           std::span<const double> y0, double dt,
                                           std::size_t nodes = 60);

struct WeakTaylorRow {
  double dt = 0.0;
  double chain_residual = 0.0;          // |E phi(Y_1) - phi - dt L phi - dt^2 A1 phi|
  double postprocessor_residual = 0.0;  // |E phi(Ybar_0) - phi - dt A1bar phi|
};
struct WeakTaylorReport {
  std::vector<WeakTaylorRow> rows;
  double chain_slope = 0.0;
  double postprocessor_slope = 0.0;
  bool chain_exact = false;          // every residual at round-off level
  bool postprocessor_exact = false;
};
WeakTaylorReport weak_taylor_report(const DerivativeBundle& bundle, std::span<const double> y0,
                                    std::span<const double> dts,
                                    GeneratorConvention convention = {});

}  // namespace pspde
