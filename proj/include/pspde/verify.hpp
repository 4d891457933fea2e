#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pspde/integrators.hpp"
#include "pspde/model.hpp"
#include "pspde/spectral_space.hpp"

namespace pspde {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // residual or measured quantity
  double tolerance = 0.0;  // bound it was compared against
  std::string detail;
};

struct VerifyOptions {
  std::string filter;                   // substring of check names; empty runs all
  double generator_trace_factor = 0.5;  // test hook: a wrong value must fail taylor.*
};

/// Runs the identity checks: Gaussian variance factors, Monte Carlo Gaussian
/// exactness, weak-Taylor slopes, order-2 residuals, integration by parts,
/// stationarity of the generator, the commutator, contraction and moment
/// bounds, gradient consistency, determinism and derivative jets.
std::vector<CheckResult> run_verification(const VerifyOptions& options);

/// Per-mode coefficients of a scheme applied to the zero nonlinearity:
/// Y' = a Y + b dW, observable Ybar = Y + c dW' with dW = noise_scale * xi.
struct ModeRecursion {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double noise_scale = 0.0;
};
/// Reads the coefficients of mode k by applying the stepper to unit inputs.
ModeRecursion mode_recursion(const SpectralSpace& space, const SchemeSpec& scheme, std::size_t k);
/// Stationary variance of the observable of mode k: b^2 s^2 / (1 - a^2) + c^2 s^2.
double recursion_stationary_variance(const ModeRecursion& r);

/// Largest ratio |Phi(x) - Phi(y)| / |x - y| of one explicit Euler step with a
/// shared increment over `pairs` random pairs of states.
double max_contraction_ratio(const SpectralSpace& space, const Nonlinearity& nl, double dt,
                             std::size_t pairs, std::uint64_t seed);

/// Largest relative gap between -DV (central differences) and F over random states.
double gradient_consistency(const SpectralSpace& space, const Nonlinearity& nl,
                            std::size_t states, std::uint64_t seed);

}  // namespace pspde
