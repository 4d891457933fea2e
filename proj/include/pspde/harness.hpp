#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pspde/analytics.hpp"
#include "pspde/integrators.hpp"
#include "pspde/model.hpp"
#include "pspde/spectral_space.hpp"

namespace pspde {

/// Raised when every trajectory of an ensemble diverged.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Execution { Parallel, Serial };

/// Everything an ensemble needs besides the scheme and the seed. The space and
/// nonlinearity are borrowed and must outlive the problem.
struct EnsembleProblem {
  const SpectralSpace& space;
  const Nonlinearity& nl;
  TestFunction phi{TestFunctionKind::ExpNorm};
  double T = 10.0;
};

/// Seeds and sizes of one ensemble. Trajectory m uses stream index offset + m.
struct EnsembleRun {
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  std::uint64_t offset = 0;
  Execution execution = Execution::Parallel;
};

struct EnsembleEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t n_diverged = 0;
  SchemeSpec scheme;
  std::uint64_t seed = 0;
  double T = 0.0;
};

/// phi of the observable of each trajectory, NaN where the trajectory diverged.
/// The parallel and serial paths return bit-identical vectors.
std::vector<double> trajectory_observables(const EnsembleProblem& problem,
                                           const SchemeSpec& scheme, const EnsembleRun& run);
/// Serial reference path, one run_trajectory call per trajectory.
std::vector<double> trajectory_observables_serial(const EnsembleProblem& problem,
                                                  const SchemeSpec& scheme,
                                                  const EnsembleRun& run);

/// Mean and standard error over the finite entries, reduced in index order.
EnsembleEstimate summarize(std::span<const double> values, const SchemeSpec& scheme,
                           std::uint64_t seed, double T);

EnsembleEstimate run_ensemble(const EnsembleProblem& problem, const SchemeSpec& scheme,
                              const EnsembleRun& run);

// ---------------------------------------------------------------------------
// References

enum class ReferenceMode { Analytic, FineLM, FinePLI };

struct ReferenceSpec {
  ReferenceMode mode = ReferenceMode::FineLM;
  double dt = 0x1.0p-8;
  std::uint64_t samples = 1000000;
  double alpha = 1.0;  // FinePLI only
};

struct ReferenceValue {
  double value = 0.0;
  double std_error = 0.0;
};

/// Stream offset of reference ensembles, disjoint from sweep rows.
inline constexpr std::uint64_t kReferenceOffset = std::uint64_t{1} << 48;

/// Analytic: the Gaussian closed form (F = 0 and phi = exp(-|y|^2) only).
/// FineLM / FinePLI: an ensemble at the reference step with its standard error.
ReferenceValue reference_value(const EnsembleProblem& problem, const ReferenceSpec& spec,
                               std::uint64_t seed, Execution execution = Execution::Parallel);

// ---------------------------------------------------------------------------
// Sweeps

struct ConvergenceRow {
  double dt = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double reference = 0.0;
  double reference_stderr = 0.0;
  double bias = 0.0;
  std::uint64_t n_diverged = 0;
  bool flagged = false;  // |bias| < threshold * combined standard error
};

struct ConvergenceReport {
  SchemeSpec scheme;
  std::vector<ConvergenceRow> rows;
  std::optional<double> fitted_order;  // empty when fewer than 3 rows survive
  std::size_t rows_in_fit = 0;
};

struct SweepOptions {
  std::uint64_t samples = 100000;
  std::uint64_t seed = 0;
  double flag_threshold = 3.0;
  Execution execution = Execution::Parallel;
};

/// Flags rows and fits the order on the survivors.
void fit_order(ConvergenceReport& report, double flag_threshold = 3.0);

/// One ensemble per dt (row i uses stream offsets starting at i * samples).
/// dts must be strictly decreasing.
ConvergenceReport dt_sweep(const EnsembleProblem& problem, const SchemeSpec& scheme,
                           std::span<const double> dts, const ReferenceValue& reference,
                           const SweepOptions& options);

/// dt_sweep of the preconditioned linear-implicit scheme for each alpha.
std::vector<ConvergenceReport> alpha_sweep(const EnsembleProblem& problem,
                                           std::span<const double> alphas,
                                           std::span<const double> dts,
                                           const ReferenceValue& reference,
                                           const SweepOptions& options);

struct CoupledComparison {
  double bias_a = 0.0;
  double bias_b = 0.0;
  double stderr_a = 0.0;
  double stderr_b = 0.0;
  double stderr_difference = 0.0;  // standard error of mean(phi_A - phi_B)
  std::uint64_t n_used = 0;        // trajectories where neither diverged
};

/// Both ensembles driven by the same noise streams.
CoupledComparison coupled_bias_comparison(const EnsembleProblem& problem,
                                          const SchemeSpec& scheme_a, const SchemeSpec& scheme_b,
                                          double reference, const EnsembleRun& run);

}  // namespace pspde
