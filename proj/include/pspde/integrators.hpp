#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pspde/model.hpp"
#include "pspde/spectral_space.hpp"

namespace pspde {

enum class SchemeKind {
  ExplicitEuler,
  Theta,
  CrankNicolson,
  ImplicitEuler,
  LeimkuhlerMatthews,
  PostprocessedImplicitEuler,
  RK2,
  PreconditionedLinearImplicit,
};

/// A time integrator together with its step size.
///
/// The explicit schemes (EE, LM, RK2, and theta = 0) are restricted to
/// dt <= 1; the theta method with 0 < theta < 1/2 needs dt < 2/(1 - 2 theta);
/// the implicit schemes accept any dt > 0. Construction through the named
/// factories validates the window.
struct SchemeSpec {
  SchemeKind kind = SchemeKind::ExplicitEuler;
  double dt = 0.1;
  double theta = 0.0;  // Theta only; aliases resolve through resolved_theta()
  double alpha = 1.0;  // PreconditionedLinearImplicit only

  static SchemeSpec explicit_euler(double dt);
  static SchemeSpec theta_method(double theta, double dt);
  static SchemeSpec crank_nicolson(double dt);
  static SchemeSpec implicit_euler(double dt);
  static SchemeSpec leimkuhler_matthews(double dt);
  static SchemeSpec postprocessed_implicit_euler(double dt);
  static SchemeSpec rk2(double dt);
  static SchemeSpec preconditioned_linear_implicit(double alpha, double dt);
  /// CLI names: ee, ie, theta, cn, lm, pie, rk2, pli.
  static SchemeSpec from_name(const std::string& name, double dt, double theta = 0.0,
                              double alpha = 1.0);

  bool has_postprocessor() const;
  bool is_theta_family() const;
  /// theta for the theta family (EE = 0, CN = 1/2, IE = 1).
  double resolved_theta() const;
  std::string name() const;
  /// Same scheme, different step size (validated).
  SchemeSpec with_dt(double new_dt) const;
  /// Throws ConfigError naming the admissible window.
  void validate() const;
};

struct StepOutput {
  FieldState next_state;
  /// Observable Ybar for postprocessed schemes, built from the state before
  /// the step and the increment consumed by it.
  std::optional<FieldState> postprocessed_state;
};

// One-step maps. `increment` is the Q-Wiener increment sqrt(dt q_k) xi_k,
// except for step_pli which takes the P-Wiener increment sqrt(dt p_k) xi_k.

FieldState step_explicit_euler(const SpectralSpace& space, const Nonlinearity& nl,
                               const FieldState& y, const FieldState& increment, double dt);
FieldState step_theta(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y,
                      const FieldState& increment, double dt, double theta);
StepOutput step_lm(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y,
                   const FieldState& increment, double dt);
StepOutput step_pie(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y,
                    const FieldState& increment, double dt);
FieldState step_rk2(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y,
                    const FieldState& increment, double dt);
FieldState step_pli(const SpectralSpace& space, const Nonlinearity& nl,
                    const Preconditioner& precond, const FieldState& y,
                    const FieldState& increment, double dt);

/// In-place stepping kernel used by trajectories and ensembles.
///
/// Holds the per-mode multipliers of one scheme; `step` and `postprocess`
/// operate on caller-owned spans with a per-worker Workspace, so a Stepper
/// can be shared read-only between threads.
class Stepper {
 public:
  struct Workspace {
    DriftWorkspace drift;
    std::vector<double> xi, dw, a, b, c;
    explicit Workspace(std::size_t modes)
        : drift(modes), xi(modes), dw(modes), a(modes), b(modes), c(modes) {}
  };

  Stepper(const SpectralSpace& space, const Nonlinearity& nl, const SchemeSpec& scheme);

  const SchemeSpec& scheme() const { return scheme_; }
  const SpectralSpace& space() const { return *space_; }
  std::size_t modes() const { return space_->modes(); }
  Workspace workspace() const { return Workspace(modes()); }

  /// sqrt(dt q_k), or sqrt(dt p_k) for the preconditioned linear-implicit scheme.
  std::span<const double> noise_scale() const { return noise_scale_; }
  /// dw = noise_scale .* xi
  void scale_noise(std::span<const double> xi, std::span<double> dw) const;

  void step(std::span<double> y, std::span<const double> dw, Workspace& ws) const;
  /// Ybar from y and the increment dw; only for postprocessed schemes.
  void postprocess(std::span<const double> y, std::span<const double> dw,
                   std::span<double> out) const;

 private:
  const SpectralSpace* space_;
  const Nonlinearity* nl_;
  SchemeSpec scheme_;
  Preconditioner precond_;
  std::vector<double> noise_scale_;
  std::vector<double> pli_denominator_;  // 1 + dt p_k lambda_k
  std::vector<double> pli_drift_scale_;  // dt p_k
};

struct TrajectoryResult {
  StepOutput output;
  bool diverged = false;
  std::uint64_t diverged_at_step = 0;
};

/// Called after every step with (step index n >= 1, Y_n).
using TrajectoryObserver = std::function<void(std::uint64_t, std::span<const double>)>;

/// Iterates the one-step map n_steps times from `initial`, drawing one
/// increment per step from `stream`. For postprocessed schemes the final
/// observable Ybar_N uses a fresh increment at step index N.
TrajectoryResult run_trajectory(const SpectralSpace& space, const Nonlinearity& nl,
                                const SchemeSpec& scheme, const FieldState& initial,
                                NoiseStream& stream, std::uint64_t n_steps,
                                const TrajectoryObserver& observer = {});

/// Number of steps T/dt, or ConfigError naming the nearest valid dt.
std::uint64_t steps_for_horizon(double horizon, double dt);

}  // namespace pspde
