#include "pspde/integrators.hpp"

#include <cmath>
#include <sstream>

namespace pspde {

namespace {

using Span = std::span<double>;
using CSpan = std::span<const double>;

std::string format_number(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

// Each kernel writes Y_{n+1} into `out`; `out` may alias `y`.

void kernel_explicit_euler(const SpectralSpace& space, const Nonlinearity& nl, CSpan y, CSpan dw,
                           double dt, Span out, Span f, DriftWorkspace& dws) {
  apply_F(space, nl, y, f, dws);
  const auto q = space.q();
  for (std::size_t k = 0; k < y.size(); ++k) {
    out[k] = y[k] + dt * (-y[k] + q[k] * f[k]) + dw[k];
  }
}

void kernel_theta(const SpectralSpace& space, const Nonlinearity& nl, CSpan y, CSpan dw,
                  double dt, double theta, Span out, Span f, DriftWorkspace& dws) {
  apply_F(space, nl, y, f, dws);
  const auto q = space.q();
  const double denom = 1.0 + theta * dt;
  const double explicit_part = 1.0 - theta;
  for (std::size_t k = 0; k < y.size(); ++k) {
    out[k] = (y[k] + dt * (-explicit_part * y[k] + q[k] * f[k]) + dw[k]) / denom;
  }
}

void kernel_lm(const SpectralSpace& space, const Nonlinearity& nl, CSpan y, CSpan dw, double dt,
               Span out, Span z, Span f, DriftWorkspace& dws) {
  for (std::size_t k = 0; k < y.size(); ++k) z[k] = y[k] + 0.5 * dw[k];
  apply_F(space, nl, z, f, dws);
  const auto q = space.q();
  for (std::size_t k = 0; k < y.size(); ++k) {
    out[k] = y[k] + dt * (-z[k] + q[k] * f[k]) + dw[k];
  }
}

void kernel_pie(const SpectralSpace& space, const Nonlinearity& nl, CSpan y, CSpan dw, double dt,
                Span out, Span z, Span f, DriftWorkspace& dws) {
  const double inv = 1.0 / (1.0 + dt);
  const double half_inv = 0.5 * inv;
  for (std::size_t k = 0; k < y.size(); ++k) z[k] = y[k] + half_inv * dw[k];
  apply_F(space, nl, z, f, dws);
  const auto q = space.q();
  for (std::size_t k = 0; k < y.size(); ++k) {
    out[k] = inv * y[k] + dt * inv * q[k] * f[k] + inv * dw[k];
  }
}

void kernel_rk2(const SpectralSpace& space, const Nonlinearity& nl, CSpan y, CSpan dw, double dt,
                Span out, Span g0, Span predictor, Span f, DriftWorkspace& dws) {
  const auto q = space.q();
  apply_F(space, nl, y, f, dws);
  for (std::size_t k = 0; k < y.size(); ++k) {
    g0[k] = -y[k] + q[k] * f[k];
    predictor[k] = y[k] + dt * g0[k] + dw[k];
  }
  apply_F(space, nl, predictor, f, dws);
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double g1 = -predictor[k] + q[k] * f[k];
    out[k] = y[k] + 0.5 * dt * (g0[k] + g1) + dw[k];
  }
}

void kernel_pli(const SpectralSpace& space, const Nonlinearity& nl, CSpan y, CSpan dw,
                CSpan drift_scale, CSpan denominator, Span out, Span f, DriftWorkspace& dws) {
  apply_F(space, nl, y, f, dws);
  for (std::size_t k = 0; k < y.size(); ++k) {
    out[k] = (y[k] + drift_scale[k] * f[k] + dw[k]) / denominator[k];
  }
}

void check_dims(const SpectralSpace& space, const FieldState& y, const FieldState& dw) {
  if (y.size() != space.modes() || dw.size() != space.modes()) {
    throw ConfigError("step: state/increment dimension does not match the space");
  }
}

}  // namespace

SchemeSpec SchemeSpec::explicit_euler(double dt) {
  SchemeSpec s{SchemeKind::ExplicitEuler, dt, 0.0, 1.0};
  s.validate();
  return s;
}
SchemeSpec SchemeSpec::theta_method(double theta, double dt) {
  SchemeSpec s{SchemeKind::Theta, dt, theta, 1.0};
  s.validate();
  return s;
}
SchemeSpec SchemeSpec::crank_nicolson(double dt) {
  SchemeSpec s{SchemeKind::CrankNicolson, dt, 0.5, 1.0};
  s.validate();
  return s;
}
SchemeSpec SchemeSpec::implicit_euler(double dt) {
  SchemeSpec s{SchemeKind::ImplicitEuler, dt, 1.0, 1.0};
  s.validate();
  return s;
}
SchemeSpec SchemeSpec::leimkuhler_matthews(double dt) {
  SchemeSpec s{SchemeKind::LeimkuhlerMatthews, dt, 0.0, 1.0};
  s.validate();
  return s;
}
SchemeSpec SchemeSpec::postprocessed_implicit_euler(double dt) {
  SchemeSpec s{SchemeKind::PostprocessedImplicitEuler, dt, 0.0, 1.0};
  s.validate();
  return s;
}
SchemeSpec SchemeSpec::rk2(double dt) {
  SchemeSpec s{SchemeKind::RK2, dt, 0.0, 1.0};
  s.validate();
  return s;
}
SchemeSpec SchemeSpec::preconditioned_linear_implicit(double alpha, double dt) {
  SchemeSpec s{SchemeKind::PreconditionedLinearImplicit, dt, 0.0, alpha};
  s.validate();
  return s;
}

SchemeSpec SchemeSpec::from_name(const std::string& name, double dt, double theta, double alpha) {
  if (name == "ee") return explicit_euler(dt);
  if (name == "ie") return implicit_euler(dt);
  if (name == "cn") return crank_nicolson(dt);
  if (name == "theta") return theta_method(theta, dt);
  if (name == "lm") return leimkuhler_matthews(dt);
  if (name == "pie") return postprocessed_implicit_euler(dt);
  if (name == "rk2") return rk2(dt);
  if (name == "pli") return preconditioned_linear_implicit(alpha, dt);
  throw ConfigError("unknown scheme '" + name + "' (expected ee, ie, theta, cn, lm, pie, rk2, pli)");
}

bool SchemeSpec::has_postprocessor() const {
  return kind == SchemeKind::LeimkuhlerMatthews || kind == SchemeKind::PostprocessedImplicitEuler;
}

bool SchemeSpec::is_theta_family() const {
  return kind == SchemeKind::ExplicitEuler || kind == SchemeKind::Theta ||
         kind == SchemeKind::CrankNicolson || kind == SchemeKind::ImplicitEuler;
}

double SchemeSpec::resolved_theta() const {
  switch (kind) {
    case SchemeKind::ExplicitEuler: return 0.0;
    case SchemeKind::CrankNicolson: return 0.5;
    case SchemeKind::ImplicitEuler: return 1.0;
    case SchemeKind::Theta: return theta;
    default: throw ConfigError("scheme '" + name() + "' is not a theta method");
  }
}

std::string SchemeSpec::name() const {
  switch (kind) {
    case SchemeKind::ExplicitEuler: return "ee";
    case SchemeKind::Theta: return "theta";
    case SchemeKind::CrankNicolson: return "cn";
    case SchemeKind::ImplicitEuler: return "ie";
    case SchemeKind::LeimkuhlerMatthews: return "lm";
    case SchemeKind::PostprocessedImplicitEuler: return "pie";
    case SchemeKind::RK2: return "rk2";
    case SchemeKind::PreconditionedLinearImplicit: return "pli";
  }
  return "?";
}

SchemeSpec SchemeSpec::with_dt(double new_dt) const {
  SchemeSpec s = *this;
  s.dt = new_dt;
  s.validate();
  return s;
}

void SchemeSpec::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw ConfigError("scheme " + name() + ": time step must be positive and finite; got dt=" +
                      format_number(dt));
  }
  const bool explicit_window = kind == SchemeKind::ExplicitEuler ||
                               kind == SchemeKind::LeimkuhlerMatthews || kind == SchemeKind::RK2 ||
                               (kind == SchemeKind::Theta && theta == 0.0);
  if (explicit_window && dt > 1.0) {
    throw ConfigError("scheme " + name() + ": dt=" + format_number(dt) +
                      " outside the stability window 0 < dt <= 1");
  }
  if (kind == SchemeKind::Theta) {
    if (!(theta >= 0.0 && theta <= 1.0)) {
      throw ConfigError("theta must lie in [0,1]; got theta=" + format_number(theta));
    }
    if (theta > 0.0 && theta < 0.5) {
      const double bound = 2.0 / (1.0 - 2.0 * theta);
      if (!(dt < bound)) {
        throw ConfigError("theta method with theta=" + format_number(theta) + ": dt=" +
                          format_number(dt) + " outside the window 0 < dt < 2/(1-2 theta) = " +
                          format_number(bound));
      }
    }
  }
  if (kind == SchemeKind::PreconditionedLinearImplicit && !(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("preconditioner exponent alpha must lie in [0,1]; got alpha=" +
                      format_number(alpha));
  }
}

FieldState step_explicit_euler(const SpectralSpace& space, const Nonlinearity& nl,
                               const FieldState& y, const FieldState& increment, double dt) {
  check_dims(space, y, increment);
  FieldState out(space.modes()), f(space.modes());
  DriftWorkspace ws(space.modes());
  kernel_explicit_euler(space, nl, y.span(), increment.span(), dt, out.span(), f.span(), ws);
  return out;
}

FieldState step_theta(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y,
                      const FieldState& increment, double dt, double theta) {
  check_dims(space, y, increment);
  FieldState out(space.modes()), f(space.modes());
  DriftWorkspace ws(space.modes());
  kernel_theta(space, nl, y.span(), increment.span(), dt, theta, out.span(), f.span(), ws);
  return out;
}

StepOutput step_lm(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y,
                   const FieldState& increment, double dt) {
  check_dims(space, y, increment);
  FieldState out(space.modes()), z(space.modes()), f(space.modes());
  DriftWorkspace ws(space.modes());
  kernel_lm(space, nl, y.span(), increment.span(), dt, out.span(), z.span(), f.span(), ws);
  FieldState post(space.modes());
  for (std::size_t k = 0; k < post.size(); ++k) post[k] = y[k] + 0.5 * increment[k];
  return {std::move(out), std::move(post)};
}

StepOutput step_pie(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y,
                    const FieldState& increment, double dt) {
  check_dims(space, y, increment);
  FieldState out(space.modes()), z(space.modes()), f(space.modes());
  DriftWorkspace ws(space.modes());
  kernel_pie(space, nl, y.span(), increment.span(), dt, out.span(), z.span(), f.span(), ws);
  FieldState post(space.modes());
  const double scale = 1.0 / (2.0 * std::sqrt(1.0 + 0.5 * dt));
  for (std::size_t k = 0; k < post.size(); ++k) post[k] = y[k] + scale * increment[k];
  return {std::move(out), std::move(post)};
}

FieldState step_rk2(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y,
                    const FieldState& increment, double dt) {
  check_dims(space, y, increment);
  const std::size_t n = space.modes();
  FieldState out(n), g0(n), pred(n), f(n);
  DriftWorkspace ws(n);
  kernel_rk2(space, nl, y.span(), increment.span(), dt, out.span(), g0.span(), pred.span(),
             f.span(), ws);
  return out;
}

FieldState step_pli(const SpectralSpace& space, const Nonlinearity& nl,
                    const Preconditioner& precond, const FieldState& y,
                    const FieldState& increment, double dt) {
  check_dims(space, y, increment);
  const std::size_t n = space.modes();
  std::vector<double> drift_scale(n), denom(n);
  for (std::size_t k = 0; k < n; ++k) {
    drift_scale[k] = dt * precond.multipliers[k];
    denom[k] = 1.0 + dt * precond.multipliers[k] * space.eigenvalue(k);
  }
  FieldState out(n), f(n);
  DriftWorkspace ws(n);
  kernel_pli(space, nl, y.span(), increment.span(), drift_scale, denom, out.span(), f.span(), ws);
  return out;
}

Stepper::Stepper(const SpectralSpace& space, const Nonlinearity& nl, const SchemeSpec& scheme)
    : space_(&space), nl_(&nl), scheme_(scheme) {
  scheme_.validate();
  const std::size_t n = space.modes();
  const double alpha =
      scheme.kind == SchemeKind::PreconditionedLinearImplicit ? scheme.alpha : 1.0;
  precond_ = Preconditioner::fractional(space, alpha);
  noise_scale_.resize(n);
  const double sdt = std::sqrt(scheme.dt);
  const bool p_noise = scheme.kind == SchemeKind::PreconditionedLinearImplicit;
  for (std::size_t k = 0; k < n; ++k) {
    // Q-noise for every scheme but pli, whose noise is P^{1/2} dW.
    noise_scale_[k] = sdt * (p_noise ? precond_.sqrt_multipliers[k] : std::sqrt(space.q()[k]));
  }
  if (scheme.kind == SchemeKind::PreconditionedLinearImplicit) {
    pli_denominator_.resize(n);
    pli_drift_scale_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      pli_drift_scale_[k] = scheme.dt * precond_.multipliers[k];
      pli_denominator_[k] = 1.0 + scheme.dt * precond_.multipliers[k] * space.eigenvalue(k);
    }
  }
}

void Stepper::scale_noise(std::span<const double> xi, std::span<double> dw) const {
  for (std::size_t k = 0; k < xi.size(); ++k) dw[k] = noise_scale_[k] * xi[k];
}

void Stepper::step(std::span<double> y, std::span<const double> dw, Workspace& ws) const {
  const double dt = scheme_.dt;
  switch (scheme_.kind) {
    case SchemeKind::ExplicitEuler:
      kernel_explicit_euler(*space_, *nl_, y, dw, dt, y, ws.a, ws.drift);
      break;
    case SchemeKind::Theta:
    case SchemeKind::CrankNicolson:
    case SchemeKind::ImplicitEuler:
      kernel_theta(*space_, *nl_, y, dw, dt, scheme_.resolved_theta(), y, ws.a, ws.drift);
      break;
    case SchemeKind::LeimkuhlerMatthews:
      kernel_lm(*space_, *nl_, y, dw, dt, y, ws.b, ws.a, ws.drift);
      break;
    case SchemeKind::PostprocessedImplicitEuler:
      kernel_pie(*space_, *nl_, y, dw, dt, y, ws.b, ws.a, ws.drift);
      break;
    case SchemeKind::RK2:
      kernel_rk2(*space_, *nl_, y, dw, dt, y, ws.b, ws.c, ws.a, ws.drift);
      break;
    case SchemeKind::PreconditionedLinearImplicit:
      kernel_pli(*space_, *nl_, y, dw, pli_drift_scale_, pli_denominator_, y, ws.a, ws.drift);
      break;
  }
}

void Stepper::postprocess(std::span<const double> y, std::span<const double> dw,
                          std::span<double> out) const {
  double scale = 0.0;
  if (scheme_.kind == SchemeKind::LeimkuhlerMatthews) {
    scale = 0.5;
  } else if (scheme_.kind == SchemeKind::PostprocessedImplicitEuler) {
    scale = 1.0 / (2.0 * std::sqrt(1.0 + 0.5 * scheme_.dt));
  } else {
    throw ConfigError("scheme " + scheme_.name() + " has no postprocessor");
  }
  for (std::size_t k = 0; k < y.size(); ++k) out[k] = y[k] + scale * dw[k];
}

TrajectoryResult run_trajectory(const SpectralSpace& space, const Nonlinearity& nl,
                                const SchemeSpec& scheme, const FieldState& initial,
                                NoiseStream& stream, std::uint64_t n_steps,
                                const TrajectoryObserver& observer) {
  if (initial.size() != space.modes()) {
    throw ConfigError("run_trajectory: initial state dimension does not match the space");
  }
  const Stepper stepper(space, nl, scheme);
  auto ws = stepper.workspace();
  TrajectoryResult result;
  FieldState y = initial;
  for (std::uint64_t n = 0; n < n_steps; ++n) {
    stream.next(ws.xi);
    stepper.scale_noise(ws.xi, ws.dw);
    stepper.step(y.span(), ws.dw, ws);
    if (!y.all_finite()) {
      result.diverged = true;
      result.diverged_at_step = n + 1;
      break;
    }
    if (observer) observer(n + 1, y.span());
  }
  if (scheme.has_postprocessor() && !result.diverged) {
    stream.next(ws.xi);
    stepper.scale_noise(ws.xi, ws.dw);
    FieldState post(space.modes());
    stepper.postprocess(y.span(), ws.dw, post.span());
    result.output.postprocessed_state = std::move(post);
  }
  result.output.next_state = std::move(y);
  return result;
}

std::uint64_t steps_for_horizon(double horizon, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (!(horizon >= 0.0)) throw ConfigError("final time must be non-negative");
  const double ratio = horizon / dt;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    const double nearest = rounded > 0.0 ? horizon / rounded : horizon;
    throw ConfigError("T/dt = " + format_number(ratio) +
                      " is not an integer; nearest valid dt is " + format_number(nearest));
  }
  return static_cast<std::uint64_t>(rounded);
}

}  // namespace pspde
