#include "pspde/model.hpp"

#include <algorithm>
#include <cmath>

namespace pspde {

Nonlinearity Nonlinearity::zero() {
  Nonlinearity nl;
  nl.kind = NonlinearityKind::Zero;
  nl.name = "zero";
  nl.lip_bound = 0.0;
  return nl;
}

Nonlinearity Nonlinearity::cosine() {
  Nonlinearity nl;
  nl.kind = NonlinearityKind::Cosine;
  nl.name = "cos";
  nl.lip_bound = 2.0;
  return nl;
}

Nonlinearity Nonlinearity::linear() {
  Nonlinearity nl;
  nl.kind = NonlinearityKind::Linear;
  nl.name = "linear";
  nl.lip_bound = 1.0;
  return nl;
}

Nonlinearity Nonlinearity::custom(std::string name, std::function<double(double)> f,
                                  std::function<double(double)> f_prime,
                                  std::function<double(double)> potential, double lip_bound,
                                  std::function<double(double)> f_second) {
  if (!f || !f_prime || !potential) {
    throw ConfigError("custom nonlinearity needs f, f' and the potential density u");
  }
  if (!(lip_bound >= 0.0)) throw ConfigError("Lipschitz bound must be non-negative");
  Nonlinearity nl;
  nl.kind = NonlinearityKind::Custom;
  nl.name = std::move(name);
  nl.lip_bound = lip_bound;
  nl.f = std::move(f);
  nl.f_prime = std::move(f_prime);
  nl.f_second = std::move(f_second);
  nl.potential = std::move(potential);
  return nl;
}

Nonlinearity Nonlinearity::by_name(const std::string& name) {
  if (name == "zero") return zero();
  if (name == "cos") return cosine();
  if (name == "linear") return linear();
  throw ConfigError("unknown nonlinearity '" + name + "' (expected zero, cos or linear)");
}

double Nonlinearity::value(double x) const {
  switch (kind) {
    case NonlinearityKind::Zero: return 0.0;
    case NonlinearityKind::Cosine: return -x + std::cos(x);
    case NonlinearityKind::Linear: return -x;
    case NonlinearityKind::Custom: return f(x);
  }
  return 0.0;
}

double Nonlinearity::derivative(double x) const {
  switch (kind) {
    case NonlinearityKind::Zero: return 0.0;
    case NonlinearityKind::Cosine: return -1.0 - std::sin(x);
    case NonlinearityKind::Linear: return -1.0;
    case NonlinearityKind::Custom: return f_prime(x);
  }
  return 0.0;
}

double Nonlinearity::second_derivative(double x) const {
  switch (kind) {
    case NonlinearityKind::Zero: return 0.0;
    case NonlinearityKind::Cosine: return -std::cos(x);
    case NonlinearityKind::Linear: return 0.0;
    case NonlinearityKind::Custom:
      if (!f_second) throw ConfigError("nonlinearity '" + name + "' has no second derivative");
      return f_second(x);
  }
  return 0.0;
}

double Nonlinearity::potential_density(double x) const {
  switch (kind) {
    case NonlinearityKind::Zero: return 0.0;
    case NonlinearityKind::Cosine: return 0.5 * x * x - std::sin(x);
    case NonlinearityKind::Linear: return 0.5 * x * x;
    case NonlinearityKind::Custom: return potential(x);
  }
  return 0.0;
}

void apply_F(const SpectralSpace& space, const Nonlinearity& nl, std::span<const double> y,
             std::span<double> out, DriftWorkspace& ws) {
  const std::size_t n = space.modes();
  if (nl.is_zero()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (nl.kind == NonlinearityKind::Linear) {
    for (std::size_t k = 0; k < n; ++k) out[k] = -y[k];
    return;
  }
  ws.grid.resize(n);
  ws.values.resize(n);
  space.to_physical(y, ws.grid);
  if (nl.kind == NonlinearityKind::Cosine) {
    for (std::size_t i = 0; i < n; ++i) ws.values[i] = -ws.grid[i] + std::cos(ws.grid[i]);
  } else {
    for (std::size_t i = 0; i < n; ++i) ws.values[i] = nl.value(ws.grid[i]);
  }
  space.from_physical(ws.values, out);
}

FieldState apply_F(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y) {
  if (y.size() != space.modes()) throw ConfigError("apply_F: dimension mismatch");
  FieldState out(space.modes());
  DriftWorkspace ws(space.modes());
  apply_F(space, nl, y.span(), out.span(), ws);
  return out;
}

double potential_V(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y) {
  if (y.size() != space.modes()) throw ConfigError("potential_V: dimension mismatch");
  if (nl.is_zero()) return 0.0;
  const auto grid = space.to_physical(y);
  double acc = nl.potential_density(0.0);  // two half-weight boundary nodes
  for (double v : grid) acc += nl.potential_density(v);
  return space.grid_spacing() * acc;
}

FieldState drift_G(const SpectralSpace& space, const Nonlinearity& nl, const FieldState& y) {
  FieldState out = apply_F(space, nl, y);
  const auto q = space.q();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = -y[k] + q[k] * out[k];
  return out;
}

FieldState drift_P(const SpectralSpace& space, const Preconditioner& precond,
                   const Nonlinearity& nl, const FieldState& y) {
  FieldState out = apply_F(space, nl, y);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double p = precond.multipliers[k];
    out[k] = -p * space.eigenvalue(k) * y[k] + p * out[k];
  }
  return out;
}

FieldState sample_increment(const SpectralSpace& space, const Preconditioner& precond,
                            NoiseStream& stream, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  FieldState out(space.modes());
  stream.next(out.span());
  const double sdt = std::sqrt(dt);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] *= sdt * precond.sqrt_multipliers[k];
  return out;
}

}  // namespace pspde
