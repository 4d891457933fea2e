#include "pspde/spectral_space.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>

namespace pspde {

namespace {

constexpr std::size_t kSineTransformThreshold = 32;

// The FFTW planner is not thread-safe; execution of an existing plan is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

namespace detail {

/// RODFT00 plan: Y_k = 2 sum_j X_j sin(pi (j+1)(k+1)/(n+1)).
class SineTransformPlan {
 public:
  explicit SineTransformPlan(std::size_t n) : n_(n) {
    std::vector<double> in(n), out(n);
    std::lock_guard lock(planner_mutex());
    plan_ = fftw_plan_r2r_1d(static_cast<int>(n), in.data(), out.data(), FFTW_RODFT00,
                             FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_PRESERVE_INPUT);
    if (plan_ == nullptr) throw std::runtime_error("fftw: could not create RODFT00 plan");
  }
  ~SineTransformPlan() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan_);
  }
  SineTransformPlan(const SineTransformPlan&) = delete;
  SineTransformPlan& operator=(const SineTransformPlan&) = delete;

  void execute(std::span<const double> in, std::span<double> out) const {
    // FFTW_PRESERVE_INPUT guarantees `in` is untouched.
    fftw_execute_r2r(plan_, const_cast<double*>(in.data()), out.data());
  }

  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  fftw_plan plan_ = nullptr;
};

}  // namespace detail

std::string to_string(Flavor flavor) {
  return flavor == Flavor::SpectralGalerkin ? "spectral" : "fd";
}

bool FieldState::all_finite() const {
  return std::all_of(coeffs.begin(), coeffs.end(), [](double v) { return std::isfinite(v); });
}

SpectralSpace::SpectralSpace(Flavor flavor, std::size_t modes, TransformBackend backend)
    : flavor_(flavor), dx_(1.0 / static_cast<double>(modes + 1)), backend_(backend) {
  if (modes == 0) throw ConfigError("mode count must be positive");
  const double pi = std::numbers::pi;
  eigenvalues_.resize(modes);
  for (std::size_t k = 0; k < modes; ++k) {
    const double kk = static_cast<double>(k + 1);
    if (flavor == Flavor::SpectralGalerkin) {
      eigenvalues_[k] = pi * pi * kk * kk;
    } else {
      const double s = std::sin(kk * pi * dx_ / 2.0);
      eigenvalues_[k] = 4.0 / (dx_ * dx_) * s * s;
    }
  }
  q_.resize(modes);
  std::transform(eigenvalues_.begin(), eigenvalues_.end(), q_.begin(),
                 [](double l) { return 1.0 / l; });

  basis_.resize(modes * modes);
  for (std::size_t k = 0; k < modes; ++k) {
    for (std::size_t i = 0; i < modes; ++i) {
      // sin(k i pi/(K+1)) with the product reduced mod 2(K+1) keeps the
      // argument small so the table is accurate to a few ulps.
      const std::size_t period = 2 * (modes + 1);
      const std::size_t m = ((k + 1) * (i + 1)) % period;
      basis_[k * modes + i] = std::numbers::sqrt2 * std::sin(pi * static_cast<double>(m) * dx_);
    }
  }

  if (backend_ == TransformBackend::Auto) {
    backend_ = modes >= kSineTransformThreshold ? TransformBackend::SineTransform
                                                : TransformBackend::Dense;
  }
  if (backend_ == TransformBackend::SineTransform) {
    dst_ = std::make_shared<const detail::SineTransformPlan>(modes);
  }
}

SpectralSpace SpectralSpace::spectral(std::size_t modes, TransformBackend backend) {
  return SpectralSpace(Flavor::SpectralGalerkin, modes, backend);
}

SpectralSpace SpectralSpace::finite_difference(double dx, TransformBackend backend) {
  if (!(dx > 0.0) || dx > 0.5 + 1e-12) {
    throw ConfigError("grid spacing must lie in (0, 0.5]; got dx=" + std::to_string(dx));
  }
  const double cells = 1.0 / dx;
  const double rounded = std::max(2.0, std::round(cells));
  const double nearest = 1.0 / rounded;
  if (std::abs(dx - nearest) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "grid spacing dx=" << dx << " is not of the form 1/(K+1); nearest valid dx is "
        << nearest << " (K=" << static_cast<std::size_t>(rounded) - 1 << ")";
    throw ConfigError(msg.str());
  }
  return SpectralSpace(Flavor::FiniteDifference, static_cast<std::size_t>(rounded) - 1, backend);
}

SpectralSpace SpectralSpace::finite_difference_modes(std::size_t modes, TransformBackend backend) {
  return SpectralSpace(Flavor::FiniteDifference, modes, backend);
}

SpectralSpace SpectralSpace::with_backend(TransformBackend backend) const {
  return SpectralSpace(flavor_, modes(), backend);
}

void SpectralSpace::dense_to_physical(std::span<const double> coeffs,
                                      std::span<double> grid) const {
  const std::size_t n = modes();
  double* __restrict out = grid.data();
  const double* __restrict basis = basis_.data();
  std::fill(out, out + n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double c = coeffs[k];
    const double* __restrict row = basis + k * n;
    for (std::size_t i = 0; i < n; ++i) out[i] += c * row[i];
  }
}

void SpectralSpace::dense_from_physical(std::span<const double> grid,
                                        std::span<double> coeffs) const {
  // The basis table is symmetric, e_k(z_i) = e_i(z_k), so this is the same
  // outer-product sweep as dense_to_physical.
  const std::size_t n = modes();
  double* __restrict out = coeffs.data();
  const double* __restrict basis = basis_.data();
  std::fill(out, out + n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double g = dx_ * grid[i];
    const double* __restrict row = basis + i * n;
    for (std::size_t k = 0; k < n; ++k) out[k] += g * row[k];
  }
}

void SpectralSpace::to_physical(std::span<const double> coeffs, std::span<double> grid) const {
  if (coeffs.size() != modes() || grid.size() != modes()) {
    throw ConfigError("to_physical: dimension mismatch");
  }
  if (dst_) {
    dst_->execute(coeffs, grid);
    const double scale = std::numbers::sqrt2 / 2.0;
    for (double& v : grid) v *= scale;
  } else {
    dense_to_physical(coeffs, grid);
  }
}

void SpectralSpace::from_physical(std::span<const double> grid, std::span<double> coeffs) const {
  if (coeffs.size() != modes() || grid.size() != modes()) {
    throw ConfigError("from_physical: dimension mismatch");
  }
  if (dst_) {
    dst_->execute(grid, coeffs);
    const double scale = dx_ * std::numbers::sqrt2 / 2.0;
    for (double& v : coeffs) v *= scale;
  } else {
    dense_from_physical(grid, coeffs);
  }
}

std::vector<double> SpectralSpace::to_physical(const FieldState& state) const {
  std::vector<double> grid(modes());
  to_physical(state.span(), grid);
  return grid;
}

FieldState SpectralSpace::from_physical(std::span<const double> grid) const {
  FieldState state(modes());
  from_physical(grid, state.span());
  return state;
}

FieldState project(const FieldState& state, std::size_t modes) {
  if (modes > state.size()) {
    throw ConfigError("project: requested " + std::to_string(modes) +
                      " modes from a state of length " + std::to_string(state.size()));
  }
  return FieldState(std::vector<double>(state.coeffs.begin(),
                                        state.coeffs.begin() + static_cast<std::ptrdiff_t>(modes)));
}

FieldState apply_diagonal(const SpectralSpace& space, double exponent, const FieldState& state) {
  if (state.size() != space.modes()) throw ConfigError("apply_diagonal: dimension mismatch");
  FieldState out(state.size());
  for (std::size_t k = 0; k < state.size(); ++k) {
    out[k] = std::pow(space.eigenvalue(k), exponent) * state[k];
  }
  return out;
}

double sobolev_norm(const SpectralSpace& space, const FieldState& state, double beta) {
  if (state.size() != space.modes()) throw ConfigError("sobolev_norm: dimension mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < state.size(); ++k) {
    acc += std::pow(space.eigenvalue(k), beta) * state[k] * state[k];
  }
  return std::sqrt(acc);
}

double trace_q(const SpectralSpace& space, double alpha) {
  double acc = 0.0;
  for (double l : space.eigenvalues()) acc += std::pow(l, 2.0 * alpha - 1.0);
  return acc;
}

double l2_norm(std::span<const double> coeffs) {
  return std::sqrt(std::inner_product(coeffs.begin(), coeffs.end(), coeffs.begin(), 0.0));
}

Preconditioner Preconditioner::fractional(const SpectralSpace& space, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError("preconditioner exponent alpha must lie in [0,1]; got " +
                      std::to_string(alpha));
  }
  Preconditioner p;
  p.alpha = alpha;
  p.multipliers.resize(space.modes());
  p.sqrt_multipliers.resize(space.modes());
  for (std::size_t k = 0; k < space.modes(); ++k) {
    p.multipliers[k] = alpha == 0.0 ? 1.0 : std::pow(space.eigenvalue(k), -alpha);
    p.sqrt_multipliers[k] = std::sqrt(p.multipliers[k]);
  }
  return p;
}

double Preconditioner::inf_lambda_p(const SpectralSpace& space) const {
  double inf = multipliers[0] * space.eigenvalue(0);
  for (std::size_t k = 1; k < multipliers.size(); ++k) {
    inf = std::min(inf, multipliers[k] * space.eigenvalue(k));
  }
  return inf;
}

bool Preconditioner::admissible(const SpectralSpace& space) const {
  const double lhs = space.eigenvalue(0) * sup();
  return lhs <= inf_lambda_p(space) * (1.0 + 1e-12);
}

double Preconditioner::contraction_rate(const SpectralSpace& space, double lipschitz) const {
  return inf_lambda_p(space) - sup() * lipschitz;
}

}  // namespace pspde
