#pragma once

#include <ostream>
#include <span>
#include <string>

#include "pspde/harness.hpp"

namespace pspde {

/// Shortest round-trip decimal form, independent of the locale.
std::string format_double(double v);

inline constexpr const char* kSweepHeader = "scheme,dt,estimate,stderr,reference,bias,flagged";
inline constexpr const char* kSampleHeader = "scheme,dt,T,samples,seed,estimate,stderr,n_diverged";

void write_sweep_csv(std::ostream& os, const ConvergenceReport& report);
/// `# fitted_order=<value|unavailable>`
std::string fitted_order_line(const ConvergenceReport& report);
void write_sample_csv(std::ostream& os, const EnsembleEstimate& estimate);

}  // namespace pspde
