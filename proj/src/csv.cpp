#include "pspde/csv.hpp"

#include <charconv>
#include <system_error>

namespace pspde {

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

void write_sweep_csv(std::ostream& os, const ConvergenceReport& report) {
  os << kSweepHeader << '\n';
  const std::string name = report.scheme.name();
  for (const auto& row : report.rows) {
    os << name << ',' << format_double(row.dt) << ',' << format_double(row.estimate) << ','
       << format_double(row.std_error) << ',' << format_double(row.reference) << ','
       << format_double(row.bias) << ',' << (row.flagged ? 1 : 0) << '\n';
  }
  os << fitted_order_line(report) << '\n';
}

std::string fitted_order_line(const ConvergenceReport& report) {
  return "# fitted_order=" +
         (report.fitted_order ? format_double(*report.fitted_order) : std::string("unavailable"));
}

void write_sample_csv(std::ostream& os, const EnsembleEstimate& e) {
  os << kSampleHeader << '\n'
     << e.scheme.name() << ',' << format_double(e.scheme.dt) << ',' << format_double(e.T) << ','
     << e.n_samples << ',' << e.seed << ',' << format_double(e.mean) << ','
     << format_double(e.std_error) << ',' << e.n_diverged << '\n';
}

}  // namespace pspde
