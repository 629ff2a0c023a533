#pragma once

#include <cstddef>
#include <filesystem>
#include <ostream>
#include <string>

#include "divkernel/estimation.hpp"
#include "divkernel/experiments.hpp"
#include "divkernel/simulation.hpp"

namespace divkernel::io {

/// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

// Each writer returns the number of data rows (header excluded).
std::size_t write_trajectory_csv(std::ostream& out, const sim::Trajectory& traj);
std::size_t write_snapshot_csv(std::ostream& out, const sim::Trajectory& traj);
/// Living cells at the horizon: index, label (with genealogy), toxicity.
std::size_t write_population_csv(std::ostream& out, const sim::Trajectory& traj);

std::size_t write_estimate_csv(std::ostream& out, const estimation::DensityEstimate& est);
/// {method, bandwidth, m_t, epsilon, delta, diagnostics: [{ell, A, penalty, objective}], ...}
void write_estimate_json(std::ostream& out, const estimation::DensityEstimate& est);

std::size_t write_table_csv(std::ostream& out, const experiments::McReport& report);
std::size_t write_replicates_csv(std::ostream& out, const experiments::McReport& report);
std::size_t write_rate_csv(std::ostream& out, const experiments::RateResult& result);
std::size_t write_epsilon_csv(std::ostream& out, const experiments::CalibrationReport& report);
std::size_t write_meanage_csv(std::ostream& out, const experiments::MeanAgeReport& report);
std::size_t write_spread_csv(std::ostream& out, const experiments::MeanAgeReport& report);
std::size_t write_ntcheck_csv(std::ostream& out, const experiments::NtCheckReport& report);
std::size_t write_ntbins_csv(std::ostream& out, const experiments::NtCheckReport& report);

/// Opens `path` for binary writing, runs `writer`, and throws std::runtime_error on I/O failure.
template <class Writer>
auto write_file(const std::filesystem::path& path, Writer&& writer);

}  // namespace divkernel::io

#include <fstream>
#include <stdexcept>

template <class Writer>
auto divkernel::io::write_file(const std::filesystem::path& path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  auto result = writer(out);
  out.flush();
  if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
  return result;
}
