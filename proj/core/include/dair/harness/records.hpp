#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dair/harness/config.hpp"

namespace dair::harness {

/// Final metrics of one (variant, sweep point, replicate) run. A metric may be
/// missing, e.g. a consistency metric without support.
struct RunRecord {
  std::string experiment;  // variant name
  std::string preset;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double noise = 0.0;
  double fraction = 1.0;
  std::vector<std::pair<std::string, std::optional<double>>> metrics;
  double wall_seconds = 0.0;

  void set(const std::string& name, std::optional<double> value);
  // nullopt when absent or missing.
  std::optional<double> metric(const std::string& name) const;
  double axis(SweepAxis a) const;
};

struct Aggregate {
  std::string experiment;
  std::string preset;
  double lambda = 0.0;
  double noise = 0.0;
  double fraction = 1.0;
  std::string metric;
  std::size_t n = 0;  // non-missing values
  std::optional<double> mean;
  std::optional<double> std;  // n-1 denominator; missing for n < 2

  double axis(SweepAxis a) const;
};

/// Groups by (experiment, preset, lambda, noise, fraction) and metric, in
/// order of first appearance. Empty input -> DataError.
std::vector<Aggregate> aggregate(const std::vector<RunRecord>& records);

/// Long format, header `experiment,preset,seed,lambda,noise,fraction,metric,value`;
/// missing values are written as NA.
void write_records_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path);
std::vector<RunRecord> read_records_csv(const std::filesystem::path& path);

/// Header `experiment,preset,lambda,noise,fraction,metric,n,mean,std`.
void write_aggregates_csv(const std::vector<Aggregate>& aggregates, const std::filesystem::path& path);

/// Header `experiment,preset,seed,lambda,noise,fraction,wall_seconds`.
void write_timings_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path);

/// One `x,mean,std` file per (preset, experiment, metric) under `dir`, x
/// ascending along `axis`. Other axes must be constant within a series, or
/// their values are folded into the file name. Returns the files written.
std::vector<std::filesystem::path> write_plot_data(const std::vector<Aggregate>& aggregates, SweepAxis axis,
                                                   const std::filesystem::path& dir);

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

}  // namespace dair::harness
