#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "dair/harness/config.hpp"
#include "dair/harness/records.hpp"

namespace dair::harness {

/// One job: a variant at one sweep point and replicate.
struct RunPoint {
  std::size_t variant = 0;
  double lambda = 0.0;
  double noise = 0.0;
  double fraction = 1.0;
  std::size_t replicate = 0;
};

/// Cross product of variants, sweep axes and replicates in a fixed order.
/// Variants without a lambda term run once per (noise, fraction) with lambda
/// recorded as 0.
std::vector<RunPoint> expand(const ExperimentConfig& cfg);

using Progress = std::function<void(const RunRecord& done, std::size_t finished, std::size_t total)>;

/// Runs every point of `cfg`. The record seed is base_seed + replicate and
/// drives data, initialization and shuffling alike, so variants at the same
/// replicate see identical randomness. Jobs run on up to cfg.parallel
/// threads; the returned order matches expand(). Validation and data loading
/// happen before any training.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const Progress& progress = {});

struct SweepGroup {
  double value = 0.0;
  std::vector<RunRecord> records;
};

/// run_experiment grouped by the value of `axis`, ascending.
std::vector<SweepGroup> sweep(const ExperimentConfig& cfg, SweepAxis axis, const Progress& progress = {});

/// Writes records.csv, aggregates.csv, timings.csv, config.ini and, when an
/// axis is given, plot-data series under plot/ in cfg.out_dir.
void emit_results(const ExperimentConfig& cfg, const std::vector<RunRecord>& records,
                  std::optional<SweepAxis> plot_axis = std::nullopt);

}  // namespace dair::harness
