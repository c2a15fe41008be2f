#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dair/data/paired.hpp"
#include "dair/oracles.hpp"

namespace dair::data {

struct SyntheticSplit {
  std::vector<PairedSample> train;  // every sample carries a twin
  std::vector<PairedSample> test;   // no twins
};

/// Features (x, s). y = x + eps; train s = y, twin s = a y + n, test s = 0.
SyntheticSplit gen_spurious_regression(std::size_t n, const ToyRegressionParams& p, std::uint64_t seed,
                                       std::size_t n_test = 0);

/// Features (x, s), label y in {0,1} with P(y=1|x) = sigmoid(x).
/// Train s = 2y-1+t1, twin s = 2y-1+t1+t2, test s = 1-2y.
SyntheticSplit gen_logistic_toy(std::size_t n, double var_x, double var_t1, double var_t2, std::uint64_t seed,
                                std::size_t n_test = 0);

/// Regression with a binary spurious coordinate, for the robust-loss study.
///   x ~ N(0, I_d), y = beta'x + N(0, var_eps), beta_j = 1/sqrt(d).
///   A `noise` fraction of training targets is corrupted: the target is
///   replaced by y + outlier_shift + N(0, outlier_var).
///   Train s = 1 if the (observed) target exceeds the training median, test
///   s is the reverse on clean targets, twins draw s uniformly from {0,1}.
struct RobustRegressionParams {
  std::size_t d = 10;
  double var_eps = 0.1;
  double noise = 0.4;
  double outlier_shift = 10.0;
  double outlier_var = 4.0;
};

SyntheticSplit gen_robust_regression(std::size_t n, const RobustRegressionParams& p, std::uint64_t seed,
                                     std::size_t n_test = 0);

/// One row per sample: features..., has_twin, twin features..., label.
void export_csv(const std::vector<PairedSample>& samples, const std::filesystem::path& path);

}  // namespace dair::data
