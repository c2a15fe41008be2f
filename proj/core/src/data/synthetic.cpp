#include "dair/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <string>

#include "dair/errors.hpp"
#include "dair/rng.hpp"

namespace dair::data {
namespace {

double gaussian(Rng& rng, double var) {
  if (var == 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, std::sqrt(var));
  return n(rng);
}

PairedSample make(std::vector<double> x, std::optional<std::vector<double>> twin, double label, std::size_t id) {
  PairedSample s;
  s.original = ad::Tensor::vector(std::move(x));
  if (twin) s.augmented = ad::Tensor::vector(std::move(*twin));
  s.label = label;
  s.pairing_id = id;
  return s;
}

void require_n(std::size_t n) {
  if (n == 0) throw DomainError("sample count must be at least 1");
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

SyntheticSplit gen_spurious_regression(std::size_t n, const ToyRegressionParams& p, std::uint64_t seed,
                                       std::size_t n_test) {
  require_n(n);
  p.validate();
  if (n_test == 0) n_test = n;
  SyntheticSplit out;
  out.train.reserve(n);
  Rng rng = make_rng(seed, {stream::kData});
  for (std::size_t i = 0; i < n; ++i) {
    const double x = gaussian(rng, p.var_x);
    const double y = x + gaussian(rng, p.var_eps);
    const double s_aug = p.a * y + gaussian(rng, p.var_n);
    out.train.push_back(make({x, y}, std::vector<double>{x, s_aug}, y, i));
  }
  Rng test_rng = make_rng(seed, {stream::kTest});
  out.test.reserve(n_test);
  for (std::size_t i = 0; i < n_test; ++i) {
    const double x = gaussian(test_rng, p.var_x);
    const double y = x + gaussian(test_rng, p.var_eps);
    out.test.push_back(make({x, 0.0}, std::nullopt, y, i));
  }
  return out;
}

SyntheticSplit gen_logistic_toy(std::size_t n, double var_x, double var_t1, double var_t2, std::uint64_t seed,
                                std::size_t n_test) {
  require_n(n);
  if (!(var_x >= 0 && var_t1 >= 0 && var_t2 >= 0)) throw DomainError("logistic toy: variances must be nonnegative");
  if (n_test == 0) n_test = n;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticSplit out;
  out.train.reserve(n);
  Rng rng = make_rng(seed, {stream::kData});
  for (std::size_t i = 0; i < n; ++i) {
    const double x = gaussian(rng, var_x);
    const double y = unit(rng) < sigmoid(x) ? 1.0 : 0.0;
    const double s = 2 * y - 1 + gaussian(rng, var_t1);
    const double s_aug = s + gaussian(rng, var_t2);
    out.train.push_back(make({x, s}, std::vector<double>{x, s_aug}, y, i));
  }
  Rng test_rng = make_rng(seed, {stream::kTest});
  out.test.reserve(n_test);
  for (std::size_t i = 0; i < n_test; ++i) {
    const double x = gaussian(test_rng, var_x);
    const double y = unit(test_rng) < sigmoid(x) ? 1.0 : 0.0;
    out.test.push_back(make({x, 1 - 2 * y}, std::nullopt, y, i));
  }
  return out;
}

SyntheticSplit gen_robust_regression(std::size_t n, const RobustRegressionParams& p, std::uint64_t seed,
                                     std::size_t n_test) {
  require_n(n);
  if (p.d == 0) throw DomainError("robust regression: d must be at least 1");
  if (!(p.noise >= 0 && p.noise <= 1)) throw DomainError("robust regression: noise must lie in [0,1]");
  if (n_test == 0) n_test = n;
  const double beta = 1.0 / std::sqrt(static_cast<double>(p.d));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto draw = [&](Rng& rng, std::vector<double>& x) {
    x.assign(p.d + 1, 0.0);
    double y = 0.0;
    for (std::size_t j = 0; j < p.d; ++j) {
      x[j] = gaussian(rng, 1.0);
      y += beta * x[j];
    }
    return y + gaussian(rng, p.var_eps);
  };

  Rng rng = make_rng(seed, {stream::kData});
  std::vector<std::vector<double>> xs(n);
  std::vector<double> targets(n);
  std::vector<std::uint8_t> coin(n);
  for (std::size_t i = 0; i < n; ++i) {
    double y = draw(rng, xs[i]);
    if (unit(rng) < p.noise) y += p.outlier_shift + gaussian(rng, p.outlier_var);
    targets[i] = y;
    coin[i] = unit(rng) < 0.5 ? 1 : 0;
  }
  std::vector<double> sorted = targets;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n / 2), sorted.end());
  const double median = sorted[n / 2];

  SyntheticSplit out;
  out.train.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x = xs[i];
    x[p.d] = targets[i] > median ? 1.0 : 0.0;
    std::vector<double> twin = xs[i];
    twin[p.d] = coin[i];
    out.train.push_back(make(std::move(x), std::move(twin), targets[i], i));
  }
  Rng test_rng = make_rng(seed, {stream::kTest});
  out.test.reserve(n_test);
  for (std::size_t i = 0; i < n_test; ++i) {
    std::vector<double> x;
    const double y = draw(test_rng, x);
    x[p.d] = y > median ? 0.0 : 1.0;
    out.test.push_back(make(std::move(x), std::nullopt, y, i));
  }
  return out;
}

void export_csv(const std::vector<PairedSample>& samples, const std::filesystem::path& path) {
  if (samples.empty()) throw DataError("export_csv: no samples");
  const std::size_t f = samples.front().original.size();
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t j = 0; j + 1 < f; ++j) out << "x" << j << ',';
  out << "s,s_aug,label\n";
  out << std::setprecision(17);
  for (const PairedSample& s : samples) {
    if (s.original.size() != f) throw ShapeError("export_csv: feature count differs between samples");
    for (std::size_t j = 0; j + 1 < f; ++j) {
      if (s.augmented && (*s.augmented)[j] != s.original[j]) {
        throw DataError("export_csv: twin differs outside the spurious coordinate");
      }
      out << s.original[j] << ',';
    }
    out << s.original[f - 1] << ',';
    if (s.augmented) out << (*s.augmented)[f - 1];
    out << ',' << s.label << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace dair::data
