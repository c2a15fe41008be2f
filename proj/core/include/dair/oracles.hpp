#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace dair {

/// One-dimensional spurious-feature regression:
/// y = x + eps, train s = y, augmented s = a y + n, test s = 0.
struct ToyRegressionParams {
  double a = 0.5;
  double var_x = 1.0;
  double var_eps = 0.25;
  double var_n = 0.1;
  double gamma = 0.0;  // weight decay strength

  // var_x, var_eps > 0; var_n, gamma >= 0; all finite. Throws DomainError.
  void validate() const;
};

struct Weights2 {
  double w1 = 0.0;
  double w2 = 0.0;
};

/// Multivariate extension: x in R^d, s_train = y v + n_train,
/// s_aug = y u + n_aug, y = 1'x + eps.
struct MultivariateToyParams {
  std::vector<double> v_train;
  std::vector<double> u_aug;
  std::size_t d = 1;
  double var_x = 1.0;
  double var_eps = 0.25;
  double var_n_train = 0.0;
  double var_n_aug = 0.1;

  void validate() const;
};

struct LinearSystem {
  std::vector<double> q;  // row-major (d+k) x (d+k)
  std::vector<double> b;
  std::size_t n = 0;
};

struct MultivariateSolution {
  std::vector<double> w;  // length d + k
  double rcond = 0.0;     // reciprocal condition estimate of Q
  double residual = 0.0;  // max |Q w + b|
};

/// Population DA-ERM minimiser. Requires gamma == 0. Throws DomainError when
/// the denominator vanishes.
Weights2 da_erm_weights(const ToyRegressionParams& p);

/// Limit of the DAIR minimiser as lambda grows: (1, 0).
Weights2 dair_limit_weights();

/// Test loss with the spurious feature zeroed: (w1 - 1)^2 var_x + var_eps.
double test_loss(const Weights2& w, const ToyRegressionParams& p);

/// Minimiser of the DA-ERM population objective plus gamma/2 |w|^2.
Weights2 weight_decay_weights(const ToyRegressionParams& p);

/// Population DA-ERM objective (mean of the two branch losses) plus the
/// weight-decay term, and its gradient. Used as an independent check of the
/// closed forms.
double da_erm_population_objective(const Weights2& w, const ToyRegressionParams& p);
Weights2 da_erm_population_gradient(const Weights2& w, const ToyRegressionParams& p);

/// Assembles Q and b of the optimality condition Q w = -b.
LinearSystem multivariate_system(const MultivariateToyParams& p);

/// Solves Q w = -b by LU with partial pivoting. Throws NumericError carrying
/// the condition estimate when Q is singular to working precision.
MultivariateSolution multivariate_solution(const MultivariateToyParams& p);

/// ln(K) / lambda; K >= 2 and lambda > 0 else DomainError.
double prop32_bound(std::size_t classes, double lambda);

}  // namespace dair
