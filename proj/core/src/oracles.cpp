#include "dair/oracles.hpp"

#include <algorithm>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "dair/errors.hpp"

namespace dair {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

std::string regime(const ToyRegressionParams& p) {
  std::ostringstream os;
  os << "a=" << p.a << " var_x=" << p.var_x << " var_eps=" << p.var_eps << " var_n=" << p.var_n
     << " gamma=" << p.gamma;
  return os.str();
}

void require_denominator(double den, const ToyRegressionParams& p, const char* what) {
  if (!(std::abs(den) > 1e-300) || !std::isfinite(den)) {
    throw DomainError(std::string(what) + ": denominator vanishes at " + regime(p));
  }
}

}  // namespace

void ToyRegressionParams::validate() const {
  require(std::isfinite(a), "toy params: a must be finite");
  require(var_x > 0 && std::isfinite(var_x), "toy params: var_x must be positive");
  require(var_eps > 0 && std::isfinite(var_eps), "toy params: var_eps must be positive");
  require(var_n >= 0 && std::isfinite(var_n), "toy params: var_n must be nonnegative");
  require(gamma >= 0 && std::isfinite(gamma), "toy params: gamma must be nonnegative");
}

void MultivariateToyParams::validate() const {
  require(d >= 1, "multivariate params: d must be at least 1");
  require(!v_train.empty(), "multivariate params: k must be at least 1");
  require(v_train.size() == u_aug.size(), "multivariate params: v_train and u_aug lengths differ");
  require(var_x >= 0 && var_eps >= 0 && var_n_train >= 0 && var_n_aug >= 0,
          "multivariate params: variances must be nonnegative");
}

Weights2 da_erm_weights(const ToyRegressionParams& p) {
  p.validate();
  require(p.gamma == 0.0, "da_erm_weights: gamma must be 0; use weight_decay_weights");
  const double a = p.a, vx = p.var_x, ve = p.var_eps, vn = p.var_n;
  const double den = a * a * (vx + 2 * ve) - 2 * a * vx + vx + 2 * (ve + vn);
  require_denominator(den, p, "da_erm_weights");
  const double num1 = a * a * (vx + ve) - 2 * a * (vx + ve) + vx + ve + 2 * vn;
  const double num2 = 2 * (a + 1) * ve;
  return {num1 / den, num2 / den};
}

Weights2 dair_limit_weights() { return {1.0, 0.0}; }

double test_loss(const Weights2& w, const ToyRegressionParams& p) {
  return (w.w1 - 1) * (w.w1 - 1) * p.var_x + p.var_eps;
}

Weights2 weight_decay_weights(const ToyRegressionParams& p) {
  p.validate();
  const double a = p.a, vx = p.var_x, ve = p.var_eps, vn = p.var_n, g = p.gamma;
  const double den = a * a * g * (ve + vx) + a * a * vx * (2 * ve + vx) - 2 * a * vx * vx + g * g +
                     g * (ve + vn + 3 * vx) + vx * (2 * ve + 2 * vn + vx);
  require_denominator(den, p, "weight_decay_weights");
  const double num1 = vx * (a * a * (ve + vx) - 2 * a * (ve + vx) + 2 * g + ve + 2 * vn + vx);
  const double num2 = (a + 1) * (g * (ve + vx) + 2 * ve * vx);
  return {num1 / den, num2 / den};
}

double da_erm_population_objective(const Weights2& w, const ToyRegressionParams& p) {
  const double r1 = w.w1 + w.w2 - 1, e1 = w.w2 - 1;
  const double r2 = w.w1 + p.a * w.w2 - 1, e2 = p.a * w.w2 - 1;
  const double train = r1 * r1 * p.var_x + e1 * e1 * p.var_eps;
  const double aug = r2 * r2 * p.var_x + e2 * e2 * p.var_eps + w.w2 * w.w2 * p.var_n;
  return 0.5 * (train + aug) + 0.5 * p.gamma * (w.w1 * w.w1 + w.w2 * w.w2);
}

Weights2 da_erm_population_gradient(const Weights2& w, const ToyRegressionParams& p) {
  const double r1 = w.w1 + w.w2 - 1, e1 = w.w2 - 1;
  const double r2 = w.w1 + p.a * w.w2 - 1, e2 = p.a * w.w2 - 1;
  const double g1 = r1 * p.var_x + r2 * p.var_x + p.gamma * w.w1;
  const double g2 = r1 * p.var_x + e1 * p.var_eps + p.a * (r2 * p.var_x + e2 * p.var_eps) + w.w2 * p.var_n +
                    p.gamma * w.w2;
  return {g1, g2};
}

LinearSystem multivariate_system(const MultivariateToyParams& p) {
  p.validate();
  const std::size_t d = p.d, k = p.v_train.size(), n = d + k;
  Eigen::VectorXd one_hat = Eigen::VectorXd::Zero(n), v = Eigen::VectorXd::Zero(n), u = Eigen::VectorXd::Zero(n);
  one_hat.head(d).setOnes();
  for (std::size_t i = 0; i < k; ++i) {
    v[d + i] = p.v_train[i];
    u[d + i] = p.u_aug[i];
  }
  Eigen::MatrixXd i_hat = Eigen::MatrixXd::Zero(n, n), i_tilde = Eigen::MatrixXd::Zero(n, n);
  i_hat.topLeftCorner(d, d).setIdentity();
  i_tilde.bottomRightCorner(k, k).setIdentity();
  // E[(1'x)^2] = var_x * d, so the squared-norm factor is d.
  const double dd = static_cast<double>(d);

  Eigen::MatrixXd q = p.var_x * (v * one_hat.transpose() + one_hat * v.transpose() + u * one_hat.transpose() +
                                 one_hat * u.transpose() + dd * v * v.transpose() + dd * u * u.transpose()) +
                      2 * p.var_x * i_hat + (p.var_n_train + p.var_n_aug) * i_tilde +
                      p.var_eps * (v * v.transpose() + u * u.transpose());
  Eigen::VectorXd b = p.var_x * (-2 * one_hat - (v + u) * dd) - p.var_eps * (v + u);

  LinearSystem sys;
  sys.n = n;
  sys.q.resize(n * n);
  sys.b.assign(b.data(), b.data() + n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) sys.q[r * n + c] = q(r, c);
  }
  return sys;
}

MultivariateSolution multivariate_solution(const MultivariateToyParams& p) {
  const LinearSystem sys = multivariate_system(p);
  const auto n = static_cast<Eigen::Index>(sys.n);
  Eigen::MatrixXd q(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) q(r, c) = sys.q[r * n + c];
  }
  const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(sys.b.data(), n);

  Eigen::PartialPivLU<Eigen::MatrixXd> lu(q);
  // The norm-based estimate is unreliable once a pivot is exactly zero, so
  // the pivot spread is checked as well.
  const Eigen::VectorXd pivots = lu.matrixLU().diagonal().cwiseAbs();
  const double spread = pivots.maxCoeff() > 0 ? pivots.minCoeff() / pivots.maxCoeff() : 0.0;
  const double rcond = std::min(lu.rcond(), spread);
  if (!(rcond > 1e3 * std::numeric_limits<double>::epsilon())) {
    std::ostringstream os;
    os << "multivariate_solution: Q is singular to working precision (rcond estimate " << rcond << ")";
    throw NumericError(os.str());
  }
  const Eigen::VectorXd w = lu.solve(-b);
  MultivariateSolution out;
  out.w.assign(w.data(), w.data() + n);
  out.rcond = rcond;
  out.residual = (q * w + b).cwiseAbs().maxCoeff();
  return out;
}

double prop32_bound(std::size_t classes, double lambda) {
  require(classes >= 2, "prop32_bound: need at least two classes");
  require(lambda > 0 && std::isfinite(lambda), "prop32_bound: lambda must be positive (bound is unbounded at 0)");
  return std::log(static_cast<double>(classes)) / lambda;
}

}  // namespace dair
