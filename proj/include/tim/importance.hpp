#pragma once

// Confounder importance from twin regressions: an OLS outcome model and a
// ridge-stabilised logistic treatment model, each L-infinity normalised and
// averaged in absolute value.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "tim/dataset.hpp"
#include "tim/error.hpp"

namespace tim {

struct LogisticOptions {
  double ridge_lambda = 1e-6;  // applied to non-intercept coefficients only
  double tolerance = 1e-8;     // on max |coefficient change|
  int max_iterations = 100;
};

struct RegressionFit {
  double intercept = 0.0;
  std::vector<double> coefficients;  // one per covariate, intercept excluded
  int iterations = 0;
  bool converged = true;
  std::vector<std::string> warnings;
};

struct ImportanceVector {
  std::vector<double> theta_star;
  std::vector<double> beta_hat;
  std::vector<double> alpha_hat;
  // Column indices by descending theta_star, ties by ascending column index.
  std::vector<std::size_t> order;
  std::vector<std::string> warnings;
};

namespace detail {

// [1, x_1 .. x_k] design matrix; discrete covariates enter as their codes.
inline Eigen::MatrixXd design_matrix(const Dataset& ds) {
  Eigen::MatrixXd x(ds.n(), ds.k() + 1);
  x.col(0).setOnes();
  for (std::size_t j = 0; j < ds.k(); ++j) {
    x.col(static_cast<Eigen::Index>(j + 1)) =
        Eigen::Map<const Eigen::VectorXd>(ds.column(j).values.data(), static_cast<Eigen::Index>(ds.n()));
  }
  return x;
}

inline double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow.
inline double log1p_exp(double eta) {
  return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

inline RegressionFit split_intercept(const Eigen::VectorXd& coef) {
  RegressionFit fit;
  fit.intercept = coef(0);
  fit.coefficients.assign(coef.data() + 1, coef.data() + coef.size());
  return fit;
}

}  // namespace detail

// Least squares on [1, X]. A rank-deficient design is solved in the
// minimum-norm sense and reported with the dependent columns.
inline RegressionFit fit_least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                       const std::vector<std::string>& names = {}) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank == x.cols()) return detail::split_intercept(qr.solve(y));

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
  cod.setThreshold(1e-10);
  RegressionFit fit = detail::split_intercept(cod.solve(y));
  std::string cols;
  const auto perm = qr.colsPermutation().indices();
  for (Eigen::Index p = rank; p < perm.size(); ++p) {
    const auto c = perm(p);
    if (!cols.empty()) cols += ", ";
    if (c == 0) cols += "(intercept)";
    else if (static_cast<std::size_t>(c - 1) < names.size()) cols += names[c - 1];
    else cols += "x" + std::to_string(c - 1);
  }
  fit.warnings.push_back("collinear design (rank " + std::to_string(rank) + " of " +
                         std::to_string(x.cols()) + "); minimum-norm solution, dependent: " + cols);
  return fit;
}

inline RegressionFit fit_outcome_model(const Dataset& ds) {
  const Eigen::VectorXd y =
      Eigen::Map<const Eigen::VectorXd>(ds.outcome().data(), static_cast<Eigen::Index>(ds.n()));
  if (ds.n() <= ds.k() + 1) {
    throw DegenerateDataError("outcome model needs n > k + 1 (n = " + std::to_string(ds.n()) +
                              ", k = " + std::to_string(ds.k()) + ")");
  }
  return fit_least_squares(detail::design_matrix(ds), y, ds.column_names());
}

// Penalised negative log-likelihood
//   sum_i [log(1 + exp(x_i'a)) - t_i x_i'a] + lambda/2 * |a_{1..k}|^2
// minimised by Newton-Raphson (IRLS) with step halving.
inline double logistic_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& t,
                                 const Eigen::VectorXd& coef, double lambda) {
  const Eigen::VectorXd eta = x * coef;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) nll += detail::log1p_exp(eta(i)) - t(i) * eta(i);
  return nll + 0.5 * lambda * coef.tail(coef.size() - 1).squaredNorm();
}

// Gradient of the penalised log-likelihood (the quantity driven to zero).
inline Eigen::VectorXd logistic_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& t,
                                         const Eigen::VectorXd& coef, double lambda) {
  const Eigen::VectorXd eta = x * coef;
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) resid(i) = t(i) - detail::expit(eta(i));
  Eigen::VectorXd g = x.transpose() * resid;
  g.tail(g.size() - 1) -= lambda * coef.tail(coef.size() - 1);
  return g;
}

inline RegressionFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& t,
                                  const LogisticOptions& opt = {}) {
  const Eigen::Index p = x.cols();
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd penalty = Eigen::VectorXd::Constant(p, opt.ridge_lambda);
  penalty(0) = 0.0;

  double objective = logistic_objective(x, t, coef, opt.ridge_lambda);
  int iter = 0;
  bool converged = false;
  while (iter < opt.max_iterations) {
    ++iter;
    const Eigen::VectorXd eta = x * coef;
    Eigen::VectorXd w(eta.size()), resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const double pr = detail::expit(eta(i));
      w(i) = pr * (1.0 - pr);
      resid(i) = t(i) - pr;
    }
    Eigen::VectorXd grad = x.transpose() * resid - penalty.cwiseProduct(coef);
    Eigen::MatrixXd hess = x.transpose() * w.asDiagonal() * x;
    hess.diagonal() += penalty;
    // Tiny jitter keeps the factorisation defined when every weight underflows.
    hess.diagonal().array() += 1e-12;
    Eigen::VectorXd step = hess.ldlt().solve(grad);

    double scale = 1.0;
    Eigen::VectorXd next = coef + step;
    double next_obj = logistic_objective(x, t, next, opt.ridge_lambda);
    for (int halvings = 0; halvings < 30 && !(next_obj <= objective); ++halvings) {
      scale *= 0.5;
      next = coef + scale * step;
      next_obj = logistic_objective(x, t, next, opt.ridge_lambda);
    }
    const double change = (scale * step).cwiseAbs().maxCoeff();
    coef = next;
    objective = next_obj;
    if (change < opt.tolerance) {
      converged = true;
      break;
    }
  }

  RegressionFit fit = detail::split_intercept(coef);
  fit.iterations = iter;
  fit.converged = converged;
  if (!converged) {
    fit.warnings.push_back("logistic fit did not converge in " + std::to_string(iter) + " iterations");
  }
  // Complete separation: the fitted index classifies every unit correctly.
  const Eigen::VectorXd eta = x * coef;
  bool separated = true;
  for (Eigen::Index i = 0; i < eta.size() && separated; ++i) {
    separated = t(i) > 0.5 ? eta(i) > 0 : eta(i) < 0;
  }
  if (separated) {
    fit.warnings.push_back("complete separation: the covariates classify treatment perfectly; coefficients are the "
                           "ridge-penalised solution");
  }
  return fit;
}

inline RegressionFit fit_treatment_model(const Dataset& ds, const LogisticOptions& opt = {}) {
  Eigen::VectorXd t(static_cast<Eigen::Index>(ds.n()));
  for (std::size_t i = 0; i < ds.n(); ++i) t(static_cast<Eigen::Index>(i)) = ds.treatment()[i];
  return fit_logistic(detail::design_matrix(ds), t, opt);
}

inline ImportanceVector compute_theta_star(const std::vector<double>& beta_hat,
                                           const std::vector<double>& alpha_hat) {
  if (beta_hat.size() != alpha_hat.size()) {
    throw SchemaError("outcome and treatment coefficient vectors differ in length");
  }
  const std::size_t k = beta_hat.size();
  auto normalized_abs = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    std::vector<double> out(v.size(), 0.0);
    if (m > 0.0) {
      for (std::size_t j = 0; j < v.size(); ++j) out[j] = std::abs(v[j]) / m;
    }
    return out;
  };
  const auto b = normalized_abs(beta_hat);
  const auto a = normalized_abs(alpha_hat);

  ImportanceVector iv;
  iv.beta_hat = beta_hat;
  iv.alpha_hat = alpha_hat;
  iv.theta_star.resize(k);
  for (std::size_t j = 0; j < k; ++j) iv.theta_star[j] = (b[j] + a[j]) / 2.0;
  iv.order.resize(k);
  std::iota(iv.order.begin(), iv.order.end(), std::size_t{0});
  std::stable_sort(iv.order.begin(), iv.order.end(), [&](std::size_t l, std::size_t r) {
    return iv.theta_star[l] > iv.theta_star[r];
  });
  return iv;
}

// Alternative importance estimators (tree-based, model reliance, ...) plug in here.
using ImportanceMethod = std::function<ImportanceVector(const Dataset&)>;

inline ImportanceVector regression_importance(const Dataset& ds, const LogisticOptions& opt = {}) {
  RegressionFit outcome = fit_outcome_model(ds);
  RegressionFit treatment = fit_treatment_model(ds, opt);
  ImportanceVector iv = compute_theta_star(outcome.coefficients, treatment.coefficients);
  for (auto& w : outcome.warnings) iv.warnings.push_back("outcome model: " + w);
  for (auto& w : treatment.warnings) iv.warnings.push_back("treatment model: " + w);
  return iv;
}

}  // namespace tim
