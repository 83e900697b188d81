#pragma once

// Logistic-regression likelihood primitives over Eigen expressions.
//
// Parameters are packed as theta = [intercept, w_1, ..., w_d] so a design
// matrix of d columns pairs with a parameter vector of d + 1 entries.

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace fwc {

/// ln(1 + e^eta) without overflow.
template <typename Scalar>
Scalar log1p_exp(Scalar eta) {
  using std::abs;
  using std::exp;
  using std::log1p;
  return std::max(eta, Scalar(0)) + log1p(exp(-abs(eta)));
}

/// 1 / (1 + e^-eta), evaluated on the side that cannot overflow.
template <typename Scalar>
Scalar sigmoid(Scalar eta) {
  using std::exp;
  if (eta >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-eta));
  const Scalar e = exp(eta);
  return e / (Scalar(1) + e);
}

template <typename DerivedX, typename DerivedT>
Eigen::Matrix<typename DerivedT::Scalar, Eigen::Dynamic, 1> linear_predictor(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedT>& theta) {
  using Scalar = typename DerivedT::Scalar;
  const Eigen::Index d = x.cols();
  eigen_assert(theta.size() == d + 1);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> eta =
      x.template cast<Scalar>() * theta.tail(d);
  eta.array() += theta(0);
  return eta;
}

/// sum_i { y_i * eta_i - ln(1 + e^eta_i) }, eta = theta_0 + x_i . theta_{1..d}.
template <typename DerivedX, typename DerivedY, typename DerivedT>
typename DerivedT::Scalar log_likelihood(const Eigen::MatrixBase<DerivedX>& x,
                                         const Eigen::MatrixBase<DerivedY>& y,
                                         const Eigen::MatrixBase<DerivedT>& theta) {
  using Scalar = typename DerivedT::Scalar;
  const auto eta = linear_predictor(x, theta);
  Scalar total(0);
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    total += Scalar(y(i)) * eta(i) - log1p_exp(eta(i));
  }
  return total;
}

/// Gradient of log_likelihood with respect to theta: [sum r_i, X^T r], r = y - p.
template <typename DerivedX, typename DerivedY, typename DerivedT>
Eigen::Matrix<typename DerivedT::Scalar, Eigen::Dynamic, 1> log_likelihood_gradient(
    const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y,
    const Eigen::MatrixBase<DerivedT>& theta) {
  using Scalar = typename DerivedT::Scalar;
  const auto eta = linear_predictor(x, theta);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> residual(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) residual(i) = Scalar(y(i)) - sigmoid(eta(i));

  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad(theta.size());
  grad(0) = residual.sum();
  grad.tail(x.cols()) = x.template cast<Scalar>().transpose() * residual;
  return grad;
}

}  // namespace fwc
