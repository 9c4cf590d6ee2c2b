#pragma once

#include <cmath>
#include <concepts>
#include <vector>

#include <Eigen/Dense>

namespace claimbrush {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <std::floating_point Scalar>
Scalar sigmoid(Scalar x) {
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
  const Scalar e = std::exp(x);
  return e / (Scalar(1) + e);
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  return x.unaryExpr([](Scalar v) { return sigmoid(v); });
}

// log(1 + exp(x)) without overflow.
template <std::floating_point Scalar>
Scalar softplus(Scalar x) {
  return x > Scalar(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <typename Derived>
typename Derived::Scalar log_sum_exp(const Eigen::MatrixBase<Derived>& v) {
  const auto m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

template <typename Derived>
typename Derived::PlainObject log_softmax(const Eigen::MatrixBase<Derived>& v) {
  return (v.array() - log_sum_exp(v)).matrix();
}

template <typename Derived>
typename Derived::PlainObject softmax(const Eigen::MatrixBase<Derived>& v) {
  const auto m = v.maxCoeff();
  typename Derived::PlainObject e = (v.array() - m).exp().matrix();
  return e / e.sum();
}

template <typename Scalar>
struct LogisticFit {
  Vector<Scalar> weights;
  Scalar bias = Scalar(0);
  // Mean cross-entropy over the full training set after each epoch.
  std::vector<Scalar> loss_history;
};

/// Mean binary cross-entropy of sigmoid(X w + b) against 0/1 labels.
template <typename DerivedX, typename DerivedY, typename DerivedW>
typename DerivedX::Scalar mean_cross_entropy(const Eigen::MatrixBase<DerivedX>& x,
                                             const Eigen::MatrixBase<DerivedY>& y,
                                             const Eigen::MatrixBase<DerivedW>& w,
                                             typename DerivedX::Scalar b) {
  using Scalar = typename DerivedX::Scalar;
  const Vector<Scalar> z = (x * w).array() + b;
  Scalar total = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) total += softplus(z(i)) - y(i) * z(i);
  return total / static_cast<Scalar>(z.size());
}

}  // namespace claimbrush
