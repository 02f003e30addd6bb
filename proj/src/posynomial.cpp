#include "epinet/posynomial.hpp"

#include <cmath>
#include <stdexcept>

namespace epinet {

void Posynomial::add_term(double coeff, const Eigen::VectorXd& exponents) {
  if (!(coeff > 0.0))
    throw std::invalid_argument("posynomial: coefficients must be > 0");
  if (exponents.size() != arity_)
    throw std::invalid_argument("posynomial: exponent vector has wrong arity");
  coeffs_.conservativeResize(coeffs_.size() + 1);
  coeffs_(coeffs_.size() - 1) = coeff;
  expo_.conservativeResize(expo_.rows() + 1, arity_);
  expo_.row(expo_.rows() - 1) = exponents.transpose();
}

void Posynomial::add_constant(double coeff) {
  add_term(coeff, Eigen::VectorXd::Zero(arity_));
}

double Posynomial::eval(const Eigen::VectorXd& x) const {
  if (x.size() != arity_)
    throw std::invalid_argument("posynomial: point has wrong arity");
  double total = 0.0;
  for (int k = 0; k < term_count(); ++k) {
    double term = coeffs_(k);
    for (int i = 0; i < arity_; ++i)
      if (expo_(k, i) != 0.0) term *= std::pow(x(i), expo_(k, i));
    total += term;
  }
  return total;
}

double Posynomial::log_eval(const Eigen::VectorXd& y, Eigen::VectorXd* grad,
                            Eigen::MatrixXd* hess) const {
  const int m = term_count();
  Eigen::VectorXd z = coeffs_.array().log().matrix() + expo_ * y;
  double zmax = z.maxCoeff();
  Eigen::VectorXd w = (z.array() - zmax).exp();
  double wsum = w.sum();
  double value = zmax + std::log(wsum);
  w /= wsum;  // softmax weights
  if (grad) *grad = expo_.transpose() * w;
  if (hess) {
    hess->setZero(arity_, arity_);
    for (int k = 0; k < m; ++k)
      hess->noalias() += w(k) * expo_.row(k).transpose() * expo_.row(k);
    Eigen::VectorXd g = expo_.transpose() * w;
    hess->noalias() -= g * g.transpose();
  }
  return value;
}

void Posynomial::scale(double factor) { coeffs_ /= factor; }

}  // namespace epinet
