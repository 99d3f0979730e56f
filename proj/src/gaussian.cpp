#include "probfem/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "probfem/errors.hpp"

namespace probfem {

double gaussian_logpdf(const Eigen::VectorXd& residual, const Eigen::MatrixXd& cov) {
  if (cov.rows() != residual.size() || cov.cols() != residual.size()) {
    throw InvalidArgument("covariance does not match the observation vector");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw LikelihoodEvaluationError("covariance is not positive definite");
  const Eigen::VectorXd z = llt.matrixL().solve(residual);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  if (!std::isfinite(log_det)) throw LikelihoodEvaluationError("covariance is not positive definite");
  return -0.5 * (static_cast<double>(residual.size()) * std::log(2.0 * std::numbers::pi) + log_det + z.squaredNorm());
}

Eigen::MatrixXd noise_covariance(Eigen::Index m, double sigma_e) {
  if (!(sigma_e > 0.0)) throw InvalidArgument("noise standard deviation must be positive");
  return Eigen::MatrixXd::Identity(m, m) * (sigma_e * sigma_e);
}

}  // namespace probfem
