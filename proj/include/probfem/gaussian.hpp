#pragma once

#include <Eigen/Dense>

namespace probfem {

/// Log-density of N(0, cov) at `residual`, via a Cholesky factorization.
/// Throws LikelihoodEvaluationError when cov is not positive definite.
double gaussian_logpdf(const Eigen::VectorXd& residual, const Eigen::MatrixXd& cov);

/// Noise-only covariance sigma_e^2 I of size m.
Eigen::MatrixXd noise_covariance(Eigen::Index m, double sigma_e);

}  // namespace probfem
