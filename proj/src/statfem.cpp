#include "probfem/statfem.hpp"

#include <cmath>

#include "probfem/errors.hpp"
#include "probfem/gaussian.hpp"

namespace probfem {

Eigen::MatrixXd sq_exp_covariance(std::span<const Point> points, double ell_d, double sigma_d) {
  if (!(ell_d > 0.0)) throw InvalidArgument("length scale must be positive");
  if (!(sigma_d >= 0.0)) throw InvalidArgument("misspecification std must be non-negative");
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd K(m, m);
  const double s2 = sigma_d * sigma_d;
  for (Eigen::Index i = 0; i < m; ++i) {
    K(i, i) = s2;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = distance(points[i], points[j]);
      K(i, j) = K(j, i) = s2 * std::exp(-0.5 * r * r / (ell_d * ell_d));
    }
  }
  return K;
}

Eigen::MatrixXd statfem_covariance(std::span<const Point> points, int components, const StatfemHyperparams& eta,
                                   double sigma_e) {
  if (components < 1) throw InvalidArgument("component count must be positive");
  const Eigen::MatrixXd Kd = sq_exp_covariance(points, eta.ell_d, eta.sigma_d);
  const auto m = static_cast<Eigen::Index>(points.size()) * components;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < Kd.rows(); ++i) {
    for (Eigen::Index j = 0; j < Kd.cols(); ++j) {
      for (int c = 0; c < components; ++c) cov(i * components + c, j * components + c) = Kd(i, j);
    }
  }
  return cov + noise_covariance(m, sigma_e);
}

double statfem_log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& prediction,
                              std::span<const Point> points, int components, const StatfemHyperparams& eta,
                              double sigma_e) {
  if (y.size() != prediction.size() || y.size() != static_cast<Eigen::Index>(points.size()) * components) {
    throw InvalidArgument("observation sizes do not match");
  }
  return gaussian_logpdf(y - eta.rho * prediction, statfem_covariance(points, components, eta, sigma_e));
}

}  // namespace probfem
