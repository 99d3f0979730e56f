#pragma once

#include <span>

#include <Eigen/Dense>

#include "probfem/mesh.hpp"

namespace probfem {

struct StatfemHyperparams {
  double rho = 1.0;
  double ell_d = 1.0;
  double sigma_d = 0.0;
};

/// k_d(x, x') = sigma_d^2 exp(-|x - x'|^2 / (2 ell_d^2)) over the points.
Eigen::MatrixXd sq_exp_covariance(std::span<const Point> points, double ell_d, double sigma_d);

/// k_d kron I_components + sigma_e^2 I, rows ordered point-major.
Eigen::MatrixXd statfem_covariance(std::span<const Point> points, int components, const StatfemHyperparams& eta,
                                   double sigma_e);

/// log N(y; rho * prediction, k_d kron I + sigma_e^2 I).
double statfem_log_likelihood(const Eigen::VectorXd& y, const Eigen::VectorXd& prediction,
                              std::span<const Point> points, int components, const StatfemHyperparams& eta,
                              double sigma_e);

}  // namespace probfem
