#pragma once

#include <Eigen/Dense>

#include "probfem/fem.hpp"

namespace probfem {

/// Gaussian likelihood of the observations under the Bayesian FEM error model.
struct BfemLikelihood {
  Eigen::VectorXd mean;  ///< coarse FEM prediction at the observation points
  Eigen::MatrixXd cov;   ///< discretization-error covariance, without noise
  double sigma_u = 0.0;
  double sigma_e = 0.0;
  /// Smallest eigenvalue of C_fine - C_coarse before clipping, and its trace.
  double min_eigenvalue = 0.0;
  double trace = 0.0;
};

/// Evidence-maximizing scale sqrt(f^T u / n). Throws IndefiniteMatrixError
/// when f^T u < 0.
double sigma_u_hat(const Eigen::VectorXd& f, const Eigen::VectorXd& u, int n);

/// Builds the likelihood from a coarse system and its hierarchical
/// refinement. The covariance is sigma_u^2 (P_f K_f^-1 P_f^T - P_c K_c^-1 P_c^T),
/// symmetrized, with negative eigenvalues clipped to zero; sigma_u comes from
/// the coarse system.
///
/// Throws NestingError when the fine space has fewer unknowns than the coarse
/// one or the operators observe different numbers of values.
BfemLikelihood bfem_likelihood(const LinearSystem& coarse, const LinearSystem& fine, const ObservationOperator& P_coarse,
                               const ObservationOperator& P_fine, double sigma_e);

/// Same, reusing factorizations and the coarse solution.
BfemLikelihood bfem_likelihood(const LinearSystem& coarse, const Factorization& coarse_factor,
                               const Eigen::VectorXd& coarse_solution, const LinearSystem& fine,
                               const Factorization& fine_factor, const ObservationOperator& P_coarse,
                               const ObservationOperator& P_fine, double sigma_e);

/// log N(y; mean, cov + sigma_e^2 I).
double bfem_log_likelihood(const Eigen::VectorXd& y, const BfemLikelihood& like);

}  // namespace probfem
