#include "probfem/bfem.hpp"

#include <cmath>

#include "probfem/errors.hpp"
#include "probfem/gaussian.hpp"

namespace probfem {

double sigma_u_hat(const Eigen::VectorXd& f, const Eigen::VectorXd& u, int n) {
  if (n < 1) throw InvalidArgument("unknown count must be positive");
  if (f.size() != u.size()) throw InvalidArgument("load and solution sizes differ");
  const double energy = f.dot(u);
  if (energy < 0.0) throw IndefiniteMatrixError("negative energy f^T u");
  return std::sqrt(energy / n);
}

BfemLikelihood bfem_likelihood(const LinearSystem& coarse, const LinearSystem& fine, const ObservationOperator& P_coarse,
                               const ObservationOperator& P_fine, double sigma_e) {
  const Factorization coarse_factor(coarse.K);
  const Factorization fine_factor(fine.K);
  return bfem_likelihood(coarse, coarse_factor, coarse_factor.solve(coarse.f), fine, fine_factor, P_coarse, P_fine,
                         sigma_e);
}

BfemLikelihood bfem_likelihood(const LinearSystem& coarse, const Factorization& coarse_factor,
                               const Eigen::VectorXd& coarse_solution, const LinearSystem& fine,
                               const Factorization& fine_factor, const ObservationOperator& P_coarse,
                               const ObservationOperator& P_fine, double sigma_e) {
  if (P_coarse.matrix.rows() != P_fine.matrix.rows()) throw NestingError("observation operators differ in size");
  if (fine.num_unknowns() < coarse.num_unknowns()) throw NestingError("fine space smaller than coarse space");
  if (P_coarse.matrix.cols() != coarse.num_unknowns() || P_fine.matrix.cols() != fine.num_unknowns()) {
    throw InvalidArgument("observation operator does not match its system");
  }
  BfemLikelihood like;
  like.sigma_e = sigma_e;
  like.mean = P_coarse.matrix * coarse_solution + P_coarse.offset;
  like.sigma_u = sigma_u_hat(coarse.f, coarse_solution, coarse.num_unknowns());

  const Eigen::MatrixXd Pc = Eigen::MatrixXd(P_coarse.matrix.transpose());
  const Eigen::MatrixXd Pf = Eigen::MatrixXd(P_fine.matrix.transpose());
  const Eigen::MatrixXd C_coarse = Pc.transpose() * coarse_factor.solve(Pc);
  const Eigen::MatrixXd C_fine = Pf.transpose() * fine_factor.solve(Pf);
  Eigen::MatrixXd diff = C_fine - C_coarse;
  diff = 0.5 * (diff + diff.transpose()).eval();

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(diff);
  like.min_eigenvalue = eig.eigenvalues().size() > 0 ? eig.eigenvalues().minCoeff() : 0.0;
  like.trace = diff.trace();
  if (like.min_eigenvalue < 0.0) {
    const Eigen::VectorXd clipped = eig.eigenvalues().cwiseMax(0.0);
    diff = eig.eigenvectors() * clipped.asDiagonal() * eig.eigenvectors().transpose();
    diff = 0.5 * (diff + diff.transpose()).eval();
  }
  like.cov = (like.sigma_u * like.sigma_u) * diff;
  return like;
}

double bfem_log_likelihood(const Eigen::VectorXd& y, const BfemLikelihood& like) {
  if (y.size() != like.mean.size()) throw InvalidArgument("observation vector has the wrong size");
  return gaussian_logpdf(y - like.mean, like.cov + noise_covariance(y.size(), like.sigma_e));
}

}  // namespace probfem
