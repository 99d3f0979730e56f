#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "probfem/bfem.hpp"
#include "probfem/fem.hpp"
#include "probfem/geometry.hpp"
#include "probfem/mesh.hpp"
#include "probfem/rmfem.hpp"
#include "probfem/statfem.hpp"

namespace probfem {

/// u(x) = F / sqrt(k EA) * cosh(nu x) / sinh(nu), nu = sqrt(k / EA), for the
/// bar on [0, 1]; evaluated in a form that does not overflow for large nu.
double pullout_exact_solution(double EA, double k, double F, double x);

/// A parametrized forward problem with point observations.
class ForwardProblem {
 public:
  virtual ~ForwardProblem() = default;

  virtual int components() const = 0;
  virtual const std::vector<Point>& observation_points() const = 0;
  virtual std::vector<std::string> parameter_names() const = 0;
  /// Mesh used at parameter theta.
  virtual Mesh mesh(const Eigen::VectorXd& theta) const = 0;
  virtual LinearSystem assemble(const Mesh& mesh, const Eigen::VectorXd& theta) const = 0;
  /// Nodes that random-mesh perturbations must leave in place.
  virtual std::vector<int> fixed_nodes(const Mesh& mesh) const = 0;

  int num_observations() const { return static_cast<int>(observation_points().size()) * components(); }
};

struct ForwardSolution {
  Mesh mesh;
  LinearSystem system;
  Eigen::VectorXd w;
  ObservationOperator observation;
  Eigen::VectorXd prediction;  ///< observed values of the solution
};

ForwardSolution solve_forward(const ForwardProblem& problem, const Mesh& mesh, const Eigen::VectorXd& theta);

/// Bar on an elastic foundation over [0, length], observed at the loaded end.
/// Parameters (EA, k).
class PulloutProblem : public ForwardProblem {
 public:
  explicit PulloutProblem(int n_elements, double F = 10.0, double length = 1.0);

  int components() const override { return 1; }
  const std::vector<Point>& observation_points() const override { return points_; }
  std::vector<std::string> parameter_names() const override { return {"EA", "k"}; }
  Mesh mesh(const Eigen::VectorXd& theta) const override;
  LinearSystem assemble(const Mesh& mesh, const Eigen::VectorXd& theta) const override;
  std::vector<int> fixed_nodes(const Mesh& mesh) const override;

  double load() const { return F_; }
  int n_elements() const { return n_elements_; }

 private:
  int n_elements_;
  double F_;
  Mesh mesh_;
  std::vector<Point> points_;
};

/// Three-point bending of a beam with a rounded-square hole, observed in both
/// displacement components at the boundary sensors. Parameters (x, y, d, alpha, r).
class ThreePointProblem : public ForwardProblem {
 public:
  ThreePointProblem(double h, BeamGeometry beam = {}, MaterialParams2D material = {},
                    TriangulationOptions triangulation = {});

  int components() const override { return 2; }
  const std::vector<Point>& observation_points() const override { return sensors_; }
  std::vector<std::string> parameter_names() const override { return {"x", "y", "d", "alpha", "r"}; }
  Mesh mesh(const Eigen::VectorXd& theta) const override;
  LinearSystem assemble(const Mesh& mesh, const Eigen::VectorXd& theta) const override;
  std::vector<int> fixed_nodes(const Mesh& mesh) const override;

  /// Support bases pinned, vertical displacement -w at the load point.
  BoundaryConditions boundary_conditions(const Mesh& mesh) const;
  double h() const { return h_; }
  const BeamGeometry& beam() const { return beam_; }
  const MaterialParams2D& material() const { return material_; }

  static HoleParams hole_from(const Eigen::VectorXd& theta);

 private:
  double h_;
  BeamGeometry beam_;
  MaterialParams2D material_;
  TriangulationOptions triangulation_;
  std::vector<Point> sensors_;
};

/// FEM likelihood N(y; P u_h, sigma_e^2 I).
double fem_log_likelihood(const ForwardSolution& solution, const Eigen::VectorXd& y, double sigma_e);
double fem_log_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                          double sigma_e);

/// BFEM likelihood with the hierarchically refined mesh as reference.
BfemLikelihood bfem_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta, double sigma_e);
double bfem_log_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                           double sigma_e);

/// FEM likelihood on one perturbed mesh.
double rmfem_replica_log_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta,
                                    const Mesh& perturbed, const Eigen::VectorXd& y, double sigma_e);

/// Pseudomarginal RM-FEM estimate: M perturbations of the mesh at theta with
/// fresh random streams derived from `seed`.
PseudomarginalEstimate rmfem_log_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& y, double sigma_e,
                                            const PseudomarginalConfig& config, std::uint64_t seed);

double statfem_log_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta,
                              const StatfemHyperparams& eta, const Eigen::VectorXd& y, double sigma_e);

/// Likelihood of the pullout end displacement under the closed-form solution.
double pullout_exact_log_likelihood(const Eigen::VectorXd& theta, double F, const Eigen::VectorXd& y, double sigma_e);

}  // namespace probfem
