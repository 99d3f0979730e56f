#pragma once

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "probfem/mesh.hpp"

namespace probfem {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Bar on an elastic foundation.
struct MaterialParams1D {
  double EA = 1.0;  ///< axial stiffness (N)
  double k = 0.0;   ///< foundation stiffness (N/m^2)
  double F = 0.0;   ///< end load (N)
};

/// Plane-stress elasticity. Elements with a nonzero tag use E_support.
struct MaterialParams2D {
  double E = 30e9;
  double nu = 0.2;
  double E_support = 1e15;
  double w = 0.01;  ///< prescribed downward displacement of the load point (m)
};

struct DirichletCondition {
  int node = 0;
  int component = 0;
  double value = 0.0;
};

struct PointLoad {
  int node = 0;
  int component = 0;
  double value = 0.0;
};

struct BoundaryConditions {
  std::vector<DirichletCondition> dirichlet;
  std::vector<PointLoad> loads;
};

/// K w = f over the free unknowns. Full nodal fields are ordered node-major
/// (node * components + component).
struct LinearSystem {
  SparseMatrix K;
  Eigen::VectorXd f;
  int components = 1;
  /// Unknown index of every full-field entry, -1 where the value is prescribed.
  std::vector<int> dof_map;
  /// Full nodal field carrying the Dirichlet values, zero elsewhere.
  Eigen::VectorXd lifting;

  int num_unknowns() const { return static_cast<int>(f.size()); }
  /// Full nodal field w + lifting.
  Eigen::VectorXd expand(const Eigen::VectorXd& w) const;
};

/// Linear elements with a consistent foundation matrix; the end load acts on
/// the node at the largest coordinate. Both ends are natural boundaries.
/// Throws SingularSystemError when k = 0.
LinearSystem assemble_bar(const Mesh& mesh, const MaterialParams1D& mat);

Eigen::Matrix3d plane_stress_matrix(double E, double nu);

/// Strain-displacement matrix of a linear triangle, rows (exx, eyy, gxy),
/// columns (u0, v0, u1, v1, u2, v2).
Eigen::Matrix<double, 3, 6> triangle_strain_matrix(Point a, Point b, Point c);

/// One-point (exact) stiffness matrix of a constant-strain triangle of unit thickness.
Eigen::Matrix<double, 6, 6> triangle_stiffness(Point a, Point b, Point c, const Eigen::Matrix3d& D);

/// Full (unconstrained) 2-component stiffness matrix.
SparseMatrix assemble_elasticity_stiffness(const Mesh& mesh, const MaterialParams2D& mat);

/// Plane-stress assembly; Dirichlet data enter through the lifting, so that
/// f_i = loads_i - sum_j K_ij lifting_j over free i.
LinearSystem assemble_elasticity(const Mesh& mesh, const MaterialParams2D& mat, const BoundaryConditions& bc);

/// Strain (exx, eyy, gxy) of element e for a full nodal displacement field.
Eigen::Vector3d element_strain(const Mesh& mesh, std::size_t e, const Eigen::VectorXd& displacement);

/// Symmetric factorization reused for several right-hand sides: dense
/// Cholesky for small systems, sparse Cholesky with a fill-reducing
/// ordering otherwise.
class Factorization {
 public:
  explicit Factorization(const SparseMatrix& K);
  ~Factorization();
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;

  int size() const { return n_; }
  bool dense() const { return dense_; }
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& B) const;

  static constexpr int kDenseLimit = 300;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int n_ = 0;
  bool dense_ = true;
};

/// Solves the system; throws IndefiniteMatrixError or SingularSystemError.
Eigen::VectorXd solve(const LinearSystem& system);

/// Sparse matrix mapping full nodal fields to point values. Row i*components + c
/// holds component c at point i. Points closer than `node_tolerance` to a node
/// get a unit row for that node.
SparseMatrix observation_matrix(const Mesh& mesh, std::span<const Point> points, int components,
                                double node_tolerance = -1.0);

/// Observation operator split into the part acting on the unknowns and the
/// constant lifting contribution: values = matrix * w + offset.
struct ObservationOperator {
  SparseMatrix matrix;
  Eigen::VectorXd offset;
};

ObservationOperator restrict_observation(const SparseMatrix& full, const LinearSystem& system);

/// Point values of the finite element solution w (plus lifting).
Eigen::VectorXd evaluate_solution(const Mesh& mesh, const LinearSystem& system, const Eigen::VectorXd& w,
                                  std::span<const Point> points);

}  // namespace probfem
