#include "probfem/fem.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>

#include "probfem/errors.hpp"

namespace probfem {
namespace {

using Triplet = Eigen::Triplet<double>;

/// Shape function values of the element containing p, or false.
bool locate_1d(const Mesh& mesh, Point p, double tol, std::array<int, 2>& nodes, std::array<double, 2>& phi) {
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.element(e);
    const double xa = mesh.node(el[0]).x, xb = mesh.node(el[1]).x;
    const double lo = std::min(xa, xb), hi = std::max(xa, xb);
    if (p.x < lo - tol || p.x > hi + tol) continue;
    const double t = std::clamp((p.x - xa) / (xb - xa), 0.0, 1.0);
    nodes = {el[0], el[1]};
    phi = {1.0 - t, t};
    return true;
  }
  return false;
}

bool locate_2d(const Mesh& mesh, Point p, double tol, std::array<int, 3>& nodes, std::array<double, 3>& phi) {
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.element(e);
    const Point a = mesh.node(el[0]), b = mesh.node(el[1]), c = mesh.node(el[2]);
    const double area = cross(b - a, c - a);
    const double l0 = cross(b - p, c - p) / area;
    const double l1 = cross(c - p, a - p) / area;
    const double l2 = 1.0 - l0 - l1;
    if (l0 < -tol || l1 < -tol || l2 < -tol) continue;
    nodes = {el[0], el[1], el[2]};
    phi = {l0, l1, l2};
    return true;
  }
  return false;
}

/// Throws unless the prescribed components remove the three planar rigid-body modes.
void check_rigid_modes(const Mesh& mesh, const BoundaryConditions& bc) {
  Eigen::MatrixXd modes(bc.dirichlet.size(), 3);
  const Point center = 0.5 * (mesh.nodes().front() + mesh.nodes().back());
  const double scale = std::max(mesh.diameter(), std::numeric_limits<double>::min());
  for (std::size_t i = 0; i < bc.dirichlet.size(); ++i) {
    const auto& d = bc.dirichlet[i];
    const Point q = (1.0 / scale) * (mesh.node(d.node) - center);
    if (d.component == 0) {
      modes.row(i) << 1.0, 0.0, -q.y;
    } else {
      modes.row(i) << 0.0, 1.0, q.x;
    }
  }
  if (bc.dirichlet.empty() || Eigen::FullPivLU<Eigen::MatrixXd>(modes).rank() < 3) {
    throw SingularSystemError("Dirichlet conditions leave a rigid-body mode");
  }
}

}  // namespace

Eigen::VectorXd LinearSystem::expand(const Eigen::VectorXd& w) const {
  if (w.size() != f.size()) throw InvalidArgument("coefficient vector has the wrong size");
  Eigen::VectorXd full = lifting;
  for (std::size_t i = 0; i < dof_map.size(); ++i) {
    if (dof_map[i] >= 0) full[static_cast<Eigen::Index>(i)] += w[dof_map[i]];
  }
  return full;
}

LinearSystem assemble_bar(const Mesh& mesh, const MaterialParams1D& mat) {
  if (mesh.dim() != 1) throw InvalidArgument("assemble_bar needs a 1D mesh");
  if (!(mat.EA > 0.0)) throw InvalidArgument("EA must be positive");
  if (!(mat.k >= 0.0)) throw InvalidArgument("k must be non-negative");
  if (mat.k == 0.0) throw SingularSystemError("k = 0 leaves a rigid-body mode in the pullout bar");
  const auto n = static_cast<int>(mesh.num_nodes());
  std::vector<Triplet> triplets;
  triplets.reserve(4 * mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.element(e);
    const double h = std::abs(mesh.element_measure(e));
    const double s = mat.EA / h, m = mat.k * h / 6.0;
    triplets.emplace_back(el[0], el[0], s + 2.0 * m);
    triplets.emplace_back(el[1], el[1], s + 2.0 * m);
    triplets.emplace_back(el[0], el[1], -s + m);
    triplets.emplace_back(el[1], el[0], -s + m);
  }
  LinearSystem sys;
  sys.components = 1;
  sys.K.resize(n, n);
  sys.K.setFromTriplets(triplets.begin(), triplets.end());
  sys.f = Eigen::VectorXd::Zero(n);
  int right = 0;
  for (int i = 1; i < n; ++i) {
    if (mesh.node(i).x > mesh.node(right).x) right = i;
  }
  sys.f[right] = mat.F;
  sys.dof_map.resize(n);
  for (int i = 0; i < n; ++i) sys.dof_map[i] = i;
  sys.lifting = Eigen::VectorXd::Zero(n);
  return sys;
}

Eigen::Matrix3d plane_stress_matrix(double E, double nu) {
  if (!(E > 0.0) || !(nu >= 0.0 && nu < 0.5)) throw InvalidArgument("invalid elastic constants");
  Eigen::Matrix3d D;
  D << 1.0, nu, 0.0, nu, 1.0, 0.0, 0.0, 0.0, 0.5 * (1.0 - nu);
  return (E / (1.0 - nu * nu)) * D;
}

Eigen::Matrix<double, 3, 6> triangle_strain_matrix(Point a, Point b, Point c) {
  const double area2 = cross(b - a, c - a);
  if (!(area2 > 0.0)) throw InvalidArgument("triangle must have positive area");
  // Gradients of the barycentric coordinates.
  const std::array<double, 3> gx = {(b.y - c.y) / area2, (c.y - a.y) / area2, (a.y - b.y) / area2};
  const std::array<double, 3> gy = {(c.x - b.x) / area2, (a.x - c.x) / area2, (b.x - a.x) / area2};
  Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
  for (int k = 0; k < 3; ++k) {
    B(0, 2 * k) = gx[k];
    B(1, 2 * k + 1) = gy[k];
    B(2, 2 * k) = gy[k];
    B(2, 2 * k + 1) = gx[k];
  }
  return B;
}

Eigen::Matrix<double, 6, 6> triangle_stiffness(Point a, Point b, Point c, const Eigen::Matrix3d& D) {
  const auto B = triangle_strain_matrix(a, b, c);
  const double area = 0.5 * cross(b - a, c - a);
  return area * B.transpose() * D * B;
}

SparseMatrix assemble_elasticity_stiffness(const Mesh& mesh, const MaterialParams2D& mat) {
  if (mesh.dim() != 2) throw InvalidArgument("elasticity needs a 2D mesh");
  const Eigen::Matrix3d D_bulk = plane_stress_matrix(mat.E, mat.nu);
  const Eigen::Matrix3d D_support = plane_stress_matrix(mat.E_support, mat.nu);
  const auto n = static_cast<int>(2 * mesh.num_nodes());
  std::vector<Triplet> triplets;
  triplets.reserve(36 * mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const auto& el = mesh.element(e);
    const auto Ke = triangle_stiffness(mesh.node(el[0]), mesh.node(el[1]), mesh.node(el[2]),
                                       mesh.element_tag(e) == 0 ? D_bulk : D_support);
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) triplets.emplace_back(2 * el[i / 2] + i % 2, 2 * el[j / 2] + j % 2, Ke(i, j));
    }
  }
  SparseMatrix K(n, n);
  K.setFromTriplets(triplets.begin(), triplets.end());
  return K;
}

LinearSystem assemble_elasticity(const Mesh& mesh, const MaterialParams2D& mat, const BoundaryConditions& bc) {
  check_rigid_modes(mesh, bc);
  const SparseMatrix K_full = assemble_elasticity_stiffness(mesh, mat);
  const auto n_full = static_cast<int>(K_full.rows());
  LinearSystem sys;
  sys.components = 2;
  sys.lifting = Eigen::VectorXd::Zero(n_full);
  std::vector<char> prescribed(n_full, 0);
  for (const auto& d : bc.dirichlet) {
    if (d.node < 0 || d.node >= static_cast<int>(mesh.num_nodes()) || d.component < 0 || d.component > 1) {
      throw InvalidArgument("Dirichlet condition refers to a missing degree of freedom");
    }
    prescribed[2 * d.node + d.component] = 1;
    sys.lifting[2 * d.node + d.component] = d.value;
  }
  sys.dof_map.assign(n_full, -1);
  int n_free = 0;
  for (int i = 0; i < n_full; ++i) {
    if (!prescribed[i]) sys.dof_map[i] = n_free++;
  }
  Eigen::VectorXd loads = Eigen::VectorXd::Zero(n_full);
  for (const auto& l : bc.loads) loads[2 * l.node + l.component] += l.value;
  const Eigen::VectorXd rhs_full = loads - K_full * sys.lifting;

  std::vector<Triplet> triplets;
  triplets.reserve(K_full.nonZeros());
  for (int col = 0; col < K_full.outerSize(); ++col) {
    const int j = sys.dof_map[col];
    if (j < 0) continue;
    for (SparseMatrix::InnerIterator it(K_full, col); it; ++it) {
      const int i = sys.dof_map[it.row()];
      if (i >= 0) triplets.emplace_back(i, j, it.value());
    }
  }
  sys.K.resize(n_free, n_free);
  sys.K.setFromTriplets(triplets.begin(), triplets.end());
  sys.f.resize(n_free);
  for (int i = 0; i < n_full; ++i) {
    if (sys.dof_map[i] >= 0) sys.f[sys.dof_map[i]] = rhs_full[i];
  }
  return sys;
}

Eigen::Vector3d element_strain(const Mesh& mesh, std::size_t e, const Eigen::VectorXd& displacement) {
  const auto& el = mesh.element(e);
  const auto B = triangle_strain_matrix(mesh.node(el[0]), mesh.node(el[1]), mesh.node(el[2]));
  Eigen::Matrix<double, 6, 1> ue;
  for (int k = 0; k < 3; ++k) {
    ue[2 * k] = displacement[2 * el[k]];
    ue[2 * k + 1] = displacement[2 * el[k] + 1];
  }
  return B * ue;
}

struct Factorization::Impl {
  Eigen::LLT<Eigen::MatrixXd> dense;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> sparse;
};

Factorization::Factorization(const SparseMatrix& K) : impl_(std::make_unique<Impl>()) {
  if (K.rows() != K.cols()) throw InvalidArgument("matrix must be square");
  n_ = static_cast<int>(K.rows());
  dense_ = n_ <= kDenseLimit;
  double max_diag = 0.0;
  for (int i = 0; i < n_; ++i) max_diag = std::max(max_diag, std::abs(K.coeff(i, i)));
  if (dense_) {
    impl_->dense.compute(Eigen::MatrixXd(K));
    if (impl_->dense.info() != Eigen::Success) throw IndefiniteMatrixError("non-positive pivot in Cholesky factorization");
    const auto L = impl_->dense.matrixLLT().diagonal();
    if (n_ > 0 && L.cwiseAbs2().minCoeff() <= 1e-13 * max_diag) {
      throw SingularSystemError("numerically singular stiffness matrix");
    }
  } else {
    impl_->sparse.compute(K);
    if (impl_->sparse.info() != Eigen::Success) {
      throw IndefiniteMatrixError("non-positive pivot in Cholesky factorization");
    }
  }
}

Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& b) const {
  if (b.size() != n_) throw InvalidArgument("right-hand side has the wrong size");
  return dense_ ? Eigen::VectorXd(impl_->dense.solve(b)) : Eigen::VectorXd(impl_->sparse.solve(b));
}

Eigen::MatrixXd Factorization::solve(const Eigen::MatrixXd& B) const {
  if (B.rows() != n_) throw InvalidArgument("right-hand side has the wrong size");
  return dense_ ? Eigen::MatrixXd(impl_->dense.solve(B)) : Eigen::MatrixXd(impl_->sparse.solve(B));
}

Eigen::VectorXd solve(const LinearSystem& system) { return Factorization(system.K).solve(system.f); }

SparseMatrix observation_matrix(const Mesh& mesh, std::span<const Point> points, int components,
                                double node_tolerance) {
  if (components < 1 || components > 2) throw InvalidArgument("one or two components supported");
  const double scale = mesh.diameter();
  if (node_tolerance < 0.0) node_tolerance = 1e-9 * scale;
  const double tol = 1e-12;
  std::vector<Triplet> triplets;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Point p = points[i];
    int nearest = -1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < mesh.num_nodes(); ++j) {
      const double d = distance(mesh.node(j), p);
      if (d < best) {
        best = d;
        nearest = static_cast<int>(j);
      }
    }
    std::vector<std::pair<int, double>> row;
    if (best <= node_tolerance) {
      row.emplace_back(nearest, 1.0);
    } else if (mesh.dim() == 1) {
      std::array<int, 2> nodes{};
      std::array<double, 2> phi{};
      if (!locate_1d(mesh, p, tol * scale, nodes, phi)) throw OutsideDomainError("observation point outside the mesh");
      for (int k = 0; k < 2; ++k) row.emplace_back(nodes[k], phi[k]);
    } else {
      std::array<int, 3> nodes{};
      std::array<double, 3> phi{};
      if (!locate_2d(mesh, p, tol, nodes, phi)) throw OutsideDomainError("observation point outside the mesh");
      for (int k = 0; k < 3; ++k) row.emplace_back(nodes[k], phi[k]);
    }
    for (int c = 0; c < components; ++c) {
      for (const auto& [node, value] : row) {
        if (value != 0.0) {
          triplets.emplace_back(static_cast<int>(i) * components + c, node * components + c, value);
        }
      }
    }
  }
  SparseMatrix P(static_cast<Eigen::Index>(points.size()) * components,
                 static_cast<Eigen::Index>(mesh.num_nodes()) * components);
  P.setFromTriplets(triplets.begin(), triplets.end());
  return P;
}

ObservationOperator restrict_observation(const SparseMatrix& full, const LinearSystem& system) {
  if (full.cols() != static_cast<Eigen::Index>(system.dof_map.size())) {
    throw InvalidArgument("observation matrix does not match the system");
  }
  ObservationOperator op;
  op.offset = full * system.lifting;
  std::vector<Triplet> triplets;
  for (int col = 0; col < full.outerSize(); ++col) {
    const int j = system.dof_map[col];
    if (j < 0) continue;
    for (SparseMatrix::InnerIterator it(full, col); it; ++it) triplets.emplace_back(static_cast<int>(it.row()), j, it.value());
  }
  op.matrix.resize(full.rows(), system.num_unknowns());
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return op;
}

Eigen::VectorXd evaluate_solution(const Mesh& mesh, const LinearSystem& system, const Eigen::VectorXd& w,
                                  std::span<const Point> points) {
  return observation_matrix(mesh, points, system.components) * system.expand(w);
}

}  // namespace probfem
