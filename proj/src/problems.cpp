#include "probfem/problems.hpp"

#include <cmath>
#include <limits>

#include "probfem/errors.hpp"
#include "probfem/gaussian.hpp"

namespace probfem {

double pullout_exact_solution(double EA, double k, double F, double x) {
  if (!(EA > 0.0) || !(k > 0.0)) throw InvalidArgument("EA and k must be positive");
  const double nu = std::sqrt(k / EA);
  const double ratio = (std::exp(nu * (x - 1.0)) + std::exp(-nu * (x + 1.0))) / (-std::expm1(-2.0 * nu));
  return F / std::sqrt(k * EA) * ratio;
}

ForwardSolution solve_forward(const ForwardProblem& problem, const Mesh& mesh, const Eigen::VectorXd& theta) {
  ForwardSolution sol{mesh, problem.assemble(mesh, theta), {}, {}, {}};
  sol.w = solve(sol.system);
  const auto& pts = problem.observation_points();
  sol.observation = restrict_observation(observation_matrix(sol.mesh, pts, problem.components()), sol.system);
  sol.prediction = sol.observation.matrix * sol.w + sol.observation.offset;
  return sol;
}

PulloutProblem::PulloutProblem(int n_elements, double F, double length)
    : n_elements_(n_elements), F_(F), mesh_(generate_interval_mesh(length, n_elements)), points_{{length, 0.0}} {}

Mesh PulloutProblem::mesh(const Eigen::VectorXd&) const { return mesh_; }

LinearSystem PulloutProblem::assemble(const Mesh& mesh, const Eigen::VectorXd& theta) const {
  if (theta.size() != 2) throw InvalidArgument("pullout parameters are (EA, k)");
  return assemble_bar(mesh, {theta[0], theta[1], F_});
}

std::vector<int> PulloutProblem::fixed_nodes(const Mesh& mesh) const {
  return match_nodes(mesh, points_, 1e-9 * mesh.diameter());
}

ThreePointProblem::ThreePointProblem(double h, BeamGeometry beam, MaterialParams2D material,
                                     TriangulationOptions triangulation)
    : h_(h), beam_(beam), material_(material), triangulation_(triangulation), sensors_(beam_sensor_locations(beam)) {
  if (!(h > 0.0)) throw InvalidArgument("mesh size must be positive");
}

HoleParams ThreePointProblem::hole_from(const Eigen::VectorXd& theta) {
  if (theta.size() != 5) throw InvalidArgument("hole parameters are (x, y, d, alpha, r)");
  return {theta[0], theta[1], theta[2], theta[3], theta[4]};
}

Mesh ThreePointProblem::mesh(const Eigen::VectorXd& theta) const {
  return triangulate_beam(beam_, hole_from(theta), h_, triangulation_);
}

BoundaryConditions ThreePointProblem::boundary_conditions(const Mesh& mesh) const {
  const double tol = 1e-9 * mesh.diameter();
  const double half = 0.5 * beam_.support_width;
  BoundaryConditions bc;
  for (int i : mesh.boundary_nodes()) {
    const Point p = mesh.node(i);
    if (std::abs(p.y + beam_.support_height) > tol) continue;
    for (const Point s : {beam_.left_support(), beam_.right_support()}) {
      if (std::abs(p.x - s.x) <= half + tol) {
        bc.dirichlet.push_back({i, 0, 0.0});
        bc.dirichlet.push_back({i, 1, 0.0});
      }
    }
  }
  const Point load = beam_.load_point();
  const std::vector<Point> load_points{load};
  bc.dirichlet.push_back({match_nodes(mesh, load_points, tol).front(), 1, -material_.w});
  return bc;
}

LinearSystem ThreePointProblem::assemble(const Mesh& mesh, const Eigen::VectorXd&) const {
  return assemble_elasticity(mesh, material_, boundary_conditions(mesh));
}

std::vector<int> ThreePointProblem::fixed_nodes(const Mesh& mesh) const {
  const double tol = 1e-9 * mesh.diameter();
  auto fixed = match_nodes(mesh, sensors_, tol);
  const std::vector<Point> load_points{beam_.load_point()};
  fixed.push_back(match_nodes(mesh, load_points, tol).front());
  return fixed;
}

double fem_log_likelihood(const ForwardSolution& solution, const Eigen::VectorXd& y, double sigma_e) {
  if (y.size() != solution.prediction.size()) throw InvalidArgument("observation vector has the wrong size");
  return gaussian_logpdf(y - solution.prediction, noise_covariance(y.size(), sigma_e));
}

double fem_log_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                          double sigma_e) {
  return fem_log_likelihood(solve_forward(problem, problem.mesh(theta), theta), y, sigma_e);
}

BfemLikelihood bfem_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta, double sigma_e) {
  const Mesh coarse_mesh = problem.mesh(theta);
  const RefinementMap refined = refine_hierarchical(coarse_mesh);
  const auto& pts = problem.observation_points();
  const LinearSystem coarse = problem.assemble(coarse_mesh, theta);
  const LinearSystem fine = problem.assemble(refined.fine, theta);
  const auto P_coarse = restrict_observation(observation_matrix(coarse_mesh, pts, problem.components()), coarse);
  const auto P_fine = restrict_observation(observation_matrix(refined.fine, pts, problem.components()), fine);
  return bfem_likelihood(coarse, fine, P_coarse, P_fine, sigma_e);
}

double bfem_log_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta, const Eigen::VectorXd& y,
                           double sigma_e) {
  return bfem_log_likelihood(y, bfem_likelihood(problem, theta, sigma_e));
}

double rmfem_replica_log_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta,
                                    const Mesh& perturbed, const Eigen::VectorXd& y, double sigma_e) {
  return fem_log_likelihood(solve_forward(problem, perturbed, theta), y, sigma_e);
}

PseudomarginalEstimate rmfem_log_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& y, double sigma_e,
                                            const PseudomarginalConfig& config, std::uint64_t seed) {
  const Mesh base = problem.mesh(theta);
  const auto fixed = problem.fixed_nodes(base);
  const PerturbationOptions options{config.exponent, config.radius, config.max_attempts};
  return pseudomarginal_log_likelihood(
      [&](int, Rng& rng) {
        const Mesh perturbed = perturb_mesh(base, fixed, rng, options);
        return rmfem_replica_log_likelihood(problem, theta, perturbed, y, sigma_e);
      },
      config, seed);
}

double statfem_log_likelihood(const ForwardProblem& problem, const Eigen::VectorXd& theta,
                              const StatfemHyperparams& eta, const Eigen::VectorXd& y, double sigma_e) {
  const auto sol = solve_forward(problem, problem.mesh(theta), theta);
  return statfem_log_likelihood(y, sol.prediction, problem.observation_points(), problem.components(), eta, sigma_e);
}

double pullout_exact_log_likelihood(const Eigen::VectorXd& theta, double F, const Eigen::VectorXd& y, double sigma_e) {
  if (theta.size() != 2 || y.size() != 1) throw InvalidArgument("pullout exact likelihood takes (EA, k) and one value");
  Eigen::VectorXd r(1);
  r[0] = y[0] - pullout_exact_solution(theta[0], theta[1], F, 1.0);
  return gaussian_logpdf(r, noise_covariance(1, sigma_e));
}

}  // namespace probfem
