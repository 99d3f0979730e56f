#include <cmath>
#include <numbers>

#include "doctest.h"
#include "probfem/bfem.hpp"
#include "probfem/errors.hpp"
#include "probfem/gaussian.hpp"
#include "probfem/problems.hpp"
#include "probfem/random.hpp"

using namespace probfem;
using std::numbers::pi;

namespace {

Eigen::VectorXd pullout_theta(double EA = 0.8, double k = 70.0) { return Eigen::Vector2d(EA, k); }

ObservationOperator tip_observation(const Mesh& m, const LinearSystem& sys) {
  const std::vector<Point> tip{{1.0, 0.0}};
  return restrict_observation(observation_matrix(m, tip, 1), sys);
}

}  // namespace

TEST_CASE("evidence-maximizing scale") {
  CHECK(sigma_u_hat(Eigen::Vector2d(2, 2), Eigen::Vector2d(2, 2), 2) == doctest::Approx(2.0));
  CHECK(sigma_u_hat(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 3), 2) == 0.0);
  const auto sys = assemble_bar(generate_interval_mesh(1.0, 1), {0.8, 70.0, 10.0});
  CHECK(sigma_u_hat(sys.f, solve(sys), 2) == doctest::Approx(1.6121).epsilon(1e-4));
  CHECK_THROWS_AS(sigma_u_hat(Eigen::Vector2d(1, 0), Eigen::Vector2d(-1, 0), 2), IndefiniteMatrixError);
}

TEST_CASE("pullout covariance against a dense oracle") {
  const MaterialParams1D mat{0.8, 70.0, 10.0};
  const Mesh coarse = generate_interval_mesh(1.0, 1);
  const Mesh fine = generate_interval_mesh(1.0, 2);
  const auto sc = assemble_bar(coarse, mat), sf = assemble_bar(fine, mat);
  const auto like = bfem_likelihood(sc, sf, tip_observation(coarse, sc), tip_observation(fine, sf), 1e-3);

  const Eigen::MatrixXd Kc(sc.K), Kf(sf.K);
  const Eigen::VectorXd uc = Kc.ldlt().solve(sc.f);
  const double s2 = sc.f.dot(uc) / 2.0;
  const double oracle = s2 * (Kf.inverse()(2, 2) - Kc.inverse()(1, 1));
  REQUIRE(like.cov.rows() == 1);
  CHECK(like.cov(0, 0) > 0.0);
  CHECK(like.cov(0, 0) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(like.cov(0, 0) == doctest::Approx(7.192e-2).epsilon(1e-3));
  CHECK(like.mean(0) == doctest::Approx(0.51974).epsilon(1e-4));
  CHECK(like.sigma_u == doctest::Approx(std::sqrt(s2)));

  SUBCASE("identical spaces") {
    const auto same = bfem_likelihood(sc, sc, tip_observation(coarse, sc), tip_observation(coarse, sc), 1e-3);
    CHECK(std::abs(same.cov(0, 0)) < 1e-12);
  }
  SUBCASE("nesting violations") {
    const auto wide = Mesh(1, {{0, 0}, {1, 0}}, {{0, 1, -1}});
    const auto two = restrict_observation(observation_matrix(fine, std::vector<Point>{{1, 0}, {0, 0}}, 1), sf);
    CHECK_THROWS_AS(bfem_likelihood(sf, sc, tip_observation(fine, sf), tip_observation(coarse, sc), 1e-3), NestingError);
    CHECK_THROWS_AS(bfem_likelihood(sc, sf, tip_observation(wide, sc), two, 1e-3), NestingError);
  }
}

TEST_CASE("mean equals the FEM prediction") {
  Rng rng = make_rng(4);
  std::lognormal_distribution<double> ea(0.0, 0.3), kk(std::log(100.0), 0.3);
  for (int n : {1, 4, 16}) {
    const PulloutProblem problem(n);
    for (int i = 0; i < 5; ++i) {
      const Eigen::VectorXd theta = pullout_theta(ea(rng), kk(rng));
      const auto like = bfem_likelihood(problem, theta, 1e-3);
      const auto sol = solve_forward(problem, problem.mesh(theta), theta);
      CHECK(like.mean(0) == sol.prediction(0));
    }
  }
}

TEST_CASE("log-likelihood") {
  BfemLikelihood like;
  like.mean = Eigen::VectorXd::Zero(1);
  like.cov = Eigen::MatrixXd::Zero(1, 1);
  like.sigma_e = 1.0;
  CHECK(bfem_log_likelihood(Eigen::VectorXd::Zero(1), like) == doctest::Approx(-0.5 * std::log(2 * pi)));

  like.sigma_e = 0.1;
  like.cov(0, 0) = 0.08;
  CHECK(bfem_log_likelihood(Eigen::VectorXd::Constant(1, 0.3), like) ==
        doctest::Approx(-0.5 * std::log(2 * pi * 0.09) - 0.5));

  SUBCASE("dense oracle") {
    Rng rng = make_rng(8);
    std::normal_distribution<double> g;
    const Eigen::MatrixXd A = Eigen::MatrixXd::NullaryExpr(5, 5, [&] { return g(rng); });
    BfemLikelihood l5;
    l5.cov = A * A.transpose();
    l5.sigma_e = 0.3;
    l5.mean = Eigen::VectorXd::NullaryExpr(5, [&] { return g(rng); });
    const Eigen::VectorXd y = Eigen::VectorXd::NullaryExpr(5, [&] { return g(rng); });
    const Eigen::MatrixXd S = l5.cov + 0.09 * Eigen::MatrixXd::Identity(5, 5);
    const Eigen::VectorXd r = y - l5.mean;
    const double oracle = -0.5 * (5 * std::log(2 * pi) + std::log(S.determinant()) + r.dot(S.inverse() * r));
    CHECK(bfem_log_likelihood(y, l5) == doctest::Approx(oracle).epsilon(1e-10));
  }
  SUBCASE("zero covariance reduces to the FEM likelihood") {
    const PulloutProblem problem(4);
    const Eigen::VectorXd theta = pullout_theta();
    const auto sol = solve_forward(problem, problem.mesh(theta), theta);
    BfemLikelihood l0;
    l0.mean = sol.prediction;
    l0.cov = Eigen::MatrixXd::Zero(1, 1);
    l0.sigma_e = 1e-3;
    const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 1.3363);
    CHECK(bfem_log_likelihood(y, l0) == gaussian_logpdf(y - sol.prediction, noise_covariance(1, 1e-3)));
    CHECK(bfem_log_likelihood(y, l0) == fem_log_likelihood(sol, y, 1e-3));
  }
}

TEST_CASE("scale equivariance") {
  const PulloutProblem p10(4, 10.0), p100(4, 100.0);
  const auto a = bfem_likelihood(p10, pullout_theta(), 1e-3);
  const auto b = bfem_likelihood(p100, pullout_theta(), 1e-3);
  CHECK(b.sigma_u == doctest::Approx(10.0 * a.sigma_u).epsilon(1e-10));
  CHECK(b.cov(0, 0) == doctest::Approx(100.0 * a.cov(0, 0)).epsilon(1e-10));
}

TEST_CASE("nesting and refinement") {
  SUBCASE("pullout trace shrinks with h") {
    double previous = INFINITY;
    for (int n = 2; n <= 64; n *= 2) {
      const auto like = bfem_likelihood(PulloutProblem(n), pullout_theta(), 1e-3);
      CHECK(like.min_eigenvalue >= -1e-10 * like.trace);
      CHECK(like.trace <= previous);
      previous = like.trace;
    }
  }
  SUBCASE("beam covariance is positive semidefinite") {
    const ThreePointProblem problem(0.4);
    Eigen::VectorXd theta(5);
    theta << 1.0, 0.4, 0.4, pi / 6, 0.25;
    const auto like = bfem_likelihood(problem, theta, 1e-4);
    CHECK(like.cov.rows() == 48);
    CHECK(like.min_eigenvalue >= -1e-10 * like.trace);
    CHECK((like.cov - like.cov.transpose()).norm() == 0.0);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(like.cov).eigenvalues();
    CHECK(ev.minCoeff() >= -1e-12 * like.trace);
    CHECK(like.trace > 0.0);
  }
}
