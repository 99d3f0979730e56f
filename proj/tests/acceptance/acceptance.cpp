// Acceptance checks. Each criterion prints one line:
//   criterion N: PASS|FAIL  <measurements> (<seconds> s)
// and the process exits with status 1 when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "CLI11.hpp"
#include "probfem/bfem.hpp"
#include "probfem/experiments.hpp"
#include "probfem/fem.hpp"
#include "probfem/geometry.hpp"
#include "probfem/problems.hpp"

using namespace probfem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

const Eigen::Vector2d kPulloutTruth(0.8, 70.0);

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s << std::setprecision(precision) << v;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Eigen::VectorXd column_std(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  return ((x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(x.rows() - 1)).sqrt().transpose();
}

double fem_tip(int n) {
  const Mesh m = generate_interval_mesh(1.0, n);
  return solve(assemble_bar(m, {0.8, 70.0, 10.0}))(n);
}

std::vector<Eigen::VectorXd> prior_draws(int count, std::uint64_t seed) {
  const PriorSpec prior = make_prior(default_config(ProblemKind::Pullout));
  Rng rng = make_rng(seed);
  std::vector<Eigen::VectorXd> out;
  for (int i = 0; i < count; ++i) out.push_back(prior.sample(rng));
  return out;
}

Chain pullout_chain(Method method, double h, std::uint64_t seed) {
  auto c = default_config(ProblemKind::Pullout);
  c.method = method;
  c.h = h;
  c.chain.seed = seed;
  return run_experiment(c).chain;
}

Verdict criterion1() {
  const double exact = pullout_exact_solution(0.8, 70.0, 10.0, 1.0);
  const double e16 = std::abs(fem_tip(16) - exact), e32 = std::abs(fem_tip(32) - exact),
               e64 = std::abs(fem_tip(64) - exact);
  const double r1 = std::log2(e16 / e32), r2 = std::log2(e32 / e64);
  const bool pass = std::abs(exact - 1.336306) < 5e-7 && std::abs(r1 - 2.0) <= 0.3 && std::abs(r2 - 2.0) <= 0.3 &&
                    e64 < 1e-3 * exact;
  return {pass, "u(1) = " + fmt(exact, 7) + ", rates " + fmt(r1) + ", " + fmt(r2) + ", error at 1/64 " + fmt(e64)};
}

Verdict criterion2() {
  double worst = 0.0;
  for (int n : {1, 4, 64}) {
    const PulloutProblem problem(n);
    for (const auto& theta : prior_draws(20, 100 + n)) {
      const auto like = bfem_likelihood(problem, theta, 1e-3);
      const double fem = solve_forward(problem, problem.mesh(theta), theta).prediction(0);
      worst = std::max(worst, std::abs(like.mean(0) - fem) / std::abs(fem));
    }
  }
  return {worst <= 1e-12, "max relative mean difference " + fmt(worst)};
}

Verdict criterion3() {
  double worst_psd = -INFINITY;
  for (int n : {1, 2, 4, 8, 16, 32, 64}) {
    for (const auto& theta : prior_draws(5, 200 + n)) {
      const auto like = bfem_likelihood(PulloutProblem(n), theta, 1e-3);
      worst_psd = std::max(worst_psd, -like.min_eigenvalue / like.trace);
    }
  }
  Eigen::VectorXd hole(5);
  hole << 1.0, 0.4, 0.4, std::numbers::pi / 6, 0.25;
  const auto beam = bfem_likelihood(ThreePointProblem(0.2), hole, 1e-4);
  worst_psd = std::max(worst_psd, -beam.min_eigenvalue / beam.trace);

  double worst_scale = 0.0;
  for (int n : {1, 8, 64}) {
    const auto a = bfem_likelihood(PulloutProblem(n, 10.0), kPulloutTruth, 1e-3);
    const auto b = bfem_likelihood(PulloutProblem(n, 100.0), kPulloutTruth, 1e-3);
    worst_scale = std::max(worst_scale, std::abs(b.sigma_u / (10.0 * a.sigma_u) - 1.0));
    worst_scale = std::max(worst_scale, (b.cov - 100.0 * a.cov).cwiseAbs().maxCoeff() / (100.0 * a.cov.cwiseAbs().maxCoeff()));
  }
  const bool pass = worst_psd <= 1e-10 && worst_scale <= 1e-10;
  return {pass, "max -lambda_min/trace " + fmt(worst_psd) + ", max scale-law deviation " + fmt(worst_scale)};
}

Verdict criterion4() {
  const PriorSpec prior = make_prior(default_config(ProblemKind::Pullout));
  const Eigen::Vector2d prior_std(prior.distributions()[0].stddev(), prior.distributions()[1].stddev());
  const Eigen::VectorXd truth_z = prior.to_sampling(kPulloutTruth);
  auto log_samples = [](const Chain& c) { return Eigen::MatrixXd(c.samples.array().log()); };

  int fem_excludes = 0;
  Eigen::Vector2d bfem_ratio = Eigen::Vector2d::Zero();
  Eigen::Vector2d exact_mean = Eigen::Vector2d::Zero(), exact_std = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> fine_mean(3, Eigen::Vector2d::Zero());
  const std::array<Method, 3> fine_methods{Method::Fem, Method::Bfem, Method::Rmfem};
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Chain fem = pullout_chain(Method::Fem, 1.0, seed);
    fem_excludes += !credible_region_contains(log_samples(fem), truth_z, 0.05);
    const Chain bfem = pullout_chain(Method::Bfem, 1.0, seed);
    bfem_ratio += column_std(bfem.samples).cwiseQuotient(prior_std) / 3.0;
    const Eigen::MatrixXd ez = log_samples(pullout_chain(Method::Exact, 1.0, seed));
    exact_mean += ez.colwise().mean().transpose() / 3.0;
    exact_std += column_std(ez) / 3.0;
    for (std::size_t m = 0; m < fine_methods.size(); ++m) {
      fine_mean[m] += log_samples(pullout_chain(fine_methods[m], 1.0 / 64, seed)).colwise().mean().transpose() / 3.0;
    }
  }
  const bool a = fem_excludes == 3;
  const bool b = (bfem_ratio.array() - 1.0).abs().maxCoeff() <= 0.25;
  double worst_shift = 0.0;
  std::string shifts;
  for (std::size_t m = 0; m < fine_methods.size(); ++m) {
    const double s = (fine_mean[m] - exact_mean).cwiseAbs().cwiseQuotient(exact_std).maxCoeff();
    worst_shift = std::max(worst_shift, s);
    shifts += " " + to_string(fine_methods[m]) + " " + fmt(s, 3);
  }
  const bool c = worst_shift < 0.5;
  std::string detail = std::string("[a ") + (a ? "pass" : "fail") + "] FEM h=1 excludes truth in " +
                       std::to_string(fem_excludes) + "/3; [b " + (b ? "pass" : "fail") +
                       "] BFEM h=1 std/prior std (EA, k) = (" + fmt(bfem_ratio(0), 3) + ", " + fmt(bfem_ratio(1), 3) +
                       "); [c " + (c ? "pass" : "fail") + "] h=1/64 shifts in exact std:" + shifts;
  return {a && b && c, detail};
}

Verdict criterion5() {
  const PulloutProblem problem(1);
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 1.3361);
  const double fem = fem_log_likelihood(problem, kPulloutTruth, y, 1e-3);
  bool equal = true;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (const auto& theta : prior_draws(3, 300 + seed)) {
      const double f = fem_log_likelihood(problem, theta, y, 1e-3);
      const auto est = rmfem_log_likelihood(problem, theta, y, 1e-3, {100, 1.0, 0.25, 100, 1}, seed);
      equal = equal && est.log_likelihood == f;
    }
    equal = equal && rmfem_log_likelihood(problem, kPulloutTruth, y, 1e-3, {10, 1.0, 0.25, 100, 1}, seed)
                             .log_likelihood == fem;
  }
  return {equal, equal ? "bitwise equal for 20 seeds" : "mismatch"};
}

Verdict criterion6() {
  double worst = 0.0;
  const Eigen::VectorXd y = Eigen::VectorXd::Constant(1, 1.3361);
  for (int n : {1, 8, 64}) {
    const PulloutProblem problem(n);
    for (const auto& theta : prior_draws(20, 400 + n)) {
      const double fem = fem_log_likelihood(problem, theta, y, 1e-3);
      const double st = statfem_log_likelihood(problem, theta, {1.0, 1.0, 0.0}, y, 1e-3);
      worst = std::max(worst, std::abs(st - fem) / std::max(1.0, std::abs(fem)));
    }
  }
  return {worst <= 1e-12, "max relative difference " + fmt(worst)};
}

Verdict criterion7() {
  int wide = 0;
  std::string detail = "statFEM h=1/64 std / exact std (EA, k):";
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Eigen::VectorXd st = column_std(pullout_chain(Method::Statfem, 1.0 / 64, seed).samples.leftCols(2));
    const Eigen::VectorXd ex = column_std(pullout_chain(Method::Exact, 1.0, seed).samples);
    const Eigen::VectorXd r = st.cwiseQuotient(ex);
    wide += r.minCoeff() > 2.0;
    detail += " (" + fmt(r(0), 3) + ", " + fmt(r(1), 3) + ")";
  }
  return {wide == 3, detail + "; above 2 in " + std::to_string(wide) + "/3"};
}

Verdict criterion8() {
  // Patch test on the beam mesh with uniform material.
  const ThreePointProblem problem(0.2);
  Eigen::VectorXd hole(5);
  hole << 1.0, 0.4, 0.4, std::numbers::pi / 6, 0.25;
  const Mesh m = problem.mesh(hole);
  MaterialParams2D mat;
  mat.E_support = mat.E;
  const Eigen::Matrix2d A{{2e-4, 1e-4}, {-3e-4, -5e-4}};
  const Eigen::Vector2d b(1e-3, -2e-3);
  auto field = [&](Point p) { return Eigen::Vector2d(A * Eigen::Vector2d(p.x, p.y) + b); };
  BoundaryConditions bc;
  for (int i : m.boundary_nodes()) {
    const auto u = field(m.node(i));
    bc.dirichlet.push_back({i, 0, u(0)});
    bc.dirichlet.push_back({i, 1, u(1)});
  }
  const auto sys = assemble_elasticity(m, mat, bc);
  const Eigen::VectorXd full = sys.expand(solve(sys));
  const Eigen::Vector3d exact_strain(A(0, 0), A(1, 1), A(0, 1) + A(1, 0));
  double patch = 0.0;
  for (std::size_t e = 0; e < m.num_elements(); ++e) {
    patch = std::max(patch, (element_strain(m, e, full) - exact_strain).norm() / exact_strain.norm());
  }

  const Mesh square(2, {{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1, 2}, {0, 2, 3}});
  const Eigen::MatrixXd K(assemble_elasticity_stiffness(square, MaterialParams2D{}));
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(K).eigenvalues();
  int zeros = 0;
  for (double v : ev) zeros += std::abs(v) < 1e-9 * ev.maxCoeff();

  const auto n20 = static_cast<double>(m.num_elements());
  const auto n10 = static_cast<double>(ThreePointProblem(0.1).mesh(hole).num_elements());
  const bool counts = std::abs(n20 - 332) <= 0.3 * 332 && std::abs(n10 - 699) <= 0.3 * 699;
  const bool pass = patch <= 1e-10 && zeros == 3 && counts;
  return {pass, "patch strain error " + fmt(patch) + ", zero eigenvalues " + std::to_string(zeros) + ", elements " +
                    fmt(n20) + " (h=0.2), " + fmt(n10) + " (h=0.1)"};
}

Verdict criterion9() {
  int bfem_better = 0;
  double rho = 0.0;
  std::string detail = "center error FEM/BFEM:";
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    auto c = default_config(ProblemKind::ThreePoint);
    c.chain.seed = seed;
    auto center_error = [&](Method method) {
      c.method = method;
      const Chain chain = run_experiment(c).chain;
      return std::hypot(chain.samples.col(0).mean() - 1.0, chain.samples.col(1).mean() - 0.4);
    };
    const double fem = center_error(Method::Fem), bfem = center_error(Method::Bfem);
    bfem_better += bfem < fem;
    detail += " " + fmt(fem, 3) + "/" + fmt(bfem, 3);
    c.method = Method::Statfem;
    rho += run_experiment(c).chain.samples.col(5).mean() / 3.0;
  }
  const bool pass = bfem_better >= 2 && rho > 0.85 && rho < 1.0;
  return {pass, detail + "; BFEM better in " + std::to_string(bfem_better) + "/3; statFEM rho mean " + fmt(rho)};
}

Verdict criterion10() {
  std::vector<std::string> names{"x0", "x1"};
  const PriorSpec box(names, {Distribution::uniform(-50, 50), Distribution::uniform(-50, 50)});
  ChainConfig cc;
  cc.n_burn = 10000;
  cc.n = 10000;
  cc.seed = 1;
  const Chain chain = run_chain([](const Eigen::VectorXd& x, std::uint64_t) { return -0.5 * x.squaredNorm(); }, box, cc);
  const Eigen::RowVectorXd mean = chain.samples.colwise().mean();
  const Eigen::MatrixXd centered = chain.samples.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(chain.samples.rows() - 1);
  const double mean_err = mean.cwiseAbs().maxCoeff();
  const double cov_err = (cov - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();

  // Three-state chain with the sampler's acceptance rule.
  const std::array<double, 3> target{0.2, 0.3, 0.5};
  Rng rng = make_rng(77);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::array<long, 3> visits{};
  int state = 0;
  const long steps = 4'000'000;
  for (long t = 0; t < steps; ++t) {
    const int proposal = (state + 1 + (u01(rng) < 0.5)) % 3;
    if (metropolis_accept(std::log(target[proposal]) - std::log(target[state]), u01(rng))) state = proposal;
    ++visits[state];
  }
  double tv = 0.0;
  for (int i = 0; i < 3; ++i) tv += 0.5 * std::abs(static_cast<double>(visits[i]) / steps - target[i]);
  const bool pass = mean_err < 0.05 && cov_err < 0.1 && tv < 1e-3;
  return {pass, "mean error " + fmt(mean_err) + ", covariance error " + fmt(cov_err) + ", three-state TV " + fmt(tv)};
}

struct Criterion {
  std::function<Verdict()> run;
  double budget_seconds;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {criterion1, 1},   {criterion2, 5},   {criterion3, 5},    {criterion4, 600}, {criterion5, 1},
      {criterion6, 5},   {criterion7, 600}, {criterion8, 30},   {criterion9, 1800}, {criterion10, 60}};
  if (selected.empty()) {
    for (int i = 1; i <= 10; ++i) selected.push_back(i);
  }
  bool all = true;
  for (int id : selected) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[id - 1].run();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    const bool in_time = secs <= criteria[id - 1].budget_seconds;
    const bool pass = v.pass && in_time;
    all = all && pass;
    std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  " << v.detail << " (" << fmt(secs, 3)
              << " s" << (in_time ? "" : ", over budget") << ")" << std::endl;
  }
  return all ? 0 : 1;
}
