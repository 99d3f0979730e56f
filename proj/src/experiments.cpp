#include "probfem/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"

#include "probfem/errors.hpp"

namespace probfem {

using nlohmann::json;

namespace {

constexpr double kSensorSpacing = 0.5;

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void check_keys(const json& object, const std::set<std::string>& allowed, const std::string& where) {
  if (!object.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = object.begin(); it != object.end(); ++it) {
    if (!allowed.contains(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void read_into(const json& object, const char* key, T& target) {
  if (object.contains(key)) target = object.at(key).get<T>();
}

void read_lognormal(const json& object, const char* key, double& mu, double& sigma) {
  if (!object.contains(key)) return;
  const auto v = object.at(key).get<std::vector<double>>();
  if (v.size() != 2) throw ConfigError(std::string("statfem.") + key + " takes [mu, sigma]");
  mu = v[0];
  sigma = v[1];
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

int pullout_elements(double h) {
  const double n = std::round(1.0 / h);
  if (n < 1.0 || std::abs(n * h - 1.0) > 1e-9) throw ConfigError("pullout h must be 1/n for an integer n");
  return static_cast<int>(n);
}

Eigen::MatrixXd to_sampling_space(const PriorSpec& prior, const Eigen::MatrixXd& samples) {
  Eigen::MatrixXd z(samples.rows(), samples.cols());
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    z.row(i) = prior.to_sampling(samples.row(i).transpose()).transpose();
  }
  return z;
}

Eigen::VectorXd column_std(const Eigen::MatrixXd& x) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const double n = static_cast<double>(x.rows());
  return ((x.rowwise() - mean).array().square().colwise().sum() / (n - 1.0)).sqrt().transpose();
}

/// Kernel density evaluator with bandwidth matrix (Scott factor)^2 * sample covariance.
class Kde {
 public:
  explicit Kde(const Eigen::MatrixXd& samples) : samples_(samples) {
    const Eigen::Index n = samples.rows(), d = samples.cols();
    if (n < 2) throw InvalidArgument("kernel density estimate needs at least two samples");
    const Eigen::RowVectorXd mean = samples.colwise().mean();
    const Eigen::MatrixXd centered = samples.rowwise() - mean;
    Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
    cov.diagonal().array() += 1e-12 * std::max(cov.trace(), 1e-300) / static_cast<double>(d);
    const double factor = std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(d) + 4.0));
    Eigen::LLT<Eigen::MatrixXd> llt(factor * factor * cov);
    if (llt.info() != Eigen::Success) throw InvalidArgument("degenerate sample covariance");
    inv_L_ = llt.matrixL().solve(Eigen::MatrixXd::Identity(d, d));
    const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    log_norm_ = -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + log_det) -
                std::log(static_cast<double>(n));
    whitened_ = samples_ * inv_L_.transpose();
  }

  double operator()(const Eigen::VectorXd& x) const {
    const Eigen::RowVectorXd wx = (inv_L_ * x).transpose();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < whitened_.rows(); ++i) sum += std::exp(-0.5 * (whitened_.row(i) - wx).squaredNorm());
    return std::exp(log_norm_) * sum;
  }

 private:
  Eigen::MatrixXd samples_;
  Eigen::MatrixXd inv_L_;
  Eigen::MatrixXd whitened_;
  double log_norm_ = 0.0;
};

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::string to_string(ProblemKind problem) { return problem == ProblemKind::Pullout ? "pullout" : "three_point"; }

std::string to_string(Method method) {
  switch (method) {
    case Method::Fem: return "fem";
    case Method::Bfem: return "bfem";
    case Method::Rmfem: return "rmfem";
    case Method::Statfem: return "statfem";
    case Method::Exact: return "exact";
  }
  return "fem";
}

ProblemKind parse_problem(std::string_view name) {
  if (name == "pullout") return ProblemKind::Pullout;
  if (name == "three_point") return ProblemKind::ThreePoint;
  throw ConfigError("unknown problem '" + std::string(name) + "'");
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::Fem, Method::Bfem, Method::Rmfem, Method::Statfem, Method::Exact}) {
    if (name == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "'");
}

ExperimentConfig default_config(ProblemKind problem, bool paper_scale) {
  ExperimentConfig c;
  c.problem = problem;
  if (problem == ProblemKind::Pullout) {
    c.h = 1.0;
    c.chain.n_burn = c.chain.n = 10000;
    c.sigma_e = 1e-3;
    c.ground_truth = {0.8, 70.0};
    c.M = 100;
  } else {
    c.h = paper_scale ? 0.05 : 0.2;
    c.chain.n_burn = c.chain.n = paper_scale ? 10000 : 2000;
    c.sigma_e = 1e-4;
    c.ground_truth = {1.0, 0.4, 0.4, std::numbers::pi / 6.0, 0.25};
    c.data_h = paper_scale ? 0.002 : 0.01;
    c.M = 10;
  }
  return c;
}

ExperimentConfig parse_config(std::string_view json_text, bool paper_scale) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  check_keys(j,
             {"problem", "method", "h", "sigma_e", "data_seed", "ground_truth", "output_dir", "load", "data_h",
              "chain", "rmfem", "statfem", "threads"},
             "config");
  if (!j.contains("problem")) throw ConfigError("config requires 'problem'");
  try {
    ExperimentConfig c = default_config(parse_problem(j.at("problem").get<std::string>()), paper_scale);
    if (j.contains("method")) c.method = parse_method(j.at("method").get<std::string>());
    read_into(j, "h", c.h);
    read_into(j, "sigma_e", c.sigma_e);
    read_into(j, "data_seed", c.data_seed);
    read_into(j, "ground_truth", c.ground_truth);
    read_into(j, "output_dir", c.output_dir);
    read_into(j, "load", c.load);
    read_into(j, "data_h", c.data_h);
    read_into(j, "threads", c.threads);
    if (j.contains("chain")) {
      const json& ch = j.at("chain");
      check_keys(ch, {"n_burn", "n", "target_acceptance", "adaptation_exponent", "window", "shape_updates", "seed"},
                 "chain");
      read_into(ch, "n_burn", c.chain.n_burn);
      read_into(ch, "n", c.chain.n);
      read_into(ch, "target_acceptance", c.chain.target_acceptance);
      read_into(ch, "adaptation_exponent", c.chain.adaptation_exponent);
      read_into(ch, "window", c.chain.window);
      read_into(ch, "shape_updates", c.chain.shape_updates);
      read_into(ch, "seed", c.chain.seed);
    }
    if (j.contains("rmfem")) {
      const json& rm = j.at("rmfem");
      check_keys(rm, {"M", "exponent", "radius"}, "rmfem");
      read_into(rm, "M", c.M);
      read_into(rm, "exponent", c.rmfem_exponent);
      read_into(rm, "radius", c.rmfem_radius);
    }
    if (j.contains("statfem")) {
      const json& st = j.at("statfem");
      check_keys(st, {"rho", "ell_d", "sigma_d"}, "statfem");
      read_lognormal(st, "rho", c.statfem.rho_mu, c.statfem.rho_sigma);
      read_lognormal(st, "ell_d", c.statfem.ell_mu, c.statfem.ell_sigma);
      read_lognormal(st, "sigma_d", c.statfem.sigma_d_mu, c.statfem.sigma_d_sigma);
    }
    validate_config(c);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["problem"] = to_string(c.problem);
  j["method"] = to_string(c.method);
  j["h"] = c.h;
  j["sigma_e"] = c.sigma_e;
  j["data_seed"] = c.data_seed;
  j["ground_truth"] = c.ground_truth;
  j["output_dir"] = c.output_dir;
  j["load"] = c.load;
  j["data_h"] = c.data_h;
  j["threads"] = c.threads;
  j["chain"] = {{"n_burn", c.chain.n_burn},
                {"n", c.chain.n},
                {"target_acceptance", c.chain.target_acceptance},
                {"adaptation_exponent", c.chain.adaptation_exponent},
                {"window", c.chain.window},
                {"shape_updates", c.chain.shape_updates},
                {"seed", c.chain.seed}};
  j["rmfem"] = {{"M", c.M}, {"exponent", c.rmfem_exponent}, {"radius", c.rmfem_radius}};
  json st;
  if (!std::isnan(c.statfem.ell_mu)) st["ell_d"] = {c.statfem.ell_mu, c.statfem.ell_sigma};
  if (!std::isnan(c.statfem.sigma_d_mu)) st["sigma_d"] = {c.statfem.sigma_d_mu, c.statfem.sigma_d_sigma};
  st["rho"] = {c.statfem.rho_mu, c.statfem.rho_sigma};
  j["statfem"] = st;
  return j.dump(2);
}

void validate_config(const ExperimentConfig& c) {
  if (c.method == Method::Exact && c.problem != ProblemKind::Pullout) {
    throw ConfigError("the exact likelihood exists only for the pullout problem");
  }
  if (!(c.h > 0.0)) throw ConfigError("h must be positive");
  if (c.problem == ProblemKind::Pullout) pullout_elements(c.h);
  if (c.chain.n_burn < 1 || c.chain.n < 1) throw ConfigError("chain lengths must be at least 1");
  if (c.chain.window < 1) throw ConfigError("chain window must be at least 1");
  if (!(c.sigma_e >= 0.0)) throw ConfigError("sigma_e must be non-negative");
  if (!(c.data_h > 0.0)) throw ConfigError("data_h must be positive");
  if (c.M < 1) throw ConfigError("rmfem M must be at least 1");
  if (!(c.rmfem_radius > 0.0 && c.rmfem_radius < 0.5)) throw ConfigError("rmfem radius must lie in (0, 0.5)");
  const std::size_t dim = c.problem == ProblemKind::Pullout ? 2 : 5;
  if (c.ground_truth.size() != dim) throw ConfigError("ground_truth has the wrong number of parameters");
  if (!(c.statfem.rho_sigma > 0.0 && c.statfem.ell_sigma > 0.0 && c.statfem.sigma_d_sigma > 0.0)) {
    throw ConfigError("statfem prior sigmas must be positive");
  }
}

std::unique_ptr<ForwardProblem> make_problem(const ExperimentConfig& c) {
  if (c.problem == ProblemKind::Pullout) return std::make_unique<PulloutProblem>(pullout_elements(c.h), c.load);
  return std::make_unique<ThreePointProblem>(c.h);
}

PriorSpec make_prior(const ExperimentConfig& c) {
  PriorSpec prior;
  if (c.problem == ProblemKind::Pullout) {
    prior = PriorSpec({"EA", "k"}, {Distribution::lognormal(0.0, 0.1), Distribution::lognormal(std::log(100.0), 0.1)});
  } else {
    const BeamGeometry beam;
    prior = PriorSpec({"x", "y", "d", "alpha", "r"},
                      {Distribution::uniform(0.0, beam.length()), Distribution::uniform(0.0, beam.height),
                       Distribution::uniform(0.0, 0.5), Distribution::uniform(0.0, 2.0 * std::numbers::pi),
                       Distribution::uniform(0.0, 0.5)},
                      [beam](const Eigen::VectorXd& x) {
                        return hole_admissible(ThreePointProblem::hole_from(x), beam);
                      });
  }
  if (c.method != Method::Statfem) return prior;
  const double ell_mu = std::isnan(c.statfem.ell_mu)
                            ? (c.problem == ProblemKind::Pullout ? 0.0 : std::log(kSensorSpacing))
                            : c.statfem.ell_mu;
  const double sd_mu = std::isnan(c.statfem.sigma_d_mu) ? std::log(c.sigma_e) : c.statfem.sigma_d_mu;
  const PriorSpec hyper({"rho", "ell_d", "sigma_d"},
                        {Distribution::lognormal(c.statfem.rho_mu, c.statfem.rho_sigma),
                         Distribution::lognormal(ell_mu, c.statfem.ell_sigma),
                         Distribution::lognormal(sd_mu, c.statfem.sigma_d_sigma)});
  return prior.concat(hyper);
}

Eigen::VectorXd synthesize_observations(const ExperimentConfig& c) {
  validate_config(c);
  const Eigen::VectorXd truth = Eigen::Map<const Eigen::VectorXd>(c.ground_truth.data(), static_cast<Eigen::Index>(c.ground_truth.size()));
  Eigen::VectorXd y;
  if (c.problem == ProblemKind::Pullout) {
    y = Eigen::VectorXd::Constant(1, pullout_exact_solution(truth[0], truth[1], c.load, 1.0));
  } else {
    const ThreePointProblem fine(c.data_h);
    y = solve_forward(fine, fine.mesh(truth), truth).prediction;
  }
  Rng rng = make_rng(derive_seed(c.data_seed, {0x6f6273ULL}));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += c.sigma_e * noise(rng);
  return y;
}

LogLikelihood make_log_likelihood(const ExperimentConfig& c, const Eigen::VectorXd& y) {
  std::shared_ptr<const ForwardProblem> problem = make_problem(c);
  if (y.size() != problem->num_observations()) throw InvalidArgument("observation vector has the wrong size");
  const double sigma_e = c.sigma_e;
  switch (c.method) {
    case Method::Fem:
      return [problem, y, sigma_e](const Eigen::VectorXd& theta, std::uint64_t) {
        return fem_log_likelihood(*problem, theta, y, sigma_e);
      };
    case Method::Bfem:
      return [problem, y, sigma_e](const Eigen::VectorXd& theta, std::uint64_t) {
        return bfem_log_likelihood(*problem, theta, y, sigma_e);
      };
    case Method::Rmfem: {
      const PseudomarginalConfig pm{c.M, c.rmfem_exponent, c.rmfem_radius, 100, c.threads};
      const std::uint64_t seed = c.chain.seed;
      return [problem, y, sigma_e, pm, seed](const Eigen::VectorXd& theta, std::uint64_t evaluation) {
        return rmfem_log_likelihood(*problem, theta, y, sigma_e, pm, derive_seed(seed, {0x726dULL, evaluation}))
            .log_likelihood;
      };
    }
    case Method::Statfem: {
      const int d = static_cast<int>(problem->parameter_names().size());
      return [problem, y, sigma_e, d](const Eigen::VectorXd& x, std::uint64_t) {
        const StatfemHyperparams eta{x[d], x[d + 1], x[d + 2]};
        return statfem_log_likelihood(*problem, x.head(d), eta, y, sigma_e);
      };
    }
    case Method::Exact: {
      const double F = c.load;
      return [y, sigma_e, F](const Eigen::VectorXd& theta, std::uint64_t) {
        return pullout_exact_log_likelihood(theta, F, y, sigma_e);
      };
    }
  }
  throw ConfigError("unknown method");
}

double statfem_joint_log_posterior(const ForwardProblem& problem, const PriorSpec& prior, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y, double sigma_e) {
  const auto d = static_cast<Eigen::Index>(problem.parameter_names().size());
  if (x.size() != d + 3 || prior.dim() != d + 3) throw InvalidArgument("statFEM parameters are theta plus three hyperparameters");
  const double lp = prior.logpdf(x);
  if (lp == -std::numeric_limits<double>::infinity()) return lp;
  return lp + statfem_log_likelihood(problem, x.head(d), {x[d], x[d + 1], x[d + 2]}, y, sigma_e);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << hash;
  return out.str();
}

std::string data_hash(const Eigen::VectorXd& y) {
  std::string bytes(static_cast<std::size_t>(y.size()) * sizeof(double), '\0');
  std::memcpy(bytes.data(), y.data(), bytes.size());
  return fnv1a_hex(bytes);
}

std::string config_hash(const ExperimentConfig& c) {
  ExperimentConfig copy = c;
  copy.output_dir.clear();
  return fnv1a_hex(config_to_json(copy));
}

std::vector<ParameterSummary> summarize(const Chain& chain) {
  std::vector<ParameterSummary> out;
  const Eigen::VectorXd sd = column_std(chain.samples);
  for (Eigen::Index j = 0; j < chain.samples.cols(); ++j) {
    std::vector<double> v(chain.samples.col(j).data(), chain.samples.col(j).data() + chain.samples.rows());
    std::sort(v.begin(), v.end());
    out.push_back({chain.names[static_cast<std::size_t>(j)], chain.samples.col(j).mean(), sd[j],
                   quantile_sorted(v, 0.025), quantile_sorted(v, 0.5), quantile_sorted(v, 0.975)});
  }
  return out;
}

Histogram marginal_histogram(const Eigen::VectorXd& samples, const Distribution& prior, int bins) {
  if (bins < 1 || samples.size() == 0) throw InvalidArgument("histogram needs bins and samples");
  double lo, hi;
  if (prior.kind() == Distribution::Kind::Uniform) {
    lo = prior.a();
    hi = prior.b();
  } else {
    lo = prior.quantile(0.001);
    hi = prior.quantile(0.999);
  }
  const double smin = samples.minCoeff(), smax = samples.maxCoeff();
  if (smin < lo || smax > hi) {
    const double pad = 0.05 * std::max(smax - smin, 1e-12 * std::max(std::abs(smax), 1.0));
    lo = smin - pad;
    hi = smax + pad;
  }
  Histogram hist;
  hist.edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) hist.edges[i] = lo + (hi - lo) * i / bins;
  hist.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double s : samples) {
    const int b = std::clamp(static_cast<int>(std::floor((s - lo) / (hi - lo) * bins)), 0, bins - 1);
    ++hist.counts[b];
  }
  return hist;
}

DensityGrid kde_grid(const Eigen::MatrixXd& samples, int points) {
  if (samples.cols() != 2) throw InvalidArgument("density grid takes two columns");
  const Kde kde(samples);
  DensityGrid grid;
  const Eigen::RowVector2d lo = samples.colwise().minCoeff(), hi = samples.colwise().maxCoeff();
  const Eigen::RowVector2d pad = 0.1 * (hi - lo);
  grid.x = Eigen::VectorXd::LinSpaced(points, lo[0] - pad[0], hi[0] + pad[0]);
  grid.y = Eigen::VectorXd::LinSpaced(points, lo[1] - pad[1], hi[1] + pad[1]);
  grid.density.resize(points, points);
  for (int i = 0; i < points; ++i) {
    for (int j = 0; j < points; ++j) grid.density(i, j) = kde(Eigen::Vector2d(grid.x[i], grid.y[j]));
  }
  return grid;
}

bool credible_region_contains(const Eigen::MatrixXd& samples, const Eigen::VectorXd& point, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("alpha must lie in (0, 1)");
  const Kde kde(samples);
  std::vector<double> dens(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index i = 0; i < samples.rows(); ++i) dens[i] = kde(samples.row(i).transpose());
  std::sort(dens.begin(), dens.end());
  return kde(point) >= quantile_sorted(dens, alpha);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  validate_config(config);
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult result;
  result.config = config;
  result.observations = synthesize_observations(config);
  result.data_hash = data_hash(result.observations);
  result.config_hash = config_hash(config);
  ChainConfig chain = config.chain;
  chain.refresh_current = config.method == Method::Rmfem;
  result.chain = run_chain(make_log_likelihood(config, result.observations), make_prior(config), chain);
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!config.output_dir.empty()) write_bundle(result, config.output_dir);
  return result;
}

void write_bundle(const ExperimentResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "marginals");
  {
    std::ofstream out(dir / "chain.csv");
    if (!out) throw ConfigError("cannot write " + (dir / "chain.csv").string());
    write_chain_csv(r.chain, out);
  }
  const PriorSpec prior = make_prior(r.config);
  json params = json::object();
  for (const auto& s : summarize(r.chain)) {
    params[s.name] = {{"mean", s.mean}, {"std", s.std}, {"q025", s.q025}, {"q50", s.q50}, {"q975", s.q975}};
  }
  json summary = {{"problem", to_string(r.config.problem)},
                  {"method", to_string(r.config.method)},
                  {"h", r.config.h},
                  {"parameters", params},
                  {"parameter_order", r.chain.names},
                  {"ground_truth", r.config.ground_truth},
                  {"acceptance_rate", r.chain.acceptance_rate},
                  {"burn_in_acceptance", static_cast<double>(r.chain.burn_accepted) / r.config.chain.n_burn},
                  {"failed_evaluations", r.chain.failed_evaluations},
                  {"seed", r.config.chain.seed},
                  {"start", vector_json(r.chain.start)},
                  {"config", json::parse(config_to_json(r.config))}};
  if (r.config.problem == ProblemKind::ThreePoint) {
    json sensors = json::array();
    for (const Point& p : beam_sensor_locations(BeamGeometry{})) sensors.push_back({p.x, p.y});
    summary["sensors"] = sensors;
  }
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  const json meta = {{"seed", r.config.chain.seed},           {"data_seed", r.config.data_seed},
                     {"config_hash", r.config_hash},          {"data_hash", r.data_hash},
                     {"observations", vector_json(r.observations)}, {"runtime_seconds", r.seconds},
                     {"config", json::parse(config_to_json(r.config))}};
  write_text(dir / "meta.json", meta.dump(2) + "\n");

  for (int j = 0; j < prior.dim(); ++j) {
    const Histogram hist = marginal_histogram(r.chain.samples.col(j), prior.distributions()[j]);
    std::ofstream out(dir / "marginals" / (prior.names()[j] + ".csv"));
    out << "lower,upper,count,density\n" << std::setprecision(12);
    const double n = static_cast<double>(r.chain.samples.rows());
    for (std::size_t b = 0; b < hist.counts.size(); ++b) {
      const double width = hist.edges[b + 1] - hist.edges[b];
      out << hist.edges[b] << ',' << hist.edges[b + 1] << ',' << hist.counts[b] << ','
          << hist.counts[b] / (n * width) << '\n';
    }
  }
  if (r.config.problem == ProblemKind::Pullout && r.chain.samples.rows() > 1) {
    const DensityGrid grid = kde_grid(r.chain.samples.leftCols(2));
    std::ofstream out(dir / "kde.csv");
    out << "EA,k,density\n" << std::setprecision(12);
    for (Eigen::Index i = 0; i < grid.x.size(); ++i) {
      for (Eigen::Index j = 0; j < grid.y.size(); ++j) out << grid.x[i] << ',' << grid.y[j] << ',' << grid.density(i, j) << '\n';
    }
  }
}

Bundle read_bundle(const std::filesystem::path& dir) {
  Bundle b;
  b.dir = dir;
  const json meta = read_json_file(dir / "meta.json");
  b.data_hash = meta.at("data_hash").get<std::string>();
  b.config = parse_config(meta.at("config").dump());
  std::ifstream in(dir / "chain.csv");
  if (!in) throw ConfigError("cannot open " + (dir / "chain.csv").string());
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) header.push_back(cell);
  }
  const std::size_t dim = make_prior(b.config).dim();
  if (header.size() < dim) throw ConfigError("chain.csv header does not match the config");
  b.names.assign(header.begin(), header.begin() + static_cast<std::ptrdiff_t>(dim));
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> row;
    for (std::string cell; std::getline(ss, cell, ',');) row.push_back(std::strtod(cell.c_str(), nullptr));
    if (row.size() != header.size()) throw ConfigError("malformed row in chain.csv");
    rows.push_back(std::move(row));
  }
  b.samples.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) b.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return b;
}

Comparison compare_posteriors(const std::vector<Bundle>& bundles) {
  if (bundles.size() < 2) throw InvalidArgument("comparison needs at least two bundles");
  const ProblemKind problem = bundles.front().config.problem;
  for (const auto& b : bundles) {
    if (b.data_hash != bundles.front().data_hash) throw ConfigError("bundles were computed on different data");
    if (b.config.problem != problem) throw ConfigError("bundles mix problems");
  }
  Comparison cmp;
  const auto& truth_vec = bundles.front().config.ground_truth;
  const auto d = static_cast<Eigen::Index>(truth_vec.size());
  const Eigen::VectorXd truth = Eigen::Map<const Eigen::VectorXd>(truth_vec.data(), d);
  ExperimentConfig theta_config = bundles.front().config;
  theta_config.method = Method::Fem;
  const PriorSpec theta_prior = make_prior(theta_config);
  cmp.names = theta_prior.names();
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    if (bundles[i].config.method == Method::Exact) {
      cmp.reference = static_cast<int>(i);
      break;
    }
  }
  std::vector<Eigen::MatrixXd> z(bundles.size());
  for (std::size_t i = 0; i < bundles.size(); ++i) z[i] = to_sampling_space(theta_prior, bundles[i].samples.leftCols(d));
  Eigen::VectorXd ref_std, ref_zmean, ref_zstd;
  if (cmp.reference >= 0) {
    ref_std = column_std(bundles[cmp.reference].samples.leftCols(d));
    ref_zmean = z[cmp.reference].colwise().mean().transpose();
    ref_zstd = column_std(z[cmp.reference]);
  }
  const Eigen::VectorXd prior_zstd = theta_prior.sampling_covariance().diagonal().cwiseSqrt();
  const Eigen::VectorXd truth_z = theta_prior.to_sampling(truth);
  std::vector<double> error(bundles.size());
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    const Bundle& b = bundles[i];
    BundleMetrics m;
    m.label = b.dir.filename().string();
    if (m.label.empty()) m.label = b.dir.parent_path().filename().string();
    m.method = b.config.method;
    m.h = b.config.h;
    const Eigen::MatrixXd theta = b.samples.leftCols(d);
    m.mean_error = theta.colwise().mean().transpose() - truth;
    m.covers_truth = credible_region_contains(z[i], truth_z, 0.05);
    const Eigen::VectorXd zmean = z[i].colwise().mean().transpose();
    if (cmp.reference >= 0) {
      m.std_ratio = column_std(theta).cwiseQuotient(ref_std);
      m.standardized_shift = (zmean - ref_zmean).cwiseQuotient(ref_zstd);
      error[i] = m.standardized_shift.norm();
    } else {
      error[i] = (zmean - truth_z).cwiseQuotient(prior_zstd).norm();
    }
    cmp.metrics.push_back(std::move(m));
  }
  // A bundle is monotone when its error does not exceed that of the next
  // coarser bundle of the same method.
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    double coarser_h = std::numeric_limits<double>::infinity();
    int coarser = -1;
    for (std::size_t k = 0; k < bundles.size(); ++k) {
      if (k == i || bundles[k].config.method != bundles[i].config.method) continue;
      if (bundles[k].config.h > bundles[i].config.h && bundles[k].config.h < coarser_h) {
        coarser_h = bundles[k].config.h;
        coarser = static_cast<int>(k);
      }
    }
    cmp.metrics[i].monotone = coarser < 0 || error[i] <= error[coarser];
  }
  return cmp;
}

std::string format_comparison(const Comparison& cmp) {
  std::ostringstream out;
  out << std::left << std::setw(24) << "bundle" << std::setw(9) << "method" << std::setw(11) << "h" << std::setw(8)
      << "covers" << std::setw(10) << "monotone";
  for (const auto& n : cmp.names) out << std::setw(13) << ("err_" + n);
  if (cmp.reference >= 0) {
    for (const auto& n : cmp.names) out << std::setw(13) << ("sd/ref_" + n);
    for (const auto& n : cmp.names) out << std::setw(13) << ("shift_" + n);
  }
  out << '\n' << std::setprecision(4);
  for (const auto& m : cmp.metrics) {
    out << std::setw(24) << m.label << std::setw(9) << to_string(m.method) << std::setw(11) << m.h << std::setw(8)
        << (m.covers_truth ? "yes" : "no") << std::setw(10) << (m.monotone ? "yes" : "no");
    for (double v : m.mean_error) out << std::setw(13) << v;
    for (double v : m.std_ratio) out << std::setw(13) << v;
    for (double v : m.standardized_shift) out << std::setw(13) << v;
    out << '\n';
  }
  return out.str();
}

std::string comparison_to_json(const Comparison& cmp) {
  json rows = json::array();
  for (const auto& m : cmp.metrics) {
    json row = {{"bundle", m.label},
                {"method", to_string(m.method)},
                {"h", m.h},
                {"covers_truth", m.covers_truth},
                {"monotone", m.monotone},
                {"mean_error", vector_json(m.mean_error)}};
    if (cmp.reference >= 0) {
      row["std_ratio"] = vector_json(m.std_ratio);
      row["standardized_shift"] = vector_json(m.standardized_shift);
    }
    rows.push_back(row);
  }
  json j = {{"parameters", cmp.names}, {"metrics", rows}};
  j["reference"] = cmp.reference >= 0 ? json(cmp.metrics[cmp.reference].label) : json(nullptr);
  return j.dump(2);
}

}  // namespace probfem
