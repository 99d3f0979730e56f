#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "probfem/inference.hpp"
#include "probfem/problems.hpp"

namespace probfem {

enum class ProblemKind { Pullout, ThreePoint };
enum class Method { Fem, Bfem, Rmfem, Statfem, Exact };

std::string to_string(ProblemKind problem);
std::string to_string(Method method);
ProblemKind parse_problem(std::string_view name);
Method parse_method(std::string_view name);

/// Log-normal priors (mu, sigma of the logarithm) on the statFEM hyperparameters.
/// An unset (NaN) mu takes the problem default: log of the sensor spacing for
/// ell_d and log sigma_e for sigma_d.
struct StatfemPriorConfig {
  double rho_mu = 0.0;
  double rho_sigma = 0.5;
  double ell_mu = std::numeric_limits<double>::quiet_NaN();
  double ell_sigma = 0.5;
  double sigma_d_mu = std::numeric_limits<double>::quiet_NaN();
  double sigma_d_sigma = 1.0;
};

struct ExperimentConfig {
  ProblemKind problem = ProblemKind::Pullout;
  Method method = Method::Fem;
  double h = 1.0;
  ChainConfig chain;
  double sigma_e = 1e-3;
  std::uint64_t data_seed = 1;
  std::vector<double> ground_truth;
  std::string output_dir;
  double load = 10.0;    ///< pullout end force F
  double data_h = 0.01;  ///< three-point mesh size of the synthetic data
  int M = 100;           ///< RM-FEM replicas per likelihood estimate
  double rmfem_exponent = 1.0;
  double rmfem_radius = 0.25;
  int threads = 0;
  StatfemPriorConfig statfem;
};

/// Problem defaults; `paper_scale` switches the three-point problem to the
/// full-size chain, mesh and data resolution.
ExperimentConfig default_config(ProblemKind problem, bool paper_scale = false);

/// Reads a JSON configuration. Keys left out take the defaults of the chosen
/// problem; unknown keys raise ConfigError.
ExperimentConfig parse_config(std::string_view json_text, bool paper_scale = false);
std::string config_to_json(const ExperimentConfig& config);
void validate_config(const ExperimentConfig& config);

/// Forward problem at the model resolution of the configuration.
std::unique_ptr<ForwardProblem> make_problem(const ExperimentConfig& config);

/// Prior over the sampled parameters: theta, followed by (rho, ell_d, sigma_d)
/// for statFEM.
PriorSpec make_prior(const ExperimentConfig& config);

/// Synthetic data at the ground truth: the closed form for the pullout bar, a
/// fine-mesh solve for the beam, plus independent N(0, sigma_e^2) noise.
Eigen::VectorXd synthesize_observations(const ExperimentConfig& config);

LogLikelihood make_log_likelihood(const ExperimentConfig& config, const Eigen::VectorXd& y);

/// log p(theta) + log p(eta) + statFEM log-likelihood for x = (theta, rho,
/// ell_d, sigma_d), up to the evidence; -inf outside the prior support.
double statfem_joint_log_posterior(const ForwardProblem& problem, const PriorSpec& prior, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y, double sigma_e);

/// 64-bit FNV-1a as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);
std::string data_hash(const Eigen::VectorXd& y);
std::string config_hash(const ExperimentConfig& config);

struct ParameterSummary {
  std::string name;
  double mean = 0.0;
  double std = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

std::vector<ParameterSummary> summarize(const Chain& chain);

struct Histogram {
  std::vector<double> edges;  ///< bins + 1 edges
  std::vector<int> counts;
};

/// Fixed-bin histogram over the prior range: the full support of a uniform,
/// the central 99.8% of a log-normal. Falls back to the padded sample range
/// when samples leave that range.
Histogram marginal_histogram(const Eigen::VectorXd& samples, const Distribution& prior, int bins = 50);

struct DensityGrid {
  Eigen::VectorXd x;
  Eigen::VectorXd y;
  Eigen::MatrixXd density;  ///< density(i, j) at (x[i], y[j])
};

/// Gaussian kernel density estimate of two columns with Scott's bandwidth.
DensityGrid kde_grid(const Eigen::MatrixXd& samples, int points = 60);

/// Highest-density credible-region test: the point is inside the 1 - alpha
/// region when its kernel density is at least the alpha quantile of the
/// densities at the samples.
bool credible_region_contains(const Eigen::MatrixXd& samples, const Eigen::VectorXd& point, double alpha = 0.05);

struct ExperimentResult {
  ExperimentConfig config;
  Chain chain;
  Eigen::VectorXd observations;
  std::string data_hash;
  std::string config_hash;
  double seconds = 0.0;
};

/// Runs the chain and, when config.output_dir is set, writes chain.csv,
/// summary.json, meta.json and marginals/<param>.csv (plus kde.csv for the
/// pullout problem).
ExperimentResult run_experiment(const ExperimentConfig& config);
void write_bundle(const ExperimentResult& result, const std::filesystem::path& dir);

struct Bundle {
  std::filesystem::path dir;
  ExperimentConfig config;
  Eigen::MatrixXd samples;
  std::vector<std::string> names;
  std::string data_hash;
};

Bundle read_bundle(const std::filesystem::path& dir);

struct BundleMetrics {
  std::string label;
  Method method = Method::Fem;
  double h = 0.0;
  bool covers_truth = false;         ///< ground truth in the 95% credible region
  Eigen::VectorXd mean_error;        ///< posterior mean - ground truth
  Eigen::VectorXd std_ratio;         ///< posterior std / reference std
  Eigen::VectorXd standardized_shift;  ///< (mean - reference mean) / reference std, sampling space
  bool monotone = true;              ///< error to the reference never grows as h shrinks
};

struct Comparison {
  std::vector<std::string> names;
  int reference = -1;  ///< index of the exact-likelihood bundle, if any
  std::vector<BundleMetrics> metrics;
};

/// Metrics of posteriors computed on the same data. Bundles with different
/// data hashes are rejected.
Comparison compare_posteriors(const std::vector<Bundle>& bundles);
std::string format_comparison(const Comparison& comparison);
std::string comparison_to_json(const Comparison& comparison);

}  // namespace probfem
