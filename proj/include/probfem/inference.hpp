#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "probfem/random.hpp"

namespace probfem {

double lognormal_logpdf(double x, double mu, double sigma);
double uniform_logpdf(double x, double lower, double upper);

/// Univariate prior. Sampling happens in a transformed space where the prior
/// is unbounded or box-shaped: log x for log-normals, x itself for uniforms.
class Distribution {
 public:
  enum class Kind { LogNormal, Uniform };

  /// log x ~ N(mu, sigma^2).
  static Distribution lognormal(double mu, double sigma);
  static Distribution uniform(double lower, double upper);

  Kind kind() const { return kind_; }
  double a() const { return a_; }
  double b() const { return b_; }

  double logpdf(double x) const;
  double sample(Rng& rng) const;
  double quantile(double p) const;
  double mean() const;
  double stddev() const;

  double to_sampling(double x) const;
  double from_sampling(double z) const;
  /// log |dx/dz|.
  double log_jacobian(double z) const;
  double sampling_mean() const;
  double sampling_variance() const;

 private:
  Distribution(Kind kind, double a, double b) : kind_(kind), a_(a), b_(b) {}

  Kind kind_;
  double a_;
  double b_;
};

/// Independent priors per parameter, optionally conditioned on a joint
/// admissibility predicate (unnormalized density, -inf where it fails).
class PriorSpec {
 public:
  using Predicate = std::function<bool(const Eigen::VectorXd&)>;

  PriorSpec() = default;
  PriorSpec(std::vector<std::string> names, std::vector<Distribution> distributions, Predicate admissible = {});

  int dim() const { return static_cast<int>(dists_.size()); }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Distribution>& distributions() const { return dists_; }
  bool has_predicate() const { return static_cast<bool>(admissible_); }

  double logpdf(const Eigen::VectorXd& x) const;
  /// Rejection sampling against the predicate; throws InvalidArgument after `max_tries`.
  Eigen::VectorXd sample(Rng& rng, int max_tries = 10000) const;

  Eigen::VectorXd to_sampling(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_sampling(const Eigen::VectorXd& z) const;
  /// Prior log-density of z in the sampling space (including the Jacobian).
  double sampling_logpdf(const Eigen::VectorXd& z) const;
  Eigen::VectorXd sampling_mean() const;
  Eigen::MatrixXd sampling_covariance() const;

  /// Parameters of `other` appended after those of this prior. Predicates
  /// apply to their own block.
  PriorSpec concat(const PriorSpec& other) const;

 private:
  std::vector<std::string> names_;
  std::vector<Distribution> dists_;
  Predicate admissible_;
};

/// log prior + tau log likelihood; -inf when either term is -inf.
double tempered_log_target(double log_prior, double log_likelihood, double tau);

/// min(1, exp(log_ratio)).
double acceptance_probability(double log_ratio);

/// Metropolis rule with a symmetric proposal: accept iff u < exp(log_ratio).
bool metropolis_accept(double log_ratio, double u);

struct ChainConfig {
  int n_burn = 10000;
  int n = 10000;
  double target_acceptance = 0.234;
  double adaptation_exponent = 0.6;  ///< gamma_t = t^-exponent at burn-in step t
  int window = 100;                  ///< steps per reported acceptance rate
  /// Burn-in fractions at which the proposal shape is re-estimated from the
  /// samples since the previous update.
  std::vector<double> shape_updates = {0.25, 0.5, 0.75, 0.9};
  std::uint64_t seed = 0;
  /// Re-estimate the current state's likelihood every step (pseudomarginal).
  bool refresh_current = false;
};

/// Log-likelihood at natural-space parameters. `evaluation` is distinct for
/// every call of a chain, for stochastic estimators that need fresh streams.
/// Throwing a probfem::Error counts as a rejected (-inf) evaluation.
using LogLikelihood = std::function<double(const Eigen::VectorXd& x, std::uint64_t evaluation)>;

struct Chain {
  std::vector<std::string> names;
  Eigen::MatrixXd samples;            ///< retained samples, natural space
  std::vector<double> log_prior;      ///< per retained sample
  std::vector<double> log_likelihood; ///< per retained sample
  std::vector<double> temperature;    ///< per burn-in step
  std::vector<double> window_acceptance;
  int accepted = 0;  ///< during the retained phase
  int burn_accepted = 0;
  int failed_evaluations = 0;
  double acceptance_rate = 0.0;
  Eigen::MatrixXd proposal_covariance;  ///< frozen, sampling space
  Eigen::VectorXd start;
  std::uint64_t seed = 0;
};

/// Tempered adaptive random-walk Metropolis in the prior's sampling space.
/// Starts at the prior mean (or a prior draw), proposes N(0, s^2 2.38^2/d C)
/// with C initially the prior covariance, raises the likelihood to
/// tau_t = t / (N_burn - 1) during burn-in, adapts log s by Robbins-Monro on
/// the per-step acceptance probability and C at the configured fractions,
/// then freezes the proposal for the N retained steps at tau = 1.
Chain run_chain(const LogLikelihood& log_likelihood, const PriorSpec& prior, const ChainConfig& config);

/// CSV with a header of parameter names and one sample per line.
void write_chain_csv(const Chain& chain, std::ostream& out);

}  // namespace probfem
