#include "probfem/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

#include <boost/math/distributions/lognormal.hpp>

#include "probfem/errors.hpp"

namespace probfem {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

double lognormal_logpdf(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("log-normal sigma must be positive");
  if (!(x > 0.0)) return kNegInf;
  const double z = (std::log(x) - mu) / sigma;
  return -0.5 * z * z - std::log(x * sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double uniform_logpdf(double x, double lower, double upper) {
  if (!(upper > lower)) throw InvalidArgument("uniform bounds must satisfy lower < upper");
  if (!(x >= lower && x <= upper)) return kNegInf;
  return -std::log(upper - lower);
}

Distribution Distribution::lognormal(double mu, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(mu)) throw InvalidArgument("invalid log-normal parameters");
  return {Kind::LogNormal, mu, sigma};
}

Distribution Distribution::uniform(double lower, double upper) {
  if (!(upper > lower) || !std::isfinite(lower) || !std::isfinite(upper)) {
    throw InvalidArgument("invalid uniform bounds");
  }
  return {Kind::Uniform, lower, upper};
}

double Distribution::logpdf(double x) const {
  return kind_ == Kind::LogNormal ? lognormal_logpdf(x, a_, b_) : uniform_logpdf(x, a_, b_);
}

double Distribution::sample(Rng& rng) const {
  if (kind_ == Kind::LogNormal) return std::exp(std::normal_distribution<double>(a_, b_)(rng));
  return std::uniform_real_distribution<double>(a_, b_)(rng);
}

double Distribution::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("quantile level must lie in (0, 1)");
  if (kind_ == Kind::LogNormal) return boost::math::quantile(boost::math::lognormal_distribution<double>(a_, b_), p);
  return a_ + p * (b_ - a_);
}

double Distribution::mean() const {
  return kind_ == Kind::LogNormal ? std::exp(a_ + 0.5 * b_ * b_) : 0.5 * (a_ + b_);
}

double Distribution::stddev() const {
  if (kind_ == Kind::LogNormal) return std::sqrt(std::expm1(b_ * b_)) * std::exp(a_ + 0.5 * b_ * b_);
  return (b_ - a_) / std::sqrt(12.0);
}

double Distribution::to_sampling(double x) const { return kind_ == Kind::LogNormal ? std::log(x) : x; }

double Distribution::from_sampling(double z) const { return kind_ == Kind::LogNormal ? std::exp(z) : z; }

double Distribution::log_jacobian(double z) const { return kind_ == Kind::LogNormal ? z : 0.0; }

double Distribution::sampling_mean() const { return kind_ == Kind::LogNormal ? a_ : 0.5 * (a_ + b_); }

double Distribution::sampling_variance() const {
  return kind_ == Kind::LogNormal ? b_ * b_ : (b_ - a_) * (b_ - a_) / 12.0;
}

PriorSpec::PriorSpec(std::vector<std::string> names, std::vector<Distribution> distributions, Predicate admissible)
    : names_(std::move(names)), dists_(std::move(distributions)), admissible_(std::move(admissible)) {
  if (names_.size() != dists_.size()) throw InvalidArgument("one name per prior distribution required");
}

double PriorSpec::logpdf(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) throw InvalidArgument("parameter vector has the wrong size");
  double lp = 0.0;
  for (int i = 0; i < dim(); ++i) {
    lp += dists_[i].logpdf(x[i]);
    if (lp == kNegInf) return kNegInf;
  }
  if (admissible_ && !admissible_(x)) return kNegInf;
  return lp;
}

Eigen::VectorXd PriorSpec::sample(Rng& rng, int max_tries) const {
  Eigen::VectorXd x(dim());
  for (int attempt = 0; attempt < max_tries; ++attempt) {
    for (int i = 0; i < dim(); ++i) x[i] = dists_[i].sample(rng);
    if (!admissible_ || admissible_(x)) return x;
  }
  throw InvalidArgument("no admissible prior sample found");
}

Eigen::VectorXd PriorSpec::to_sampling(const Eigen::VectorXd& x) const {
  Eigen::VectorXd z(dim());
  for (int i = 0; i < dim(); ++i) z[i] = dists_[i].to_sampling(x[i]);
  return z;
}

Eigen::VectorXd PriorSpec::from_sampling(const Eigen::VectorXd& z) const {
  Eigen::VectorXd x(dim());
  for (int i = 0; i < dim(); ++i) x[i] = dists_[i].from_sampling(z[i]);
  return x;
}

double PriorSpec::sampling_logpdf(const Eigen::VectorXd& z) const {
  const double lp = logpdf(from_sampling(z));
  if (lp == kNegInf) return kNegInf;
  double jac = 0.0;
  for (int i = 0; i < dim(); ++i) jac += dists_[i].log_jacobian(z[i]);
  return lp + jac;
}

Eigen::VectorXd PriorSpec::sampling_mean() const {
  Eigen::VectorXd m(dim());
  for (int i = 0; i < dim(); ++i) m[i] = dists_[i].sampling_mean();
  return m;
}

Eigen::MatrixXd PriorSpec::sampling_covariance() const {
  Eigen::VectorXd v(dim());
  for (int i = 0; i < dim(); ++i) v[i] = dists_[i].sampling_variance();
  return v.asDiagonal();
}

PriorSpec PriorSpec::concat(const PriorSpec& other) const {
  auto names = names_;
  names.insert(names.end(), other.names_.begin(), other.names_.end());
  auto dists = dists_;
  dists.insert(dists.end(), other.dists_.begin(), other.dists_.end());
  Predicate pred;
  if (admissible_ || other.admissible_) {
    const int n1 = dim(), n2 = other.dim();
    pred = [a = admissible_, b = other.admissible_, n1, n2](const Eigen::VectorXd& x) {
      return (!a || a(x.head(n1))) && (!b || b(x.segment(n1, n2)));
    };
  }
  return {std::move(names), std::move(dists), std::move(pred)};
}

double tempered_log_target(double log_prior, double log_likelihood, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("temperature must lie in [0, 1]");
  if (log_prior == kNegInf || log_likelihood == kNegInf || std::isnan(log_prior) || std::isnan(log_likelihood)) {
    return kNegInf;
  }
  return log_prior + tau * log_likelihood;
}

double acceptance_probability(double log_ratio) {
  if (std::isnan(log_ratio)) return 0.0;
  return log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
}

bool metropolis_accept(double log_ratio, double u) { return u < acceptance_probability(log_ratio); }

namespace {

/// Cholesky factor of 2.38^2/d * shape; the proposal is exp(log_scale) times it.
Eigen::MatrixXd proposal_factor(const Eigen::MatrixXd& shape) {
  const double d = static_cast<double>(shape.rows());
  Eigen::LLT<Eigen::MatrixXd> llt((2.38 * 2.38 / d) * shape);
  if (llt.info() != Eigen::Success) throw InvalidArgument("proposal covariance is not positive definite");
  return llt.matrixL();
}

}  // namespace

Chain run_chain(const LogLikelihood& log_likelihood, const PriorSpec& prior, const ChainConfig& config) {
  if (config.n_burn < 1 || config.n < 1) throw InvalidArgument("chain lengths must be positive");
  if (config.window < 1) throw InvalidArgument("adaptation window must be positive");
  const int d = prior.dim();
  if (d < 1) throw InvalidArgument("empty prior");
  Rng rng = make_rng(config.seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform;

  Chain chain;
  chain.names = prior.names();
  chain.seed = config.seed;
  std::uint64_t evaluations = 0;
  auto evaluate = [&](const Eigen::VectorXd& x) {
    try {
      const double v = log_likelihood(x, evaluations++);
      return std::isnan(v) ? kNegInf : v;
    } catch (const Error&) {
      ++chain.failed_evaluations;
      return kNegInf;
    }
  };

  // Start at the prior mean in sampling space, else at prior draws.
  Eigen::VectorXd z = prior.sampling_mean();
  double lp = prior.sampling_logpdf(z);
  double ll = lp == kNegInf ? kNegInf : evaluate(prior.from_sampling(z));
  for (int attempt = 0; attempt < 10000 && (lp == kNegInf || ll == kNegInf); ++attempt) {
    Eigen::VectorXd x;
    try {
      x = prior.sample(rng, 1);
    } catch (const InvalidArgument&) {
      continue;
    }
    z = prior.to_sampling(x);
    lp = prior.sampling_logpdf(z);
    ll = lp == kNegInf ? kNegInf : evaluate(x);
  }
  if (lp == kNegInf || ll == kNegInf) throw LikelihoodEvaluationError("no starting point with finite posterior found");
  chain.start = prior.from_sampling(z);

  Eigen::MatrixXd shape = prior.sampling_covariance();
  double log_scale = std::log(std::sqrt(static_cast<double>(d)) / 2.38);
  Eigen::MatrixXd L = proposal_factor(shape);

  std::vector<int> update_steps;
  for (double f : config.shape_updates) {
    const int step = static_cast<int>(std::floor(f * config.n_burn));
    if (step > 0 && step < config.n_burn) update_steps.push_back(step);
  }
  std::sort(update_steps.begin(), update_steps.end());
  std::vector<Eigen::VectorXd> segment;
  int window_accepts = 0, window_steps = 0;

  chain.samples.resize(config.n, d);
  chain.log_prior.reserve(config.n);
  chain.log_likelihood.reserve(config.n);
  chain.temperature.reserve(config.n_burn);
  const int total = config.n_burn + config.n;
  for (int t = 0; t < total; ++t) {
    const bool burn = t < config.n_burn;
    const double tau = !burn || config.n_burn == 1 ? 1.0 : static_cast<double>(t) / (config.n_burn - 1);
    if (config.refresh_current) ll = evaluate(prior.from_sampling(z));

    Eigen::VectorXd xi(d);
    for (int i = 0; i < d; ++i) xi[i] = normal(rng);
    const Eigen::VectorXd z_new = z + std::exp(log_scale) * (L * xi);
    const double lp_new = prior.sampling_logpdf(z_new);
    const double ll_new = lp_new == kNegInf ? kNegInf : evaluate(prior.from_sampling(z_new));
    const double target_new = tempered_log_target(lp_new, ll_new, tau);
    const double target_old = tempered_log_target(lp, ll, tau);
    double log_ratio;
    if (target_new == kNegInf) {
      log_ratio = kNegInf;
    } else if (target_old == kNegInf) {
      log_ratio = 0.0;
    } else {
      log_ratio = target_new - target_old;
    }
    const bool accept = metropolis_accept(log_ratio, uniform(rng));
    if (accept) {
      z = z_new;
      lp = lp_new;
      ll = ll_new;
    }

    if (burn) {
      chain.temperature.push_back(tau);
      chain.burn_accepted += accept ? 1 : 0;
      window_accepts += accept ? 1 : 0;
      ++window_steps;
      segment.push_back(z);
      log_scale += std::pow(static_cast<double>(t + 1), -config.adaptation_exponent) *
                   (acceptance_probability(log_ratio) - config.target_acceptance);
      if (window_steps == config.window) {
        chain.window_acceptance.push_back(static_cast<double>(window_accepts) / window_steps);
        window_accepts = window_steps = 0;
      }
      if (std::binary_search(update_steps.begin(), update_steps.end(), t + 1)) {
        // Re-estimate the shape from the segment since the previous update.
        std::vector<Eigen::VectorXd> distinct;
        for (const auto& s : segment) {
          if (distinct.empty() || (s - distinct.back()).norm() > 0.0) distinct.push_back(s);
        }
        if (static_cast<int>(distinct.size()) >= std::max(10, 2 * d)) {
          Eigen::MatrixXd X(segment.size(), d);
          for (std::size_t i = 0; i < segment.size(); ++i) X.row(static_cast<Eigen::Index>(i)) = segment[i].transpose();
          const Eigen::RowVectorXd mean = X.colwise().mean();
          const Eigen::MatrixXd centered = X.rowwise() - mean;
          Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(segment.size() - 1);
          cov.diagonal().array() += 1e-8 * cov.trace() / d;
          if (Eigen::LLT<Eigen::MatrixXd>(cov).info() == Eigen::Success && cov.trace() > 0.0) {
            shape = cov;
            log_scale = 0.0;
            L = proposal_factor(shape);
          }
        }
        segment.clear();
      }
    } else {
      const int i = t - config.n_burn;
      chain.accepted += accept ? 1 : 0;
      chain.samples.row(i) = prior.from_sampling(z).transpose();
      chain.log_prior.push_back(prior.logpdf(prior.from_sampling(z)));
      chain.log_likelihood.push_back(ll);
    }
  }
  chain.acceptance_rate = static_cast<double>(chain.accepted) / config.n;
  const double dd = static_cast<double>(d);
  chain.proposal_covariance = std::exp(2.0 * log_scale) * (2.38 * 2.38 / dd) * shape;
  return chain;
}

void write_chain_csv(const Chain& chain, std::ostream& out) {
  for (std::size_t i = 0; i < chain.names.size(); ++i) out << (i ? "," : "") << chain.names[i];
  out << ",log_prior,log_likelihood\n";
  out.precision(17);
  for (Eigen::Index r = 0; r < chain.samples.rows(); ++r) {
    for (Eigen::Index c = 0; c < chain.samples.cols(); ++c) out << (c ? "," : "") << chain.samples(r, c);
    out << ',' << chain.log_prior[r] << ',' << chain.log_likelihood[r] << '\n';
  }
}

}  // namespace probfem
