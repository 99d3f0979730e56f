#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "probfem/random.hpp"

namespace probfem {

struct PseudomarginalConfig {
  int M = 100;                ///< replicas per estimate
  double exponent = 1.0;      ///< p in h_i^p
  double radius = 0.25;       ///< perturbation ball radius
  int max_attempts = 100;     ///< mesh resampling attempts per replica
  int threads = 0;            ///< 0 = hardware concurrency
};

/// log((1/n) sum exp(v_i)) over the non-NaN entries; -inf if there are none.
double log_mean_exp(std::span<const double> values);

struct PseudomarginalEstimate {
  double log_likelihood = 0.0;
  int used = 0;    ///< replicas that produced a finite value
  int failed = 0;  ///< replicas dropped after mesh or solver failure
};

/// Log-likelihood of replica j given its own random stream; may throw.
using ReplicaFunction = std::function<double(int j, Rng& rng)>;

/// Monte Carlo estimate of the marginal likelihood from M replicas evaluated
/// in parallel. Replica j uses the stream derive_seed(seed, {j}), so the
/// result does not depend on the thread schedule. Failed replicas are
/// dropped. Throws LikelihoodEvaluationError when every replica fails.
PseudomarginalEstimate pseudomarginal_log_likelihood(const ReplicaFunction& replica, const PseudomarginalConfig& config,
                                                     std::uint64_t seed);

}  // namespace probfem
