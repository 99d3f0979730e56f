#include "probfem/rmfem.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <vector>

#include "probfem/errors.hpp"

namespace probfem {

double log_mean_exp(std::span<const double> values) {
  double top = -std::numeric_limits<double>::infinity();
  std::size_t n = 0;
  for (double v : values) {
    if (std::isnan(v)) continue;
    ++n;
    top = std::max(top, v);
  }
  if (n == 0 || top == -std::numeric_limits<double>::infinity()) return -std::numeric_limits<double>::infinity();
  if (top == std::numeric_limits<double>::infinity()) return top;
  double sum = 0.0;
  for (double v : values) {
    if (!std::isnan(v)) sum += std::exp(v - top);
  }
  return top + (std::log(sum) - std::log(static_cast<double>(n)));
}

PseudomarginalEstimate pseudomarginal_log_likelihood(const ReplicaFunction& replica, const PseudomarginalConfig& config,
                                                     std::uint64_t seed) {
  if (config.M < 1) throw InvalidArgument("at least one replica is required");
  std::vector<double> values(config.M, std::numeric_limits<double>::quiet_NaN());
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int j = next++; j < config.M; j = next++) {
      Rng rng = make_rng(derive_seed(seed, {static_cast<std::uint64_t>(j)}));
      try {
        const double v = replica(j, rng);
        if (!std::isnan(v)) values[j] = v;
      } catch (const Error&) {
        // Dropped replica; counted below.
      }
    }
  };
  int threads = config.threads > 0 ? config.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, config.M);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  PseudomarginalEstimate est;
  std::vector<double> kept;
  for (double v : values) {
    if (std::isnan(v)) {
      ++est.failed;
    } else {
      kept.push_back(v);
    }
  }
  est.used = static_cast<int>(kept.size());
  if (kept.empty()) throw LikelihoodEvaluationError("every pseudomarginal replica failed");
  est.log_likelihood = log_mean_exp(kept);
  return est;
}

}  // namespace probfem
