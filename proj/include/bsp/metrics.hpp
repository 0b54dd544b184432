#pragma once

#include <cstdint>
#include <memory>

#include "bsp/mixture.hpp"
#include "bsp/predict.hpp"

namespace bsp {

struct MetricsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StepDistances {
  double d = 0;  // relative entropy, nats; +inf when mu>0 meets xi=0
  double s = 0;  // squared Euclidean distance
  double a = 0;  // absolute distance
};

// Instantaneous distances between the true and mixture conditionals,
// with the 0*ln(0/.)=0 convention.
StepDistances step_distances(const Vector& mu, const Vector& xi);

struct StepMetrics {
  double d = 0, s = 0, a = 0;
  double e_mu = 0, e_xi = 0;  // instantaneous error probabilities
  double l_mu = 0, l_xi = 0;  // instantaneous expected losses
  double q = 0;               // Theta_xi vs Theta_mu disagreement
};

enum class Mode { Exact, MonteCarlo };

struct CumulativeMetrics {
  long n = 0;
  Mode mode = Mode::Exact;
  double D = 0, S = 0, V = 0, Q = 0;
  double E_mu = 0, E_xi = 0, L_mu = 0, L_xi = 0;
  std::vector<double> E_extra, L_extra;

  long samples = 0;  // MonteCarlo only
  std::uint64_t seed = 0;
  double se_D = 0, se_S = 0, se_V = 0, se_Q = 0;
  double se_E_mu = 0, se_E_xi = 0, se_L_mu = 0, se_L_xi = 0;
  std::vector<double> se_E_extra, se_L_extra;

  // Expected per-step values, when requested.
  std::vector<StepMetrics> trace;

  // Worst slacks of the pointwise inequalities over all visited nodes:
  // s <= a^2/2 <= d, the instantaneous error bound, and the
  // instantaneous loss bound.
  double chain_slack_min = kPosInf;
  double inst_err_slack_min = kPosInf;   // sqrt(2s) - (e_xi - e_mu)
  double inst_err_slack_max = kNegInf;
  double inst_loss_slack_min = kPosInf;  // sqrt(2d) - (l_xi - l_mu)
};

struct EngineOptions {
  std::vector<Predictor> extras;
  bool trace = false;
  bool parallel = true;
};

// Exact mu-expectations by depth-first enumeration of the sequence
// tree: trueEnv plays mu, the class mixture plays xi. Zero-probability
// branches are pruned; sums are compensated. Guarded by |X|^n <= 2^24.
CumulativeMetrics exact_expectation(std::shared_ptr<const WeightedClass> cls,
                                    const Environment& true_env,
                                    const LossSchedule& loss, long n,
                                    const EngineOptions& opts = {});

// Monte Carlo estimates of the same expectations with per-quantity
// standard errors. Reproducible: fixed per-block seeds merged in block
// order, independent of the thread count.
CumulativeMetrics mc_expectation(std::shared_ptr<const WeightedClass> cls,
                                 const Environment& true_env,
                                 const LossSchedule& loss, long n,
                                 long samples, std::uint64_t seed,
                                 const EngineOptions& opts = {});

}  // namespace bsp
