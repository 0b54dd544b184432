#pragma once

#include <string>
#include <vector>

#include "bsp/metrics.hpp"

namespace bsp {

enum class TheoremId {
  Convergence,
  ErrorBound,
  LossBound,
  Instantaneous,
  DeterministicError,
  ContinuousEntropy,
  NotInClass,
};

std::string theorem_name(TheoremId id);

// One inequality lhs <= rhs of a theorem's chain.
struct BoundLink {
  std::string lhs_label;
  double lhs = 0;
  std::string rhs_label;
  double rhs = 0;
  double slack = 0;  // rhs - lhs
};

struct BoundReport {
  TheoremId theorem = TheoremId::Convergence;
  std::vector<BoundLink> links;
  bool holds = false;       // all slacks >= -tolerance
  bool infinite = false;    // an infinite quantity forced holds=false
  double tolerance = 1e-9;

  double min_slack() const;
  void push(std::string lhs_label, double lhs, std::string rhs_label,
            double rhs);
  void finalize();  // recompute holds from links and the infinite flag
};

std::string render_table(const BoundReport& r);

// Theorem 1 chain S_n <= V_n <= D_n <= ln(1/w_mu). Pass
// TheoremId::NotInClass when w_mu comes from a linear combination.
BoundReport check_convergence(const CumulativeMetrics& cm, double w_mu,
                              TheoremId id = TheoremId::Convergence);

// Theorem 2 chain on the error counts, plus, for every extra predictor
// with a finite error column, E_extra >= E_xi - 2 sqrt(E_xi S_n).
BoundReport check_error_bound(const CumulativeMetrics& cm);

// General loss chain 0 <= L_xi - L_mu <= D + sqrt(4 L_mu D + D^2)
//                                     <= 2D + 2 sqrt(L_mu D).
BoundReport check_loss_bound(const CumulativeMetrics& cm);

// Pointwise inequalities recorded during the run: worst-node slacks of
// e_xi - e_mu <= sqrt(2 s_t) and l_xi - l_mu <= sqrt(2 d_t).
BoundReport check_instantaneous(const CumulativeMetrics& cm);

// E_n for the universal predictor against log2(1/w_mu); true_env must
// be a deterministic measure.
BoundReport check_deterministic(const CumulativeMetrics& cm,
                                const Environment& true_env, double w_mu);

// Scalar-parameter entropy bound ln(1/w(theta0)) + (1/2) ln(n/(2 pi))
// + (1/2) ln(mean Fisher information); the vanishing remainder is
// dropped (hard-bound form).
double ceb_bound(long n, double w_density_at_theta0, double fisher_mean);

// Exact D_n between Bernoulli(theta0) and the continuous mixture, by
// the binomial sum over count statistics in log domain.
double bernoulli_relative_entropy(BernoulliPrior prior, double theta0, long n);

double bernoulli_fisher(double theta0);
double prior_density(BernoulliPrior prior, double theta0);

struct ContinuousEntropyResult {
  BoundReport report;
  std::vector<long> n_list;
  std::vector<double> D;      // exact D_n per n
  std::vector<double> bound;  // hard bound per n
  double slope = 0;           // regression of D_n on ln n
};

// Checks D_n against the hard bound for each n >= 64 (with a fixed
// margin absorbing the dropped remainder at small n) and the growth
// slope against [0.45, 0.55].
ContinuousEntropyResult check_continuous_entropy(BernoulliPrior prior,
                                                 double theta0,
                                                 const std::vector<long>& ns);

}  // namespace bsp
