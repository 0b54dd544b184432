#pragma once

#include "bsp/bounds.hpp"

namespace bsp {

struct GameError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A repeated betting game: outcome x_t drawn by outcome_env, bet y_t
// chosen beforehand, profit profits(x, y) in [p_min, p_max]. The
// induced loss (p_max - p)/p_delta lands in [0,1].
struct GameSpec {
  Matrix profits;  // |X| rows by |Y| columns
  double p_min = 0;
  double p_max = 0;
  Environment outcome_env;

  double p_delta() const { return p_max - p_min; }
  Matrix induced_loss() const;
  void validate() const;
};

// Derives p_min/p_max from the profit table itself.
GameSpec make_game(Matrix profits, Environment outcome_env);

struct GameReport {
  long n = 0;
  double P_mu = 0, P_xi = 0;        // total expected profits
  double pbar_mu = 0, pbar_xi = 0;  // per-round averages
  double D_n = 0;
  double b_mu = 0;  // ln(1/w_mu)
  double lower_bound_on_universal_profit = 0;
  double threshold_simple = 0;
  double threshold_sharp = 0;
  bool past_sharp_threshold = false;
  CumulativeMetrics metrics;
};

// P_n = n p_max - p_delta L_n, exactly.
double profit_from_loss(const GameSpec& spec, double L_n, long n);

// Right-hand side of the profit lower bound
// P_mu - p_delta D - sqrt(4 (n p_max - P_mu) p_delta D + p_delta^2 D^2).
double universal_profit_lower_bound(const GameSpec& spec, double P_mu,
                                    double D_n, long n);

// (simple, sharp) horizons past which the universal bettor is provably
// in the winning zone: (2 p_delta / pbar)^2 b and
// 2 p_delta (2 p_max - pbar) / pbar^2 * b. Throws when pbar_mu <= 0
// (no winning strategy exists at all).
std::pair<double, double> winning_thresholds(const GameSpec& spec,
                                             double pbar_mu, double b_mu);

// Runs the metrics engine on the induced loss and assembles the report.
// outcome_env must be a class member (or dominated linear combination);
// w_mu supplies the domination weight for the thresholds.
GameReport simulate_game(const GameSpec& spec,
                         std::shared_ptr<const WeightedClass> cls, long n,
                         double w_mu, Mode mode = Mode::Exact,
                         long samples = 0, std::uint64_t seed = 0);

}  // namespace bsp
