#include "bsp/games.hpp"

#include <cmath>

namespace bsp {

void GameSpec::validate() const {
  if (profits.size() == 0) throw GameError("empty profit table");
  if (!profits.allFinite()) throw GameError("profits must be finite");
  if (!(p_delta() > 0.0)) throw GameError("profit range must be positive");
  if (profits.minCoeff() < p_min - 1e-12 || profits.maxCoeff() > p_max + 1e-12)
    throw GameError("profits fall outside [p_min, p_max]");
  if (profits.rows() != outcome_env.alphabet_size())
    throw GameError("profit rows must match the outcome alphabet");
}

Matrix GameSpec::induced_loss() const {
  return (p_max - profits.array()) / p_delta();
}

GameSpec make_game(Matrix profits, Environment outcome_env) {
  GameSpec spec{std::move(profits), 0.0, 0.0, std::move(outcome_env)};
  spec.p_min = spec.profits.minCoeff();
  spec.p_max = spec.profits.maxCoeff();
  spec.validate();
  return spec;
}

double profit_from_loss(const GameSpec& spec, double L_n, long n) {
  if (L_n < -1e-12 || L_n > double(n) + 1e-12)
    throw GameError("cumulative loss must lie in [0, n]");
  return double(n) * spec.p_max - spec.p_delta() * L_n;
}

double universal_profit_lower_bound(const GameSpec& spec, double P_mu,
                                    double D_n, long n) {
  if (!std::isfinite(P_mu) || !std::isfinite(D_n))
    throw GameError("inputs must be finite");
  const double pd = spec.p_delta();
  return P_mu - pd * D_n -
         std::sqrt(4.0 * (double(n) * spec.p_max - P_mu) * pd * D_n +
                   pd * pd * D_n * D_n);
}

std::pair<double, double> winning_thresholds(const GameSpec& spec,
                                             double pbar_mu, double b_mu) {
  if (!(pbar_mu > 0.0))
    throw GameError("no winning strategy: average informed profit <= 0");
  const double pd = spec.p_delta();
  const double simple = (2.0 * pd / pbar_mu) * (2.0 * pd / pbar_mu) * b_mu;
  const double sharp =
      2.0 * pd * (2.0 * spec.p_max - pbar_mu) / (pbar_mu * pbar_mu) * b_mu;
  return {simple, sharp};
}

GameReport simulate_game(const GameSpec& spec,
                         std::shared_ptr<const WeightedClass> cls, long n,
                         double w_mu, Mode mode, long samples,
                         std::uint64_t seed) {
  spec.validate();
  const LossSchedule loss = LossSchedule::constant(spec.induced_loss());
  GameReport rep;
  rep.n = n;
  rep.metrics = mode == Mode::Exact
                    ? exact_expectation(cls, spec.outcome_env, loss, n)
                    : mc_expectation(cls, spec.outcome_env, loss, n, samples,
                                     seed);
  rep.P_mu = profit_from_loss(spec, rep.metrics.L_mu, n);
  rep.P_xi = profit_from_loss(spec, rep.metrics.L_xi, n);
  rep.pbar_mu = rep.P_mu / double(n);
  rep.pbar_xi = rep.P_xi / double(n);
  rep.D_n = rep.metrics.D;
  rep.b_mu = std::log(1.0 / w_mu);
  rep.lower_bound_on_universal_profit =
      universal_profit_lower_bound(spec, rep.P_mu, rep.D_n, n);
  if (rep.pbar_mu > 0.0) {
    auto [simple, sharp] = winning_thresholds(spec, rep.pbar_mu, rep.b_mu);
    rep.threshold_simple = simple;
    rep.threshold_sharp = sharp;
    rep.past_sharp_threshold = double(n) > sharp;
    if (rep.past_sharp_threshold && !(rep.P_xi > 0.0))
      throw GameError("time-to-win guarantee violated: past the sharp "
                      "threshold but P_xi <= 0");
  }
  return rep;
}

}  // namespace bsp
