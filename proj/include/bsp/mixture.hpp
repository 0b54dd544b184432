#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "bsp/env.hpp"

namespace bsp {

struct ZeroProbabilityObservation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A finite weighted hypothesis class. Weights are prior beliefs,
// positive and summing to one; true_index optionally marks which member
// generates the data.
struct WeightedClass {
  std::vector<Environment> members;
  Vector weights;
  std::optional<int> true_index;

  int size() const { return int(members.size()); }
  int alphabet_size() const { return members.front().alphabet_size(); }
  void validate() const;
};

std::shared_ptr<const WeightedClass> make_class(
    std::vector<Environment> members, const Vector& weights,
    std::optional<int> true_index = std::nullopt);

// Posterior state of the Bayes mixture after some observed history.
// A value type: copy freely, observe under exclusive access. Weights
// live in log-domain; members ruled out by the data carry -inf and are
// kept so indices stay stable.
class MixtureState {
 public:
  explicit MixtureState(std::shared_ptr<const WeightedClass> cls);

  const WeightedClass& cls() const { return *cls_; }
  const Vector& log_weights() const { return logw_; }
  Vector posterior_weights() const { return logw_.array().exp(); }
  const History& history() const { return history_; }
  bool dead() const { return dead_; }

  // xi(.|x_<t) = sum_nu w_nu(x_<t) nu(.|x_<t).
  Vector conditional() const;

  // Bayes step for one observed symbol; throws ZeroProbabilityObservation
  // when xi(x|x_<t) = 0 (the data left the mixture's support for good).
  void observe(Symbol x);

  // Same update but a zero-probability symbol kills the state silently
  // instead of throwing; returns false in that case. The exact engine
  // uses this so broken dominance surfaces as infinite relative entropy
  // rather than an exception.
  bool observe_unchecked(Symbol x);

 private:
  std::shared_ptr<const WeightedClass> cls_;
  Vector logw_;
  std::vector<EnvCursor> cursors_;
  History history_;
  bool dead_ = false;
};

// Spec operations ------------------------------------------------------

Vector mixture_conditional(const MixtureState& state);
MixtureState posterior_update(MixtureState state, Symbol x);

// xi(x_{1:n}) - w_nu * nu(x_{1:n}); never below -1e-12 by dominance.
double dominance_slack(const WeightedClass& cls, int member, const History& x);

double joint_mixture_logprob(const WeightedClass& cls, const History& x);

// min_{nu in L} w_nu / v_nu for a linear combination mu = sum v_nu nu
// over the sub-list L = {index : coeff > 0}; coeffs must sum to one.
double linear_combination_weight(
    const WeightedClass& cls, const std::vector<std::pair<int, double>>& coeffs);

// The combined environment mu = sum v_nu nu itself.
Environment linear_combination_env(
    const WeightedClass& cls, const std::vector<std::pair<int, double>>& coeffs);

// Continuous Bernoulli family --------------------------------------------

enum class BernoulliPrior { Uniform, Jeffreys };

// Mixture over all Bernoulli(theta) with a Uniform or Jeffreys prior
// density, tracked through the sufficient statistics (ones, total).
// Conditionals are the Laplace resp. KT estimators.
struct ContinuousBernoulliMixture {
  BernoulliPrior prior = BernoulliPrior::Uniform;
  long ones = 0;
  long total = 0;

  double conditional_one() const;
  void observe(Symbol x);
};

Vector continuous_conditional(const ContinuousBernoulliMixture& cm);

// ln xi(x_{1:n}) for a binary string with k ones out of n.
double continuous_logprob_counts(BernoulliPrior prior, long k, long n);
double continuous_sequence_logprob(BernoulliPrior prior, const History& x);

}  // namespace bsp
