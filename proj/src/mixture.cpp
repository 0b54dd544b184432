#include "bsp/mixture.hpp"

#include <cmath>

namespace bsp {

void WeightedClass::validate() const {
  if (members.empty()) throw EnvError("class needs at least one member");
  if (long(weights.size()) != long(members.size()))
    throw EnvError("class weights/members mismatch");
  if (!(weights.array() > 0.0).all())
    throw EnvError("class weights must be positive");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw EnvError("class weights must sum to 1");
  const int n = members.front().alphabet_size();
  for (const Environment& m : members)
    if (m.alphabet_size() != n)
      throw EnvError("class members must share the alphabet");
  if (true_index && (*true_index < 0 || *true_index >= size()))
    throw EnvError("true_index out of range");
}

std::shared_ptr<const WeightedClass> make_class(
    std::vector<Environment> members, const Vector& weights,
    std::optional<int> true_index) {
  auto cls = std::make_shared<WeightedClass>(
      WeightedClass{std::move(members), weights, true_index});
  cls->validate();
  return cls;
}

MixtureState::MixtureState(std::shared_ptr<const WeightedClass> cls)
    : cls_(std::move(cls)) {
  cls_->validate();
  logw_ = cls_->weights.array().log();
  cursors_.reserve(cls_->members.size());
  for (const Environment& m : cls_->members) cursors_.emplace_back(m);
}

Vector MixtureState::conditional() const {
  const int n = cls_->alphabet_size();
  Vector p = Vector::Zero(n);
  if (dead_) return p;
  for (std::size_t i = 0; i < cursors_.size(); ++i) {
    const double w = std::exp(logw_[long(i)]);
    if (w > 0.0) p += w * cursors_[i].conditional();
  }
  return p;
}

bool MixtureState::observe_unchecked(Symbol x) {
  if (x < 0 || x >= cls_->alphabet_size())
    throw EnvError("symbol out of alphabet range");
  history_.push_back(x);
  if (dead_) return false;
  double mix = 0.0;
  Vector cond_x(long(cursors_.size()));
  for (std::size_t i = 0; i < cursors_.size(); ++i) {
    cond_x[long(i)] = cursors_[i].conditional()[x];
    mix += std::exp(logw_[long(i)]) * cond_x[long(i)];
  }
  if (mix <= 0.0) {
    dead_ = true;
    logw_.setConstant(kNegInf);
  } else {
    // w_nu(x_{1:t}) = w_nu(x_<t) nu(x|x_<t) / xi(x|x_<t); renormalizing
    // through log-sum-exp removes float drift the division leaves.
    for (long i = 0; i < logw_.size(); ++i)
      logw_[i] += (cond_x[i] > 0.0 ? std::log(cond_x[i]) : kNegInf);
    logw_.array() -= log_sum_exp(logw_);
  }
  for (EnvCursor& c : cursors_) c.advance(x);
  return !dead_;
}

void MixtureState::observe(Symbol x) {
  if (!observe_unchecked(x))
    throw ZeroProbabilityObservation(
        "observed a symbol with mixture probability zero");
}

Vector mixture_conditional(const MixtureState& state) {
  return state.conditional();
}

MixtureState posterior_update(MixtureState state, Symbol x) {
  state.observe(x);
  return state;
}

double joint_mixture_logprob(const WeightedClass& cls, const History& x) {
  Vector terms(long(cls.size()));
  for (int i = 0; i < cls.size(); ++i)
    terms[i] = std::log(cls.weights[i]) + sequence_logprob(cls.members[std::size_t(i)], x);
  return log_sum_exp(terms);
}

double dominance_slack(const WeightedClass& cls, int member, const History& x) {
  cls.validate();
  if (member < 0 || member >= cls.size()) throw EnvError("member out of range");
  const double xi = std::exp(joint_mixture_logprob(cls, x));
  const double wnu =
      cls.weights[member] * sequence_prob(cls.members[std::size_t(member)], x);
  return xi - wnu;
}

double linear_combination_weight(
    const WeightedClass& cls,
    const std::vector<std::pair<int, double>>& coeffs) {
  if (coeffs.empty()) throw EnvError("linear combination needs coefficients");
  double sum = 0.0;
  double w_mu = kPosInf;
  for (const auto& [idx, v] : coeffs) {
    if (idx < 0 || idx >= cls.size()) throw EnvError("member out of range");
    if (v <= 0.0) throw EnvError("coefficients must be positive");
    sum += v;
    w_mu = std::min(w_mu, cls.weights[idx] / v);
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw EnvError("coefficients must sum to 1");
  return w_mu;
}

Environment linear_combination_env(
    const WeightedClass& cls,
    const std::vector<std::pair<int, double>>& coeffs) {
  linear_combination_weight(cls, coeffs);  // validates
  std::vector<Environment> comps;
  Vector v(long(coeffs.size()));
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    comps.push_back(cls.members[std::size_t(coeffs[i].first)]);
    v[long(i)] = coeffs[i].second;
  }
  return make_mixture(std::move(comps), v);
}

double ContinuousBernoulliMixture::conditional_one() const {
  if (prior == BernoulliPrior::Uniform)
    return (double(ones) + 1.0) / (double(total) + 2.0);
  return (double(ones) + 0.5) / (double(total) + 1.0);
}

void ContinuousBernoulliMixture::observe(Symbol x) {
  if (x != 0 && x != 1) throw EnvError("continuous mixture is binary");
  ones += (x == 1);
  ++total;
}

Vector continuous_conditional(const ContinuousBernoulliMixture& cm) {
  Vector p(2);
  const double one = cm.conditional_one();
  p << 1.0 - one, one;
  return p;
}

double continuous_logprob_counts(BernoulliPrior prior, long k, long n) {
  if (k < 0 || n < 0 || k > n) throw EnvError("invalid counts");
  if (prior == BernoulliPrior::Uniform)
    // integral of theta^k (1-theta)^(n-k) = k!(n-k)!/(n+1)!
    return std::lgamma(double(k) + 1.0) + std::lgamma(double(n - k) + 1.0) -
           std::lgamma(double(n) + 2.0);
  // Jeffreys: Beta(k+1/2, n-k+1/2) / Beta(1/2, 1/2)
  return std::lgamma(double(k) + 0.5) + std::lgamma(double(n - k) + 0.5) -
         std::lgamma(double(n) + 1.0) - std::log(M_PI);
}

double continuous_sequence_logprob(BernoulliPrior prior, const History& x) {
  long k = 0;
  for (Symbol s : x) {
    if (s != 0 && s != 1) throw EnvError("continuous mixture is binary");
    k += (s == 1);
  }
  return continuous_logprob_counts(prior, k, long(x.size()));
}

}  // namespace bsp
