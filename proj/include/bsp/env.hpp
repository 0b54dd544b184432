#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <variant>
#include <vector>

#include "bsp/numeric.hpp"

namespace bsp {

struct EnvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class Environment;

// i.i.d. draws from a fixed categorical distribution.
struct CategoricalIid {
  Vector probs;
};

// Bernoulli(theta) over the binary alphabet, theta strictly inside (0,1)
// so the Fisher information 1/(theta(1-theta)) stays finite. Use
// DeterministicSeq for theta in {0,1}.
struct ParamBernoulli {
  double theta;
};

// A single fixed sequence: `symbols` followed by cyclic repetition of
// the suffix starting at `repeat_from`. Emits probability 1 on exactly
// one symbol per step.
struct DeterministicSeq {
  std::vector<Symbol> symbols;
  int repeat_from = 0;

  Symbol at(long t) const {  // 0-based position
    const long m = long(symbols.size());
    if (t < m) return symbols[std::size_t(t)];
    const long period = m - repeat_from;
    return symbols[std::size_t(repeat_from + (t - m) % period)];
  }
};

// Order-k Markov chain. `transition` has N^k rows (context index, first
// symbol most significant) and N columns. `initial` is a distribution
// over all length-k prefixes; conditionals for the first k steps come
// from marginalizing it, so sequence probabilities are defined from t=1.
struct MarkovChain {
  int order = 1;
  Matrix transition;
  Vector initial;
};

// Categorical distribution that depends on the time step only, cycling
// through `steps`. Covers dealers switching dice by a deterministic
// schedule and the per-step product environments of the lower-bound
// construction.
struct PeriodicCategorical {
  std::vector<Vector> steps;
};

// Finite mixture of environments; itself a distribution over sequences
// (conditionals carry Bayes-updated component weights). Used for true
// environments that are linear combinations of class members.
struct MixtureEnv {
  std::vector<Environment> components;
  Vector weights;
};

class Environment {
 public:
  using Kind = std::variant<CategoricalIid, ParamBernoulli, DeterministicSeq,
                            MarkovChain, PeriodicCategorical, MixtureEnv>;

  Environment(int alphabet, Kind kind);

  int alphabet_size() const { return alphabet_; }
  const Kind& kind() const { return *kind_; }

  // True when every reachable conditional is a point mass.
  bool deterministic() const;

 private:
  int alphabet_ = 0;
  // shared_ptr keeps Environment cheap to copy; kinds are immutable
  // after construction.
  std::shared_ptr<const Kind> kind_;
};

// Incremental reader of an environment's conditionals along one
// history. O(1)-ish per step; the environment must outlive the cursor.
// Once the consumed prefix has probability zero the cursor is "dead"
// and emits all-zero conditionals (the rho(x_t|x_<t)=0 convention).
class EnvCursor {
 public:
  explicit EnvCursor(const Environment& env);

  Vector conditional() const;
  void advance(Symbol x);
  long step() const { return step_; }
  bool dead() const { return dead_; }

 private:
  const Environment* env_;
  long step_ = 0;
  bool dead_ = false;
  long markov_ctx_ = 0;   // rolling context index once step_ >= order
  History prefix_;        // markov: partial prefix while step_ < order
  std::vector<EnvCursor> sub_;  // mixture components
  Vector logw_;                 // mixture posterior log-weights
};

// Spec operations ------------------------------------------------------

// nu(.|x_<t); all-zero vector when the history has probability zero.
Vector conditional(const Environment& env, const History& h);

// Chain-rule probability that a sequence starts with x; empty product
// convention gives sequence_prob(env, {}) = 1.
double sequence_prob(const Environment& env, const History& x);

// ln of the above; -inf for impossible prefixes. Products longer than
// ~30 steps should go through this to avoid underflow.
double sequence_logprob(const Environment& env, const History& x);

// Draws x_{1:n} step by step. Reproducible for a fixed seed.
History sample(const Environment& env, std::uint64_t seed, long n);

// Convenience constructors with validation.
Environment make_iid(const Vector& probs);
Environment make_bernoulli(double theta);
Environment make_deterministic(std::vector<Symbol> symbols, int alphabet,
                               int repeat_from = 0);
Environment make_markov(int alphabet, int order, const Matrix& transition,
                        const Vector& initial);
Environment make_periodic(std::vector<Vector> steps);
Environment make_mixture(std::vector<Environment> components,
                         const Vector& weights);

}  // namespace bsp
