#include "bsp/env.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bsp {

namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw EnvError(msg);
}

void check_prob_vector(const Vector& p, int alphabet, const char* what) {
  require(int(p.size()) == alphabet, "probability vector has wrong length");
  require(is_prob_vector(p), what);
}

}  // namespace

Environment::Environment(int alphabet, Kind kind)
    : alphabet_(alphabet), kind_(std::make_shared<const Kind>(std::move(kind))) {
  require(alphabet >= 2, "alphabet size must be at least 2");
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, CategoricalIid>) {
          check_prob_vector(k.probs, alphabet, "iid probs must sum to 1");
        } else if constexpr (std::is_same_v<T, ParamBernoulli>) {
          require(alphabet == 2, "ParamBernoulli requires a binary alphabet");
          require(k.theta > 0.0 && k.theta < 1.0,
                  "theta must lie strictly in (0,1)");
        } else if constexpr (std::is_same_v<T, DeterministicSeq>) {
          require(!k.symbols.empty(), "deterministic sequence must be nonempty");
          require(k.repeat_from >= 0 && k.repeat_from < int(k.symbols.size()),
                  "repeat_from out of range");
          for (Symbol s : k.symbols)
            require(s >= 0 && s < alphabet, "symbol out of alphabet range");
        } else if constexpr (std::is_same_v<T, MarkovChain>) {
          require(k.order >= 1, "markov order must be >= 1");
          const long ctxs = ipow(alphabet, k.order);
          require(k.transition.rows() == ctxs &&
                      k.transition.cols() == alphabet,
                  "transition table has wrong shape");
          for (long c = 0; c < ctxs; ++c) {
            Vector row = k.transition.row(c);
            check_prob_vector(row, alphabet, "transition row must sum to 1");
          }
          require(long(k.initial.size()) == ctxs,
                  "initial distribution has wrong length");
          require((k.initial.array() >= 0.0).all() &&
                      std::abs(k.initial.sum() - 1.0) <= 1e-12,
                  "initial distribution must sum to 1");
        } else if constexpr (std::is_same_v<T, PeriodicCategorical>) {
          require(!k.steps.empty(), "periodic environment needs steps");
          for (const Vector& p : k.steps)
            check_prob_vector(p, alphabet, "periodic step must sum to 1");
        } else if constexpr (std::is_same_v<T, MixtureEnv>) {
          require(!k.components.empty(), "mixture needs components");
          require(long(k.weights.size()) == long(k.components.size()),
                  "mixture weights/components mismatch");
          require((k.weights.array() > 0.0).all() &&
                      std::abs(k.weights.sum() - 1.0) <= 1e-12,
                  "mixture weights must be positive and sum to 1");
          for (const Environment& c : k.components)
            require(c.alphabet_size() == alphabet,
                    "mixture components must share the alphabet");
        }
      },
      *kind_);
}

bool Environment::deterministic() const {
  return std::visit(
      [&](const auto& k) -> bool {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, DeterministicSeq>) {
          return true;
        } else if constexpr (std::is_same_v<T, CategoricalIid>) {
          return (k.probs.array() == 1.0).any();
        } else if constexpr (std::is_same_v<T, PeriodicCategorical>) {
          return std::all_of(k.steps.begin(), k.steps.end(), [](const Vector& p) {
            return (p.array() == 1.0).any();
          });
        } else {
          return false;
        }
      },
      kind());
}

EnvCursor::EnvCursor(const Environment& env) : env_(&env) {
  if (const auto* m = std::get_if<MixtureEnv>(&env.kind())) {
    sub_.reserve(m->components.size());
    for (const Environment& c : m->components) sub_.emplace_back(c);
    logw_ = m->weights.array().log();
  }
}

Vector EnvCursor::conditional() const {
  const int n = env_->alphabet_size();
  if (dead_) return Vector::Zero(n);
  return std::visit(
      [&](const auto& k) -> Vector {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, CategoricalIid>) {
          return k.probs;
        } else if constexpr (std::is_same_v<T, ParamBernoulli>) {
          Vector p(2);
          p << 1.0 - k.theta, k.theta;
          return p;
        } else if constexpr (std::is_same_v<T, DeterministicSeq>) {
          Vector p = Vector::Zero(n);
          p[k.at(step_)] = 1.0;
          return p;
        } else if constexpr (std::is_same_v<T, PeriodicCategorical>) {
          return k.steps[std::size_t(step_ % long(k.steps.size()))];
        } else if constexpr (std::is_same_v<T, MarkovChain>) {
          if (step_ >= k.order) return k.transition.row(markov_ctx_);
          // Marginalize the initial distribution over length-k prefixes
          // that extend the observed partial prefix.
          const int seen = int(prefix_.size());
          long base = 0;
          for (Symbol s : prefix_) base = base * n + s;
          const long tail = ipow(n, k.order - seen);
          const double den = k.initial.segment(base * tail, tail).sum();
          if (den <= 0.0) return Vector::Zero(n);
          Vector p(n);
          const long sub = tail / n;
          for (int s = 0; s < n; ++s)
            p[s] = k.initial.segment((base * n + s) * sub, sub).sum() / den;
          return p;
        } else if constexpr (std::is_same_v<T, MixtureEnv>) {
          Vector p = Vector::Zero(n);
          for (std::size_t i = 0; i < sub_.size(); ++i) {
            const double w = std::exp(logw_[long(i)]);
            if (w > 0.0) p += w * sub_[i].conditional();
          }
          return p;
        }
      },
      env_->kind());
}

void EnvCursor::advance(Symbol x) {
  const int n = env_->alphabet_size();
  if (x < 0 || x >= n) throw EnvError("symbol out of alphabet range");
  if (dead_) {
    ++step_;
    return;
  }
  if (std::holds_alternative<MixtureEnv>(env_->kind())) {
    double mix = 0.0;
    Vector cond_x(long(sub_.size()));
    for (std::size_t i = 0; i < sub_.size(); ++i) {
      cond_x[long(i)] = sub_[i].conditional()[x];
      mix += std::exp(logw_[long(i)]) * cond_x[long(i)];
    }
    if (mix <= 0.0) {
      dead_ = true;
      logw_.setConstant(kNegInf);
    } else {
      for (long i = 0; i < logw_.size(); ++i)
        logw_[i] += (cond_x[i] > 0.0 ? std::log(cond_x[i]) : kNegInf);
      logw_.array() -= log_sum_exp(logw_);
    }
    for (EnvCursor& c : sub_) c.advance(x);
    ++step_;
    return;
  }
  const Vector p = conditional();
  if (p[x] <= 0.0) dead_ = true;
  if (const auto* mk = std::get_if<MarkovChain>(&env_->kind())) {
    if (step_ < mk->order) {
      prefix_.push_back(x);
      if (long(prefix_.size()) == mk->order) {
        markov_ctx_ = 0;
        for (Symbol s : prefix_) markov_ctx_ = markov_ctx_ * n + s;
      }
    } else {
      markov_ctx_ = (markov_ctx_ * n + x) % ipow(n, mk->order);
    }
  }
  ++step_;
}

Vector conditional(const Environment& env, const History& h) {
  EnvCursor c(env);
  for (Symbol s : h) c.advance(s);
  return c.conditional();
}

double sequence_logprob(const Environment& env, const History& x) {
  EnvCursor c(env);
  double lp = 0.0;
  for (Symbol s : x) {
    const double px = c.conditional()[s];
    if (px <= 0.0) return kNegInf;
    lp += std::log(px);
    c.advance(s);
  }
  return lp;
}

double sequence_prob(const Environment& env, const History& x) {
  if (x.size() > 30) return std::exp(sequence_logprob(env, x));
  EnvCursor c(env);
  double p = 1.0;
  for (Symbol s : x) {
    p *= c.conditional()[s];
    if (p == 0.0) return 0.0;
    c.advance(s);
  }
  return p;
}

History sample(const Environment& env, std::uint64_t seed, long n) {
  if (n < 0) throw EnvError("sample length must be nonnegative");
  std::mt19937_64 rng(seed);
  EnvCursor c(env);
  History x;
  x.reserve(std::size_t(n));
  const int N = env.alphabet_size();
  for (long t = 0; t < n; ++t) {
    const Vector p = c.conditional();
    if (p.sum() <= 0.0) throw EnvError("sampling from a zero-probability state");
    const double u = canonical_uniform(rng);
    double cum = 0.0;
    Symbol drawn = -1;
    for (int s = 0; s < N; ++s) {
      if (p[s] <= 0.0) continue;
      drawn = s;  // falls back to the last positive symbol
      cum += p[s];
      if (u < cum) break;
    }
    x.push_back(drawn);
    c.advance(drawn);
  }
  return x;
}

Environment make_iid(const Vector& probs) {
  return Environment(int(probs.size()), CategoricalIid{probs});
}

Environment make_bernoulli(double theta) {
  return Environment(2, ParamBernoulli{theta});
}

Environment make_deterministic(std::vector<Symbol> symbols, int alphabet,
                               int repeat_from) {
  return Environment(alphabet,
                     DeterministicSeq{std::move(symbols), repeat_from});
}

Environment make_markov(int alphabet, int order, const Matrix& transition,
                        const Vector& initial) {
  return Environment(alphabet, MarkovChain{order, transition, initial});
}

Environment make_periodic(std::vector<Vector> steps) {
  if (steps.empty()) throw EnvError("periodic environment needs steps");
  const int n = int(steps.front().size());
  return Environment(n, PeriodicCategorical{std::move(steps)});
}

Environment make_mixture(std::vector<Environment> components,
                         const Vector& weights) {
  if (components.empty()) throw EnvError("mixture needs components");
  const int n = components.front().alphabet_size();
  return Environment(n, MixtureEnv{std::move(components), weights});
}

}  // namespace bsp
