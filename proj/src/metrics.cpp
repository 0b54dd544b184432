#include "bsp/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <random>

namespace bsp {

StepDistances step_distances(const Vector& mu, const Vector& xi) {
  if (mu.size() != xi.size()) throw MetricsError("conditional size mismatch");
  StepDistances out;
  for (long x = 0; x < mu.size(); ++x) {
    const double m = mu[x];
    const double z = xi[x];
    if (m > 0.0) {
      if (z <= 0.0) {
        out.d = kPosInf;  // broken dominance; caller reports it loudly
      } else if (std::isfinite(out.d)) {
        out.d += m * std::log(m / z);
      }
    }
    const double diff = m - z;
    out.s += diff * diff;
    out.a += std::abs(diff);
  }
  return out;
}

namespace {

// Sum that survives +inf contributions without poisoning compensation.
struct InfAwareSum {
  KahanSum k;
  bool inf = false;
  void add(double v) {
    if (std::isinf(v))
      inf = true;
    else
      k.add(v);
  }
  void merge(const InfAwareSum& o) {
    inf = inf || o.inf;
    k.merge(o.k);
  }
  double value() const { return inf ? kPosInf : k.value(); }
};

struct TraceAccum {
  InfAwareSum d;
  KahanSum s, a, e_mu, e_xi, l_mu, l_xi, q;
};

struct Accums {
  InfAwareSum D;
  KahanSum S, V, Q, E_mu, E_xi, L_mu, L_xi;
  std::vector<KahanSum> E_x, L_x;
  std::vector<bool> E_x_valid;
  std::vector<TraceAccum> trace;
  double chain_min = kPosInf;
  double ie_min = kPosInf, ie_max = kNegInf, il_min = kPosInf;

  Accums(std::size_t extras, long trace_n)
      : E_x(extras), L_x(extras), E_x_valid(extras, true),
        trace(std::size_t(std::max<long>(trace_n, 0))) {}

  void merge(const Accums& o) {
    D.merge(o.D);
    S.merge(o.S);
    V.merge(o.V);
    Q.merge(o.Q);
    E_mu.merge(o.E_mu);
    E_xi.merge(o.E_xi);
    L_mu.merge(o.L_mu);
    L_xi.merge(o.L_xi);
    for (std::size_t i = 0; i < E_x.size(); ++i) {
      E_x[i].merge(o.E_x[i]);
      L_x[i].merge(o.L_x[i]);
      if (!o.E_x_valid[i]) E_x_valid[i] = false;
    }
    for (std::size_t t = 0; t < trace.size(); ++t) {
      trace[t].d.merge(o.trace[t].d);
      trace[t].s.merge(o.trace[t].s);
      trace[t].a.merge(o.trace[t].a);
      trace[t].e_mu.merge(o.trace[t].e_mu);
      trace[t].e_xi.merge(o.trace[t].e_xi);
      trace[t].l_mu.merge(o.trace[t].l_mu);
      trace[t].l_xi.merge(o.trace[t].l_xi);
      trace[t].q.merge(o.trace[t].q);
    }
    chain_min = std::min(chain_min, o.chain_min);
    ie_min = std::min(ie_min, o.ie_min);
    ie_max = std::max(ie_max, o.ie_max);
    il_min = std::min(il_min, o.il_min);
  }
};

// Everything predictor-shaped the engine drags along a path.
struct PredictorState {
  const Predictor* spec;
  std::optional<EnvCursor> cursor;  // greedy predictors only

  explicit PredictorState(const Predictor& p) : spec(&p) {
    if (const auto* g = std::get_if<GreedyPredictor>(&p))
      cursor.emplace(g->model);
  }

  void advance(Symbol x) {
    if (cursor) cursor->advance(x);
  }

  // (error-style prediction, loss-style action) at the current node.
  std::pair<int, int> decide(const Matrix& loss, const History& path,
                             int alphabet) const {
    if (const auto* g = std::get_if<GreedyPredictor>(spec)) {
      const Vector c = cursor->conditional();
      return {theta_predict(c), lambda_predict(c, loss)};
    }
    if (const auto* s = std::get_if<StaticPredictor>(spec))
      return {s->action, s->action};
    const auto& tbl = std::get<TablePredictor>(*spec);
    const long idx = history_index(path, alphabet);
    if (idx >= long(tbl.actions.size()))
      throw MetricsError("table predictor too small for this horizon");
    const int a = tbl.actions[std::size_t(idx)];
    return {a, a};
  }
};

struct NodeValues {
  StepMetrics m;
  std::vector<double> e_x, l_x;
};

NodeValues node_values(const Vector& mu, const Vector& xi, const Matrix& loss,
                       const std::vector<PredictorState>& preds,
                       const History& path, int alphabet) {
  NodeValues nv;
  const StepDistances sd = step_distances(mu, xi);
  nv.m.d = sd.d;
  nv.m.s = sd.s;
  nv.m.a = sd.a;
  const Symbol pm = theta_predict(mu);
  const Symbol px = theta_predict(xi);
  nv.m.q = (pm == px) ? 0.0 : 1.0;
  nv.m.e_mu = 1.0 - mu[pm];
  nv.m.e_xi = 1.0 - mu[px];
  const int am = lambda_predict(mu, loss);
  const int ax = lambda_predict(xi, loss);
  nv.m.l_mu = mu.dot(loss.col(am));
  nv.m.l_xi = mu.dot(loss.col(ax));
  nv.e_x.reserve(preds.size());
  nv.l_x.reserve(preds.size());
  for (const PredictorState& ps : preds) {
    const auto [pred, act] = ps.decide(loss, path, alphabet);
    nv.e_x.push_back(pred >= 0 && pred < alphabet
                         ? 1.0 - mu[pred]
                         : std::numeric_limits<double>::quiet_NaN());
    nv.l_x.push_back(mu.dot(loss.col(act)));
  }
  return nv;
}

void accumulate(const NodeValues& nv, long t, double w, bool want_trace,
                Accums& acc) {
  acc.D.add(std::isinf(nv.m.d) ? nv.m.d : w * nv.m.d);
  acc.S.add(w * nv.m.s);
  acc.V.add(w * 0.5 * nv.m.a * nv.m.a);
  acc.Q.add(w * nv.m.q);
  acc.E_mu.add(w * nv.m.e_mu);
  acc.E_xi.add(w * nv.m.e_xi);
  acc.L_mu.add(w * nv.m.l_mu);
  acc.L_xi.add(w * nv.m.l_xi);
  for (std::size_t i = 0; i < nv.e_x.size(); ++i) {
    if (std::isnan(nv.e_x[i]))
      acc.E_x_valid[i] = false;
    else
      acc.E_x[i].add(w * nv.e_x[i]);
    acc.L_x[i].add(w * nv.l_x[i]);
  }
  if (want_trace) {
    TraceAccum& tr = acc.trace[std::size_t(t - 1)];
    tr.d.add(std::isinf(nv.m.d) ? nv.m.d : w * nv.m.d);
    tr.s.add(w * nv.m.s);
    tr.a.add(w * nv.m.a);
    tr.e_mu.add(w * nv.m.e_mu);
    tr.e_xi.add(w * nv.m.e_xi);
    tr.l_mu.add(w * nv.m.l_mu);
    tr.l_xi.add(w * nv.m.l_xi);
    tr.q.add(w * nv.m.q);
  }
  const double half_a2 = 0.5 * nv.m.a * nv.m.a;
  acc.chain_min = std::min({acc.chain_min, half_a2 - nv.m.s,
                            std::isinf(nv.m.d) ? kPosInf : nv.m.d - half_a2});
  const double ie = std::sqrt(2.0 * nv.m.s) - (nv.m.e_xi - nv.m.e_mu);
  acc.ie_min = std::min(acc.ie_min, ie);
  acc.ie_max = std::max(acc.ie_max, ie);
  const double il =
      (std::isinf(nv.m.d) ? kPosInf : std::sqrt(2.0 * nv.m.d)) -
      (nv.m.l_xi - nv.m.l_mu);
  acc.il_min = std::min(acc.il_min, il);
}

struct WalkCtx {
  const LossSchedule* loss;
  long n;
  int alphabet;
  bool want_trace;
};

void walk(const WalkCtx& ctx, long t, double weight, EnvCursor& mu_cur,
          MixtureState& state, std::vector<PredictorState>& preds,
          History& path, Accums& acc) {
  const Vector mu = mu_cur.conditional();
  const Vector xi = state.conditional();
  const NodeValues nv =
      node_values(mu, xi, ctx.loss->at(t), preds, path, ctx.alphabet);
  accumulate(nv, t, weight, ctx.want_trace, acc);
  if (t == ctx.n) return;
  for (Symbol x = 0; x < ctx.alphabet; ++x) {
    const double px = mu[x];
    if (px <= 0.0) continue;
    EnvCursor mu_child = mu_cur;
    MixtureState state_child = state;
    std::vector<PredictorState> preds_child = preds;
    mu_child.advance(x);
    state_child.observe_unchecked(x);
    for (PredictorState& p : preds_child) p.advance(x);
    path.push_back(x);
    walk(ctx, t + 1, weight * px, mu_child, state_child, preds_child, path,
         acc);
    path.pop_back();
  }
}

CumulativeMetrics finish(Accums& acc, long n, Mode mode,
                         const EngineOptions& opts) {
  CumulativeMetrics cm;
  cm.n = n;
  cm.mode = mode;
  cm.D = acc.D.value();
  cm.S = acc.S.value();
  cm.V = acc.V.value();
  cm.Q = acc.Q.value();
  cm.E_mu = acc.E_mu.value();
  cm.E_xi = acc.E_xi.value();
  cm.L_mu = acc.L_mu.value();
  cm.L_xi = acc.L_xi.value();
  for (std::size_t i = 0; i < acc.E_x.size(); ++i) {
    cm.E_extra.push_back(acc.E_x_valid[i]
                             ? acc.E_x[i].value()
                             : std::numeric_limits<double>::quiet_NaN());
    cm.L_extra.push_back(acc.L_x[i].value());
  }
  if (opts.trace) {
    cm.trace.resize(std::size_t(n));
    for (long t = 0; t < n; ++t) {
      const TraceAccum& tr = acc.trace[std::size_t(t)];
      StepMetrics& m = cm.trace[std::size_t(t)];
      m.d = tr.d.value();
      m.s = tr.s.value();
      m.a = tr.a.value();
      m.e_mu = tr.e_mu.value();
      m.e_xi = tr.e_xi.value();
      m.l_mu = tr.l_mu.value();
      m.l_xi = tr.l_xi.value();
      m.q = tr.q.value();
    }
  }
  cm.chain_slack_min = acc.chain_min;
  cm.inst_err_slack_min = acc.ie_min;
  cm.inst_err_slack_max = acc.ie_max;
  cm.inst_loss_slack_min = acc.il_min;
  return cm;
}

void check_inputs(const WeightedClass& cls, const Environment& true_env,
                  const LossSchedule& loss, long n) {
  cls.validate();
  if (true_env.alphabet_size() != cls.alphabet_size())
    throw MetricsError("true environment alphabet mismatch");
  if (loss.symbol_count() != cls.alphabet_size())
    throw MetricsError("loss matrix rows must match the alphabet");
  if (n < 1) throw MetricsError("horizon must be at least 1");
}

}  // namespace

CumulativeMetrics exact_expectation(std::shared_ptr<const WeightedClass> cls,
                                    const Environment& true_env,
                                    const LossSchedule& loss, long n,
                                    const EngineOptions& opts) {
  check_inputs(*cls, true_env, loss, n);
  const int N = cls->alphabet_size();
  double leaves = std::pow(double(N), double(n));
  if (leaves > double(1 << 24))
    throw MetricsError("exact enumeration guard exceeded: |X|^n > 2^24");

  WalkCtx ctx{&loss, n, N, opts.trace};
  EnvCursor mu_cur(true_env);
  MixtureState state(cls);
  std::vector<PredictorState> preds;
  for (const Predictor& p : opts.extras) preds.emplace_back(p);

  Accums acc(opts.extras.size(), opts.trace ? n : 0);
  const Vector mu_root = mu_cur.conditional();
  const Vector xi_root = state.conditional();
  History path;
  accumulate(node_values(mu_root, xi_root, loss.at(1), preds, path, N), 1, 1.0,
             opts.trace, acc);

  const bool parallel = opts.parallel && n >= 8;
  if (n > 1) {
    std::vector<std::future<Accums>> jobs;
    for (Symbol x = 0; x < N; ++x) {
      const double px = mu_root[x];
      if (px <= 0.0) continue;
      auto job = [&, x, px]() {
        Accums sub(opts.extras.size(), opts.trace ? n : 0);
        EnvCursor mu_child = mu_cur;
        MixtureState state_child = state;
        std::vector<PredictorState> preds_child = preds;
        mu_child.advance(x);
        state_child.observe_unchecked(x);
        for (PredictorState& p : preds_child) p.advance(x);
        History sub_path{x};
        walk(ctx, 2, px, mu_child, state_child, preds_child, sub_path, sub);
        return sub;
      };
      if (parallel)
        jobs.push_back(std::async(std::launch::async, job));
      else
        acc.merge(job());
    }
    for (auto& j : jobs) acc.merge(j.get());  // fixed symbol order
  }
  return finish(acc, n, Mode::Exact, opts);
}

namespace {

constexpr long kMcBlock = 4096;

// Per-quantity running first and second moments over sample paths.
struct MomentAccum {
  KahanSum sum, sumsq;
  bool inf = false;
  void add(double v) {
    if (std::isinf(v)) {
      inf = true;
      return;
    }
    sum.add(v);
    sumsq.add(v * v);
  }
  void merge(const MomentAccum& o) {
    inf = inf || o.inf;
    sum.merge(o.sum);
    sumsq.merge(o.sumsq);
  }
  double mean(long m) const { return inf ? kPosInf : sum.value() / double(m); }
  double se(long m) const {
    if (inf) return kPosInf;
    if (m < 2) return 0.0;
    const double mu = sum.value() / double(m);
    const double var =
        std::max(0.0, (sumsq.value() - double(m) * mu * mu) / double(m - 1));
    return std::sqrt(var / double(m));
  }
};

struct McAccums {
  std::array<MomentAccum, 8> q;  // D,S,V,Q,E_mu,E_xi,L_mu,L_xi
  std::vector<MomentAccum> E_x, L_x;
  std::vector<bool> E_x_valid;
  std::vector<TraceAccum> trace;
  double chain_min = kPosInf;
  double ie_min = kPosInf, ie_max = kNegInf, il_min = kPosInf;

  McAccums(std::size_t extras, long trace_n)
      : E_x(extras), L_x(extras), E_x_valid(extras, true),
        trace(std::size_t(std::max<long>(trace_n, 0))) {}

  void merge(const McAccums& o) {
    for (std::size_t i = 0; i < q.size(); ++i) q[i].merge(o.q[i]);
    for (std::size_t i = 0; i < E_x.size(); ++i) {
      E_x[i].merge(o.E_x[i]);
      L_x[i].merge(o.L_x[i]);
      if (!o.E_x_valid[i]) E_x_valid[i] = false;
    }
    for (std::size_t t = 0; t < trace.size(); ++t) {
      trace[t].d.merge(o.trace[t].d);
      trace[t].s.merge(o.trace[t].s);
      trace[t].a.merge(o.trace[t].a);
      trace[t].e_mu.merge(o.trace[t].e_mu);
      trace[t].e_xi.merge(o.trace[t].e_xi);
      trace[t].l_mu.merge(o.trace[t].l_mu);
      trace[t].l_xi.merge(o.trace[t].l_xi);
      trace[t].q.merge(o.trace[t].q);
    }
    chain_min = std::min(chain_min, o.chain_min);
    ie_min = std::min(ie_min, o.ie_min);
    ie_max = std::max(ie_max, o.ie_max);
    il_min = std::min(il_min, o.il_min);
  }
};

McAccums mc_block(const WalkCtx& ctx, const Environment& true_env,
                  std::shared_ptr<const WeightedClass> cls,
                  const std::vector<Predictor>& extras, long count,
                  std::uint64_t block_seed) {
  McAccums acc(extras.size(), ctx.want_trace ? ctx.n : 0);
  std::mt19937_64 rng(block_seed);
  for (long i = 0; i < count; ++i) {
    EnvCursor mu_cur(true_env);
    MixtureState state(cls);
    std::vector<PredictorState> preds;
    for (const Predictor& p : extras) preds.emplace_back(p);
    History path;
    double pD = 0, pS = 0, pV = 0, pQ = 0, pEm = 0, pEx = 0, pLm = 0, pLx = 0;
    std::vector<double> pEe(extras.size(), 0.0), pLe(extras.size(), 0.0);
    bool d_inf = false;
    for (long t = 1; t <= ctx.n; ++t) {
      const Vector mu = mu_cur.conditional();
      const Vector xi = state.conditional();
      const NodeValues nv =
          node_values(mu, xi, ctx.loss->at(t), preds, path, ctx.alphabet);
      if (std::isinf(nv.m.d))
        d_inf = true;
      else
        pD += nv.m.d;
      pS += nv.m.s;
      pV += 0.5 * nv.m.a * nv.m.a;
      pQ += nv.m.q;
      pEm += nv.m.e_mu;
      pEx += nv.m.e_xi;
      pLm += nv.m.l_mu;
      pLx += nv.m.l_xi;
      for (std::size_t e = 0; e < extras.size(); ++e) {
        if (std::isnan(nv.e_x[e]))
          acc.E_x_valid[e] = false;
        else
          pEe[e] += nv.e_x[e];
        pLe[e] += nv.l_x[e];
      }
      if (ctx.want_trace) {
        TraceAccum& tr = acc.trace[std::size_t(t - 1)];
        tr.d.add(nv.m.d);
        tr.s.add(nv.m.s);
        tr.a.add(nv.m.a);
        tr.e_mu.add(nv.m.e_mu);
        tr.e_xi.add(nv.m.e_xi);
        tr.l_mu.add(nv.m.l_mu);
        tr.l_xi.add(nv.m.l_xi);
        tr.q.add(nv.m.q);
      }
      const double half_a2 = 0.5 * nv.m.a * nv.m.a;
      acc.chain_min = std::min({acc.chain_min, half_a2 - nv.m.s,
                                std::isinf(nv.m.d) ? kPosInf
                                                   : nv.m.d - half_a2});
      const double ie = std::sqrt(2.0 * nv.m.s) - (nv.m.e_xi - nv.m.e_mu);
      acc.ie_min = std::min(acc.ie_min, ie);
      acc.ie_max = std::max(acc.ie_max, ie);
      const double il =
          (std::isinf(nv.m.d) ? kPosInf : std::sqrt(2.0 * nv.m.d)) -
          (nv.m.l_xi - nv.m.l_mu);
      acc.il_min = std::min(acc.il_min, il);
      if (t == ctx.n) break;
      // draw the next symbol from mu
      const double u = canonical_uniform(rng);
      double cum = 0.0;
      Symbol drawn = -1;
      for (Symbol x = 0; x < ctx.alphabet; ++x) {
        if (mu[x] <= 0.0) continue;
        drawn = x;
        cum += mu[x];
        if (u < cum) break;
      }
      if (drawn < 0) throw MetricsError("true environment left its support");
      mu_cur.advance(drawn);
      state.observe_unchecked(drawn);
      for (PredictorState& p : preds) p.advance(drawn);
      path.push_back(drawn);
    }
    acc.q[0].add(d_inf ? kPosInf : pD);
    acc.q[1].add(pS);
    acc.q[2].add(pV);
    acc.q[3].add(pQ);
    acc.q[4].add(pEm);
    acc.q[5].add(pEx);
    acc.q[6].add(pLm);
    acc.q[7].add(pLx);
    for (std::size_t e = 0; e < extras.size(); ++e) {
      acc.E_x[e].add(pEe[e]);
      acc.L_x[e].add(pLe[e]);
    }
  }
  return acc;
}

}  // namespace

CumulativeMetrics mc_expectation(std::shared_ptr<const WeightedClass> cls,
                                 const Environment& true_env,
                                 const LossSchedule& loss, long n,
                                 long samples, std::uint64_t seed,
                                 const EngineOptions& opts) {
  check_inputs(*cls, true_env, loss, n);
  if (samples < 1) throw MetricsError("need at least one sample");
  const int N = cls->alphabet_size();
  WalkCtx ctx{&loss, n, N, opts.trace};

  const long blocks = (samples + kMcBlock - 1) / kMcBlock;
  std::vector<std::future<McAccums>> jobs;
  McAccums acc(opts.extras.size(), opts.trace ? n : 0);
  const bool parallel = opts.parallel && blocks > 1;
  if (parallel) {
    for (long b = 0; b < blocks; ++b) {
      const long count = std::min(kMcBlock, samples - b * kMcBlock);
      jobs.push_back(std::async(std::launch::async, mc_block, ctx,
                                std::cref(true_env), cls, std::cref(opts.extras),
                                count, derive_seed(seed, std::uint64_t(b))));
    }
    for (auto& j : jobs) acc.merge(j.get());
  } else {
    for (long b = 0; b < blocks; ++b) {
      const long count = std::min(kMcBlock, samples - b * kMcBlock);
      McAccums sub = mc_block(ctx, true_env, cls, opts.extras, count,
                              derive_seed(seed, std::uint64_t(b)));
      acc.merge(sub);
    }
  }

  CumulativeMetrics cm;
  cm.n = n;
  cm.mode = Mode::MonteCarlo;
  cm.samples = samples;
  cm.seed = seed;
  const long m = samples;
  cm.D = acc.q[0].mean(m);
  cm.S = acc.q[1].mean(m);
  cm.V = acc.q[2].mean(m);
  cm.Q = acc.q[3].mean(m);
  cm.E_mu = acc.q[4].mean(m);
  cm.E_xi = acc.q[5].mean(m);
  cm.L_mu = acc.q[6].mean(m);
  cm.L_xi = acc.q[7].mean(m);
  cm.se_D = acc.q[0].se(m);
  cm.se_S = acc.q[1].se(m);
  cm.se_V = acc.q[2].se(m);
  cm.se_Q = acc.q[3].se(m);
  cm.se_E_mu = acc.q[4].se(m);
  cm.se_E_xi = acc.q[5].se(m);
  cm.se_L_mu = acc.q[6].se(m);
  cm.se_L_xi = acc.q[7].se(m);
  for (std::size_t e = 0; e < opts.extras.size(); ++e) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    cm.E_extra.push_back(acc.E_x_valid[e] ? acc.E_x[e].mean(m) : nan);
    cm.se_E_extra.push_back(acc.E_x_valid[e] ? acc.E_x[e].se(m) : nan);
    cm.L_extra.push_back(acc.L_x[e].mean(m));
    cm.se_L_extra.push_back(acc.L_x[e].se(m));
  }
  if (opts.trace) {
    cm.trace.resize(std::size_t(n));
    for (long t = 0; t < n; ++t) {
      const TraceAccum& tr = acc.trace[std::size_t(t)];
      StepMetrics& sm = cm.trace[std::size_t(t)];
      sm.d = tr.d.value() / double(m);
      sm.s = tr.s.value() / double(m);
      sm.a = tr.a.value() / double(m);
      sm.e_mu = tr.e_mu.value() / double(m);
      sm.e_xi = tr.e_xi.value() / double(m);
      sm.l_mu = tr.l_mu.value() / double(m);
      sm.l_xi = tr.l_xi.value() / double(m);
      sm.q = tr.q.value() / double(m);
    }
  }
  cm.chain_slack_min = acc.chain_min;
  cm.inst_err_slack_min = acc.ie_min;
  cm.inst_err_slack_max = acc.ie_max;
  cm.inst_loss_slack_min = acc.il_min;
  return cm;
}

}  // namespace bsp
