#include "bsp/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>

namespace bsp {

std::string theorem_name(TheoremId id) {
  switch (id) {
    case TheoremId::Convergence: return "convergence";
    case TheoremId::ErrorBound: return "error_bound";
    case TheoremId::LossBound: return "loss_bound";
    case TheoremId::Instantaneous: return "instantaneous";
    case TheoremId::DeterministicError: return "deterministic";
    case TheoremId::ContinuousEntropy: return "continuous_entropy";
    case TheoremId::NotInClass: return "not_in_class";
  }
  return "?";
}

double BoundReport::min_slack() const {
  double m = kPosInf;
  for (const BoundLink& l : links) m = std::min(m, l.slack);
  return m;
}

void BoundReport::push(std::string lhs_label, double lhs,
                       std::string rhs_label, double rhs) {
  double slack = rhs - lhs;
  if (std::isnan(slack)) {
    // inf-inf links come from an infinite relative entropy; surface it
    slack = kNegInf;
    infinite = true;
  }
  links.push_back({std::move(lhs_label), lhs, std::move(rhs_label), rhs, slack});
}

void BoundReport::finalize() {
  holds = !infinite && min_slack() >= -tolerance;
}

std::string render_table(const BoundReport& r) {
  std::ostringstream os;
  os << "theorem: " << theorem_name(r.theorem)
     << (r.holds ? "  [PASS]" : "  [FAIL]") << "\n";
  char buf[256];
  for (const BoundLink& l : r.links) {
    std::snprintf(buf, sizeof buf, "  %-34s %14.8g <= %14.8g  %-30s slack %11.4g %s\n",
                  l.lhs_label.c_str(), l.lhs, l.rhs, l.rhs_label.c_str(),
                  l.slack, l.slack >= -r.tolerance ? "ok" : "VIOLATED");
    os << buf;
  }
  return os.str();
}

BoundReport check_convergence(const CumulativeMetrics& cm, double w_mu,
                              TheoremId id) {
  if (!(w_mu > 0.0)) throw MetricsError("w_mu must be positive");
  BoundReport r;
  r.theorem = id;
  const double b = std::log(1.0 / w_mu);
  r.push("S_n", cm.S, "V_n", cm.V);
  r.push("V_n", cm.V, "D_n", cm.D);
  r.push("D_n", cm.D, "ln(1/w_mu)", b);
  if (std::isinf(cm.D)) r.infinite = true;
  r.finalize();
  return r;
}

BoundReport check_error_bound(const CumulativeMetrics& cm) {
  BoundReport r;
  r.theorem = TheoremId::ErrorBound;
  const double S = cm.S;
  const double regret = cm.E_xi - cm.E_mu;
  const double b2 = std::sqrt(2.0 * cm.Q * S);
  const double b3 = std::sqrt(2.0 * (cm.E_xi + cm.E_mu) * S);
  const double b4 = S + std::sqrt(4.0 * cm.E_mu * S + S * S);
  const double b5 = 2.0 * S + 2.0 * std::sqrt(cm.E_mu * S);
  r.push("0", 0.0, "E_xi - E_mu", regret);
  r.push("E_xi - E_mu", regret, "sqrt(2 Q S)", b2);
  r.push("sqrt(2 Q S)", b2, "sqrt(2 (E_xi+E_mu) S)", b3);
  r.push("sqrt(2 (E_xi+E_mu) S)", b3, "S + sqrt(4 E_mu S + S^2)", b4);
  r.push("S + sqrt(4 E_mu S + S^2)", b4, "2S + 2 sqrt(E_mu S)", b5);
  // No predictor whatsoever beats Theta_xi by much.
  const double floor = cm.E_xi - 2.0 * std::sqrt(cm.E_xi * S);
  for (std::size_t i = 0; i < cm.E_extra.size(); ++i) {
    if (std::isnan(cm.E_extra[i])) continue;  // actions outside the alphabet
    r.push("E_xi - 2 sqrt(E_xi S)", floor,
           "E_extra[" + std::to_string(i) + "]", cm.E_extra[i]);
  }
  r.finalize();
  return r;
}

BoundReport check_loss_bound(const CumulativeMetrics& cm) {
  BoundReport r;
  r.theorem = TheoremId::LossBound;
  const double D = cm.D;
  const double regret = cm.L_xi - cm.L_mu;
  const double b2 = D + std::sqrt(4.0 * cm.L_mu * D + D * D);
  const double b3 = 2.0 * D + 2.0 * std::sqrt(cm.L_mu * D);
  r.push("0", 0.0, "L_xi - L_mu", regret);
  r.push("L_xi - L_mu", regret, "D + sqrt(4 L_mu D + D^2)", b2);
  r.push("D + sqrt(4 L_mu D + D^2)", b2, "2D + 2 sqrt(L_mu D)", b3);
  if (std::isinf(D)) r.infinite = true;
  r.finalize();
  return r;
}

BoundReport check_instantaneous(const CumulativeMetrics& cm) {
  BoundReport r;
  r.theorem = TheoremId::Instantaneous;
  r.push("max_t [(e_xi-e_mu) - sqrt(2 s_t)]", -cm.inst_err_slack_min, "0", 0.0);
  r.push("max_t [(l_xi-l_mu) - sqrt(2 d_t)]", -cm.inst_loss_slack_min, "0",
         0.0);
  r.push("max_t [s_t - a_t^2/2, a_t^2/2 - d_t]", -cm.chain_slack_min, "0", 0.0);
  r.finalize();
  return r;
}

BoundReport check_deterministic(const CumulativeMetrics& cm,
                                const Environment& true_env, double w_mu) {
  if (!true_env.deterministic())
    throw MetricsError("deterministic error bound needs a deterministic mu");
  if (!(w_mu > 0.0)) throw MetricsError("w_mu must be positive");
  BoundReport r;
  r.theorem = TheoremId::DeterministicError;
  r.push("E_xi", cm.E_xi, "log2(1/w_mu)", std::log2(1.0 / w_mu));
  r.finalize();
  return r;
}

double bernoulli_fisher(double theta0) {
  if (!(theta0 > 0.0 && theta0 < 1.0))
    throw MetricsError("theta0 must lie strictly in (0,1)");
  return 1.0 / (theta0 * (1.0 - theta0));
}

double prior_density(BernoulliPrior prior, double theta0) {
  if (!(theta0 > 0.0 && theta0 < 1.0))
    throw MetricsError("theta0 must lie strictly in (0,1)");
  if (prior == BernoulliPrior::Uniform) return 1.0;
  return 1.0 / (M_PI * std::sqrt(theta0 * (1.0 - theta0)));
}

double ceb_bound(long n, double w_density_at_theta0, double fisher_mean) {
  if (!(fisher_mean > 0.0)) throw MetricsError("Fisher information must be positive");
  if (!(w_density_at_theta0 > 0.0))
    throw MetricsError("prior density at theta0 must be positive");
  return std::log(1.0 / w_density_at_theta0) +
         0.5 * std::log(double(n) / (2.0 * M_PI)) + 0.5 * std::log(fisher_mean);
}

double bernoulli_relative_entropy(BernoulliPrior prior, double theta0, long n) {
  if (!(theta0 > 0.0 && theta0 < 1.0))
    throw MetricsError("theta0 must lie strictly in (0,1)");
  if (n < 1) throw MetricsError("n must be positive");
  const double lt = std::log(theta0);
  const double lq = std::log1p(-theta0);
  auto chunk = [&](long k0, long k1) {
    KahanSum sum;
    for (long k = k0; k < k1; ++k) {
      const double logmu = double(k) * lt + double(n - k) * lq;
      const double logpk = log_choose(n, k) + logmu;
      const double logxi = continuous_logprob_counts(prior, k, n);
      sum.add(std::exp(logpk) * (logmu - logxi));
    }
    return sum;
  };
  if (n < 4096) return chunk(0, n + 1).value();
  // large sums split over k; merged in a fixed order
  const long parts = 4;
  std::vector<std::future<KahanSum>> jobs;
  for (long p = 0; p < parts; ++p) {
    const long k0 = p * (n + 1) / parts;
    const long k1 = (p + 1) * (n + 1) / parts;
    jobs.push_back(std::async(std::launch::async, chunk, k0, k1));
  }
  KahanSum total;
  for (auto& j : jobs) total.merge(j.get());
  return total.value();
}

ContinuousEntropyResult check_continuous_entropy(BernoulliPrior prior,
                                                 double theta0,
                                                 const std::vector<long>& ns) {
  if (ns.empty()) throw MetricsError("need at least one horizon");
  if (!std::is_sorted(ns.begin(), ns.end()))
    throw MetricsError("horizons must be ascending");
  ContinuousEntropyResult out;
  out.n_list = ns;
  out.report.theorem = TheoremId::ContinuousEntropy;
  const double w0 = prior_density(prior, theta0);
  const double fisher = bernoulli_fisher(theta0);
  for (long n : ns) {
    const double D = bernoulli_relative_entropy(prior, theta0, n);
    const double hard = ceb_bound(n, w0, fisher);
    out.D.push_back(D);
    out.bound.push_back(hard);
    if (n >= 64) {
      out.report.push("D_" + std::to_string(n), D,
                      "ceb(n/2pi)", hard);
      // asymptotic reference: the equality-form constant plus a margin
      // covering the dropped remainder, shrinking like 1/sqrt(n)
      const double ref = hard - 0.5 + 2.0 / std::sqrt(double(n));
      out.report.push("D_" + std::to_string(n), D, "ceb(n/2pi e) + 2/sqrt(n)",
                      ref);
    }
  }
  // least-squares slope of D_n against ln n
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = double(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const double x = std::log(double(ns[i]));
    sx += x;
    sy += out.D[i];
    sxx += x * x;
    sxy += x * out.D[i];
  }
  const double denom = m * sxx - sx * sx;
  out.slope = denom != 0.0 ? (m * sxy - sx * sy) / denom : 0.0;
  if (ns.size() >= 2) {
    out.report.push("0.45", 0.45, "slope(D_n ~ ln n)", out.slope);
    out.report.push("slope(D_n ~ ln n)", out.slope, "0.55", 0.55);
  }
  out.report.finalize();
  return out;
}

}  // namespace bsp
