// Reference implementations for tests. These avoid the library's indexes,
// log-space arithmetic and pruning: plain products over a dense matrix.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qmrdx/evidence.hpp"
#include "qmrdx/network.hpp"

namespace oracle {

using qmrdx::DiseaseId;
using qmrdx::Evidence;
using qmrdx::FindingId;
using qmrdx::QmrNetwork;

struct Dense {
  std::vector<double> prior;
  std::vector<std::vector<double>> p;  // p[j][i] = P(f_i = 1 | only d_j), 0 without an edge
  std::size_t n() const { return prior.size(); }
  std::size_t m() const { return p.empty() ? 0 : p[0].size(); }
};

inline Dense dense(const QmrNetwork& net) {
  Dense d;
  const auto spec = net.to_spec();
  for (const auto& dis : spec.diseases) d.prior.push_back(dis.prior);
  d.p.assign(spec.diseases.size(), std::vector<double>(spec.findings.size(), 0.0));
  for (const auto& e : spec.edges) d.p[e.disease][e.finding] = e.prob;
  return d;
}

// state[i]: -1 unobserved, 0 negative, 1 positive
using State = std::vector<int>;

inline State state_of(const Dense& d, const Evidence& ev) {
  State s(d.m(), -1);
  for (auto f : ev.positive()) s[f] = 1;
  for (auto f : ev.negative()) s[f] = 0;
  return s;
}

// Joint weights P(evidence, d^j) evaluated directly (no logs).
inline std::vector<double> weights(const Dense& d, const State& s) {
  std::vector<double> w(d.n());
  for (std::size_t j = 0; j < d.n(); ++j) {
    double x = d.prior[j];
    for (std::size_t i = 0; i < d.m(); ++i) {
      if (s[i] == 1) x *= d.p[j][i];
      if (s[i] == 0) x *= 1.0 - d.p[j][i];
    }
    w[j] = x;
  }
  return w;
}

inline double total(const std::vector<double>& w) {
  double t = 0.0;
  for (double x : w) t += x;
  return t;
}

// Direct Eq. 7-9: normalized joint weights; priors if everything is zero.
inline std::vector<double> posterior(const Dense& d, const State& s) {
  auto w = weights(d, s);
  const double t = total(w);
  if (t == 0.0) return d.prior;
  for (auto& x : w) x /= t;
  return w;
}

// Enumerates all 2^n configurations. one_hot: categorical prior on
// single-disease configurations; otherwise independent Bernoulli priors.
inline std::vector<double> enumeration_posterior(const Dense& d, const State& s, bool one_hot) {
  const std::size_t n = d.n();
  std::vector<double> marg(n, 0.0);
  double z = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double prior = 1.0;
    if (one_hot) {
      if (std::popcount(mask) != 1) continue;
      prior = d.prior[std::countr_zero(mask)];
    } else {
      for (std::size_t j = 0; j < n; ++j) prior *= (mask >> j & 1) ? d.prior[j] : 1.0 - d.prior[j];
    }
    double like = 1.0;
    for (std::size_t i = 0; i < d.m() && like > 0.0; ++i) {
      if (s[i] < 0) continue;
      double off = 1.0;  // P(f_i = 0 | config), noisy-OR without leak
      for (std::size_t j = 0; j < n; ++j) {
        if (mask >> j & 1) off *= 1.0 - d.p[j][i];
      }
      like *= s[i] == 1 ? 1.0 - off : off;
    }
    const double w = prior * like;
    z += w;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask >> j & 1) marg[j] += w;
    }
  }
  if (z == 0.0) return d.prior;
  for (auto& x : marg) x /= z;
  return marg;
}

// P(f = 1 | evidence) as a ratio of evidence probabilities.
inline double outcome_prob(const Dense& d, const State& s, FindingId f) {
  const double base = total(weights(d, s));
  if (base == 0.0) return 0.0;
  State t = s;
  t[f] = 1;
  return total(weights(d, t)) / base;
}

inline double xlogy(double x, double y) { return x == 0.0 ? 0.0 : x * std::log(y); }

// sum_j Bernoulli KL(q_j || r_j)
inline double kl_sum(const std::vector<double>& q, const std::vector<double>& r) {
  double s = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    if (q[j] > 0.0) s += q[j] * std::log(q[j] / r[j]);
    if (q[j] < 1.0) s += (1.0 - q[j]) * std::log((1.0 - q[j]) / (1.0 - r[j]));
  }
  return s;
}

// sum_j Bernoulli entropy
inline double entropy_sum(const std::vector<double>& q) {
  double h = 0.0;
  for (double x : q) h -= xlogy(x, x) + xlogy(1.0 - x, 1.0 - x);
  return h;
}

// Eq. 10 with the standard KL: sum_y P(y) sum_j KL(P(d_j | ev, f=y) || P(d_j | ev)).
inline double utility_kl(const Dense& d, const State& s, FindingId f) {
  if (total(weights(d, s)) == 0.0) return 0.0;
  const auto root = posterior(d, s);
  const double p1 = outcome_prob(d, s, f);
  double u = 0.0;
  for (int y = 0; y < 2; ++y) {
    const double py = y ? p1 : 1.0 - p1;
    if (py <= 0.0) continue;
    State t = s;
    t[f] = y;
    u += py * kl_sum(posterior(d, t), root);
  }
  return u;
}

// Mutual information form: H(prior beliefs) - E_y H(posterior beliefs).
inline double utility_ig(const Dense& d, const State& s, FindingId f) {
  if (total(weights(d, s)) == 0.0) return 0.0;
  const auto root = posterior(d, s);
  const double p1 = outcome_prob(d, s, f);
  double u = entropy_sum(root);
  for (int y = 0; y < 2; ++y) {
    const double py = y ? p1 : 1.0 - p1;
    if (py <= 0.0) continue;
    State t = s;
    t[f] = y;
    u -= py * entropy_sum(posterior(d, t));
  }
  return u;
}

// Two-question expectimax over every answer path, every leaf scored against
// the root beliefs; the inner maximum runs over ALL unobserved findings.
inline double two_step_value(const Dense& d, const State& s, FindingId f) {
  if (total(weights(d, s)) == 0.0) return 0.0;
  const auto root = posterior(d, s);
  const double p1 = outcome_prob(d, s, f);
  double v = 0.0;
  for (int y1 = 0; y1 < 2; ++y1) {
    const double py1 = y1 ? p1 : 1.0 - p1;
    if (py1 <= 0.0) continue;
    State t = s;
    t[f] = y1;
    double best = kl_sum(posterior(d, t), root);  // value when nothing is left to ask
    for (FindingId g = 0; g < d.m(); ++g) {
      if (t[g] >= 0) continue;
      const double q1 = outcome_prob(d, t, g);
      double val = 0.0;
      for (int y2 = 0; y2 < 2; ++y2) {
        const double py2 = y2 ? q1 : 1.0 - q1;
        if (py2 <= 0.0) continue;
        State u = t;
        u[g] = y2;
        val += py2 * kl_sum(posterior(d, u), root);
      }
      best = std::max(best, val);
    }
    v += py1 * best;
  }
  return v;
}

struct RandomNetParams {
  std::size_t n_lo = 2, n_hi = 8;
  std::size_t m_lo = 2, m_hi = 10;
  double density = 0.4;
  bool zero_priors = true;   // occasionally a disease with prior 0
  bool unit_edges = true;    // occasionally an edge with prob 1
};

// Random network built independently of the library's generator.
inline QmrNetwork random_network(std::mt19937& rng, const RandomNetParams& rp = {}) {
  std::uniform_int_distribution<std::size_t> nd(rp.n_lo, rp.n_hi), md(rp.m_lo, rp.m_hi);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto n = nd(rng), m = md(rng);
  qmrdx::NetworkSpec spec;
  double sum = 0.0;
  std::vector<double> w(n);
  for (auto& x : w) {
    x = (rp.zero_priors && u01(rng) < 0.1) ? 0.0 : 0.05 + u01(rng);
    sum += x;
  }
  if (sum == 0.0) {
    w[0] = 1.0;
    sum = 1.0;
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double p = w[j] / sum;
    if (j + 1 == n) p = std::max(0.0, 1.0 - acc);
    acc += p;
    spec.diseases.push_back({"d" + std::to_string(j), p});
  }
  for (std::size_t i = 0; i < m; ++i) spec.findings.push_back({"f" + std::to_string(i)});
  for (std::size_t j = 0; j < n; ++j) {
    bool any = false;
    for (std::size_t i = 0; i < m; ++i) {
      if (u01(rng) < rp.density) {
        double p = 0.02 + 0.96 * u01(rng);
        if (rp.unit_edges && u01(rng) < 0.05) p = 1.0;
        spec.edges.push_back({DiseaseId(j), FindingId(i), p});
        any = true;
      }
    }
    if (!any) spec.edges.push_back({DiseaseId(j), FindingId(j % m), 0.5});
  }
  return QmrNetwork(std::move(spec));
}

// Evidence drawn from a simulated patient (so usually consistent), with a
// random share of findings observed; sometimes a random, possibly
// contradictory, assignment instead.
inline Evidence random_evidence(std::mt19937& rng, const QmrNetwork& net, double observe = 0.3) {
  const auto d = dense(net);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<FindingId> pos, neg;
  if (u01(rng) < 0.8) {
    std::discrete_distribution<std::size_t> pick(d.prior.begin(), d.prior.end());
    const auto j = pick(rng);
    std::vector<FindingId> positives;
    for (FindingId i = 0; i < d.m(); ++i) {
      const bool on = u01(rng) < d.p[j][i];
      if (on) positives.push_back(i);
      if (u01(rng) < observe) (on ? pos : neg).push_back(i);
    }
    if (pos.empty() && !positives.empty() && u01(rng) < 0.7) {
      const auto f = positives[rng() % positives.size()];
      std::erase(neg, f);
      pos.push_back(f);
    }
  } else {
    for (FindingId i = 0; i < d.m(); ++i) {
      if (u01(rng) < observe) (u01(rng) < 0.5 ? pos : neg).push_back(i);
    }
  }
  return Evidence::from(pos, neg);
}

}  // namespace oracle
