#include "qmrdx/inference.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qmrdx {

double LogWeight::prob() const { return zero_ ? 0.0 : std::exp(value_); }

LogWeight log_joint_weight(const QmrNetwork& net, const Evidence& ev, DiseaseId j) {
  ev.check_ids(net);
  const double prior = net.disease(j).prior;
  if (prior <= 0.0) return LogWeight::zero();
  double acc = std::log(prior);
  for (auto f : ev.positive()) {
    const double p = net.edge_prob(j, f);
    if (p <= 0.0) return LogWeight::zero();
    acc += std::log(p);
  }
  for (auto f : ev.negative()) {
    const double p = net.edge_prob(j, f);
    if (p >= 1.0) return LogWeight::zero();
    if (p > 0.0) acc += std::log1p(-p);
  }
  return LogWeight::from_log(acc);
}

Posterior posterior(const QmrNetwork& net, const Evidence& ev) {
  ev.check_ids(net);
  const auto n = net.num_diseases();

  // Accumulated in the same order as log_joint_weight so both agree bitwise.
  std::vector<double> logw(n);
  std::vector<char> alive(n);
  for (DiseaseId j = 0; j < n; ++j) {
    const double prior = net.disease(j).prior;
    alive[j] = prior > 0.0;
    logw[j] = alive[j] ? std::log(prior) : 0.0;
  }

  std::vector<std::uint32_t> hits(n, 0);
  for (auto f : ev.positive()) {
    for (const auto& link : net.diseases_of(f)) {
      logw[link.id] += std::log(link.prob);
      ++hits[link.id];
    }
  }
  const auto n_pos = ev.positive().size();
  for (DiseaseId j = 0; j < n; ++j) {
    if (hits[j] != n_pos) alive[j] = 0;
  }
  for (auto f : ev.negative()) {
    for (const auto& link : net.diseases_of(f)) {
      if (link.prob >= 1.0) {
        alive[link.id] = 0;
      } else {
        logw[link.id] += std::log1p(-link.prob);
      }
    }
  }

  double max_log = -std::numeric_limits<double>::infinity();
  for (DiseaseId j = 0; j < n; ++j) {
    if (alive[j]) max_log = std::max(max_log, logw[j]);
  }

  Posterior out;
  out.probs.assign(n, 0.0);
  if (max_log == -std::numeric_limits<double>::infinity()) {
    out.probs = net.priors();
    out.degenerate = true;
    return out;
  }
  double total = 0.0;
  for (DiseaseId j = 0; j < n; ++j) {
    if (alive[j]) {
      out.probs[j] = std::exp(logw[j] - max_log);
      total += out.probs[j];
    }
  }
  for (auto& p : out.probs) p /= total;
  return out;
}

std::vector<RankedDisease> top_k(const Posterior& post, std::size_t k) {
  const auto n = post.probs.size();
  if (k < 1 || k > n) {
    throw std::invalid_argument("top_k: k=" + std::to_string(k) + " outside [1, " +
                                std::to_string(n) + "]");
  }
  std::vector<RankedDisease> all(n);
  for (DiseaseId j = 0; j < n; ++j) all[j] = {j, post.probs[j]};
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    [](const RankedDisease& a, const RankedDisease& b) {
                      if (a.prob != b.prob) return a.prob > b.prob;
                      return a.disease < b.disease;
                    });
  all.resize(k);
  return all;
}

std::vector<double> general_noisy_or_posterior(const QmrNetwork& net, const Evidence& ev,
                                               JointPrior prior) {
  ev.check_ids(net);
  const auto n = net.num_diseases();
  if (n > kMaxEnumerationDiseases) {
    throw std::invalid_argument("enumeration limited to " +
                                std::to_string(kMaxEnumerationDiseases) + " diseases, network has " +
                                std::to_string(n));
  }
  const auto priors = net.priors();
  std::vector<double> marginal(n, 0.0);
  double total = 0.0;

  const std::uint64_t configs = std::uint64_t{1} << n;
  for (std::uint64_t mask = 0; mask < configs; ++mask) {
    double w = 1.0;
    if (prior == JointPrior::OneHotCategorical) {
      if (std::popcount(mask) != 1) continue;
      w = priors[static_cast<std::size_t>(std::countr_zero(mask))];
    } else {
      for (std::size_t j = 0; j < n; ++j) w *= (mask >> j & 1) ? priors[j] : 1.0 - priors[j];
    }
    // P(f = 0 | d) = prod over present parents of (1 - p)
    auto p_absent = [&](FindingId f) {
      double q = 1.0;
      for (const auto& link : net.diseases_of(f)) {
        if (mask >> link.id & 1) q *= 1.0 - link.prob;
      }
      return q;
    };
    for (auto f : ev.positive()) w *= 1.0 - p_absent(f);
    for (auto f : ev.negative()) w *= p_absent(f);
    if (w == 0.0) continue;
    total += w;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask >> j & 1) marginal[j] += w;
    }
  }
  if (total == 0.0) return priors;
  for (auto& m : marginal) m /= total;
  return marginal;
}

}  // namespace qmrdx
