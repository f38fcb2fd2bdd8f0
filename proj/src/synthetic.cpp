#include "qmrdx/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "qmrdx/random.hpp"

namespace qmrdx {

namespace {

// Knuth's product method in log space; adequate for the means used here.
std::size_t poisson(Rng& rng, double mean) {
  const double limit = -mean;
  double acc = 0.0;
  std::size_t k = 0;
  while (true) {
    acc += std::log(1.0 - uniform01(rng));
    if (acc < limit) return k;
    ++k;
  }
}

std::string padded(const char* prefix, std::size_t i, std::size_t n) {
  auto digits = std::to_string(n > 0 ? n - 1 : 0).size();
  auto s = std::to_string(i);
  return prefix + std::string(digits - std::min(digits, s.size()), '0') + s;
}

}  // namespace

QmrNetwork generate_synthetic_network(const SyntheticParams& p) {
  if (p.n_diseases < 1 || p.n_findings < 1) {
    throw std::invalid_argument("synthetic network needs at least one disease and one finding");
  }
  if (!(p.prob_lo > 0.0 && p.prob_lo <= p.prob_hi && p.prob_hi <= 1.0)) {
    throw std::invalid_argument("edge probability range must satisfy 0 < lo <= hi <= 1");
  }
  if (!(p.mean_findings_per_disease > 0.0) ||
      p.mean_findings_per_disease > double(p.n_findings)) {
    throw std::invalid_argument("mean findings per disease must be in (0, n_findings]");
  }

  Rng rng(splitmix64(p.seed));
  NetworkSpec spec;
  const double prior = 1.0 / double(p.n_diseases);
  for (std::size_t j = 0; j < p.n_diseases; ++j) {
    spec.diseases.push_back({padded("disease_", j, p.n_diseases), prior});
  }
  for (std::size_t i = 0; i < p.n_findings; ++i) {
    spec.findings.push_back({padded("finding_", i, p.n_findings)});
  }

  std::vector<FindingId> pool(p.n_findings);
  for (std::size_t j = 0; j < p.n_diseases; ++j) {
    const auto k = std::clamp<std::size_t>(poisson(rng, p.mean_findings_per_disease), 1,
                                           p.n_findings);
    std::iota(pool.begin(), pool.end(), FindingId{0});
    // partial Fisher-Yates: the first k slots become the sample
    for (std::size_t s = 0; s < k; ++s) {
      const auto r = s + uniform_index(rng, p.n_findings - s);
      std::swap(pool[s], pool[r]);
    }
    std::sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t s = 0; s < k; ++s) {
      const double prob = p.prob_lo + (p.prob_hi - p.prob_lo) * uniform01(rng);
      spec.edges.push_back({static_cast<DiseaseId>(j), pool[s], prob});
    }
  }
  return QmrNetwork(std::move(spec));
}

}  // namespace qmrdx
