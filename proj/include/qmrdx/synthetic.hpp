#pragma once

#include <cstdint>

#include "qmrdx/network.hpp"

namespace qmrdx {

struct SyntheticParams {
  std::size_t n_diseases = 0;
  std::size_t n_findings = 0;
  double mean_findings_per_disease = 0.0;
  double prob_lo = 0.1;
  double prob_hi = 0.9;
  std::uint64_t seed = 0;
};

/// Random QMR network with uniform priors. Each disease links to
/// max(1, Poisson(mean)) distinct findings (capped at n_findings) with edge
/// probabilities uniform in [prob_lo, prob_hi]. Deterministic for a seed.
QmrNetwork generate_synthetic_network(const SyntheticParams& params);

}  // namespace qmrdx
