#pragma once

#include <limits>
#include <vector>

#include "qmrdx/evidence.hpp"
#include "qmrdx/network.hpp"

namespace qmrdx {

/// log P(f+, f-, d^j) with exact zero carried as a flag rather than -inf.
class LogWeight {
 public:
  static LogWeight zero() { return LogWeight(); }
  static LogWeight from_log(double value) { return LogWeight(value); }

  bool is_zero() const noexcept { return zero_; }
  /// -infinity for an exact zero.
  double log() const noexcept { return zero_ ? -std::numeric_limits<double>::infinity() : value_; }
  double prob() const;

 private:
  LogWeight() = default;
  explicit LogWeight(double v) : value_(v), zero_(false) {}
  double value_ = 0.0;
  bool zero_ = true;
};

/// Joint weight of the evidence and the one-hot disease configuration d^j:
/// prior_j * prod_{f+} P(f|d_j) * prod_{f-} (1 - P(f|d_j)).
LogWeight log_joint_weight(const QmrNetwork& net, const Evidence& ev, DiseaseId j);

struct Posterior {
  std::vector<double> probs;  // disease-id order
  /// Every disease had zero joint weight; probs holds the prior instead.
  bool degenerate = false;
};

/// One-disease-per-case posterior, linear in the evidence size.
Posterior posterior(const QmrNetwork& net, const Evidence& ev);

struct RankedDisease {
  DiseaseId disease = 0;
  double prob = 0.0;

  friend bool operator==(const RankedDisease&, const RankedDisease&) = default;
};

/// Highest k entries, descending by probability, ties by ascending id.
/// Throws std::invalid_argument unless 1 <= k <= n.
std::vector<RankedDisease> top_k(const Posterior& post, std::size_t k);

/// Joint prior used by the enumeration reference. IndependentBernoulli treats
/// each prior as an independent P(d_j = 1); OneHotCategorical puts the priors
/// on the single-disease configurations only.
enum class JointPrior { IndependentBernoulli, OneHotCategorical };

inline constexpr std::size_t kMaxEnumerationDiseases = 20;

/// Exact marginals P(d_j = 1 | f+, f-) under the general noisy-OR model, by
/// enumerating all 2^n disease configurations (no leak). Falls back to the
/// marginal priors when the evidence has zero probability. Throws
/// std::invalid_argument for n > kMaxEnumerationDiseases.
std::vector<double> general_noisy_or_posterior(const QmrNetwork& net, const Evidence& ev,
                                               JointPrior prior = JointPrior::IndependentBernoulli);

}  // namespace qmrdx
