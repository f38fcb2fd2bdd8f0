#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "qmrdx/evidence.hpp"
#include "qmrdx/network.hpp"

namespace qmrdx {

/// Divergence used to score a question. Both are summed over diseases, each
/// disease treated as a Bernoulli variable, and measured in nats.
///   KL: D(P(d_j | ev, f=y) || P(d_j | ev))
///   IG: -H(P(d_j | ev, f=y)) + H(P(d_j | ev))
/// In expectation over the answer both equal sum_j I(d_j; f | ev).
enum class UtilityKind { KL, IG };

UtilityKind parse_utility_kind(std::string_view name);
std::string_view to_string(UtilityKind kind);

struct CandidateScore {
  FindingId finding = 0;
  double utility = 0.0;
};

struct LookaheadConfig {
  int depth = 1;  // depth 1 and 2 are the tuned cases; deeper is exponential
  UtilityKind kind = UtilityKind::KL;
};

/// P(f = 1 | ev) = sum_j P(d_j | ev) P(f | d_j). Throws std::invalid_argument
/// if f is already observed.
double outcome_probability(const QmrNetwork& net, const Evidence& ev, FindingId f);

/// Expected divergence between the disease beliefs after asking f and the
/// current beliefs. Zero when the evidence is degenerate (no answer can move
/// the prior fallback). Throws std::invalid_argument if f is observed.
double utility(const QmrNetwork& net, const Evidence& ev, FindingId f, UtilityKind kind);

/// Findings of every disease that can cause some positive finding, minus the
/// observed ones; all unobserved findings when there is no positive evidence.
/// Sorted ascending.
std::vector<FindingId> candidate_findings(const QmrNetwork& net, const Evidence& ev);

/// Expectimax value of asking f with `depth` questions of lookahead. Every
/// leaf is scored by its divergence from the beliefs at `ev` (the root), the
/// intermediate levels maximise over follow-up questions. depth 1 equals
/// utility(). Throws std::invalid_argument for depth < 1 or observed f.
double lookahead_value(const QmrNetwork& net, const Evidence& ev, FindingId f, int depth,
                       UtilityKind kind);

/// Best question among candidate_findings(ev) not listed in `excluded`
/// (sorted), scored by lookahead_value at cfg.depth. Ties go to the lowest
/// finding id. nullopt when no candidate remains.
std::optional<CandidateScore> select_next(const QmrNetwork& net, const Evidence& ev,
                                          const LookaheadConfig& cfg,
                                          std::span<const FindingId> excluded = {});

/// Scores of every candidate, ascending by finding id.
std::vector<CandidateScore> score_candidates(const QmrNetwork& net, const Evidence& ev,
                                             const LookaheadConfig& cfg,
                                             std::span<const FindingId> excluded = {});

}  // namespace qmrdx
