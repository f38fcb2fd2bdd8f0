#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qmrdx/network.hpp"
#include "qmrdx/random.hpp"

namespace qmrdx {

/// A synthetic patient with exactly one disease and a fully known finding
/// state vector.
struct SimulatedCase {
  DiseaseId true_disease = 0;
  std::vector<bool> finding_states;
  FindingId initial_positive = 0;

  friend bool operator==(const SimulatedCase&, const SimulatedCase&) = default;
};

/// How the finding the patient opens with is picked among the positives.
enum class InitialFindingRule { Uniform, StrongestEdge };

InitialFindingRule parse_initial_rule(std::string_view name);

inline constexpr int kMaxCaseAttempts = 10000;

/// One noisy-OR draw of every finding given that only `disease` is present.
std::vector<bool> sample_finding_states(const QmrNetwork& net, DiseaseId disease, Rng& rng);

/// Draws the disease from the priors, then redraws the findings until at least
/// one is positive. Throws std::runtime_error after kMaxCaseAttempts draws.
SimulatedCase sample_case(const QmrNetwork& net, Rng& rng,
                          InitialFindingRule rule = InitialFindingRule::Uniform);

/// Case i is drawn from stream_for(seed, i), so cohorts are reproducible and
/// any prefix of a larger cohort is identical.
std::vector<SimulatedCase> sample_cohort(const QmrNetwork& net, std::size_t n, std::uint64_t seed,
                                         InitialFindingRule rule = InitialFindingRule::Uniform);

/// The patient always answers truthfully. Throws std::out_of_range for an
/// unknown finding.
bool patient_answer(const SimulatedCase& c, FindingId f);

/// Dialogue-case layout plus an "all_states" map holding every finding.
std::string cases_to_json(const QmrNetwork& net, const std::vector<SimulatedCase>& cases);
std::vector<SimulatedCase> cases_from_json(const QmrNetwork& net, std::string_view text);

}  // namespace qmrdx
