#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qmrdx/network.hpp"
#include "qmrdx/network_io.hpp"
#include "qmrdx/session.hpp"
#include "qmrdx/simulator.hpp"

namespace qmrdx {

/// How a dialogue case answers a question about a finding it never recorded.
enum class UnrecordedMode { Absent, Skip };

UnrecordedMode parse_unrecorded_mode(std::string_view name);
std::string_view to_string(UnrecordedMode mode);

struct EpisodeResult {
  DiseaseId true_disease = 0;
  std::vector<DiseaseId> ranked;  // at least the top 5 (or all diseases)
  int steps = 0;
  bool degenerate = false;
  StopReason reason = StopReason::Manual;
  /// False when the case names a disease the network does not contain;
  /// such episodes always count as misses.
  bool known_disease = true;

  bool hit(std::size_t k) const;
};

EpisodeResult run_episode(const QmrNetwork& net, const SessionConfig& cfg,
                          const SimulatedCase& c);
EpisodeResult run_episode(const QmrNetwork& net, const SessionConfig& cfg, const DialogueCase& c,
                          UnrecordedMode mode = UnrecordedMode::Absent);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

/// 95% Wilson score interval for `hits` successes out of `n`.
Interval wilson_interval(std::size_t hits, std::size_t n);

struct EvalReport {
  double top1 = 0.0;
  double top3 = 0.0;
  double top5 = 0.0;
  double avg_steps = 0.0;
  std::size_t n_cases = 0;
  std::size_t hits1 = 0;
  std::size_t hits3 = 0;
  std::size_t hits5 = 0;
  std::size_t total_steps = 0;
  Interval ci1;
  Interval ci3;
  Interval ci5;
  std::size_t degenerate = 0;
  std::size_t unknown_disease = 0;

  double threshold = 0.0;
  int max_steps = 0;
  int depth = 1;
  UtilityKind kind = UtilityKind::KL;
  std::uint64_t seed = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Aggregates integer counts, so the result does not depend on episode order.
EvalReport summarize(const std::vector<EpisodeResult>& episodes, const SessionConfig& cfg,
                     std::uint64_t seed);

/// Runs every case, spreading episodes over `workers` threads. Output order
/// and content are independent of the worker count.
std::vector<EpisodeResult> run_cases(const QmrNetwork& net, const SessionConfig& cfg,
                                     const std::vector<SimulatedCase>& cases,
                                     std::size_t workers = 1);

EvalReport evaluate(const QmrNetwork& net, const SessionConfig& cfg, std::size_t n_cases,
                    std::uint64_t seed, std::size_t workers = 1,
                    InitialFindingRule rule = InitialFindingRule::Uniform);

/// Inference with every finding of the case observed; steps are 0.
EpisodeResult cheater_episode(const QmrNetwork& net, const SimulatedCase& c);
std::vector<EpisodeResult> cheater_cases(const QmrNetwork& net,
                                         const std::vector<SimulatedCase>& cases,
                                         std::size_t workers = 1);
EvalReport cheater_evaluate(const QmrNetwork& net, std::size_t n_cases, std::uint64_t seed,
                            std::size_t workers = 1,
                            InitialFindingRule rule = InitialFindingRule::Uniform);

/// One report per (threshold, max_steps) pair, threshold-major, all on the
/// same cohort. Each case is driven once to the largest budget; every cell is
/// read off that trajectory, which is exactly what a separate run of the
/// cell's configuration would produce.
std::vector<EvalReport> grid_search(const QmrNetwork& net, const std::vector<double>& thresholds,
                                    const std::vector<int>& max_steps_list,
                                    const LookaheadConfig& lookahead, std::size_t n_cases,
                                    std::uint64_t seed, std::size_t workers = 1,
                                    InitialFindingRule rule = InitialFindingRule::Uniform);

/// Same as grid_search but also returns every cell's episodes (cell-major).
std::vector<std::vector<EpisodeResult>> grid_episodes(
    const QmrNetwork& net, const std::vector<double>& thresholds,
    const std::vector<int>& max_steps_list, const LookaheadConfig& lookahead,
    const std::vector<SimulatedCase>& cases, std::size_t workers = 1);

EvalReport evaluate_dialogue(const QmrNetwork& net, const std::vector<DialogueCase>& cases,
                             const SessionConfig& cfg,
                             UnrecordedMode mode = UnrecordedMode::Absent,
                             std::size_t workers = 1);

/// Standard error of the mean paired difference of top-k hit indicators.
double paired_standard_error(const std::vector<EpisodeResult>& a,
                             const std::vector<EpisodeResult>& b, std::size_t k);

/// `threshold,max_steps,depth,utility,top1,top3,top5,avg_steps,n,seed` rows.
std::string reports_to_csv(const std::vector<EvalReport>& reports);

/// Human-readable table: one row per max_steps, one column group per
/// threshold, accuracies in percent.
std::string reports_to_table(const std::vector<EvalReport>& reports);

/// Violations of report invariants: nested top-k ordering, and for grids
/// avg_steps non-increasing in threshold and non-decreasing in max_steps.
std::vector<std::string> check_reports(const std::vector<EvalReport>& reports);

}  // namespace qmrdx
