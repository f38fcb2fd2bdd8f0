#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qmrdx/evidence.hpp"
#include "qmrdx/inference.hpp"
#include "qmrdx/inquiry.hpp"
#include "qmrdx/network.hpp"

namespace qmrdx {

struct SessionConfig {
  int max_steps = 20;
  double utility_threshold = 0.01;  // nats
  LookaheadConfig lookahead;
  std::size_t top_k = 5;

  /// Throws std::invalid_argument on negative budget/threshold or bad depth.
  void validate() const;
};

enum class StopReason { Budget, Threshold, Exhausted, Manual };
enum class SessionStatus { Active, Diagnosed };

std::string_view to_string(StopReason reason);
std::optional<StopReason> parse_stop_reason(std::string_view name);

struct Suggest {
  FindingId finding = 0;
  double utility = 0.0;
};

struct Diagnose {
  StopReason reason = StopReason::Manual;
};

using Decision = std::variant<Suggest, Diagnose>;

struct Diagnosis {
  std::vector<RankedDisease> ranking;
  Posterior posterior;
  StopReason reason = StopReason::Manual;
};

class SessionError : public std::runtime_error {
 public:
  enum class Kind { NotActive, AlreadyObserved, UnknownFinding, BudgetExhausted, InvalidEvidence };
  SessionError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// One transcript line. `value` is empty for "patient does not know" answers
/// and for overrides that clear a finding.
struct TranscriptEvent {
  enum class Type { Suggest, Answer, Override, Final };
  Type type = Type::Suggest;
  int step = 0;
  std::optional<FindingId> finding;
  std::optional<bool> value;
  double utility = 0.0;
  std::optional<StopReason> reason;
  std::vector<RankedDisease> ranking;
  bool degenerate = false;

  friend bool operator==(const TranscriptEvent&, const TranscriptEvent&) = default;
};

/// One diagnosis episode: suggest, ingest answers, stop on budget or
/// threshold, accept manual overrides, finalize. Single writer; the network
/// must outlive the session.
class Session {
 public:
  /// Initial evidence is recorded in the transcript as step-0 overrides.
  /// Throws SessionError(UnknownFinding) for ids outside the network.
  Session(const QmrNetwork& net, SessionConfig cfg, const Evidence& initial = {});

  const QmrNetwork& network() const noexcept { return *net_; }
  const SessionConfig& config() const noexcept { return cfg_; }
  const Evidence& evidence() const noexcept { return evidence_; }
  /// Findings asked but answered "unknown"; never suggested again.
  const std::vector<FindingId>& skipped() const noexcept { return skipped_; }
  int step() const noexcept { return step_; }
  SessionStatus status() const noexcept { return status_; }
  const std::optional<Suggest>& last_suggestion() const noexcept { return last_suggestion_; }
  const std::optional<Diagnosis>& diagnosis() const noexcept { return diagnosis_; }
  const std::vector<TranscriptEvent>& transcript() const noexcept { return transcript_; }

  Posterior current_posterior() const { return posterior(*net_, evidence_); }

  /// Next system action. Cached until the evidence changes.
  Decision next_suggestion();

  /// Records the patient's answer to any unobserved finding (suggested or
  /// not) and consumes one step. nullopt means "unknown": the step is spent
  /// and the finding is not asked again.
  void answer(FindingId f, std::optional<bool> value);

  /// Sets, flips or clears a finding without consuming a step.
  void override_finding(FindingId f, std::optional<bool> value);

  /// Ranks diseases by the current posterior and closes the session. The
  /// stop reason is that of a pending Diagnose decision, otherwise Manual.
  const Diagnosis& finalize();

 private:
  void require_active() const;
  void require_finding(FindingId f) const;
  void invalidate() { pending_.reset(); }

  const QmrNetwork* net_;
  SessionConfig cfg_;
  Evidence evidence_;
  std::vector<FindingId> skipped_;
  int step_ = 0;
  SessionStatus status_ = SessionStatus::Active;
  std::optional<Decision> pending_;
  std::optional<Suggest> last_suggestion_;
  std::optional<Diagnosis> diagnosis_;
  std::vector<TranscriptEvent> transcript_;
};

/// Resolves "+Name"/"-Name" style lists against the network.
/// Throws SessionError(UnknownFinding / InvalidEvidence).
Evidence evidence_from_names(const QmrNetwork& net, const std::vector<std::string>& positive,
                             const std::vector<std::string>& negative);

/// JSON lines, one object per event, `{"t": "suggest"|"answer"|"override"|"final", ...}`.
std::string to_jsonl(const QmrNetwork& net, const std::vector<TranscriptEvent>& events);
std::string to_json_line(const QmrNetwork& net, const TranscriptEvent& event);
std::vector<TranscriptEvent> parse_transcript(const QmrNetwork& net, std::string_view jsonl);

/// Re-drives a fresh session through `events`, checking that every recorded
/// suggestion and the final ranking are reproduced exactly. Throws
/// std::runtime_error on the first mismatch.
Session replay_transcript(const QmrNetwork& net, const SessionConfig& cfg,
                          const std::vector<TranscriptEvent>& events);

}  // namespace qmrdx
