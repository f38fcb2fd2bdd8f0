#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace qmrdx {

using DiseaseId = std::uint32_t;
using FindingId = std::uint32_t;

struct Disease {
  std::string name;
  double prior = 0.0;  // marginal P(d = 1)
};

struct Finding {
  std::string name;
};

/// Noisy-OR activation link: P(finding = 1 | only this disease present).
struct Edge {
  DiseaseId disease = 0;
  FindingId finding = 0;
  double prob = 0.0;
};

/// One entry of an adjacency list. `id` is the neighbour on the other side.
struct Link {
  std::uint32_t id = 0;
  double prob = 0.0;

  friend bool operator==(const Link&, const Link&) = default;
};

/// Unvalidated network contents as read from a file or assembled in code.
struct NetworkSpec {
  std::vector<Disease> diseases;
  std::vector<Finding> findings;
  std::vector<Edge> edges;
};

/// Raised when network contents violate the model invariants. Carries every
/// violation found, not just the first.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

inline constexpr double kPriorSumTolerance = 1e-9;

/// Checks all invariants of a network; returns an empty list when valid.
std::vector<std::string> validate(const NetworkSpec& spec);

/// Immutable two-level QMR belief network with finding->disease and
/// disease->finding adjacency indexes. Safe to share between threads.
class QmrNetwork {
 public:
  /// Throws ValidationError if `spec` is invalid.
  explicit QmrNetwork(NetworkSpec spec);

  std::size_t num_diseases() const noexcept { return diseases_.size(); }
  std::size_t num_findings() const noexcept { return findings_.size(); }

  const std::vector<Disease>& diseases() const noexcept { return diseases_; }
  const std::vector<Finding>& findings() const noexcept { return findings_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  const Disease& disease(DiseaseId id) const { return diseases_.at(id); }
  const Finding& finding(FindingId id) const { return findings_.at(id); }

  /// Diseases that can cause `f`, ascending by disease id.
  std::span<const Link> diseases_of(FindingId f) const { return index_fd_.at(f); }
  /// Findings caused by `d`, ascending by finding id.
  std::span<const Link> findings_of(DiseaseId d) const { return index_df_.at(d); }

  /// Edge probability, or 0 when there is no edge.
  double edge_prob(DiseaseId d, FindingId f) const;

  std::optional<DiseaseId> find_disease(std::string_view name) const;
  std::optional<FindingId> find_finding(std::string_view name) const;

  /// Like find_finding but throws std::out_of_range naming the missing finding.
  FindingId finding_id(std::string_view name) const;
  DiseaseId disease_id(std::string_view name) const;

  std::vector<double> priors() const;

  NetworkSpec to_spec() const { return {diseases_, findings_, edges_}; }

 private:
  std::vector<Disease> diseases_;
  std::vector<Finding> findings_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Link>> index_fd_;
  std::vector<std::vector<Link>> index_df_;
  std::unordered_map<std::string, DiseaseId> disease_by_name_;
  std::unordered_map<std::string, FindingId> finding_by_name_;
};

/// Degree statistics in the form used to characterise dataset difficulty.
struct NetworkStats {
  std::size_t diseases = 0;
  std::size_t findings = 0;
  std::size_t edges = 0;
  std::size_t connected_findings = 0;
  double findings_per_disease = 0.0;
  /// Averaged over findings with at least one parent disease.
  double diseases_per_finding = 0.0;
};

NetworkStats network_stats(const QmrNetwork& net);

/// Trims surrounding whitespace; names are matched exactly after trimming.
std::string trim_name(std::string_view name);

}  // namespace qmrdx
