#pragma once

#include <optional>
#include <vector>

#include "qmrdx/network.hpp"

namespace qmrdx {

/// Disjoint sets of findings known present (f+) and absent (f-). Both sets
/// are kept sorted so evidence built in any order compares and evaluates
/// identically.
class Evidence {
 public:
  Evidence() = default;

  /// Throws std::invalid_argument if a finding appears in both lists.
  static Evidence from(std::vector<FindingId> positive, std::vector<FindingId> negative);

  const std::vector<FindingId>& positive() const noexcept { return positive_; }
  const std::vector<FindingId>& negative() const noexcept { return negative_; }

  bool empty() const noexcept { return positive_.empty() && negative_.empty(); }
  std::size_t size() const noexcept { return positive_.size() + negative_.size(); }

  bool observed(FindingId f) const { return state(f).has_value(); }
  std::optional<bool> state(FindingId f) const;

  /// Adds an observation. Throws std::invalid_argument if f is already observed.
  void add(FindingId f, bool present);
  /// Sets, flips or (with nullopt) clears the state of f.
  void set(FindingId f, std::optional<bool> present);

  /// Copy with one more observation; f must be unobserved.
  Evidence with(FindingId f, bool present) const;

  /// Throws std::out_of_range if any id is not a finding of `net`.
  void check_ids(const QmrNetwork& net) const;

  friend bool operator==(const Evidence&, const Evidence&) = default;

 private:
  std::vector<FindingId> positive_;
  std::vector<FindingId> negative_;
};

}  // namespace qmrdx
