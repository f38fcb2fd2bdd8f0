#include "qmrdx/evidence.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace qmrdx {

namespace {

bool contains(const std::vector<FindingId>& v, FindingId f) {
  return std::binary_search(v.begin(), v.end(), f);
}

void insert_sorted(std::vector<FindingId>& v, FindingId f) {
  v.insert(std::lower_bound(v.begin(), v.end(), f), f);
}

void erase_sorted(std::vector<FindingId>& v, FindingId f) {
  const auto it = std::lower_bound(v.begin(), v.end(), f);
  if (it != v.end() && *it == f) v.erase(it);
}

}  // namespace

Evidence Evidence::from(std::vector<FindingId> positive, std::vector<FindingId> negative) {
  Evidence ev;
  for (auto f : positive) {
    if (!contains(ev.positive_, f)) insert_sorted(ev.positive_, f);
  }
  for (auto f : negative) {
    if (contains(ev.positive_, f)) {
      throw std::invalid_argument("finding " + std::to_string(f) +
                                  " is both positive and negative");
    }
    if (!contains(ev.negative_, f)) insert_sorted(ev.negative_, f);
  }
  return ev;
}

std::optional<bool> Evidence::state(FindingId f) const {
  if (contains(positive_, f)) return true;
  if (contains(negative_, f)) return false;
  return std::nullopt;
}

void Evidence::add(FindingId f, bool present) {
  if (observed(f)) throw std::invalid_argument("finding " + std::to_string(f) + " already observed");
  insert_sorted(present ? positive_ : negative_, f);
}

void Evidence::set(FindingId f, std::optional<bool> present) {
  erase_sorted(positive_, f);
  erase_sorted(negative_, f);
  if (present) insert_sorted(*present ? positive_ : negative_, f);
}

Evidence Evidence::with(FindingId f, bool present) const {
  Evidence out = *this;
  out.add(f, present);
  return out;
}

void Evidence::check_ids(const QmrNetwork& net) const {
  for (const auto* set : {&positive_, &negative_}) {
    for (auto f : *set) {
      if (f >= net.num_findings()) {
        throw std::out_of_range("finding id " + std::to_string(f) + " is not in the network");
      }
    }
  }
}

}  // namespace qmrdx
