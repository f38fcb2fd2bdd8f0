#include "qmrdx/inquiry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "qmrdx/inference.hpp"

namespace qmrdx {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

// x log(x / y) with 0 log(0/y) = 0.
double kl_term(double x, double y) { return x > 0.0 ? x * std::log(x / y) : 0.0; }

// Divergence between Bernoulli(q) and Bernoulli(r). The complements qc, rc
// are passed in rather than formed as 1 - q so that beliefs within rounding
// of 1 keep their exact complement mass.
double bernoulli_divergence(double q, double qc, double r, double rc, UtilityKind kind) {
  if (kind == UtilityKind::KL) return kl_term(q, r) + kl_term(qc, rc);
  return (xlogx(q) + xlogx(qc)) - (xlogx(r) + xlogx(rc));
}

// c[k] = sum of p[i] over i != k, via prefix and suffix sums.
std::vector<double> complements(const std::vector<double>& p) {
  std::vector<double> c(p.size(), 0.0);
  double prefix = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    c[k] = prefix;
    prefix += p[k];
  }
  double suffix = 0.0;
  for (std::size_t k = p.size(); k-- > 0;) {
    c[k] += suffix;
    suffix += p[k];
  }
  return c;
}

// Beliefs restricted to the support of the root posterior. Diseases outside
// the support have zero probability at the root and in every descendant, so
// they contribute nothing to either divergence.
class Lookahead {
 public:
  Lookahead(const QmrNetwork& net, const Evidence& ev, std::span<const FindingId> excluded,
            UtilityKind kind)
      : net_(net), kind_(kind), blocked_(net.num_findings(), 0) {
    ev.check_ids(net);
    for (auto f : ev.positive()) blocked_[f] = 1;
    for (auto f : ev.negative()) blocked_[f] = 1;
    for (auto f : excluded) {
      if (f < blocked_.size()) blocked_[f] = 1;
    }
    const auto post = posterior(net, ev);
    degenerate_ = post.degenerate;
    local_.assign(net.num_diseases(), -1);
    for (DiseaseId j = 0; j < net.num_diseases(); ++j) {
      if (post.probs[j] > 0.0) {
        local_[j] = static_cast<int>(support_.size());
        support_.push_back(j);
        root_.push_back(post.probs[j]);
      }
    }
    root_comp_ = complements(root_);
  }

  bool degenerate() const { return degenerate_; }
  const std::vector<double>& root() const { return root_; }

  /// P(f = 1 | d_j) over the support.
  std::vector<double> column(FindingId f) const {
    std::vector<double> a(support_.size(), 0.0);
    for (const auto& link : net_.diseases_of(f)) {
      if (const int k = local_[link.id]; k >= 0) a[static_cast<std::size_t>(k)] = link.prob;
    }
    return a;
  }

  double divergence(const std::vector<double>& beliefs) const {
    const auto comp = complements(beliefs);
    double acc = 0.0;
    for (std::size_t k = 0; k < beliefs.size(); ++k) {
      acc += bernoulli_divergence(beliefs[k], comp[k], root_[k], root_comp_[k], kind_);
    }
    return acc;
  }

  /// Expected divergence from the root after asking a question with
  /// likelihood column `a`, starting from `beliefs`, with `depth - 1` further
  /// questions chosen optimally in each branch.
  double value(const std::vector<double>& beliefs, const std::vector<double>& a, int depth) {
    double p_yes = 0.0;
    double p_no = 0.0;
    for (std::size_t k = 0; k < beliefs.size(); ++k) {
      p_yes += beliefs[k] * a[k];
      p_no += beliefs[k] * (1.0 - a[k]);
    }
    double total = 0.0;
    std::vector<double> branch(beliefs.size());
    for (const bool yes : {true, false}) {
      const double p_y = yes ? p_yes : p_no;
      if (!(p_y > 0.0)) continue;
      for (std::size_t k = 0; k < beliefs.size(); ++k) {
        branch[k] = beliefs[k] * (yes ? a[k] : 1.0 - a[k]) / p_y;
      }
      total += p_y * (depth <= 1 ? divergence(branch) : best_followup(branch, depth - 1));
    }
    return total;
  }

  void block(FindingId f, bool on) { blocked_[f] = on ? 1 : 0; }
  bool blocked(FindingId f) const { return blocked_[f] != 0; }

 private:
  // max over follow-up questions f2 of value(beliefs, f2, depth). Questions
  // that touch no disease with nonzero belief leave the beliefs unchanged
  // and score exactly divergence(beliefs), which lower-bounds every other
  // question by convexity, so only touching questions are enumerated.
  double best_followup(const std::vector<double>& beliefs, int depth) {
    double best = divergence(beliefs);
    std::vector<FindingId> touching;
    std::vector<char> seen(net_.num_findings(), 0);
    for (std::size_t k = 0; k < beliefs.size(); ++k) {
      if (!(beliefs[k] > 0.0)) continue;
      for (const auto& link : net_.findings_of(support_[k])) {
        if (!blocked_[link.id] && !seen[link.id]) {
          seen[link.id] = 1;
          touching.push_back(link.id);
        }
      }
    }
    std::sort(touching.begin(), touching.end());
    for (auto f2 : touching) {
      blocked_[f2] = 1;
      best = std::max(best, value(beliefs, column(f2), depth));
      blocked_[f2] = 0;
    }
    return best;
  }

  const QmrNetwork& net_;
  UtilityKind kind_;
  std::vector<char> blocked_;
  bool degenerate_ = false;
  std::vector<int> local_;
  std::vector<DiseaseId> support_;
  std::vector<double> root_;
  std::vector<double> root_comp_;
};

void require_unobserved(const QmrNetwork& net, const Evidence& ev, FindingId f) {
  if (f >= net.num_findings()) {
    throw std::out_of_range("finding id " + std::to_string(f) + " is not in the network");
  }
  if (ev.observed(f)) {
    throw std::invalid_argument("finding \"" + net.finding(f).name + "\" is already observed");
  }
}

double score(Lookahead& ctx, FindingId f, int depth) {
  if (ctx.degenerate()) return 0.0;
  ctx.block(f, true);
  const double v = ctx.value(ctx.root(), ctx.column(f), depth);
  ctx.block(f, false);
  return v;
}

}  // namespace

UtilityKind parse_utility_kind(std::string_view name) {
  if (name == "KL" || name == "kl") return UtilityKind::KL;
  if (name == "IG" || name == "ig") return UtilityKind::IG;
  throw std::invalid_argument("unknown utility kind \"" + std::string(name) + "\"");
}

std::string_view to_string(UtilityKind kind) { return kind == UtilityKind::KL ? "kl" : "ig"; }

double outcome_probability(const QmrNetwork& net, const Evidence& ev, FindingId f) {
  require_unobserved(net, ev, f);
  const auto post = posterior(net, ev);
  double p = 0.0;
  for (const auto& link : net.diseases_of(f)) p += post.probs[link.id] * link.prob;
  return std::clamp(p, 0.0, 1.0);
}

double utility(const QmrNetwork& net, const Evidence& ev, FindingId f, UtilityKind kind) {
  return lookahead_value(net, ev, f, 1, kind);
}

double lookahead_value(const QmrNetwork& net, const Evidence& ev, FindingId f, int depth,
                       UtilityKind kind) {
  if (depth < 1) throw std::invalid_argument("lookahead depth must be at least 1");
  require_unobserved(net, ev, f);
  Lookahead ctx(net, ev, {}, kind);
  return score(ctx, f, depth);
}

std::vector<FindingId> candidate_findings(const QmrNetwork& net, const Evidence& ev) {
  ev.check_ids(net);
  std::vector<char> mark(net.num_findings(), 0);
  if (ev.positive().empty()) {
    std::fill(mark.begin(), mark.end(), 1);
  } else {
    for (auto f : ev.positive()) {
      for (const auto& d : net.diseases_of(f)) {
        for (const auto& g : net.findings_of(d.id)) mark[g.id] = 1;
      }
    }
  }
  for (auto f : ev.positive()) mark[f] = 0;
  for (auto f : ev.negative()) mark[f] = 0;

  std::vector<FindingId> out;
  for (FindingId f = 0; f < net.num_findings(); ++f) {
    if (mark[f]) out.push_back(f);
  }
  return out;
}

std::vector<CandidateScore> score_candidates(const QmrNetwork& net, const Evidence& ev,
                                             const LookaheadConfig& cfg,
                                             std::span<const FindingId> excluded) {
  if (cfg.depth < 1) throw std::invalid_argument("lookahead depth must be at least 1");
  Lookahead ctx(net, ev, excluded, cfg.kind);
  std::vector<CandidateScore> out;
  for (auto f : candidate_findings(net, ev)) {
    if (std::binary_search(excluded.begin(), excluded.end(), f)) continue;
    out.push_back({f, score(ctx, f, cfg.depth)});
  }
  return out;
}

std::optional<CandidateScore> select_next(const QmrNetwork& net, const Evidence& ev,
                                          const LookaheadConfig& cfg,
                                          std::span<const FindingId> excluded) {
  std::optional<CandidateScore> best;
  for (const auto& c : score_candidates(net, ev, cfg, excluded)) {
    if (!best || c.utility > best->utility) best = c;
  }
  return best;
}

}  // namespace qmrdx
