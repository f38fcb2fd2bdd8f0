#include "qmrdx/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

namespace qmrdx {

namespace {

constexpr std::size_t kRankDepth = 5;

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
// thrown by any task is rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

SessionConfig ranking_config(SessionConfig cfg) {
  cfg.top_k = std::max(cfg.top_k, kRankDepth);
  return cfg;
}

std::vector<DiseaseId> ranked_ids(const Posterior& post, std::size_t k) {
  std::vector<DiseaseId> out;
  for (const auto& r : top_k(post, std::min(k, post.probs.size()))) out.push_back(r.disease);
  return out;
}

EpisodeResult finish(Session& s, DiseaseId truth) {
  const auto& d = s.finalize();
  EpisodeResult r;
  r.true_disease = truth;
  for (const auto& entry : d.ranking) r.ranked.push_back(entry.disease);
  r.steps = s.step();
  r.degenerate = d.posterior.degenerate;
  r.reason = d.reason;
  return r;
}

std::string format_number(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

}  // namespace

UnrecordedMode parse_unrecorded_mode(std::string_view name) {
  if (name == "absent") return UnrecordedMode::Absent;
  if (name == "skip") return UnrecordedMode::Skip;
  throw std::invalid_argument("unknown unrecorded mode \"" + std::string(name) + "\"");
}

std::string_view to_string(UnrecordedMode mode) {
  return mode == UnrecordedMode::Absent ? "absent" : "skip";
}

bool EpisodeResult::hit(std::size_t k) const {
  if (!known_disease) return false;
  const auto n = std::min(k, ranked.size());
  return std::find(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n),
                   true_disease) != ranked.begin() + static_cast<std::ptrdiff_t>(n);
}

EpisodeResult run_episode(const QmrNetwork& net, const SessionConfig& cfg,
                          const SimulatedCase& c) {
  Session s(net, ranking_config(cfg), Evidence::from({c.initial_positive}, {}));
  while (true) {
    const auto d = s.next_suggestion();
    const auto* sug = std::get_if<Suggest>(&d);
    if (!sug) break;
    s.answer(sug->finding, patient_answer(c, sug->finding));
  }
  return finish(s, c.true_disease);
}

EpisodeResult run_episode(const QmrNetwork& net, const SessionConfig& cfg, const DialogueCase& c,
                          UnrecordedMode mode) {
  std::vector<FindingId> pos;
  std::vector<FindingId> neg;
  for (const auto& [name, value] : c.explicit_findings) {
    // findings the network has never seen carry no information
    if (const auto id = net.find_finding(name)) (value ? pos : neg).push_back(*id);
  }
  std::map<FindingId, bool> recorded;
  for (const auto& [name, value] : c.implicit_findings) {
    if (const auto id = net.find_finding(name)) recorded.emplace(*id, value);
  }

  Session s(net, ranking_config(cfg), Evidence::from(pos, neg));
  while (true) {
    const auto d = s.next_suggestion();
    const auto* sug = std::get_if<Suggest>(&d);
    if (!sug) break;
    std::optional<bool> reply;
    if (const auto it = recorded.find(sug->finding); it != recorded.end()) {
      reply = it->second;
    } else if (mode == UnrecordedMode::Absent) {
      reply = false;
    }
    s.answer(sug->finding, reply);
  }
  const auto truth = net.find_disease(c.disease);
  auto r = finish(s, truth.value_or(0));
  r.known_disease = truth.has_value();
  return r;
}

Interval wilson_interval(std::size_t hits, std::size_t n) {
  if (n == 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double p = double(hits) / double(n);
  const double nn = double(n);
  const double denom = 1.0 + z * z / nn;
  const double centre = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

EvalReport summarize(const std::vector<EpisodeResult>& episodes, const SessionConfig& cfg,
                     std::uint64_t seed) {
  EvalReport r;
  r.n_cases = episodes.size();
  for (const auto& e : episodes) {
    r.hits1 += e.hit(1);
    r.hits3 += e.hit(3);
    r.hits5 += e.hit(5);
    r.total_steps += static_cast<std::size_t>(e.steps);
    r.degenerate += e.degenerate;
    r.unknown_disease += !e.known_disease;
  }
  if (r.n_cases > 0) {
    const double n = double(r.n_cases);
    r.top1 = double(r.hits1) / n;
    r.top3 = double(r.hits3) / n;
    r.top5 = double(r.hits5) / n;
    r.avg_steps = double(r.total_steps) / n;
  }
  r.ci1 = wilson_interval(r.hits1, r.n_cases);
  r.ci3 = wilson_interval(r.hits3, r.n_cases);
  r.ci5 = wilson_interval(r.hits5, r.n_cases);
  r.threshold = cfg.utility_threshold;
  r.max_steps = cfg.max_steps;
  r.depth = cfg.lookahead.depth;
  r.kind = cfg.lookahead.kind;
  r.seed = seed;
  return r;
}

std::vector<EpisodeResult> run_cases(const QmrNetwork& net, const SessionConfig& cfg,
                                     const std::vector<SimulatedCase>& cases,
                                     std::size_t workers) {
  std::vector<EpisodeResult> out(cases.size());
  parallel_for(cases.size(), workers, [&](std::size_t i) { out[i] = run_episode(net, cfg, cases[i]); });
  return out;
}

EvalReport evaluate(const QmrNetwork& net, const SessionConfig& cfg, std::size_t n_cases,
                    std::uint64_t seed, std::size_t workers, InitialFindingRule rule) {
  if (n_cases < 1) throw std::invalid_argument("evaluate needs at least one case");
  cfg.validate();
  const auto cases = sample_cohort(net, n_cases, seed, rule);
  return summarize(run_cases(net, cfg, cases, workers), cfg, seed);
}

EpisodeResult cheater_episode(const QmrNetwork& net, const SimulatedCase& c) {
  std::vector<FindingId> pos;
  std::vector<FindingId> neg;
  for (FindingId f = 0; f < net.num_findings(); ++f) (c.finding_states[f] ? pos : neg).push_back(f);
  const auto post = posterior(net, Evidence::from(std::move(pos), std::move(neg)));
  EpisodeResult r;
  r.true_disease = c.true_disease;
  r.ranked = ranked_ids(post, kRankDepth);
  r.degenerate = post.degenerate;
  r.reason = StopReason::Manual;
  return r;
}

std::vector<EpisodeResult> cheater_cases(const QmrNetwork& net,
                                         const std::vector<SimulatedCase>& cases,
                                         std::size_t workers) {
  std::vector<EpisodeResult> out(cases.size());
  parallel_for(cases.size(), workers, [&](std::size_t i) { out[i] = cheater_episode(net, cases[i]); });
  return out;
}

EvalReport cheater_evaluate(const QmrNetwork& net, std::size_t n_cases, std::uint64_t seed,
                            std::size_t workers, InitialFindingRule rule) {
  if (n_cases < 1) throw std::invalid_argument("evaluate needs at least one case");
  const auto cases = sample_cohort(net, n_cases, seed, rule);
  SessionConfig cfg;
  cfg.max_steps = 0;
  cfg.utility_threshold = 0.0;
  return summarize(cheater_cases(net, cases, workers), cfg, seed);
}

namespace {

// State of one simulated episode after each inquiry step, driven with no
// threshold up to the largest budget.
struct Trajectory {
  std::vector<std::vector<DiseaseId>> ranked;  // ranking at step n
  std::vector<char> degenerate;
  std::vector<double> best_utility;            // best score offered at step n
  bool exhausted = false;                      // no candidate at the last step
};

Trajectory trace(const QmrNetwork& net, const LookaheadConfig& lookahead, const SimulatedCase& c,
                 int max_steps) {
  Trajectory t;
  auto ev = Evidence::from({c.initial_positive}, {});
  for (int n = 0;; ++n) {
    const auto post = posterior(net, ev);
    t.ranked.push_back(ranked_ids(post, kRankDepth));
    t.degenerate.push_back(post.degenerate);
    if (n == max_steps) break;
    const auto best = select_next(net, ev, lookahead);
    if (!best) {
      t.exhausted = true;
      break;
    }
    t.best_utility.push_back(best->utility);
    ev.add(best->finding, patient_answer(c, best->finding));
  }
  return t;
}

// Mirrors Session::next_suggestion's stopping rule on a recorded trajectory.
EpisodeResult cell_result(const Trajectory& t, const SimulatedCase& c, double threshold,
                          int max_steps) {
  EpisodeResult r;
  r.true_disease = c.true_disease;
  int n = 0;
  for (;; ++n) {
    if (n >= max_steps) {
      r.reason = StopReason::Budget;
      break;
    }
    if (static_cast<std::size_t>(n) >= t.best_utility.size()) {
      r.reason = StopReason::Exhausted;
      break;
    }
    if (t.best_utility[static_cast<std::size_t>(n)] < threshold) {
      r.reason = StopReason::Threshold;
      break;
    }
  }
  r.steps = n;
  r.ranked = t.ranked[static_cast<std::size_t>(n)];
  r.degenerate = t.degenerate[static_cast<std::size_t>(n)];
  return r;
}

}  // namespace

std::vector<std::vector<EpisodeResult>> grid_episodes(
    const QmrNetwork& net, const std::vector<double>& thresholds,
    const std::vector<int>& max_steps_list, const LookaheadConfig& lookahead,
    const std::vector<SimulatedCase>& cases, std::size_t workers) {
  if (thresholds.empty() || max_steps_list.empty()) {
    throw std::invalid_argument("grid search needs nonempty threshold and max-steps lists");
  }
  for (const auto t : thresholds) {
    if (!(t >= 0.0)) throw std::invalid_argument("thresholds must be >= 0");
  }
  for (const auto m : max_steps_list) {
    if (m < 0) throw std::invalid_argument("max steps must be >= 0");
  }
  const int budget = *std::max_element(max_steps_list.begin(), max_steps_list.end());
  const std::size_t cells = thresholds.size() * max_steps_list.size();
  std::vector<std::vector<EpisodeResult>> out(cells, std::vector<EpisodeResult>(cases.size()));
  parallel_for(cases.size(), workers, [&](std::size_t i) {
    const auto t = trace(net, lookahead, cases[i], budget);
    for (std::size_t a = 0; a < thresholds.size(); ++a) {
      for (std::size_t b = 0; b < max_steps_list.size(); ++b) {
        out[a * max_steps_list.size() + b][i] =
            cell_result(t, cases[i], thresholds[a], max_steps_list[b]);
      }
    }
  });
  return out;
}

std::vector<EvalReport> grid_search(const QmrNetwork& net, const std::vector<double>& thresholds,
                                    const std::vector<int>& max_steps_list,
                                    const LookaheadConfig& lookahead, std::size_t n_cases,
                                    std::uint64_t seed, std::size_t workers,
                                    InitialFindingRule rule) {
  if (n_cases < 1) throw std::invalid_argument("grid search needs at least one case");
  const auto cases = sample_cohort(net, n_cases, seed, rule);
  const auto episodes = grid_episodes(net, thresholds, max_steps_list, lookahead, cases, workers);
  std::vector<EvalReport> out;
  for (std::size_t a = 0; a < thresholds.size(); ++a) {
    for (std::size_t b = 0; b < max_steps_list.size(); ++b) {
      SessionConfig cfg;
      cfg.utility_threshold = thresholds[a];
      cfg.max_steps = max_steps_list[b];
      cfg.lookahead = lookahead;
      out.push_back(summarize(episodes[a * max_steps_list.size() + b], cfg, seed));
    }
  }
  return out;
}

EvalReport evaluate_dialogue(const QmrNetwork& net, const std::vector<DialogueCase>& cases,
                             const SessionConfig& cfg, UnrecordedMode mode, std::size_t workers) {
  cfg.validate();
  std::vector<EpisodeResult> out(cases.size());
  parallel_for(cases.size(), workers,
               [&](std::size_t i) { out[i] = run_episode(net, cfg, cases[i], mode); });
  return summarize(out, cfg, 0);
}

double paired_standard_error(const std::vector<EpisodeResult>& a,
                             const std::vector<EpisodeResult>& b, std::size_t k) {
  if (a.size() != b.size() || a.size() < 2) {
    throw std::invalid_argument("paired comparison needs two equal cohorts of at least 2 cases");
  }
  const double n = double(a.size());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = double(a[i].hit(k)) - double(b[i].hit(k));
    sum += d;
    sum_sq += d * d;
  }
  const double mean = sum / n;
  const double var = (sum_sq - n * mean * mean) / (n - 1.0);
  return std::sqrt(std::max(var, 0.0) / n);
}

std::string reports_to_csv(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  out << "threshold,max_steps,depth,utility,top1,top3,top5,avg_steps,n,seed\n";
  for (const auto& r : reports) {
    out << format_number(r.threshold, "%g") << ',' << r.max_steps << ',' << r.depth << ','
        << to_string(r.kind) << ',' << format_number(r.top1, "%.6f") << ','
        << format_number(r.top3, "%.6f") << ',' << format_number(r.top5, "%.6f") << ','
        << format_number(r.avg_steps, "%.6f") << ',' << r.n_cases << ',' << r.seed << '\n';
  }
  return out.str();
}

std::string reports_to_table(const std::vector<EvalReport>& reports) {
  std::vector<double> thresholds;
  std::vector<int> budgets;
  for (const auto& r : reports) {
    if (std::find(thresholds.begin(), thresholds.end(), r.threshold) == thresholds.end()) {
      thresholds.push_back(r.threshold);
    }
    if (std::find(budgets.begin(), budgets.end(), r.max_steps) == budgets.end()) {
      budgets.push_back(r.max_steps);
    }
  }
  std::ostringstream out;
  out << "Max steps";
  for (const auto t : thresholds) out << " | Threshold=" << format_number(t, "%-19g");
  out << "\n         ";
  for (std::size_t i = 0; i < thresholds.size(); ++i) out << " |   Top1   Top3   Top5  Steps  ";
  out << "\n";
  for (const auto m : budgets) {
    out << format_number(m, "%9.0f");
    for (const auto t : thresholds) {
      const auto it = std::find_if(reports.begin(), reports.end(), [&](const EvalReport& r) {
        return r.threshold == t && r.max_steps == m;
      });
      if (it == reports.end()) {
        out << " |" << std::string(30, ' ');
        continue;
      }
      out << " | " << format_number(100.0 * it->top1, "%6.2f") << ' '
          << format_number(100.0 * it->top3, "%6.2f") << ' '
          << format_number(100.0 * it->top5, "%6.2f") << ' '
          << format_number(it->avg_steps, "%6.2f") << "  ";
    }
    out << "\n";
  }
  return out.str();
}

std::vector<std::string> check_reports(const std::vector<EvalReport>& reports) {
  std::vector<std::string> out;
  auto label = [](const EvalReport& r) {
    return "(threshold=" + format_number(r.threshold, "%g") +
           ", max_steps=" + std::to_string(r.max_steps) + ")";
  };
  for (const auto& r : reports) {
    if (!(r.top1 <= r.top3 && r.top3 <= r.top5)) out.push_back(label(r) + ": top-k not nested");
    if (r.n_cases > 0 && r.avg_steps > r.max_steps && r.max_steps > 0) {
      out.push_back(label(r) + ": average steps exceed the budget");
    }
  }
  for (std::size_t a = 0; a < reports.size(); ++a) {
    for (std::size_t b = 0; b < reports.size(); ++b) {
      const auto& x = reports[a];
      const auto& y = reports[b];
      if (x.depth != y.depth || x.kind != y.kind) continue;
      if (x.max_steps == y.max_steps && x.threshold < y.threshold && x.avg_steps < y.avg_steps) {
        out.push_back(label(y) + ": more steps than the lower threshold " + label(x));
      }
      if (x.threshold == y.threshold && x.max_steps < y.max_steps && x.avg_steps > y.avg_steps) {
        out.push_back(label(x) + ": more steps than the larger budget " + label(y));
      }
    }
  }
  return out;
}

}  // namespace qmrdx
