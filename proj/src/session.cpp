#include "qmrdx/session.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace qmrdx {

using json = nlohmann::ordered_json;

void SessionConfig::validate() const {
  if (max_steps < 0) throw std::invalid_argument("max_steps must be >= 0");
  if (!(utility_threshold >= 0.0)) throw std::invalid_argument("utility threshold must be >= 0");
  if (lookahead.depth < 1) throw std::invalid_argument("lookahead depth must be >= 1");
  if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
}

std::string_view to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Budget: return "budget";
    case StopReason::Threshold: return "threshold";
    case StopReason::Exhausted: return "exhausted";
    case StopReason::Manual: return "manual";
  }
  return "manual";
}

std::optional<StopReason> parse_stop_reason(std::string_view name) {
  for (auto r : {StopReason::Budget, StopReason::Threshold, StopReason::Exhausted,
                 StopReason::Manual}) {
    if (to_string(r) == name) return r;
  }
  return std::nullopt;
}

Session::Session(const QmrNetwork& net, SessionConfig cfg, const Evidence& initial)
    : net_(&net), cfg_(cfg) {
  cfg_.validate();
  try {
    initial.check_ids(net);
  } catch (const std::out_of_range& e) {
    throw SessionError(SessionError::Kind::UnknownFinding, e.what());
  }
  evidence_ = initial;
  for (const bool present : {true, false}) {
    for (auto f : present ? initial.positive() : initial.negative()) {
      TranscriptEvent ev;
      ev.type = TranscriptEvent::Type::Override;
      ev.finding = f;
      ev.value = present;
      transcript_.push_back(ev);
    }
  }
}

void Session::require_active() const {
  if (status_ != SessionStatus::Active) {
    throw SessionError(SessionError::Kind::NotActive, "session is already diagnosed");
  }
}

void Session::require_finding(FindingId f) const {
  if (f >= net_->num_findings()) {
    throw SessionError(SessionError::Kind::UnknownFinding,
                       "finding id " + std::to_string(f) + " is not in the network");
  }
}

Decision Session::next_suggestion() {
  require_active();
  if (pending_) return *pending_;

  if (step_ >= cfg_.max_steps) {
    pending_ = Diagnose{StopReason::Budget};
    return *pending_;
  }
  const auto best = select_next(*net_, evidence_, cfg_.lookahead, skipped_);
  if (!best) {
    pending_ = Diagnose{StopReason::Exhausted};
  } else if (best->utility < cfg_.utility_threshold) {
    pending_ = Diagnose{StopReason::Threshold};
  } else {
    const Suggest s{best->finding, best->utility};
    pending_ = s;
    last_suggestion_ = s;
    TranscriptEvent ev;
    ev.type = TranscriptEvent::Type::Suggest;
    ev.step = step_;
    ev.finding = s.finding;
    ev.utility = s.utility;
    transcript_.push_back(ev);
  }
  return *pending_;
}

void Session::answer(FindingId f, std::optional<bool> value) {
  require_active();
  require_finding(f);
  if (evidence_.observed(f) || std::binary_search(skipped_.begin(), skipped_.end(), f)) {
    throw SessionError(SessionError::Kind::AlreadyObserved,
                       "finding \"" + net_->finding(f).name + "\" was already answered");
  }
  if (step_ >= cfg_.max_steps) {
    throw SessionError(SessionError::Kind::BudgetExhausted,
                       "step budget of " + std::to_string(cfg_.max_steps) + " is spent");
  }
  if (value) {
    evidence_.add(f, *value);
  } else {
    skipped_.insert(std::lower_bound(skipped_.begin(), skipped_.end(), f), f);
  }
  ++step_;
  invalidate();

  TranscriptEvent ev;
  ev.type = TranscriptEvent::Type::Answer;
  ev.step = step_;
  ev.finding = f;
  ev.value = value;
  transcript_.push_back(ev);
}

void Session::override_finding(FindingId f, std::optional<bool> value) {
  require_active();
  require_finding(f);
  evidence_.set(f, value);
  if (const auto it = std::lower_bound(skipped_.begin(), skipped_.end(), f);
      it != skipped_.end() && *it == f) {
    skipped_.erase(it);
  }
  invalidate();

  TranscriptEvent ev;
  ev.type = TranscriptEvent::Type::Override;
  ev.step = step_;
  ev.finding = f;
  ev.value = value;
  transcript_.push_back(ev);
}

const Diagnosis& Session::finalize() {
  require_active();
  Diagnosis d;
  if (pending_) {
    if (const auto* stop = std::get_if<Diagnose>(&*pending_)) d.reason = stop->reason;
  }
  d.posterior = posterior(*net_, evidence_);
  d.ranking = top_k(d.posterior, std::min(cfg_.top_k, net_->num_diseases()));
  status_ = SessionStatus::Diagnosed;
  diagnosis_ = std::move(d);

  TranscriptEvent ev;
  ev.type = TranscriptEvent::Type::Final;
  ev.step = step_;
  ev.reason = diagnosis_->reason;
  ev.ranking = diagnosis_->ranking;
  ev.degenerate = diagnosis_->posterior.degenerate;
  transcript_.push_back(ev);
  return *diagnosis_;
}

Evidence evidence_from_names(const QmrNetwork& net, const std::vector<std::string>& positive,
                             const std::vector<std::string>& negative) {
  auto resolve = [&](const std::vector<std::string>& names) {
    std::vector<FindingId> ids;
    for (const auto& name : names) {
      const auto id = net.find_finding(name);
      if (!id) {
        throw SessionError(SessionError::Kind::UnknownFinding, "unknown finding \"" + name + "\"");
      }
      ids.push_back(*id);
    }
    return ids;
  };
  try {
    return Evidence::from(resolve(positive), resolve(negative));
  } catch (const std::invalid_argument& e) {
    throw SessionError(SessionError::Kind::InvalidEvidence, e.what());
  }
}

namespace {

const char* type_name(TranscriptEvent::Type t) {
  switch (t) {
    case TranscriptEvent::Type::Suggest: return "suggest";
    case TranscriptEvent::Type::Answer: return "answer";
    case TranscriptEvent::Type::Override: return "override";
    case TranscriptEvent::Type::Final: return "final";
  }
  return "final";
}

}  // namespace

std::string to_json_line(const QmrNetwork& net, const TranscriptEvent& e) {
  json j;
  j["t"] = type_name(e.type);
  j["step"] = e.step;
  if (e.finding) j["finding"] = net.finding(*e.finding).name;
  switch (e.type) {
    case TranscriptEvent::Type::Suggest:
      j["utility"] = e.utility;
      break;
    case TranscriptEvent::Type::Answer:
    case TranscriptEvent::Type::Override:
      j["value"] = e.value ? json(*e.value) : json(nullptr);
      break;
    case TranscriptEvent::Type::Final: {
      j["reason"] = to_string(e.reason.value_or(StopReason::Manual));
      j["degenerate"] = e.degenerate;
      json ranking = json::array();
      for (const auto& r : e.ranking) {
        ranking.push_back({{"disease", net.disease(r.disease).name}, {"prob", r.prob}});
      }
      j["ranking"] = std::move(ranking);
      break;
    }
  }
  return j.dump();
}

std::string to_jsonl(const QmrNetwork& net, const std::vector<TranscriptEvent>& events) {
  std::string out;
  for (const auto& e : events) out += to_json_line(net, e) + "\n";
  return out;
}

std::vector<TranscriptEvent> parse_transcript(const QmrNetwork& net, std::string_view jsonl) {
  std::vector<TranscriptEvent> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::runtime_error("transcript line " + std::to_string(lineno) + ": " + e.what());
    }
    TranscriptEvent e;
    const auto t = j.value("t", std::string());
    if (t == "suggest") e.type = TranscriptEvent::Type::Suggest;
    else if (t == "answer") e.type = TranscriptEvent::Type::Answer;
    else if (t == "override") e.type = TranscriptEvent::Type::Override;
    else if (t == "final") e.type = TranscriptEvent::Type::Final;
    else throw std::runtime_error("transcript line " + std::to_string(lineno) + ": bad type");
    e.step = j.value("step", 0);
    if (j.contains("finding")) e.finding = net.finding_id(j["finding"].get<std::string>());
    if (j.contains("value") && !j["value"].is_null()) e.value = j["value"].get<bool>();
    e.utility = j.value("utility", 0.0);
    if (j.contains("reason")) e.reason = parse_stop_reason(j["reason"].get<std::string>());
    e.degenerate = j.value("degenerate", false);
    if (j.contains("ranking")) {
      for (const auto& r : j["ranking"]) {
        e.ranking.push_back({net.disease_id(r["disease"].get<std::string>()), r["prob"].get<double>()});
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

Session replay_transcript(const QmrNetwork& net, const SessionConfig& cfg,
                          const std::vector<TranscriptEvent>& events) {
  Session s(net, cfg);
  auto fail = [](std::size_t i, const std::string& what) {
    throw std::runtime_error("replay diverged at event " + std::to_string(i) + ": " + what);
  };
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    switch (e.type) {
      case TranscriptEvent::Type::Override:
        s.override_finding(e.finding.value(), e.value);
        break;
      case TranscriptEvent::Type::Answer:
        s.answer(e.finding.value(), e.value);
        break;
      case TranscriptEvent::Type::Suggest: {
        const auto d = s.next_suggestion();
        const auto* sug = std::get_if<Suggest>(&d);
        if (!sug || sug->finding != e.finding || sug->utility != e.utility) {
          fail(i, "different suggestion");
        }
        break;
      }
      case TranscriptEvent::Type::Final: {
        const auto reason = e.reason.value_or(StopReason::Manual);
        if (reason != StopReason::Manual) {
          const auto d = s.next_suggestion();
          const auto* stop = std::get_if<Diagnose>(&d);
          if (!stop || stop->reason != reason) fail(i, "different stop decision");
        }
        const auto& diag = s.finalize();
        if (diag.reason != reason) fail(i, "different stop reason");
        if (diag.ranking.size() != e.ranking.size()) fail(i, "different ranking length");
        for (std::size_t k = 0; k < e.ranking.size(); ++k) {
          if (diag.ranking[k].disease != e.ranking[k].disease ||
              diag.ranking[k].prob != e.ranking[k].prob) {
            fail(i, "different ranking");
          }
        }
        break;
      }
    }
  }
  return s;
}

}  // namespace qmrdx
