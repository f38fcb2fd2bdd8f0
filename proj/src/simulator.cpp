#include "qmrdx/simulator.hpp"

#include <stdexcept>

#include "json.hpp"
#include "qmrdx/network_io.hpp"

namespace qmrdx {

using json = nlohmann::ordered_json;

InitialFindingRule parse_initial_rule(std::string_view name) {
  if (name == "uniform") return InitialFindingRule::Uniform;
  if (name == "strongest") return InitialFindingRule::StrongestEdge;
  throw std::invalid_argument("unknown initial finding rule \"" + std::string(name) + "\"");
}

std::vector<bool> sample_finding_states(const QmrNetwork& net, DiseaseId disease, Rng& rng) {
  std::vector<bool> states(net.num_findings(), false);
  for (const auto& link : net.findings_of(disease)) {
    states[link.id] = uniform01(rng) < link.prob;
  }
  return states;
}

SimulatedCase sample_case(const QmrNetwork& net, Rng& rng, InitialFindingRule rule) {
  SimulatedCase c;
  double total = 0.0;
  for (const auto& d : net.diseases()) total += d.prior;
  const double u = uniform01(rng) * total;
  double cum = 0.0;
  c.true_disease = static_cast<DiseaseId>(net.num_diseases() - 1);
  for (DiseaseId j = 0; j < net.num_diseases(); ++j) {
    cum += net.disease(j).prior;
    if (u < cum) {
      c.true_disease = j;
      break;
    }
  }
  // skip trailing zero-prior diseases picked by rounding
  while (net.disease(c.true_disease).prior <= 0.0 && c.true_disease > 0) --c.true_disease;

  std::vector<FindingId> positives;
  for (int attempt = 0; attempt < kMaxCaseAttempts; ++attempt) {
    c.finding_states = sample_finding_states(net, c.true_disease, rng);
    positives.clear();
    for (const auto& link : net.findings_of(c.true_disease)) {
      if (c.finding_states[link.id]) positives.push_back(link.id);
    }
    if (!positives.empty()) break;
  }
  if (positives.empty()) {
    throw std::runtime_error("disease \"" + net.disease(c.true_disease).name + "\" produced no " +
                             "positive finding in " + std::to_string(kMaxCaseAttempts) +
                             " draws");
  }

  if (rule == InitialFindingRule::Uniform) {
    c.initial_positive = positives[uniform_index(rng, positives.size())];
  } else {
    double best = -1.0;
    for (auto f : positives) {
      const double p = net.edge_prob(c.true_disease, f);
      if (p > best) {
        best = p;
        c.initial_positive = f;
      }
    }
  }
  return c;
}

std::vector<SimulatedCase> sample_cohort(const QmrNetwork& net, std::size_t n, std::uint64_t seed,
                                         InitialFindingRule rule) {
  std::vector<SimulatedCase> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto rng = stream_for(seed, i);
    out.push_back(sample_case(net, rng, rule));
  }
  return out;
}

bool patient_answer(const SimulatedCase& c, FindingId f) {
  if (f >= c.finding_states.size()) {
    throw std::out_of_range("finding id " + std::to_string(f) + " is not in the case");
  }
  return c.finding_states[f];
}

std::string cases_to_json(const QmrNetwork& net, const std::vector<SimulatedCase>& cases) {
  json doc = json::array();
  for (const auto& c : cases) {
    json all = json::object();
    for (FindingId f = 0; f < net.num_findings(); ++f) {
      all[net.finding(f).name] = bool(c.finding_states[f]);
    }
    doc.push_back({{"disease", net.disease(c.true_disease).name},
                   {"explicit", {{net.finding(c.initial_positive).name, true}}},
                   {"implicit", json::object()},
                   {"all_states", std::move(all)}});
  }
  return doc.dump(1) + "\n";
}

std::vector<SimulatedCase> cases_from_json(const QmrNetwork& net, std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed case dump: ") + e.what());
  }
  if (!doc.is_array()) throw ParseError("case dump: expected a top-level list");
  std::vector<SimulatedCase> out;
  for (const auto& item : doc) {
    SimulatedCase c;
    c.true_disease = net.disease_id(item.at("disease").get<std::string>());
    c.finding_states.assign(net.num_findings(), false);
    for (const auto& [name, v] : item.at("all_states").items()) {
      c.finding_states[net.finding_id(name)] = v.get<bool>();
    }
    const auto& exp = item.at("explicit");
    if (exp.size() != 1) throw ParseError("case dump: expected one explicit finding per case");
    c.initial_positive = net.finding_id(exp.begin().key());
    if (!c.finding_states[c.initial_positive]) {
      throw ParseError("case dump: initial finding is not positive in all_states");
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace qmrdx
