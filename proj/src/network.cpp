#include "qmrdx/network.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

namespace qmrdx {

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::ostringstream out;
  out << "invalid network";
  for (const auto& s : v) out << "; " << s;
  return out.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

std::string trim_name(std::string_view name) {
  const auto* ws = " \t\r\n\f\v";
  const auto b = name.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = name.find_last_not_of(ws);
  return std::string(name.substr(b, e - b + 1));
}

std::vector<std::string> validate(const NetworkSpec& spec) {
  std::vector<std::string> out;

  if (spec.diseases.empty()) out.emplace_back("network has no diseases");

  std::set<std::string_view> seen;
  double prior_sum = 0.0;
  for (std::size_t j = 0; j < spec.diseases.size(); ++j) {
    const auto& d = spec.diseases[j];
    if (d.name.empty()) out.push_back("disease " + std::to_string(j) + ": empty name");
    if (!seen.insert(d.name).second) out.push_back("duplicate disease name \"" + d.name + "\"");
    if (!(d.prior >= 0.0 && d.prior <= 1.0)) {
      out.push_back("disease \"" + d.name + "\": prior out of [0,1]");
    }
    prior_sum += d.prior;
  }
  if (!spec.diseases.empty() && !(std::abs(prior_sum - 1.0) <= kPriorSumTolerance)) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "priors sum to " << prior_sum << ", expected 1";
    out.push_back(msg.str());
  }

  seen.clear();
  for (std::size_t i = 0; i < spec.findings.size(); ++i) {
    const auto& f = spec.findings[i];
    if (f.name.empty()) out.push_back("finding " + std::to_string(i) + ": empty name");
    if (!seen.insert(f.name).second) out.push_back("duplicate finding name \"" + f.name + "\"");
  }

  std::set<std::pair<DiseaseId, FindingId>> pairs;
  for (std::size_t e = 0; e < spec.edges.size(); ++e) {
    const auto& edge = spec.edges[e];
    const auto tag = "edge " + std::to_string(e);
    bool refs_ok = true;
    if (edge.disease >= spec.diseases.size()) {
      out.push_back(tag + ": unknown disease");
      refs_ok = false;
    }
    if (edge.finding >= spec.findings.size()) {
      out.push_back(tag + ": unknown finding");
      refs_ok = false;
    }
    if (!(edge.prob > 0.0 && edge.prob <= 1.0)) out.push_back(tag + ": edge prob out of (0,1]");
    if (refs_ok && !pairs.emplace(edge.disease, edge.finding).second) {
      out.push_back(tag + ": duplicate edge (" + spec.diseases[edge.disease].name + ", " +
                    spec.findings[edge.finding].name + ")");
    }
  }
  return out;
}

QmrNetwork::QmrNetwork(NetworkSpec spec) {
  if (auto violations = validate(spec); !violations.empty()) {
    throw ValidationError(std::move(violations));
  }
  diseases_ = std::move(spec.diseases);
  findings_ = std::move(spec.findings);
  edges_ = std::move(spec.edges);

  index_fd_.resize(findings_.size());
  index_df_.resize(diseases_.size());
  for (const auto& e : edges_) {
    index_fd_[e.finding].push_back({e.disease, e.prob});
    index_df_[e.disease].push_back({e.finding, e.prob});
  }
  auto by_id = [](const Link& a, const Link& b) { return a.id < b.id; };
  for (auto& v : index_fd_) std::sort(v.begin(), v.end(), by_id);
  for (auto& v : index_df_) std::sort(v.begin(), v.end(), by_id);

  for (DiseaseId j = 0; j < diseases_.size(); ++j) disease_by_name_.emplace(diseases_[j].name, j);
  for (FindingId i = 0; i < findings_.size(); ++i) finding_by_name_.emplace(findings_[i].name, i);
}

double QmrNetwork::edge_prob(DiseaseId d, FindingId f) const {
  const auto links = findings_of(d);
  const auto it = std::lower_bound(links.begin(), links.end(), f,
                                   [](const Link& l, FindingId id) { return l.id < id; });
  return (it != links.end() && it->id == f) ? it->prob : 0.0;
}

std::optional<DiseaseId> QmrNetwork::find_disease(std::string_view name) const {
  const auto it = disease_by_name_.find(trim_name(name));
  if (it == disease_by_name_.end()) return std::nullopt;
  return it->second;
}

std::optional<FindingId> QmrNetwork::find_finding(std::string_view name) const {
  const auto it = finding_by_name_.find(trim_name(name));
  if (it == finding_by_name_.end()) return std::nullopt;
  return it->second;
}

FindingId QmrNetwork::finding_id(std::string_view name) const {
  if (auto id = find_finding(name)) return *id;
  throw std::out_of_range("unknown finding \"" + std::string(name) + "\"");
}

DiseaseId QmrNetwork::disease_id(std::string_view name) const {
  if (auto id = find_disease(name)) return *id;
  throw std::out_of_range("unknown disease \"" + std::string(name) + "\"");
}

std::vector<double> QmrNetwork::priors() const {
  std::vector<double> out;
  out.reserve(diseases_.size());
  for (const auto& d : diseases_) out.push_back(d.prior);
  return out;
}

NetworkStats network_stats(const QmrNetwork& net) {
  NetworkStats s;
  s.diseases = net.num_diseases();
  s.findings = net.num_findings();
  s.edges = net.edges().size();
  for (FindingId f = 0; f < net.num_findings(); ++f) {
    if (!net.diseases_of(f).empty()) ++s.connected_findings;
  }
  if (s.diseases > 0) s.findings_per_disease = double(s.edges) / double(s.diseases);
  if (s.connected_findings > 0) {
    s.diseases_per_finding = double(s.edges) / double(s.connected_findings);
  }
  return s;
}

}  // namespace qmrdx
