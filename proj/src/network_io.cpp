#include "qmrdx/network_io.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace qmrdx {

using ojson = nlohmann::ordered_json;

namespace {

ojson parse_json(std::string_view text) {
  try {
    return ojson::parse(text.begin(), text.end());
  } catch (const ojson::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

double as_prob(const ojson& v, const std::string& where) {
  if (!v.is_number()) throw ParseError(where + ": expected a number");
  return v.get<double>();
}

std::string as_name(const ojson& v, const std::string& where) {
  if (!v.is_string()) throw ParseError(where + ": expected a string");
  return trim_name(v.get<std::string>());
}

// Name interning that assigns dense ids in first-seen order. Unknown names
// get an out-of-range id so validation reports them.
class NameTable {
 public:
  std::uint32_t intern(const std::string& name) {
    auto [it, inserted] = ids_.try_emplace(name, static_cast<std::uint32_t>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }
  std::uint32_t lookup(const std::string& name, std::uint32_t missing) const {
    const auto it = ids_.find(name);
    return it == ids_.end() ? missing : it->second;
  }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::unordered_map<std::string, std::uint32_t> ids_;
  std::vector<std::string> names_;
};

NetworkSpec parse_native(const ojson& doc) {
  for (const char* key : {"diseases", "findings", "edges"}) {
    if (!doc.contains(key) || !doc[key].is_array()) {
      throw ParseError(std::string("native network: missing array \"") + key + "\"");
    }
  }
  NetworkSpec spec;
  NameTable diseases;
  NameTable findings;
  for (std::size_t j = 0; j < doc["diseases"].size(); ++j) {
    const auto& d = doc["diseases"][j];
    const auto where = "diseases[" + std::to_string(j) + "]";
    if (!d.is_object()) throw ParseError(where + ": expected an object");
    auto name = as_name(d.value("name", ojson()), where + ".name");
    spec.diseases.push_back({name, as_prob(d.value("prior", ojson()), where + ".prior")});
    diseases.intern(name);
  }
  for (std::size_t i = 0; i < doc["findings"].size(); ++i) {
    const auto& f = doc["findings"][i];
    const auto where = "findings[" + std::to_string(i) + "]";
    if (!f.is_object()) throw ParseError(where + ": expected an object");
    auto name = as_name(f.value("name", ojson()), where + ".name");
    spec.findings.push_back({name});
    findings.intern(name);
  }
  const auto bad_disease = static_cast<DiseaseId>(spec.diseases.size());
  const auto bad_finding = static_cast<FindingId>(spec.findings.size());
  for (std::size_t e = 0; e < doc["edges"].size(); ++e) {
    const auto& edge = doc["edges"][e];
    const auto where = "edges[" + std::to_string(e) + "]";
    if (!edge.is_object()) throw ParseError(where + ": expected an object");
    const auto d = as_name(edge.value("disease", ojson()), where + ".disease");
    const auto f = as_name(edge.value("finding", ojson()), where + ".finding");
    spec.edges.push_back({diseases.lookup(d, bad_disease), findings.lookup(f, bad_finding),
                          as_prob(edge.value("prob", ojson()), where + ".prob")});
  }
  return spec;
}

NetworkSpec parse_symcat(const ojson& doc) {
  if (!doc.is_object()) throw ParseError("symcat network: expected a top-level object");
  NetworkSpec spec;
  NameTable findings;
  const double prior = doc.empty() ? 0.0 : 1.0 / double(doc.size());
  for (const auto& [disease, list] : doc.items()) {
    const auto d = static_cast<DiseaseId>(spec.diseases.size());
    spec.diseases.push_back({trim_name(disease), prior});
    if (!list.is_array()) throw ParseError("symcat network: \"" + disease + "\" is not a list");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto& pair = list[k];
      const auto where = disease + "[" + std::to_string(k) + "]";
      if (!pair.is_array() || pair.size() != 2) {
        throw ParseError(where + ": expected [finding, prob]");
      }
      const auto f = findings.intern(as_name(pair[0], where));
      spec.edges.push_back({d, f, as_prob(pair[1], where)});
    }
  }
  for (const auto& name : findings.names()) spec.findings.push_back({name});
  return spec;
}

FindingStates parse_states(const ojson& obj, const std::string& where) {
  FindingStates out;
  if (obj.is_null()) return out;
  if (!obj.is_object()) throw ParseError(where + ": expected an object of finding -> bool");
  for (const auto& [name, value] : obj.items()) {
    bool state = false;
    if (value.is_boolean()) {
      state = value.get<bool>();
    } else if (value.is_string() && (value == "True" || value == "true")) {
      state = true;
    } else if (value.is_string() && (value == "False" || value == "false")) {
      state = false;
    } else {
      throw ParseError(where + "." + name + ": expected a boolean");
    }
    out.emplace_back(trim_name(name), state);
  }
  return out;
}

}  // namespace

NetworkFormat parse_network_format(std::string_view name) {
  if (name == "native") return NetworkFormat::Native;
  if (name == "symcat" || name == "symcat-style") return NetworkFormat::Symcat;
  if (name == "auto") return NetworkFormat::Auto;
  throw std::invalid_argument("unknown network format \"" + std::string(name) + "\"");
}

QmrNetwork parse_network(std::string_view text, NetworkFormat format) {
  const auto doc = parse_json(text);
  if (format == NetworkFormat::Auto) {
    const bool native = doc.is_object() && doc.contains("diseases") && doc["diseases"].is_array() &&
                        doc.contains("edges");
    format = native ? NetworkFormat::Native : NetworkFormat::Symcat;
  }
  return QmrNetwork(format == NetworkFormat::Native ? parse_native(doc) : parse_symcat(doc));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

QmrNetwork load_network(const std::filesystem::path& path, NetworkFormat format) {
  return parse_network(read_text_file(path), format);
}

std::string to_native_json(const QmrNetwork& net, int indent) {
  ojson doc;
  doc["diseases"] = ojson::array();
  doc["findings"] = ojson::array();
  doc["edges"] = ojson::array();
  for (const auto& d : net.diseases()) doc["diseases"].push_back({{"name", d.name}, {"prior", d.prior}});
  for (const auto& f : net.findings()) doc["findings"].push_back({{"name", f.name}});
  for (const auto& e : net.edges()) {
    doc["edges"].push_back({{"disease", net.disease(e.disease).name},
                            {"finding", net.finding(e.finding).name},
                            {"prob", e.prob}});
  }
  return doc.dump(indent) + "\n";
}

void save_network(const std::filesystem::path& path, const QmrNetwork& net) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_native_json(net);
}

std::vector<DialogueCase> parse_dialogue_cases(std::string_view text) {
  const auto doc = parse_json(text);
  if (!doc.is_array()) throw ParseError("dialogue cases: expected a top-level list");
  std::vector<DialogueCase> cases;
  cases.reserve(doc.size());
  for (std::size_t c = 0; c < doc.size(); ++c) {
    const auto& item = doc[c];
    const auto where = "case[" + std::to_string(c) + "]";
    if (!item.is_object()) throw ParseError(where + ": expected an object");
    DialogueCase dc;
    // Also accept the goal/disease_tag layout the dialogue corpora ship with.
    const auto* goal = item.contains("goal") ? &item["goal"] : &item;
    const auto& disease = item.contains("disease") ? item["disease"] : item.value("disease_tag", ojson());
    dc.disease = as_name(disease, where + ".disease");
    const char* exp_key = goal->contains("explicit") ? "explicit" : "explicit_inform_slots";
    const char* imp_key = goal->contains("implicit") ? "implicit" : "implicit_inform_slots";
    dc.explicit_findings = parse_states(goal->value(exp_key, ojson()), where + ".explicit");
    dc.implicit_findings = parse_states(goal->value(imp_key, ojson()), where + ".implicit");

    std::set<std::string> names;
    for (const auto& [name, _] : dc.explicit_findings) names.insert(name);
    for (const auto& [name, _] : dc.implicit_findings) {
      if (names.count(name)) {
        throw ParseError(where + ": finding \"" + name + "\" is both explicit and implicit");
      }
    }
    cases.push_back(std::move(dc));
  }
  return cases;
}

std::vector<DialogueCase> load_dialogue_cases(const std::filesystem::path& path) {
  return parse_dialogue_cases(read_text_file(path));
}

std::string to_dialogue_json(const std::vector<DialogueCase>& cases) {
  ojson doc = ojson::array();
  for (const auto& c : cases) {
    ojson exp = ojson::object();
    ojson imp = ojson::object();
    for (const auto& [name, v] : c.explicit_findings) exp[name] = v;
    for (const auto& [name, v] : c.implicit_findings) imp[name] = v;
    doc.push_back({{"disease", c.disease}, {"explicit", exp}, {"implicit", imp}});
  }
  return doc.dump(1) + "\n";
}

PriorMode parse_prior_mode(std::string_view name) {
  if (name == "uniform") return PriorMode::Uniform;
  if (name == "empirical") return PriorMode::Empirical;
  throw std::invalid_argument("unknown prior mode \"" + std::string(name) + "\"");
}

BuiltNetwork build_network_from_cases(const std::vector<DialogueCase>& cases, PriorMode mode) {
  if (cases.empty()) throw std::invalid_argument("cannot build a network from zero cases");

  NameTable diseases;
  NameTable findings;
  std::vector<std::size_t> case_count;
  // positives[d][f] = number of d's cases with f recorded positive
  std::vector<std::map<FindingId, std::size_t>> positives;

  for (const auto& c : cases) {
    const auto d = diseases.intern(trim_name(c.disease));
    if (d == case_count.size()) {
      case_count.push_back(0);
      positives.emplace_back();
    }
    ++case_count[d];
    for (const auto* states : {&c.explicit_findings, &c.implicit_findings}) {
      for (const auto& [name, value] : *states) {
        const auto f = findings.intern(trim_name(name));
        if (value) ++positives[d][f];
      }
    }
  }

  std::vector<std::string> warnings;
  NetworkSpec spec;
  const double n = double(diseases.names().size());
  for (std::size_t d = 0; d < diseases.names().size(); ++d) {
    const double prior =
        mode == PriorMode::Uniform ? 1.0 / n : double(case_count[d]) / double(cases.size());
    spec.diseases.push_back({diseases.names()[d], prior});
  }
  for (const auto& name : findings.names()) spec.findings.push_back({name});
  for (std::size_t d = 0; d < positives.size(); ++d) {
    if (positives[d].empty()) {
      warnings.push_back("disease \"" + diseases.names()[d] +
                             "\" has no positive findings and cannot be diagnosed");
    }
    for (const auto& [f, count] : positives[d]) {
      spec.edges.push_back(
          {static_cast<DiseaseId>(d), f, double(count) / double(case_count[d])});
    }
  }
  return {QmrNetwork(std::move(spec)), std::move(warnings)};
}

}  // namespace qmrdx
