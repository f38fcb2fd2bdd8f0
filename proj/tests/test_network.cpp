#include <random>

#include "common.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "qmrdx/network_io.hpp"
#include "qmrdx/simulator.hpp"
#include "qmrdx/synthetic.hpp"

using namespace qmrdx;

namespace {

bool has_violation(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

// index_fd / index_df rebuilt from the edge list
void check_indexes(const QmrNetwork& net) {
  std::vector<std::vector<Link>> fd(net.num_findings()), df(net.num_diseases());
  for (const auto& e : net.edges()) {
    fd[e.finding].push_back({e.disease, e.prob});
    df[e.disease].push_back({e.finding, e.prob});
  }
  auto by_id = [](const Link& a, const Link& b) { return a.id < b.id; };
  for (auto& v : fd) std::sort(v.begin(), v.end(), by_id);
  for (auto& v : df) std::sort(v.begin(), v.end(), by_id);
  for (FindingId f = 0; f < net.num_findings(); ++f) {
    const auto got = net.diseases_of(f);
    REQUIRE(std::vector<Link>(got.begin(), got.end()) == fd[f]);
  }
  for (DiseaseId d = 0; d < net.num_diseases(); ++d) {
    const auto got = net.findings_of(d);
    REQUIRE(std::vector<Link>(got.begin(), got.end()) == df[d]);
  }
}

}  // namespace

TEST_CASE("symcat snapshot loads with uniform priors") {
  const auto& net = snapshot();
  CHECK(net.num_diseases() == 2);
  // the listing has 6 distinct findings (Sharp abdominal pain is shared)
  CHECK(net.num_findings() == 6);
  CHECK(net.edges().size() == 7);
  CHECK(net.disease(snap::aaa).prior == 0.5);
  CHECK(net.disease(snap::hernia).prior == 0.5);
  CHECK(net.disease(snap::aaa).name == "abdominal-aortic-aneurysm");
  CHECK(net.finding(snap::groin).name == "Groin mass");
  CHECK(net.edge_prob(snap::aaa, snap::back) == 0.35);
  CHECK(net.edge_prob(snap::hernia, snap::back) == 0.0);
  CHECK(net.diseases_of(snap::sharp).size() == 2);
  CHECK(validate(net.to_spec()).empty());
  check_indexes(net);
}

TEST_CASE("symcat single disease gets prior 1") {
  const auto net = parse_network(R"({"only": [["f", 1.0]]})", NetworkFormat::Symcat);
  CHECK(net.num_diseases() == 1);
  CHECK(net.disease(0).prior == 1.0);
  CHECK(net.edge_prob(0, 0) == 1.0);
}

TEST_CASE("format detection") {
  const auto text = read_text_file(data_path("snapshot_symcat.json"));
  CHECK(parse_network(text, NetworkFormat::Auto).num_findings() == 6);
  CHECK_THROWS_AS(parse_network(text, NetworkFormat::Native), ParseError);
  CHECK_THROWS_AS(parse_network("{not json", NetworkFormat::Auto), ParseError);
  CHECK(parse_network_format("symcat") == NetworkFormat::Symcat);
  CHECK_THROWS(parse_network_format("xml"));
}

TEST_CASE("native priors must sum to one") {
  const char* text = R"({"diseases":[{"name":"a","prior":0.6},{"name":"b","prior":0.6}],
    "findings":[{"name":"x"}],"edges":[{"disease":"a","finding":"x","prob":0.5}]})";
  try {
    parse_network(text, NetworkFormat::Native);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    CHECK(has_violation(e.violations(), "priors sum to"));
  }
}

TEST_CASE("validate reports every violation") {
  NetworkSpec spec;
  spec.diseases = {{"a", 0.5}, {"b", 0.5}};
  spec.findings = {{"x"}, {"y"}};
  spec.edges = {{0, 0, 0.0}, {1, 7, 0.5}, {0, 1, 0.4}};
  const auto v = validate(spec);
  CHECK(has_violation(v, "edge prob out of (0,1]"));
  CHECK(has_violation(v, "unknown finding"));
  CHECK(v.size() >= 2);

  spec.edges = {{0, 0, 0.3}, {0, 0, 0.4}};
  spec.diseases.push_back({"a", 0.0});
  const auto w = validate(spec);
  CHECK(w.size() >= 2);  // duplicate edge and duplicate name

  spec = {};
  CHECK(!validate(spec).empty());
  CHECK_THROWS_AS(QmrNetwork{spec}, ValidationError);
}

TEST_CASE("names are trimmed and matched exactly") {
  const auto& net = snapshot();
  CHECK(net.find_finding("  Back pain ") == snap::back);
  CHECK(!net.find_finding("back pain"));
  CHECK_THROWS_AS(net.finding_id("nope"), std::out_of_range);
}

TEST_CASE("native round trip") {
  std::mt19937 rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto net = oracle::random_network(rng);
    const auto again = parse_network(to_native_json(net), NetworkFormat::Native);
    const auto a = net.to_spec(), b = again.to_spec();
    REQUIRE(a.diseases.size() == b.diseases.size());
    for (std::size_t j = 0; j < a.diseases.size(); ++j) {
      CHECK(a.diseases[j].name == b.diseases[j].name);
      CHECK(a.diseases[j].prior == b.diseases[j].prior);
    }
    REQUIRE(a.findings.size() == b.findings.size());
    REQUIRE(a.edges.size() == b.edges.size());
    for (std::size_t e = 0; e < a.edges.size(); ++e) {
      CHECK(a.edges[e].disease == b.edges[e].disease);
      CHECK(a.edges[e].finding == b.edges[e].finding);
      CHECK(a.edges[e].prob == b.edges[e].prob);
    }
    check_indexes(again);
  }
}

TEST_CASE("dialogue cases") {
  const auto cases = load_dialogue_cases(data_path("urti_case.json"));
  REQUIRE(cases.size() == 1);
  CHECK(cases[0].disease == "URTI");
  REQUIRE(cases[0].explicit_findings.size() == 4);
  for (const auto& [name, v] : cases[0].explicit_findings) CHECK(v);
  REQUIRE(cases[0].implicit_findings.size() == 2);
  for (const auto& [name, v] : cases[0].implicit_findings) CHECK(!v);
  CHECK(cases[0].implicit_findings[0].first == "Phlegm");

  CHECK(parse_dialogue_cases("[]").empty());
  CHECK_THROWS_AS(parse_dialogue_cases(
                      R"([{"disease":"x","explicit":{"Cough":true},"implicit":{"Cough":false}}])"),
                  ParseError);
  // round trip
  CHECK(parse_dialogue_cases(to_dialogue_json(cases))[0].implicit_findings ==
        cases[0].implicit_findings);
}

TEST_CASE("build network from cases") {
  auto make = [](const std::string& d, std::vector<std::pair<std::string, bool>> ex,
                 std::vector<std::pair<std::string, bool>> im = {}) {
    return DialogueCase{d, std::move(ex), std::move(im)};
  };
  SUBCASE("unanimous positive") {
    const auto b = build_network_from_cases({make("A", {{"Fever", true}}), make("A", {{"Fever", true}})},
                                            PriorMode::Uniform);
    CHECK(b.network.edge_prob(0, 0) == 1.0);
  }
  SUBCASE("count ratio") {
    std::vector<DialogueCase> cases{make("A", {{"Fever", true}}), make("A", {{"Fever", true}}),
                                    make("A", {{"Cough", true}}, {{"Fever", true}}),
                                    make("A", {{"Cough", true}}, {{"Fever", false}})};
    const auto b = build_network_from_cases(cases, PriorMode::Uniform);
    const auto& net = b.network;
    CHECK(net.edge_prob(0, net.finding_id("Fever")) == doctest::Approx(3.0 / 4.0));
    CHECK(net.edge_prob(0, net.finding_id("Cough")) == doctest::Approx(0.5));
  }
  SUBCASE("priors") {
    std::vector<DialogueCase> cases;
    for (int i = 0; i < 6; ++i) cases.push_back(make("A", {{"x", true}}));
    for (int i = 0; i < 2; ++i) cases.push_back(make("B", {{"y", true}}));
    cases.push_back(make("C", {{"x", true}}));
    cases.push_back(make("D", {{"z", true}}, {{"x", false}}));
    const auto u = build_network_from_cases(cases, PriorMode::Uniform);
    for (const auto& d : u.network.diseases()) CHECK(d.prior == doctest::Approx(0.25));
    const auto e = build_network_from_cases(cases, PriorMode::Empirical);
    CHECK(e.network.disease(0).prior == doctest::Approx(0.6));
    CHECK(e.network.disease(1).prior == doctest::Approx(0.2));
    // zero estimates produce no edge
    CHECK(e.network.edge_prob(3, e.network.finding_id("x")) == 0.0);
  }
  SUBCASE("disease without positives warns") {
    const auto b = build_network_from_cases({make("A", {{"x", true}}), make("B", {{"x", false}})},
                                            PriorMode::Uniform);
    CHECK(b.warnings.size() == 1);
  }
  CHECK_THROWS_AS(build_network_from_cases({}, PriorMode::Uniform), std::invalid_argument);
}

TEST_CASE("build-net recovers edge probabilities of a known network") {
  const auto truth = generate_synthetic_network({4, 12, 5, 0.1, 0.9, 3});
  const auto cohort = sample_cohort(truth, 4000, 9);
  std::vector<DialogueCase> cases;
  std::vector<std::size_t> per_disease(truth.num_diseases());
  for (const auto& c : cohort) {
    DialogueCase dc;
    dc.disease = truth.disease(c.true_disease).name;
    for (FindingId f = 0; f < truth.num_findings(); ++f) {
      dc.implicit_findings.push_back({truth.finding(f).name, bool(c.finding_states[f])});
    }
    ++per_disease[c.true_disease];
    cases.push_back(std::move(dc));
  }
  const auto built = build_network_from_cases(cases, PriorMode::Empirical).network;
  for (const auto& e : truth.edges()) {
    const auto& dname = truth.disease(e.disease).name;
    const auto& fname = truth.finding(e.finding).name;
    const auto d = built.disease_id(dname);
    const auto f = built.finding_id(fname);
    // sampled cases are conditioned on at least one positive finding
    double none = 1.0;
    for (const auto& l : truth.findings_of(e.disease)) none *= 1.0 - l.prob;
    const double expect = e.prob / (1.0 - none);
    const double n = double(per_disease[e.disease]);
    const double se = std::sqrt(expect * (1.0 - expect) / n);
    CHECK(std::abs(built.edge_prob(d, f) - expect) <= 3.0 * se + 1e-12);
  }
}

TEST_CASE("synthetic generator") {
  const auto hpo = generate_synthetic_network({500, 1901, 9.682, 0.1, 0.9, 1});
  const auto st = network_stats(hpo);
  CHECK(st.diseases == 500);
  CHECK(std::abs(st.findings_per_disease - 9.682) <= 0.1 * 9.682);
  for (const auto& e : hpo.edges()) {
    CHECK(e.prob >= 0.1);
    CHECK(e.prob <= 0.9);
  }
  for (const auto& d : hpo.diseases()) CHECK(d.prior == doctest::Approx(1.0 / 500));
  check_indexes(hpo);

  const auto tiny = generate_synthetic_network({1, 1, 1, 1.0, 1.0, 0});
  REQUIRE(tiny.edges().size() == 1);
  CHECK(tiny.edges()[0].prob == 1.0);

  const auto a = generate_synthetic_network({30, 40, 4, 0.2, 0.7, 11});
  const auto b = generate_synthetic_network({30, 40, 4, 0.2, 0.7, 11});
  CHECK(to_native_json(a) == to_native_json(b));
  CHECK(to_native_json(a) != to_native_json(generate_synthetic_network({30, 40, 4, 0.2, 0.7, 12})));

  CHECK_THROWS_AS(generate_synthetic_network({3, 2, 5, 0.1, 0.9, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic_network({3, 2, 1, 0.5, 0.4, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate_synthetic_network({0, 2, 1, 0.1, 0.4, 0}), std::invalid_argument);
}
