#include <random>

#include "common.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "qmrdx/simulator.hpp"

using namespace qmrdx;

TEST_CASE("deterministic network") {
  const QmrNetwork net(NetworkSpec{{{"d", 1.0}}, {{"f"}}, {{0, 0, 1.0}}});
  for (const auto& c : sample_cohort(net, 50, 4)) {
    CHECK(c.true_disease == 0);
    CHECK(c.finding_states[0]);
    CHECK(c.initial_positive == 0);
    CHECK(patient_answer(c, 0));
  }
}

TEST_CASE("snapshot frequencies") {
  const auto& net = snapshot();
  const std::size_t n = 20000;
  const auto cases = sample_cohort(net, n, 2024);
  std::size_t hernia = 0, aaa = 0, back = 0;
  for (const auto& c : cases) {
    if (c.true_disease == snap::hernia) ++hernia;
    if (c.true_disease == snap::aaa) {
      ++aaa;
      back += c.finding_states[snap::back];
    }
  }
  const double sigma = std::sqrt(0.25 / n);
  CHECK(std::abs(double(hernia) / n - 0.5) <= 3 * sigma);

  // accepted cases are conditioned on at least one positive finding
  const double cond = 0.35 / (1.0 - 0.47 * 0.65 * 0.72);
  CHECK(std::abs(double(back) / aaa - cond) <= 3 * std::sqrt(cond * (1 - cond) / aaa));

  // the raw noisy-OR draw follows the edge probability
  Rng rng = stream_for(99, 0);
  std::size_t raw = 0;
  for (std::size_t i = 0; i < n; ++i) raw += sample_finding_states(net, snap::aaa, rng)[snap::back];
  CHECK(std::abs(double(raw) / n - 0.35) <= 3 * std::sqrt(0.35 * 0.65 / n));
}

TEST_CASE("raw draws follow edge probabilities on a random network") {
  std::mt19937 gen(2);
  const auto net = oracle::random_network(gen, {4, 4, 8, 8, 0.5, false, true});
  const std::size_t n = 20000;
  for (DiseaseId d = 0; d < net.num_diseases(); ++d) {
    Rng rng = stream_for(7, d);
    std::vector<std::size_t> count(net.num_findings());
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = sample_finding_states(net, d, rng);
      for (FindingId f = 0; f < net.num_findings(); ++f) count[f] += s[f];
    }
    for (FindingId f = 0; f < net.num_findings(); ++f) {
      const double p = net.edge_prob(d, f);
      const double se = std::sqrt(p * (1 - p) / n);
      CHECK(std::abs(double(count[f]) / n - p) <= 3 * se + 1e-12);
    }
  }
}

TEST_CASE("case invariants and determinism") {
  std::mt19937 gen(6);
  for (int t = 0; t < 20; ++t) {
    const auto net = oracle::random_network(gen);
    const auto a = sample_cohort(net, 100, t);
    CHECK(a == sample_cohort(net, 100, t));
    const auto prefix = sample_cohort(net, 10, t);
    CHECK(std::equal(prefix.begin(), prefix.end(), a.begin()));
    for (const auto& c : a) {
      CHECK(net.disease(c.true_disease).prior > 0.0);
      CHECK(c.finding_states[c.initial_positive]);
      bool any = false;
      for (FindingId f = 0; f < net.num_findings(); ++f) {
        if (net.edge_prob(c.true_disease, f) == 0.0) CHECK(!c.finding_states[f]);
        any = any || c.finding_states[f];
        CHECK(patient_answer(c, f) == patient_answer(c, f));
      }
      CHECK(any);
    }
    CHECK_THROWS_AS(patient_answer(a[0], FindingId(net.num_findings())), std::out_of_range);
  }
}

TEST_CASE("strongest-edge initial finding") {
  const auto& net = snapshot();
  for (const auto& c : sample_cohort(net, 200, 5, InitialFindingRule::StrongestEdge)) {
    for (FindingId f = 0; f < net.num_findings(); ++f) {
      if (c.finding_states[f]) {
        CHECK(net.edge_prob(c.true_disease, f) <= net.edge_prob(c.true_disease, c.initial_positive));
      }
    }
  }
  CHECK(parse_initial_rule("strongest") == InitialFindingRule::StrongestEdge);
  CHECK_THROWS(parse_initial_rule("first"));
}

TEST_CASE("a disease that cannot produce findings is an error") {
  const QmrNetwork net(NetworkSpec{{{"mute", 1.0}}, {{"f"}}, {}});
  auto rng = stream_for(1, 0);
  CHECK_THROWS_AS(sample_case(net, rng), std::runtime_error);
}

TEST_CASE("case dump round trip") {
  const auto& net = snapshot();
  const auto cases = sample_cohort(net, 30, 8);
  const auto text = cases_to_json(net, cases);
  CHECK(text.find("\"all_states\"") != std::string::npos);
  CHECK(cases_from_json(net, text) == cases);
  CHECK_THROWS_AS(cases_from_json(net, "{}"), ParseError);
}
