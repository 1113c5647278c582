#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <sstream>

#include "bnkit/evaluate.hpp"
#include "bnkit/inference.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bnkit;
using namespace bnkit::testing;

namespace {

double missing_fraction(const Dataset& d) {
  return static_cast<double>(d.missing_cells()) / static_cast<double>(d.size() * d.num_variables());
}

// Chi-square goodness of fit of variable v's sampled marginal at level alpha.
bool marginal_fits(const Network& net, const Dataset& d, std::size_t v, double alpha) {
  JunctionTree jt(net);
  const Posterior p = jt.query(Assignment(net.size(), kMissing), v);
  std::vector<double> observed(p.distribution.size(), 0.0);
  for (const auto& x : d.records()) observed[static_cast<std::size_t>(x[v])] += 1.0;
  double stat = 0.0;
  std::size_t cells = 0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double expected = p.distribution[k] * static_cast<double>(d.size());
    if (expected <= 0.0) continue;
    stat += (observed[k] - expected) * (observed[k] - expected) / expected;
    ++cells;
  }
  if (cells < 2) return true;
  boost::math::chi_squared dist(static_cast<double>(cells - 1));
  return stat <= boost::math::quantile(dist, 1.0 - alpha);
}

}  // namespace

TEST_CASE("forward_sample") {
  SUBCASE("deterministic network repeats the forced assignment") {
    Network det = make_network({var("A", 2), var("B", 3)}, {{0, 1}}, {{0.0, 1.0}, {1.0, 0.0, 0.0, 0.0, 0.0, 1.0}});
    Dataset d = forward_sample(det, 50, 3);
    for (const auto& x : d.records()) CHECK(x == Assignment{1, 2});
  }
  SUBCASE("fair coin frequency within a 4-sigma band") {
    Dataset d = forward_sample(single_node(0.5), 10000, 7);
    std::size_t ones = 0;
    for (const auto& x : d.records()) ones += x[0] == 1;
    CHECK(ones >= 4800);
    CHECK(ones <= 5200);
  }
  SUBCASE("same seed, same data") {
    Rng rng(2);
    Network net = random_network({.num_variables = 6}, rng);
    CHECK(forward_sample(net, 100, 9).records() == forward_sample(net, 100, 9).records());
    CHECK(forward_sample(net, 100, 9).records() != forward_sample(net, 100, 10).records());
  }
}

TEST_CASE("sampled marginals pass a chi-square fit") {
  Rng rng(99);
  int passed = 0;
  for (int t = 0; t < 50; ++t) {
    Network net = random_network({.num_variables = 2 + rng.below(9), .max_states = 3}, rng);
    Dataset d = forward_sample(net, 10000, static_cast<std::uint64_t>(t));
    const std::size_t v = net.dag().topological_order().back();
    passed += marginal_fits(net, d, v, 0.01);
  }
  CHECK(passed >= 48);
}

TEST_CASE("mask_mcar") {
  Rng rng(4);
  Network net = random_network({.num_variables = 10}, rng);
  Dataset d = forward_sample(net, 5000, 1);
  SUBCASE("rate zero leaves the data unchanged") {
    CHECK(mask_mcar(d, {.rate = 0.0, .seed = 1}).records() == d.records());
  }
  SUBCASE("missing fraction near the rate") {
    const double f = missing_fraction(mask_mcar(d, {.rate = 0.3, .seed = 2}));
    CHECK(f >= 0.29);
    CHECK(f <= 0.31);
  }
  SUBCASE("exempt columns stay observed and observed cells are untouched") {
    Dataset m = mask_mcar(d, {.rate = 0.5, .seed = 3, .exempt = {4}});
    for (std::size_t r = 0; r < d.size(); ++r) {
      CHECK(m.record(r)[4] == d.record(r)[4]);
      for (std::size_t v = 0; v < d.num_variables(); ++v) {
        if (m.record(r)[v] != kMissing) CHECK(m.record(r)[v] == d.record(r)[v]);
      }
    }
  }
  SUBCASE("per-variable overrides") {
    Dataset m = mask_mcar(d, {.rate = 0.0, .seed = 5, .overrides = {{2, 0.9}}});
    std::size_t hidden = 0;
    for (const auto& x : m.records()) {
      hidden += x[2] == kMissing;
      CHECK(x[3] != kMissing);
    }
    CHECK(hidden >= 4400);
    CHECK(hidden <= 4600);
    CHECK_THROWS_AS(mask_mcar(d, {.rate = 1.0}), Error);
  }
}

TEST_CASE("tumor schema") {
  TumorSchema t = tumor_schema();
  CHECK(t.generator.size() == 30);
  CHECK(t.physician.size() == 30);
  CHECK(t.characteristics.size() == 21);
  CHECK(t.intermediates.size() == 8);
  CHECK(t.generator.dag().variable(t.decision).name == "DT");
  CHECK(validate_network(t.generator).empty());
  CHECK(t.physician.is_acyclic());
  CHECK(t.physician.children(t.decision).empty());
  CHECK(t.generator.dag().parents(t.decision).empty());

  const auto& prior = t.generator.cpt(t.decision).values();
  CHECK(std::abs(prior[2] - 0.3194) < 1e-4);
  CHECK(t.prior_smoothed);
  CHECK(prior[6] > 0.0);
  CHECK(prior[6] < 2e-6);
  double sum = 0.0;
  for (double p : prior) sum += p;
  CHECK(std::abs(sum - 1.0) < 1e-12);

  // four levels: characteristics -> level 2 -> level 3 -> DT
  for (std::size_t c : t.characteristics) {
    REQUIRE(t.physician.children(c).size() == 1);
    const std::size_t l2 = t.physician.children(c)[0];
    REQUIRE(t.physician.children(l2).size() == 1);
    const std::size_t l3 = t.physician.children(l2)[0];
    CHECK(t.physician.children(l3) == std::vector<std::size_t>{t.decision});
  }
  CHECK(tumor_schema(1).generator.cpts()[0].values() == t.generator.cpts()[0].values());
}

TEST_CASE("precision") {
  CHECK(precision(15, 17) == doctest::Approx(0.882).epsilon(1e-3));
  CHECK(precision(12, 17) == doctest::Approx(0.706).epsilon(1e-3));
  CHECK_THROWS_AS(precision(0, 0), Error);
}

TEST_CASE("evaluate") {
  SUBCASE("a deterministic model classifies its own samples perfectly") {
    Network det = make_network({var("C", 3), var("F", 3)}, {{0, 1}},
                               {{0.2, 0.3, 0.5}, {0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0}});
    Dataset test = forward_sample(det, 40, 1);
    ExperimentReport r = evaluate(det, test, {1}, 0);
    CHECK(r.precision == 1.0);
    CHECK(r.total == 40);
    std::size_t diagonal = 0;
    for (std::size_t k = 0; k < 3; ++k) diagonal += r.confusion[k][k];
    CHECK(diagonal == 40);
  }
  SUBCASE("confusion rows add up to the per-class counts") {
    Rng rng(6);
    Network net = random_network({.num_variables = 5}, rng);
    Dataset test = forward_sample(net, 200, 2);
    ExperimentReport r = evaluate(net, test, {0, 1, 2, 3}, 4);
    std::vector<std::size_t> per_class(net.dag().cardinality(4), 0);
    for (const auto& x : test.records()) ++per_class[static_cast<std::size_t>(x[4])];
    for (std::size_t k = 0; k < per_class.size(); ++k) {
      std::size_t row = 0;
      for (std::size_t c : r.confusion[k]) row += c;
      CHECK(row == per_class[k]);
    }
    CHECK(r.precision >= 0.0);
    CHECK(r.precision <= 1.0);
  }
  SUBCASE("errors") {
    Network net = single_node(0.5);
    CHECK_THROWS_AS(evaluate(net, Dataset({var("X", 2)}), {}, 0), Error);
    CHECK_THROWS_AS(evaluate(net, single_column({kMissing}), {}, 0), Error);
  }
}

TEST_CASE("generating model matches the brute-force Bayes classifier") {
  TumorSchema t = tumor_schema();
  JunctionTree jt(t.generator);
  Dataset test = forward_sample(t.generator, 40, 8);
  for (const auto& x : test.records()) {
    Assignment e(t.generator.size(), kMissing);
    for (std::size_t c : t.characteristics) e[c] = x[c];
    const Posterior brute = enumerate_posterior(t.generator, e, t.decision);
    CHECK(classify(jt, e, t.decision).predicted == argmax_state(brute.distribution));
  }
}

TEST_CASE("experiment configuration") {
  ExperimentConfig c = default_experiment();
  CHECK(c.records == 77);
  CHECK(c.train == 60);
  CHECK(c.missing_rate == 0.3);
  CHECK(c.evidence.size() == 21);
  ExperimentData d = experiment_data(c);
  CHECK(d.train.size() == 60);
  CHECK(d.test.size() == 17);
  CHECK(d.test.is_complete());
  for (const auto& x : d.train.records()) CHECK(x[c.decision] != kMissing);

  Json j = parse_json(R"({"records": 30, "train": 20, "runs": [{"id": "a", "structure": "nb", "params": "em"}]})");
  ExperimentConfig small = experiment_from_json(j);
  CHECK(small.records == 30);
  CHECK(small.runs.size() == 1);
  CHECK(small.runs[0].params == "em");
  CHECK_THROWS_AS(experiment_from_json(parse_json(R"({"recrods": 30})")), Error);
  CHECK_THROWS_AS(experiment_from_json(parse_json(R"({"runs": [{"mode": "sometimes"}]})")), Error);
  CHECK_THROWS_AS(experiment_from_json(parse_json(R"({"records": 10, "train": 10})")), Error);
}

TEST_CASE("runs, comparison table and plot series") {
  Json j = parse_json(R"({"records": 40, "train": 30, "seed": 3, "runs": [
      {"id": "nb-em", "structure": "nb", "params": "em"},
      {"id": "nb-ems", "structure": "nb", "params": "ems", "mode": "post-hoc"},
      {"id": "generating", "structure": "generating"}]})");
  ExperimentConfig c = experiment_from_json(j);
  std::vector<ExperimentReport> reports = run_experiments(c);
  REQUIRE(reports.size() == 3);
  CHECK(reports[0].iterations > 0);
  CHECK(reports[0].ll_trace.size() == reports[0].iterations);
  CHECK(reports[1].bound_satisfaction_trace.size() == reports[1].iterations + 1);
  CHECK(reports[2].params == "none");

  SUBCASE("deterministic") {
    std::vector<ExperimentReport> again = run_experiments(c);
    CHECK(dump_json(compare_runs(again, false)) == dump_json(compare_runs(reports, false)));
    CHECK(comparison_csv(again, false) == comparison_csv(reports, false));
  }
  SUBCASE("table sorted by precision with a fixed header") {
    const std::string csv = comparison_csv(reports, false);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == kComparisonColumns);
    double last = 2.0;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
      const double p = std::stod(cells.at(3));
      CHECK(p <= last);
      last = p;
    }
    CHECK(comparison_csv(reports, true).find(",wall_time_s\n") != std::string::npos);
  }
  SUBCASE("JSON round trip") {
    for (const auto& r : reports) {
      const Json a = to_json(r, true);
      CHECK(dump_json(to_json(report_from_json(parse_json(dump_json(a))), true)) == dump_json(a));
    }
  }
  SUBCASE("trace series") {
    const std::string csv = trace_csv(reports);
    CHECK(csv.rfind("run_id,iteration,ll,bound_satisfaction\n", 0) == 0);
    CHECK(csv.find("nb-em,1,") != std::string::npos);
  }
}
