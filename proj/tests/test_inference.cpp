#include <algorithm>
#include <cmath>
#include <set>

#include "bnkit/generate.hpp"
#include "bnkit/inference.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace bnkit;
using namespace bnkit::testing;

namespace {

std::vector<std::vector<std::size_t>> clique_sets(const JunctionTree& jt) {
  std::vector<std::vector<std::size_t>> out;
  for (const auto& c : jt.cliques()) out.push_back(c.vars);
  return out;
}

Assignment random_evidence(const Network& net, Rng& rng, std::size_t target) {
  Assignment e(net.size(), kMissing);
  for (std::size_t v = 0; v < net.size(); ++v) {
    if (v != target && rng.bernoulli(0.4)) e[v] = static_cast<State>(rng.below(net.dag().cardinality(v)));
  }
  return e;
}

}  // namespace

TEST_CASE("junction tree shapes") {
  SUBCASE("chain A -> B -> C") {
    Dag dag({var("A", 2), var("B", 2), var("C", 2)}, {{0, 1}, {1, 2}});
    JunctionTree jt(Network::uniform(dag));
    CHECK(clique_sets(jt) == std::vector<std::vector<std::size_t>>{{0, 1}, {1, 2}});
    REQUIRE(jt.separators().size() == 1);
    CHECK(jt.separators()[0].vars == std::vector<std::size_t>{1});
  }
  SUBCASE("single node") {
    JunctionTree jt(single_node(0.3));
    CHECK(clique_sets(jt) == std::vector<std::vector<std::size_t>>{{0}});
    CHECK(jt.separators().empty());
  }
  SUBCASE("diverging A <- B -> C") {
    Dag dag({var("A", 2), var("B", 2), var("C", 2)}, {{1, 0}, {1, 2}});
    JunctionTree jt(Network::uniform(dag));
    CHECK(clique_sets(jt) == std::vector<std::vector<std::size_t>>{{0, 1}, {1, 2}});
  }
  SUBCASE("v-structure is moralized") {
    Dag dag({var("A", 2), var("B", 2), var("C", 2)}, {{0, 2}, {1, 2}});
    JunctionTree jt(Network::uniform(dag));
    CHECK(clique_sets(jt) == std::vector<std::vector<std::size_t>>{{0, 1, 2}});
  }
}

TEST_CASE("junction tree invariants on random networks") {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    Network net = random_network({.num_variables = 8, .max_states = 3}, rng);
    JunctionTree jt(net);
    const auto& cliques = jt.cliques();
    const auto& seps = jt.separators();
    CHECK(seps.size() + 1 == cliques.size());

    // every family sits in some clique
    for (std::size_t i = 0; i < net.size(); ++i) {
      std::vector<std::size_t> fam = net.dag().parents(i);
      fam.push_back(i);
      CHECK(jt.find_clique(fam) < cliques.size());
    }
    // running intersection: cliques holding v are connected through separators holding v
    for (std::size_t v = 0; v < net.size(); ++v) {
      std::set<std::size_t> holders;
      for (std::size_t c = 0; c < cliques.size(); ++c) {
        if (std::binary_search(cliques[c].vars.begin(), cliques[c].vars.end(), v)) holders.insert(c);
      }
      std::set<std::size_t> reached{*holders.begin()};
      bool grew = true;
      while (grew) {
        grew = false;
        for (const auto& s : seps) {
          if (!std::binary_search(s.vars.begin(), s.vars.end(), v)) continue;
          if (reached.count(s.a) && !reached.count(s.b)) grew = reached.insert(s.b).second;
          if (reached.count(s.b) && !reached.count(s.a)) grew = reached.insert(s.a).second;
        }
      }
      CHECK(reached == holders);
    }

    // calibrated neighbours agree on separators
    Calibration cal = jt.calibrate(random_evidence(net, rng, net.size()));
    if (cal.zero_evidence()) continue;
    for (std::size_t s = 0; s < seps.size(); ++s) {
      const Factor ma = cal.clique(seps[s].a).marginal(seps[s].vars);
      const Factor mb = cal.clique(seps[s].b).marginal(seps[s].vars);
      CHECK(max_abs_diff(ma.values(), mb.values()) < 1e-9);
    }
  }
}

TEST_CASE("query_posterior on the Bayes-rule chain") {
  JunctionTree jt(bayes_rule_chain());
  Posterior p = jt.query({kMissing, 1}, 0);
  REQUIRE_FALSE(p.zero_evidence);
  CHECK(p.distribution[1] == doctest::Approx(8.0 / 11.0).epsilon(1e-12));
  CHECK(p.distribution[0] == doctest::Approx(3.0 / 11.0).epsilon(1e-12));
  Posterior e = enumerate_posterior(bayes_rule_chain(), {kMissing, 1}, 0);
  CHECK(max_abs_diff(p.distribution, e.distribution) < 1e-12);

  Classification c = classify(jt, {kMissing, 1}, 0);
  CHECK(c.predicted == 1);
}

TEST_CASE("no evidence on a root gives its prior row") {
  JunctionTree jt(bayes_rule_chain());
  Posterior p = jt.query({kMissing, kMissing}, 0);
  CHECK(max_abs_diff(p.distribution, {0.5, 0.5}) < 1e-15);
  Posterior e = enumerate_posterior(bayes_rule_chain(), {kMissing, kMissing}, 0);
  CHECK(max_abs_diff(e.distribution, {0.5, 0.5}) < 1e-15);
}

TEST_CASE("contradictory evidence is reported as ZeroEvidence") {
  Network det = make_network({var("A", 2), var("B", 2), var("C", 2)}, {{0, 1}, {1, 2}},
                             {{0.4, 0.6}, {1.0, 0.0, 0.0, 1.0}, {0.5, 0.5, 0.5, 0.5}});
  JunctionTree jt(det);
  Posterior p = jt.query({0, 1, kMissing}, 2);
  CHECK(p.zero_evidence);
  CHECK(p.distribution.empty());
  CHECK(std::isinf(jt.calibrate({0, 1, kMissing}).log_evidence()));
  CHECK(enumerate_posterior(det, {0, 1, kMissing}, 2).zero_evidence);
  CHECK(classify(jt, {0, 1, kMissing}, 2).predicted == kMissing);
}

TEST_CASE("query errors") {
  JunctionTree jt(bayes_rule_chain());
  CHECK_THROWS_AS(jt.query({1, kMissing}, 0), Error);
  CHECK_THROWS_AS(enumerate_posterior(bayes_rule_chain(), {1, kMissing}, 0), Error);
  Rng rng(1);
  Network big = random_network({.num_variables = 12, .min_states = 3, .max_states = 3}, rng);
  CHECK_THROWS_AS(enumerate_posterior(big, Assignment(12, kMissing), 0, 1000), Error);
}

TEST_CASE("junction tree agrees with enumeration on random networks") {
  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    Network net = random_network({.num_variables = 1 + rng.below(8), .max_states = 3}, rng);
    JunctionTree jt(net);
    const std::size_t target = rng.below(net.size());
    Assignment e = random_evidence(net, rng, target);
    Posterior a = jt.query(e, target);
    Posterior b = enumerate_posterior(net, e, target);
    CHECK(a.zero_evidence == b.zero_evidence);
    if (!a.zero_evidence) worst = std::max(worst, max_abs_diff(a.distribution, b.distribution));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("log evidence matches the enumerated probability of the evidence") {
  Rng rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    Network net = random_network({.num_variables = 6}, rng);
    JunctionTree jt(net);
    Assignment e = random_evidence(net, rng, net.size());
    // P(e) by brute force
    Assignment x(net.size(), 0);
    double pe = 0.0;
    while (true) {
      bool consistent = true;
      for (std::size_t v = 0; v < net.size(); ++v) consistent &= e[v] == kMissing || e[v] == x[v];
      if (consistent) pe += joint_probability(net, x);
      std::size_t t = net.size();
      while (t-- > 0) {
        if (static_cast<std::size_t>(++x[t]) < net.dag().cardinality(t)) break;
        x[t] = 0;
      }
      if (t == static_cast<std::size_t>(-1)) break;
    }
    CHECK(jt.calibrate(e).log_evidence() == doctest::Approx(std::log(pe)).epsilon(1e-10));
  }
}

TEST_CASE("calibration is idempotent") {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    Network net = random_network({.num_variables = 8, .max_states = 3}, rng);
    JunctionTree jt(net);
    Calibration cal = jt.calibrate(random_evidence(net, rng, net.size()));
    if (cal.zero_evidence()) continue;
    Calibration again = cal;
    again.pass_messages();
    for (std::size_t c = 0; c < cal.num_cliques(); ++c) {
      CHECK(max_abs_diff(cal.clique(c).values(), again.clique(c).values()) <= 1e-12);
    }
  }
}

TEST_CASE("classify") {
  CHECK(argmax_state(std::vector<double>{0.1, 0.7, 0.2}) == 1);
  CHECK(argmax_state(std::vector<double>{0.5, 0.5}) == 0);

  // argmax is unchanged by positive rescaling
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    auto d = rng.dirichlet(5);
    const double s = 0.001 + 1000 * rng.uniform();
    std::vector<double> scaled;
    for (double v : d) scaled.push_back(v * s);
    CHECK(argmax_state(d) == argmax_state(scaled));
  }
}

TEST_CASE("variable elimination joint posterior matches enumeration") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    Network net = random_network({.num_variables = 6}, rng);
    Assignment e = random_evidence(net, rng, net.size());
    std::vector<std::size_t> query{rng.below(6), rng.below(6)};
    Factor f = posterior_joint(net, e, query);
    // Marginal of each query variable vs enumeration.
    for (std::size_t q : f.vars()) {
      if (e[q] != kMissing) continue;
      Posterior p = enumerate_posterior(net, e, q);
      if (p.zero_evidence) {
        CHECK(f.sum() == 0.0);
        continue;
      }
      const std::size_t keep[] = {q};
      CHECK(max_abs_diff(f.marginal(keep).values(), p.distribution) < 1e-9);
    }
  }
}
