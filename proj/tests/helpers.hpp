#pragma once

#include <cmath>
#include <vector>

#include "bnkit/dataset.hpp"
#include "bnkit/network.hpp"

namespace bnkit::testing {

inline Variable var(const std::string& name, std::size_t states) {
  Variable v{name, {}};
  for (std::size_t k = 0; k < states; ++k) v.states.push_back("s" + std::to_string(k));
  return v;
}

/// Builds a network from per-variable rows (row-major, k fastest).
inline Network make_network(std::vector<Variable> vars, std::vector<Edge> edges,
                            const std::vector<std::vector<double>>& tables) {
  Dag dag(std::move(vars), std::move(edges));
  std::vector<Cpt> cpts;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    cpts.emplace_back(i, dag.parents(i), dag.num_configs(i), dag.cardinality(i), tables.at(i));
  }
  return Network(std::move(dag), std::move(cpts));
}

/// A -> B with P(A=1)=0.5, P(B=1|A=1)=0.8, P(B=1|A=0)=0.3.
inline Network bayes_rule_chain() {
  return make_network({var("A", 2), var("B", 2)}, {{0, 1}}, {{0.5, 0.5}, {0.7, 0.3, 0.2, 0.8}});
}

/// Single binary node with theta = (p0, 1 - p0).
inline Network single_node(double p0) { return make_network({var("X", 2)}, {}, {{p0, 1.0 - p0}}); }

inline Dataset single_column(const std::vector<State>& cells, std::size_t states = 2) {
  Dataset d({var("X", states)});
  for (State s : cells) d.add({s});
  return d;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return a.size() == b.size() ? m : INFINITY;
}

}  // namespace bnkit::testing
