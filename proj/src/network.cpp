#include "bnkit/network.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>
#include <sstream>

namespace bnkit {

std::optional<State> Variable::state_index(std::string_view label) const {
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k] == label) return static_cast<State>(k);
  }
  return std::nullopt;
}

Dag::Dag(std::vector<Variable> variables, std::vector<Edge> edges)
    : variables_(std::move(variables)) {
  const std::size_t n = variables_.size();
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  parents_.resize(n);
  children_.resize(n);
  for (const Edge& e : edges) {
    if (e.parent >= n || e.child >= n) {
      throw Error(ErrorCode::kInvalidSchema, "edge references variable index out of range");
    }
    parents_[e.child].push_back(e.parent);
    children_[e.parent].push_back(e.child);
  }
  for (auto& p : parents_) std::sort(p.begin(), p.end());
  for (auto& c : children_) std::sort(c.begin(), c.end());
  edges_ = std::move(edges);
}

bool Dag::has_edge(std::size_t parent, std::size_t child) const {
  return std::binary_search(edges_.begin(), edges_.end(), Edge{parent, child});
}

std::size_t Dag::num_configs(std::size_t i) const {
  std::size_t q = 1;
  for (std::size_t p : parents_.at(i)) q *= variables_[p].cardinality();
  return q;
}

std::optional<std::size_t> Dag::find(std::string_view name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Dag::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(ErrorCode::kUnknownVariable, "no variable named '" + std::string(name) + "'");
}

std::vector<std::size_t> Dag::find_cycle() const {
  const std::size_t n = size();
  // 0 = unvisited, 1 = on stack, 2 = done
  std::vector<int> color(n, 0);
  std::vector<std::size_t> stack;
  std::vector<std::size_t> next_child(n, 0);
  for (std::size_t start = 0; start < n; ++start) {
    if (color[start] != 0) continue;
    stack.push_back(start);
    color[start] = 1;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      if (next_child[v] < children_[v].size()) {
        const std::size_t w = children_[v][next_child[v]++];
        if (color[w] == 1) {
          auto it = std::find(stack.begin(), stack.end(), w);
          return {it, stack.end()};
        }
        if (color[w] == 0) {
          color[w] = 1;
          stack.push_back(w);
        }
      } else {
        color[v] = 2;
        stack.pop_back();
      }
    }
  }
  return {};
}

std::vector<std::size_t> Dag::topological_order() const {
  const std::size_t n = size();
  std::vector<std::size_t> indegree(n);
  for (std::size_t i = 0; i < n; ++i) indegree[i] = parents_[i].size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(n);
  while (!ready.empty()) {
    const std::size_t v = ready.top();
    ready.pop();
    order.push_back(v);
    for (std::size_t w : children_[v]) {
      if (--indegree[w] == 0) ready.push(w);
    }
  }
  if (order.size() != n) throw Error(ErrorCode::kCycleDetected, "graph contains a directed cycle");
  return order;
}

Cpt::Cpt(std::size_t child, std::vector<std::size_t> parents, std::size_t num_configs,
         std::size_t num_states, std::vector<double> values)
    : child_(child),
      parents_(std::move(parents)),
      num_configs_(num_configs),
      num_states_(num_states),
      values_(std::move(values)) {}

Cpt Cpt::uniform(const Dag& dag, std::size_t child) {
  const std::size_t q = dag.num_configs(child);
  const std::size_t r = dag.cardinality(child);
  return Cpt(child, dag.parents(child), q, r, std::vector<double>(q * r, 1.0 / r));
}

Network Network::uniform(Dag dag) {
  std::vector<Cpt> cpts;
  cpts.reserve(dag.size());
  for (std::size_t i = 0; i < dag.size(); ++i) cpts.push_back(Cpt::uniform(dag, i));
  return Network(std::move(dag), std::move(cpts));
}

std::vector<ValidationIssue> validate_network(const Network& net) {
  std::vector<ValidationIssue> issues;
  const Dag& dag = net.dag();
  const std::size_t n = dag.size();

  std::set<std::string> names;
  for (const Variable& v : dag.variables()) {
    if (!names.insert(v.name).second) {
      issues.push_back({ErrorCode::kInvalidSchema, "duplicate variable name '" + v.name + "'"});
    }
    if (v.states.size() < 2) {
      issues.push_back({ErrorCode::kInvalidSchema, "variable '" + v.name + "' has fewer than 2 states"});
    }
    std::set<std::string> labels(v.states.begin(), v.states.end());
    if (labels.size() != v.states.size()) {
      issues.push_back({ErrorCode::kInvalidSchema, "variable '" + v.name + "' has duplicate state labels"});
    }
  }

  if (auto cycle = dag.find_cycle(); !cycle.empty()) {
    std::ostringstream os;
    for (std::size_t v : cycle) os << dag.variable(v).name << " -> ";
    os << dag.variable(cycle.front()).name;
    issues.push_back({ErrorCode::kCycleDetected, os.str()});
  }

  if (net.cpts().size() != n) {
    issues.push_back({ErrorCode::kShapeMismatch, "expected " + std::to_string(n) + " CPTs, found " +
                                                     std::to_string(net.cpts().size())});
    return issues;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Cpt& cpt = net.cpt(i);
    const std::string& name = dag.variable(i).name;
    if (cpt.child() != i) {
      issues.push_back({ErrorCode::kShapeMismatch, "CPT " + std::to_string(i) + " is for child " +
                                                       std::to_string(cpt.child())});
      continue;
    }
    if (cpt.parents() != dag.parents(i)) {
      issues.push_back({ErrorCode::kShapeMismatch, "CPT parents of '" + name + "' differ from graph parents"});
      continue;
    }
    const std::size_t q = dag.num_configs(i);
    const std::size_t r = dag.cardinality(i);
    if (cpt.num_configs() != q || cpt.num_states() != r || cpt.values().size() != q * r) {
      issues.push_back({ErrorCode::kShapeMismatch, "CPT of '" + name + "' should be " + std::to_string(q) +
                                                       "x" + std::to_string(r)});
      continue;
    }
    for (std::size_t j = 0; j < q; ++j) {
      double sum = 0.0;
      bool in_range = true;
      for (double v : cpt.row(j)) {
        if (!(v >= 0.0 && v <= 1.0)) in_range = false;
        sum += v;
      }
      if (!in_range) {
        issues.push_back({ErrorCode::kShapeMismatch, "CPT of '" + name + "' row " + std::to_string(j) +
                                                         " has a value outside [0,1]"});
      } else if (std::abs(sum - 1.0) > kRowTolerance) {
        std::ostringstream os;
        os.precision(12);
        os << "i=" << i << " (" << name << "), j=" << j << ", sum=" << sum;
        issues.push_back({ErrorCode::kRowNotNormalized, os.str()});
      }
    }
  }
  return issues;
}

void require_valid(const Network& net) {
  auto issues = validate_network(net);
  if (!issues.empty()) throw Error(issues.front().code, issues.front().detail);
}

Network renormalize_rows(const Network& net) {
  std::vector<Cpt> cpts = net.cpts();
  for (Cpt& cpt : cpts) {
    for (std::size_t j = 0; j < cpt.num_configs(); ++j) {
      auto row = cpt.row(j);
      double sum = 0.0;
      for (double v : row) sum += v;
      if (sum != 1.0 && std::abs(sum - 1.0) <= kRowTolerance) {
        for (double& v : row) v /= sum;
      }
    }
  }
  return Network(net.dag(), std::move(cpts));
}

std::size_t parent_config_index(const Dag& dag, std::size_t i, const Assignment& assignment) {
  std::size_t j = 0;
  for (std::size_t p : dag.parents(i)) {
    const State s = p < assignment.size() ? assignment[p] : kMissing;
    if (s == kMissing) {
      throw Error(ErrorCode::kMissingParentValue,
                  "parent '" + dag.variable(p).name + "' of '" + dag.variable(i).name + "' is unassigned");
    }
    j = j * dag.cardinality(p) + static_cast<std::size_t>(s);
  }
  return j;
}

std::vector<State> parent_config_states(const Dag& dag, std::size_t i, std::size_t j) {
  const auto& parents = dag.parents(i);
  std::vector<State> states(parents.size());
  for (std::size_t t = parents.size(); t-- > 0;) {
    const std::size_t card = dag.cardinality(parents[t]);
    states[t] = static_cast<State>(j % card);
    j /= card;
  }
  return states;
}

double joint_probability(const Network& net, const Assignment& x) {
  const std::size_t n = net.size();
  if (x.size() != n || std::find(x.begin(), x.end(), kMissing) != x.end()) {
    throw Error(ErrorCode::kPartialAssignment, "joint probability needs a value for every variable");
  }
  double p = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    p *= net.cpt(i)(parent_config_index(net.dag(), i, x), static_cast<std::size_t>(x[i]));
  }
  return p;
}

}  // namespace bnkit
