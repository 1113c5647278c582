#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bnkit/error.hpp"

namespace bnkit {

using State = std::int32_t;
inline constexpr State kMissing = -1;

/// One value per network variable; kMissing marks an unassigned (or
/// unobserved) variable. Used both for evidence and for dataset records.
using Assignment = std::vector<State>;

struct Variable {
  std::string name;
  std::vector<std::string> states;

  std::size_t cardinality() const { return states.size(); }
  std::optional<State> state_index(std::string_view label) const;
};

struct Edge {
  std::size_t parent = 0;
  std::size_t child = 0;

  auto operator<=>(const Edge&) const = default;
};

/// Variables plus a directed edge set. Construction does not reject cycles so
/// that malformed models can still be loaded and reported on.
class Dag {
 public:
  Dag() = default;
  Dag(std::vector<Variable> variables, std::vector<Edge> edges);

  std::size_t size() const { return variables_.size(); }
  const std::vector<Variable>& variables() const { return variables_; }
  const Variable& variable(std::size_t i) const { return variables_.at(i); }
  std::size_t cardinality(std::size_t i) const { return variables_.at(i).cardinality(); }

  /// Sorted, duplicate-free.
  const std::vector<Edge>& edges() const { return edges_; }
  /// Ascending variable index.
  const std::vector<std::size_t>& parents(std::size_t i) const { return parents_.at(i); }
  const std::vector<std::size_t>& children(std::size_t i) const { return children_.at(i); }
  bool has_edge(std::size_t parent, std::size_t child) const;

  /// q_i: product of parent cardinalities (1 for a root).
  std::size_t num_configs(std::size_t i) const;

  std::optional<std::size_t> find(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;  // throws UnknownVariable

  /// Empty when acyclic, otherwise the variables of one directed cycle in order.
  std::vector<std::size_t> find_cycle() const;
  bool is_acyclic() const { return find_cycle().empty(); }
  /// Kahn order with lowest index first among ready nodes. Throws CycleDetected.
  std::vector<std::size_t> topological_order() const;

  Dag with_edges(std::vector<Edge> edges) const { return Dag(variables_, std::move(edges)); }

 private:
  std::vector<Variable> variables_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
};

/// Conditional probability table theta_{i,j,k}: num_configs() rows (parent
/// configurations j), num_states() columns (child states k), row-major.
class Cpt {
 public:
  Cpt() = default;
  Cpt(std::size_t child, std::vector<std::size_t> parents, std::size_t num_configs,
      std::size_t num_states, std::vector<double> values);

  /// Uniform rows shaped for variable `child` of `dag`.
  static Cpt uniform(const Dag& dag, std::size_t child);

  std::size_t child() const { return child_; }
  const std::vector<std::size_t>& parents() const { return parents_; }
  std::size_t num_configs() const { return num_configs_; }
  std::size_t num_states() const { return num_states_; }

  double operator()(std::size_t j, std::size_t k) const { return values_[j * num_states_ + k]; }
  double& operator()(std::size_t j, std::size_t k) { return values_[j * num_states_ + k]; }
  std::span<const double> row(std::size_t j) const {
    return {values_.data() + j * num_states_, num_states_};
  }
  std::span<double> row(std::size_t j) { return {values_.data() + j * num_states_, num_states_}; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  std::size_t child_ = 0;
  std::vector<std::size_t> parents_;
  std::size_t num_configs_ = 0;
  std::size_t num_states_ = 0;
  std::vector<double> values_;
};

class Network {
 public:
  Network() = default;
  Network(Dag dag, std::vector<Cpt> cpts) : dag_(std::move(dag)), cpts_(std::move(cpts)) {}

  /// Every CPT uniform.
  static Network uniform(Dag dag);

  const Dag& dag() const { return dag_; }
  std::size_t size() const { return dag_.size(); }
  const std::vector<Variable>& variables() const { return dag_.variables(); }
  const std::vector<Cpt>& cpts() const { return cpts_; }
  const Cpt& cpt(std::size_t i) const { return cpts_.at(i); }

 private:
  Dag dag_;
  std::vector<Cpt> cpts_;
};

struct ValidationIssue {
  ErrorCode code;
  std::string detail;
};

inline constexpr double kRowTolerance = 1e-9;

/// All problems found; empty means the network is valid.
std::vector<ValidationIssue> validate_network(const Network& net);
/// Throws the first issue reported by validate_network.
void require_valid(const Network& net);

/// Rows whose sum is within kRowTolerance of 1 are rescaled to sum exactly to 1;
/// other rows are left untouched for validation to reject.
Network renormalize_rows(const Network& net);

/// Mixed-radix index of the parents' states: ascending parent index, last
/// parent varies fastest.
std::size_t parent_config_index(const Dag& dag, std::size_t i, const Assignment& assignment);
/// Inverse of parent_config_index: parent states in dag.parents(i) order.
std::vector<State> parent_config_states(const Dag& dag, std::size_t i, std::size_t j);

/// Product of theta_{i, j(x), x_i}. Throws PartialAssignment.
double joint_probability(const Network& net, const Assignment& x);

}  // namespace bnkit
