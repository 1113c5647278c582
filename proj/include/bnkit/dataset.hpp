#pragma once

#include <cstddef>
#include <vector>

#include "bnkit/network.hpp"

namespace bnkit {

/// Records over a fixed variable schema; a cell is a state index or kMissing.
class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Variable> schema, std::vector<Assignment> records = {});

  const std::vector<Variable>& schema() const { return schema_; }
  std::size_t num_variables() const { return schema_.size(); }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const std::vector<Assignment>& records() const { return records_; }
  const Assignment& record(std::size_t r) const { return records_.at(r); }
  void add(Assignment record);

  bool is_complete() const;
  std::size_t missing_cells() const;

  Dataset subset(std::size_t first, std::size_t count) const;

 private:
  std::vector<Variable> schema_;
  std::vector<Assignment> records_;
};

/// Throws InvalidSchema unless the dataset columns match the network variables
/// (names and state labels, in order).
void require_same_schema(const Dag& dag, const Dataset& data);

/// N_{i,j,k} per variable, laid out like the CPT (row j, column k). Values are
/// doubles so that expected counts share the type.
struct Counts {
  std::vector<std::vector<double>> tables;

  static Counts zeros(const Dag& dag);
  double& at(const Dag& dag, std::size_t i, std::size_t j, std::size_t k) {
    return tables[i][j * dag.cardinality(i) + k];
  }
  double at(const Dag& dag, std::size_t i, std::size_t j, std::size_t k) const {
    return tables[i][j * dag.cardinality(i) + k];
  }
  void add(const Counts& other);
};

/// Exact tallies; throws IncompleteData when a cell is missing.
Counts complete_counts(const Dag& dag, const Dataset& data);

/// Log-likelihood in nats. A positive count on a zero parameter makes the
/// value -infinity, flagged by neg_infinity rather than thrown.
struct LogLikelihood {
  double value = 0.0;
  bool neg_infinity = false;
};

/// sum_i sum_j sum_k N_{i,j,k} log theta_{i,j,k} with 0 log 0 = 0.
LogLikelihood log_likelihood(const Network& net, const Counts& counts);
LogLikelihood log_likelihood(const Network& net, const Dataset& complete_data);

}  // namespace bnkit
