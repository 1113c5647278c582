#include "bnkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace bnkit {

Dataset::Dataset(std::vector<Variable> schema, std::vector<Assignment> records)
    : schema_(std::move(schema)) {
  records_.reserve(records.size());
  for (auto& r : records) add(std::move(r));
}

void Dataset::add(Assignment record) {
  if (record.size() != schema_.size()) {
    throw Error(ErrorCode::kShapeMismatch, "record has " + std::to_string(record.size()) +
                                               " cells, schema has " + std::to_string(schema_.size()));
  }
  for (std::size_t i = 0; i < record.size(); ++i) {
    const State s = record[i];
    if (s != kMissing && (s < 0 || static_cast<std::size_t>(s) >= schema_[i].cardinality())) {
      throw Error(ErrorCode::kUnknownState, "state index " + std::to_string(s) + " out of range for '" +
                                                schema_[i].name + "'");
    }
  }
  records_.push_back(std::move(record));
}

bool Dataset::is_complete() const { return missing_cells() == 0; }

std::size_t Dataset::missing_cells() const {
  std::size_t missing = 0;
  for (const auto& r : records_) missing += static_cast<std::size_t>(std::count(r.begin(), r.end(), kMissing));
  return missing;
}

Dataset Dataset::subset(std::size_t first, std::size_t count) const {
  first = std::min(first, records_.size());
  count = std::min(count, records_.size() - first);
  return Dataset(schema_, std::vector<Assignment>(records_.begin() + static_cast<std::ptrdiff_t>(first),
                                                  records_.begin() + static_cast<std::ptrdiff_t>(first + count)));
}

void require_same_schema(const Dag& dag, const Dataset& data) {
  if (dag.size() != data.num_variables()) {
    throw Error(ErrorCode::kInvalidSchema, "dataset has " + std::to_string(data.num_variables()) +
                                               " columns, network has " + std::to_string(dag.size()));
  }
  for (std::size_t i = 0; i < dag.size(); ++i) {
    const Variable& a = dag.variable(i);
    const Variable& b = data.schema()[i];
    if (a.name != b.name || a.states != b.states) {
      throw Error(ErrorCode::kInvalidSchema, "column " + std::to_string(i) + " ('" + b.name +
                                                 "') does not match network variable '" + a.name + "'");
    }
  }
}

Counts Counts::zeros(const Dag& dag) {
  Counts c;
  c.tables.resize(dag.size());
  for (std::size_t i = 0; i < dag.size(); ++i) c.tables[i].assign(dag.num_configs(i) * dag.cardinality(i), 0.0);
  return c;
}

void Counts::add(const Counts& other) {
  for (std::size_t i = 0; i < tables.size(); ++i) {
    for (std::size_t t = 0; t < tables[i].size(); ++t) tables[i][t] += other.tables[i][t];
  }
}

Counts complete_counts(const Dag& dag, const Dataset& data) {
  Counts counts = Counts::zeros(dag);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const Assignment& x = data.record(r);
    if (std::find(x.begin(), x.end(), kMissing) != x.end()) {
      throw Error(ErrorCode::kIncompleteData,
                  "record " + std::to_string(r) + " has missing cells; use EM for incomplete data");
    }
    for (std::size_t i = 0; i < dag.size(); ++i) {
      counts.at(dag, i, parent_config_index(dag, i, x), static_cast<std::size_t>(x[i])) += 1.0;
    }
  }
  return counts;
}

LogLikelihood log_likelihood(const Network& net, const Counts& counts) {
  LogLikelihood ll;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& theta = net.cpt(i).values();
    const auto& n = counts.tables[i];
    for (std::size_t t = 0; t < n.size(); ++t) {
      if (n[t] == 0.0) continue;
      if (theta[t] <= 0.0) {
        ll.neg_infinity = true;
        continue;
      }
      ll.value += n[t] * std::log(theta[t]);
    }
  }
  if (ll.neg_infinity) ll.value = -std::numeric_limits<double>::infinity();
  return ll;
}

LogLikelihood log_likelihood(const Network& net, const Dataset& complete_data) {
  return log_likelihood(net, complete_counts(net.dag(), complete_data));
}

}  // namespace bnkit
