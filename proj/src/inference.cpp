#include <algorithm>
#include <limits>

#include "bnkit/inference.hpp"

namespace bnkit {

Posterior enumerate_posterior(const Network& net, const Assignment& evidence, std::size_t target, std::size_t cap) {
  const Dag& dag = net.dag();
  const std::size_t n = dag.size();
  if (target >= n) throw Error(ErrorCode::kUnknownVariable, "target index out of range");
  if (target < evidence.size() && evidence[target] != kMissing) {
    throw Error(ErrorCode::kTargetInEvidence, "'" + dag.variable(target).name + "' is part of the evidence");
  }
  std::size_t space = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < evidence.size() && evidence[i] != kMissing) continue;
    if (space > cap / dag.cardinality(i)) {
      throw Error(ErrorCode::kStateSpaceTooLarge, "unobserved state space exceeds " + std::to_string(cap));
    }
    space *= dag.cardinality(i);
  }

  std::vector<std::size_t> free_vars;
  Assignment x(n, kMissing);
  for (std::size_t i = 0; i < n; ++i) {
    if (i < evidence.size() && evidence[i] != kMissing) {
      x[i] = evidence[i];
    } else {
      free_vars.push_back(i);
      x[i] = 0;
    }
  }

  Posterior post;
  post.variable = target;
  post.evidence = evidence;
  std::vector<double> mass(dag.cardinality(target), 0.0);
  while (true) {
    mass[static_cast<std::size_t>(x[target])] += joint_probability(net, x);
    std::size_t t = free_vars.size();
    while (t-- > 0) {
      const std::size_t v = free_vars[t];
      if (static_cast<std::size_t>(++x[v]) < dag.cardinality(v)) break;
      x[v] = 0;
    }
    if (t == std::numeric_limits<std::size_t>::max()) break;
  }
  double total = 0.0;
  for (double m : mass) total += m;
  if (total <= 0.0) {
    post.zero_evidence = true;
    return post;
  }
  for (double& m : mass) m /= total;
  post.distribution = std::move(mass);
  return post;
}

State argmax_state(std::span<const double> distribution) {
  State best = kMissing;
  double best_p = -1.0;
  for (std::size_t k = 0; k < distribution.size(); ++k) {
    if (distribution[k] > best_p) {
      best_p = distribution[k];
      best = static_cast<State>(k);
    }
  }
  return best;
}

Classification classify(const JunctionTree& jt, const Assignment& evidence, std::size_t decision) {
  Classification out;
  out.posterior = jt.query(evidence, decision);
  if (!out.posterior.zero_evidence) out.predicted = argmax_state(out.posterior.distribution);
  return out;
}

Factor posterior_joint(const Network& net, const Assignment& evidence, std::span<const std::size_t> query) {
  const Dag& dag = net.dag();
  const std::size_t n = dag.size();
  auto observed = [&](std::size_t v) { return v < evidence.size() && evidence[v] != kMissing; };

  std::vector<std::size_t> query_sorted(query.begin(), query.end());
  std::sort(query_sorted.begin(), query_sorted.end());
  query_sorted.erase(std::unique(query_sorted.begin(), query_sorted.end()), query_sorted.end());

  // Ancestral closure of query and evidence; everything else sums to one.
  std::vector<bool> relevant(n, false);
  std::vector<std::size_t> stack;
  for (std::size_t v : query_sorted) stack.push_back(v);
  for (std::size_t v = 0; v < n; ++v) {
    if (observed(v)) stack.push_back(v);
  }
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (relevant[v]) continue;
    relevant[v] = true;
    for (std::size_t p : dag.parents(v)) stack.push_back(p);
  }

  std::vector<Factor> factors;
  for (std::size_t i = 0; i < n; ++i) {
    if (!relevant[i]) continue;
    Factor f = Factor::from_cpt(dag, net.cpt(i));
    for (std::size_t v : std::vector<std::size_t>(f.vars())) {
      if (observed(v)) f = f.reduce(v, evidence[v]);
    }
    factors.push_back(std::move(f));
  }

  std::vector<std::size_t> keep;
  for (std::size_t v : query_sorted) {
    if (!observed(v)) keep.push_back(v);
  }
  std::vector<std::size_t> to_eliminate;
  for (std::size_t v = 0; v < n; ++v) {
    if (relevant[v] && !observed(v) && !std::binary_search(keep.begin(), keep.end(), v)) to_eliminate.push_back(v);
  }

  while (!to_eliminate.empty()) {
    // Greedy: the variable whose bucket product is smallest, lowest index on ties.
    std::size_t best_pos = 0;
    std::size_t best_size = std::numeric_limits<std::size_t>::max();
    for (std::size_t t = 0; t < to_eliminate.size(); ++t) {
      std::vector<std::size_t> scope;
      for (const Factor& f : factors) {
        if (f.contains(to_eliminate[t])) scope.insert(scope.end(), f.vars().begin(), f.vars().end());
      }
      std::sort(scope.begin(), scope.end());
      scope.erase(std::unique(scope.begin(), scope.end()), scope.end());
      std::size_t size = 1;
      for (std::size_t v : scope) size *= dag.cardinality(v);
      if (size < best_size) {
        best_size = size;
        best_pos = t;
      }
    }
    const std::size_t var = to_eliminate[best_pos];
    to_eliminate.erase(to_eliminate.begin() + static_cast<std::ptrdiff_t>(best_pos));
    Factor bucket;
    std::vector<Factor> rest;
    for (Factor& f : factors) {
      if (f.contains(var)) {
        bucket = bucket.product(f);
      } else {
        rest.push_back(std::move(f));
      }
    }
    std::vector<std::size_t> remaining;
    for (std::size_t v : bucket.vars()) {
      if (v != var) remaining.push_back(v);
    }
    rest.push_back(bucket.marginal(remaining));
    factors = std::move(rest);
  }

  Factor joint;
  for (const Factor& f : factors) joint = joint.product(f);
  joint = joint.marginal(keep);
  joint.normalize();

  if (keep.size() == query_sorted.size()) return joint;

  // Re-insert observed query variables as point masses.
  std::vector<std::size_t> cards;
  for (std::size_t v : query_sorted) cards.push_back(dag.cardinality(v));
  Factor out(query_sorted, cards, 0.0);
  Assignment x(n, kMissing);
  for (std::size_t v : query_sorted) {
    if (observed(v)) x[v] = evidence[v];
  }
  for (std::size_t idx = 0; idx < joint.size(); ++idx) {
    const auto states = joint.decode(idx);
    for (std::size_t t = 0; t < keep.size(); ++t) x[keep[t]] = states[t];
    out[out.index_of(x)] = joint[idx];
  }
  return out;
}

}  // namespace bnkit
