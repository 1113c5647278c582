#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bnkit/factor.hpp"
#include "bnkit/network.hpp"

namespace bnkit {

/// P(target | evidence). When the evidence has probability zero the
/// distribution is empty and zero_evidence is set.
struct Posterior {
  std::size_t variable = 0;
  std::vector<double> distribution;
  Assignment evidence;
  bool zero_evidence = false;
};

struct Clique {
  std::vector<std::size_t> vars;  // ascending
};

struct Separator {
  std::size_t a = 0;  // parent side in the tree rooted at clique 0
  std::size_t b = 0;
  std::vector<std::size_t> vars;
};

/// Evidence-dependent state of a junction tree after message passing.
class Calibration {
 public:
  bool zero_evidence() const { return zero_evidence_; }
  /// log P(evidence) in nats; -infinity when zero_evidence().
  double log_evidence() const { return log_evidence_; }

  /// P(clique vars | evidence), normalized.
  const Factor& clique(std::size_t c) const { return cliques_.at(c); }
  const Factor& separator(std::size_t s) const { return separators_.at(s); }
  std::size_t num_cliques() const { return cliques_.size(); }

  /// P(vars | evidence) for a set contained in one clique.
  Factor marginal(std::span<const std::size_t> vars) const;
  /// P({i} U parents(i) | evidence) from the clique holding the family.
  Factor family_marginal(std::size_t i) const;

  /// One more collect/distribute pass over the calibrated tables; a calibrated
  /// tree is a fixed point.
  void pass_messages();

 private:
  friend class JunctionTree;
  const class JunctionTree* tree_ = nullptr;
  std::vector<Factor> cliques_;
  std::vector<Factor> separators_;
  bool zero_evidence_ = false;
  double log_evidence_ = 0.0;

  void collect(std::size_t c, double& log_scale);
  void distribute(std::size_t c);
  void absorb(std::size_t from, std::size_t to, std::size_t sep);
};

/// Clique tree over the min-fill triangulation of the moral graph, with CPTs
/// folded into clique potentials. Immutable once built; calibrate() returns a
/// fresh evidence-dependent copy, so concurrent queries are safe.
class JunctionTree {
 public:
  explicit JunctionTree(const Network& net);

  const Network& network() const { return net_; }
  const std::vector<Clique>& cliques() const { return cliques_; }
  const std::vector<Separator>& separators() const { return separators_; }
  /// Clique that received the CPT of variable i.
  std::size_t family_clique(std::size_t i) const { return family_clique_.at(i); }
  /// Lowest-index clique containing every variable in `vars`, or cliques().size().
  std::size_t find_clique(std::span<const std::size_t> vars) const;

  Calibration calibrate(const Assignment& evidence) const;

  /// Throws TargetInEvidence when the target is observed.
  Posterior query(const Assignment& evidence, std::size_t target) const;

 private:
  friend class Calibration;
  Network net_;
  std::vector<Clique> cliques_;
  std::vector<Separator> separators_;
  std::vector<std::vector<std::size_t>> child_separators_;  // rooted at clique 0
  std::vector<std::size_t> family_clique_;
  std::vector<std::size_t> evidence_clique_;
  std::vector<Factor> potentials_;
};

/// Elimination order chosen by min-fill on the moral graph, ties to the lowest
/// variable index. Exposed for tests.
std::vector<std::size_t> min_fill_order(const Dag& dag);

inline constexpr std::size_t kDefaultEnumerationCap = std::size_t{1} << 20;

/// Brute-force posterior by summing joint_probability over every completion
/// of the unobserved variables. Throws StateSpaceTooLarge when their joint
/// state space exceeds `cap`.
Posterior enumerate_posterior(const Network& net, const Assignment& evidence, std::size_t target,
                              std::size_t cap = kDefaultEnumerationCap);

struct Classification {
  State predicted = kMissing;
  Posterior posterior;
};

/// Index of the largest entry, lowest index on ties.
State argmax_state(std::span<const double> distribution);

/// Argmax of the decision-node posterior. When the evidence is impossible the
/// prediction is kMissing and posterior.zero_evidence is set.
Classification classify(const JunctionTree& jt, const Assignment& evidence, std::size_t decision);

/// P(query | evidence) by variable elimination over the ancestral subgraph of
/// query and evidence. The factor is normalized; an all-zero factor means the
/// evidence is impossible. Observed query variables are fixed to their value.
Factor posterior_joint(const Network& net, const Assignment& evidence, std::span<const std::size_t> query);

}  // namespace bnkit
