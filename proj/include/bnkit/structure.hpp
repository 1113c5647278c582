#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bnkit/dataset.hpp"
#include "bnkit/factor.hpp"
#include "bnkit/inference.hpp"
#include "bnkit/io.hpp"
#include "bnkit/params.hpp"

namespace bnkit {

/// Symmetric pairwise edge weights (mutual information in nats).
class WeightMatrix {
 public:
  explicit WeightMatrix(std::size_t n) : n_(n), w_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t a, std::size_t b) const { return w_[a * n_ + b]; }
  void set(std::size_t a, std::size_t b, double w) { w_[a * n_ + b] = w_[b * n_ + a] = w; }

 private:
  std::size_t n_;
  std::vector<double> w_;
};

// Empirical estimates use the records observing every variable involved
// (pairwise-complete); NoCompletePairs when there are none.
double mutual_information(const Dataset& data, std::size_t x, std::size_t y);
double conditional_mutual_information(const Dataset& data, std::size_t x, std::size_t y, std::size_t c);
/// MI of a (possibly fractional) joint count table over two variables.
double mutual_information(const Factor& pair_counts);

/// MI for every pair of columns; pairs that are never observed together get 0.
WeightMatrix mutual_information_matrix(const Dataset& data);

/// Maximum-weight spanning tree (Kruskal; equal weights broken by the
/// lexicographically smaller pair) oriented away from `root` by depth-first
/// traversal visiting neighbours in ascending order.
std::vector<Edge> mwst(const WeightMatrix& weights, std::size_t root);

Dag naive_bayes(const std::vector<Variable>& schema, std::size_t cls, std::span<const std::size_t> features);
/// Naive Bayes over every other column.
Dag naive_bayes(const std::vector<Variable>& schema, std::size_t cls);

/// Feature tree weighted by CMI given the class, rooted at the feature with the
/// largest MI with the class, plus class -> feature arcs.
Dag tan(const Dataset& data, std::size_t cls);
/// TAN with feature arcs whose CMI is below tau removed.
Dag fan(const Dataset& data, std::size_t cls, double tau = 0.01);

/// Free parameters: sum_i q_i (r_i - 1).
std::size_t dimension(const Dag& dag);

struct Score {
  double value = 0.0;
  LogLikelihood log_likelihood;
  double penalty = 0.0;
};

/// LL - dim/2 log N. On incomplete data LL is taken over the expected counts
/// under `fitted`. Throws EmptyData.
Score bic_score(const Network& fitted, const Dataset& data);

/// Expected joint counts of arbitrary variable sets under a fixed model,
/// summed over the records and cached per set.
class ExpectedStats {
 public:
  ExpectedStats(const Network& model, const Dataset& data);
  ExpectedStats(ExpectedStats&&) noexcept;
  ~ExpectedStats();

  /// Counts over `vars` (sorted, distinct).
  const Factor& counts(const std::vector<std::size_t>& vars);
  /// Maximized family log-likelihood sum N(x, pa) log N(x, pa) / N(pa).
  double family_log_likelihood(std::size_t child, const std::vector<std::size_t>& parents);
  std::size_t num_records() const { return data_->size(); }

 private:
  const Calibration& calibration(std::size_t r);

  Network model_;
  const Dataset* data_;
  std::unique_ptr<JunctionTree> jt_;
  std::vector<std::unique_ptr<Calibration>> cals_;
  std::map<std::vector<std::size_t>, Factor> cache_;
};

struct StructureCandidate {
  Network network;
  std::string algorithm;
  std::uint64_t seed = 0;
  Score score;
  /// MWST-EM tree rebuilds (the first tree counts as round 1) or accepted SEM moves.
  std::size_t rounds = 0;
  /// Score after initialization and after each accepted SEM move.
  std::vector<double> score_trace;
};

struct SearchOptions {
  EmOptions em;
  std::size_t max_rounds = 10;
  std::size_t max_parents = 4;
  std::size_t max_moves = 50;
  /// Best-ranked neighbours refitted per SEM step before declaring a local optimum.
  std::size_t refit_candidates = 5;
};

/// Random root drawn from the seed when none is given.
StructureCandidate mwst_em(const Dataset& data, std::optional<std::size_t> root, std::uint64_t seed,
                           const SearchOptions& options = {});
/// Greedy add/delete/reverse search from `init` (default: chain in column order).
StructureCandidate sem(const Dataset& data, const Dag* init, std::uint64_t seed, const SearchOptions& options = {});
/// sem initialized with the MWST-EM tree.
StructureCandidate sem_plus_t(const Dataset& data, std::uint64_t seed, const SearchOptions& options = {});

enum class StructureAlgorithm { kNaiveBayes, kTan, kFan, kMwst, kMwstEm, kSem, kSemPlusT };

std::optional<StructureAlgorithm> parse_structure_algorithm(std::string_view name);
std::string_view to_string(StructureAlgorithm algo);

struct LearnStructureOptions {
  StructureAlgorithm algorithm = StructureAlgorithm::kMwstEm;
  std::optional<std::size_t> cls;
  std::optional<std::size_t> root;
  double tau = 0.01;
  std::uint64_t seed = 0;
  SearchOptions search;
};

/// Structure plus EM-fitted parameters and BIC for any algorithm. The
/// classifier structures need `cls`.
StructureCandidate learn_structure(const Dataset& data, const LearnStructureOptions& options);

/// {"algorithm", "seed", "score", "rounds"}.
Json provenance_json(const StructureCandidate& candidate);

}  // namespace bnkit
