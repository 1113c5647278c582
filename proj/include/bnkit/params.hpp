#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "bnkit/dataset.hpp"
#include "bnkit/io.hpp"
#include "bnkit/network.hpp"

namespace bnkit {

/// Pseudo-counts alpha_{i,j,k} >= 0 added to the tallies before normalizing.
struct DirichletPrior {
  Counts alpha;

  static DirichletPrior none(const Dag& dag);
  static DirichletPrior uniform(const Dag& dag, double alpha);
  /// Tallies of a complete dataset of fabricated ("imaginary") cases.
  static DirichletPrior from_imaginary_cases(const Dag& dag, const Dataset& cases);
};

using RowRef = std::pair<std::size_t, std::size_t>;  // (variable i, parent configuration j)

struct MleResult {
  Network network;
  /// Rows with no counts and no pseudo-counts, set to uniform.
  std::vector<RowRef> uniform_rows;
};

/// theta_{i,j,k} = (N_{i,j,k} + alpha_{i,j,k}) / sum_k (N_{i,j,k} + alpha_{i,j,k}).
MleResult mle_from_counts(const Dag& dag, const Counts& counts, const DirichletPrior* prior = nullptr);
/// Closed form on complete data; throws IncompleteData otherwise.
MleResult mle(const Dag& dag, const Dataset& data, const DirichletPrior* prior = nullptr);

/// Probability intervals [min_{i,j,k}, max_{i,j,k}] from one pass over the data.
///
/// For each family, n_{ijk} counts records that observe X_i = k and every
/// parent with configuration j. m_{ij} counts records where X_i or some parent
/// is missing but every observed parent agrees with configuration j (missing
/// parents match any configuration). The interval charges all of that
/// unresolved mass against, or in favour of, each state:
///
///   min = n_{ijk} / (n_{ij.} + m_{ij}),  max = (n_{ijk} + m_{ij}) / (n_{ij.} + m_{ij})
///
/// and is [0, 1] when n_{ij.} + m_{ij} = 0.
struct BoundTable {
  Counts min;
  Counts max;
};

BoundTable rbe_phase1_bounds(const Dag& dag, const Dataset& data);

inline constexpr double kBoundSlack = 1e-12;

/// Fraction of parameters with min - 1e-12 <= theta <= max + 1e-12, in [0, 1].
double bound_satisfaction(const Network& net, const BoundTable& bounds);

/// Step iii: theta := clamp(theta, min, max), rows left unnormalized.
Network clamp_to_bounds(const Network& net, const BoundTable& bounds);
/// Step iv: theta'_{i,j,k} = theta_{i,j,k} / sum_k' theta_{i,j,k'}. All-zero rows
/// become uniform and are reported through `degenerate`.
Network normalize_rows(const Network& net, std::vector<RowRef>* degenerate = nullptr);

/// Expected sufficient statistics under `net`, plus the observed-data
/// log-likelihood sum_r log P(observed cells of record r).
struct Expectation {
  Counts counts;
  LogLikelihood log_likelihood;
};

/// E-step: junction-tree family posteriors for every record with missing cells.
Expectation expected_counts(const Network& net, const Dataset& data);

enum class InitKind { kDirichlet, kUniform, kGiven };

/// Parameters seen inside one EM/EMS iteration. `clamped` is set only when
/// thresholding ran in that iteration.
struct IterationView {
  std::size_t iteration = 0;
  const Network& maximized;
  const Network* clamped = nullptr;
  const Network& result;
};
enum class ThresholdMode { kPerIteration, kPostHoc };

struct EmOptions {
  double tolerance = 1e-6;
  std::size_t max_iterations = 200;
  InitKind init = InitKind::kDirichlet;
  std::uint64_t seed = 0;
  /// Starting parameters when init == kGiven.
  std::optional<Network> initial;
  std::optional<DirichletPrior> prior;
  /// Intervals for thresholding and bound_satisfaction; rbe_phase1_bounds of
  /// the data when absent.
  std::optional<BoundTable> bounds;
  std::function<void(const IterationView&)> observer;
};

struct EmIteration {
  /// Observed-data log-likelihood of the parameters produced by this iteration
  /// (equals the complete-data log-likelihood when nothing is missing).
  LogLikelihood ll;
  /// sum E[N_{i,j,k}] log theta_{i,j,k}: this iteration's parameters scored on
  /// the expected counts they were fitted to.
  LogLikelihood expected_ll;
  /// After normalization (EMS) or after the M-step (EM).
  double bound_satisfaction = 0.0;
  /// After thresholding, before normalization; EMS per-iteration mode only.
  std::optional<double> clamped_bound_satisfaction;
};

struct EmTrace {
  LogLikelihood initial_ll;
  std::vector<EmIteration> iterations;
  /// Post-hoc thresholding applied after convergence.
  std::optional<EmIteration> post_hoc;
  bool converged = false;
  double wall_time_s = 0.0;
  std::vector<RowRef> uniform_rows;
  std::vector<RowRef> degenerate_rows;

  std::size_t num_iterations() const { return iterations.size(); }
  const EmIteration& final_iteration() const { return post_hoc ? *post_hoc : iterations.back(); }
};

struct EmResult {
  Network network;
  EmTrace trace;
};

/// Starting parameters for EM/EMS as selected by the options.
Network initial_parameters(const Dag& dag, const EmOptions& options);

/// Standard EM. Stops when |delta LL| < tolerance, after max_iterations, or
/// after one iteration when the data is complete.
EmResult em(const Dag& dag, const Dataset& data, const EmOptions& options = {});

/// EM with thresholding into the RBE phase-1 intervals followed by row
/// normalization, either after every M-step or once after EM converges.
EmResult ems(const Dag& dag, const Dataset& data, const EmOptions& options = {},
             ThresholdMode mode = ThresholdMode::kPerIteration);

Json to_json(const BoundTable& bounds, const Dag& dag);
/// {"iterations":[{"ll":..,"expected_ll":..,"bound_satisfaction":..}], "converged":..,
///  "wall_time_s":..}; wall time is omitted unless include_timing.
Json to_json(const EmTrace& trace, bool include_timing);

}  // namespace bnkit
