#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "bnkit/dataset.hpp"
#include "bnkit/io.hpp"
#include "bnkit/network.hpp"
#include "bnkit/random.hpp"

namespace bnkit {

/// Ancestral sampling in topological order.
Dataset forward_sample(const Network& net, std::size_t n, std::uint64_t seed);

struct MaskOptions {
  double rate = 0.0;
  std::uint64_t seed = 0;
  /// Variables never masked (e.g. the decision node of a training set).
  std::vector<std::size_t> exempt;
  /// Per-variable rates replacing `rate`.
  std::map<std::size_t, double> overrides;
};

/// Hides each cell independently (MCAR). Observed values are never changed.
Dataset mask_mcar(const Dataset& data, const MaskOptions& options);

/// Everything needed to produce one synthetic dataset.
struct GeneratorSpec {
  Network network;
  std::size_t records = 0;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::size_t> exempt;
  std::map<std::size_t, double> overrides;
};

/// forward_sample followed by mask_mcar; the mask stream is derived from the seed.
Dataset generate(const GeneratorSpec& spec);

/// Parses {"model": "tumor" | path, "model_seed", "records", "missing_rate",
/// "seed", "exempt": [names], "overrides": {name: rate}}. Relative model paths
/// resolve against `base_dir`.
GeneratorSpec generator_spec_from_json(const Json& j, const std::filesystem::path& base_dir = {});

// Random models for tests and experiments.

struct RandomNetworkOptions {
  std::size_t num_variables = 5;
  std::size_t min_states = 2;
  std::size_t max_states = 3;
  std::size_t max_parents = 3;
  double edge_probability = 0.4;
  /// Symmetric Dirichlet concentration for CPT rows; small values give peaked rows.
  double concentration = 1.0;
};

Network random_network(const RandomNetworkOptions& options, Rng& rng);

/// Random tree (each node but the root has one parent) whose rows put at least
/// `strength` mass on a state that differs between parent configurations.
Network random_tree_network(std::size_t num_variables, std::size_t states, double strength, Rng& rng);

/// Random CPTs for a fixed structure.
Network random_cpts(const Dag& dag, double concentration, Rng& rng);
/// Every row puts at least `strength` on one randomly chosen state; the rest
/// is Dirichlet(1) noise.
Network random_peaked_cpts(const Dag& dag, double strength, Rng& rng);

// Brain-tumor schema: 30 variables over four levels, decision node DT with
// eight tumor types.

struct TumorSchema {
  /// Diagnostic layering: characteristics -> intermediate states -> DT.
  Dag physician;
  /// Generating model: the same layering oriented from DT outward, with DT's
  /// prior taken from the tumor frequency table.
  Network generator;
  std::size_t decision = 0;
  /// The 21 first-level characteristics observed at consultation time.
  std::vector<std::size_t> characteristics;
  /// Intermediate decision nodes (levels 2 and 3).
  std::vector<std::size_t> intermediates;
  std::vector<double> class_prior;
  /// True when a zero frequency was replaced by kTumorPriorEpsilon.
  bool prior_smoothed = false;
};

inline constexpr double kTumorPriorEpsilon = 1e-6;
/// Dominant-state mass of the generator's non-class rows.
inline constexpr double kTumorRowStrength = 0.75;

/// Tumor frequencies in percent, types 1..8.
std::vector<double> tumor_frequencies();
/// Frequencies as probabilities, zeros raised to kTumorPriorEpsilon, renormalized.
std::vector<double> tumor_class_prior(bool* smoothed = nullptr);

TumorSchema tumor_schema(std::uint64_t seed = 1);

}  // namespace bnkit
