#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bnkit/dataset.hpp"
#include "bnkit/generate.hpp"
#include "bnkit/io.hpp"
#include "bnkit/network.hpp"
#include "bnkit/params.hpp"

namespace bnkit {

struct ExperimentReport {
  std::string run_id;
  std::string structure;
  std::string params;  // mle | em | ems | none
  std::size_t correct = 0;
  std::size_t total = 0;
  double precision = 0.0;
  std::size_t iterations = 0;
  double wall_time_s = 0.0;
  std::vector<double> ll_trace;
  std::vector<double> bound_satisfaction_trace;
  std::vector<std::string> decision_states;
  /// confusion[true][predicted]; records with impossible evidence are counted
  /// in zero_evidence and in no column.
  std::vector<std::vector<std::size_t>> confusion;
  std::size_t zero_evidence = 0;
  std::size_t edges = 0;
};

/// correct / total; throws EmptyTestSet when total is zero.
double precision(std::size_t correct, std::size_t total);

/// Classifies every test record from its observed `evidence` columns and
/// compares with its decision label. Throws EmptyTestSet, or InvalidArgument
/// when a label is missing.
ExperimentReport evaluate(const Network& model, const Dataset& test, const std::vector<std::size_t>& evidence,
                          std::size_t decision);

/// One row of an experiment: how to get a structure and how to fit it.
struct RunSpec {
  std::string id;
  /// nb | tan | fan | mwst | mwst-em | sem | sem+t | generating | file
  std::string structure = "nb";
  std::filesystem::path path;
  double tau = 0.01;
  std::string params = "ems";  // mle | em | ems
  ThresholdMode mode = ThresholdMode::kPerIteration;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::string name = "experiment";
  /// Generating model; the tumor model unless "model" names a file.
  Network model;
  std::size_t records = 77;
  std::size_t train = 60;
  double missing_rate = 0.3;
  std::uint64_t seed = 0;
  bool exempt_decision = true;
  std::size_t decision = 0;
  std::vector<std::size_t> evidence;
  /// Fixed datasets replacing the generated ones.
  std::optional<Dataset> train_data;
  std::optional<Dataset> test_data;
  double tolerance = 1e-6;
  std::size_t max_iterations = 200;
  /// Symmetric Dirichlet pseudo-count for em/ems/mle; 0 disables.
  double prior = 1.0;
  std::vector<RunSpec> runs;
};

/// Small-sample tumor preset: 77 records, 60 train / 17 test, 30% MCAR on the
/// training columns except DT, evidence = the 21 characteristics, Dirichlet(1)
/// pseudo-counts.
ExperimentConfig default_experiment(std::uint64_t seed = 1);

/// Overrides the preset fields present in `j`. Relative paths resolve against `base_dir`.
ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir = {});

struct ExperimentData {
  Dataset train;
  Dataset test;
};

ExperimentData experiment_data(const ExperimentConfig& config);

ExperimentReport run_experiment(const ExperimentConfig& config, const ExperimentData& data, const RunSpec& run);
std::vector<ExperimentReport> run_experiments(const ExperimentConfig& config);

Json to_json(const ExperimentReport& report, bool include_timing);
ExperimentReport report_from_json(const Json& j);

/// Summary table, one row per run, sorted by precision (descending) then run id.
std::string comparison_csv(const std::vector<ExperimentReport>& reports, bool include_timing);
/// Long-format series: run_id,iteration,ll,bound_satisfaction.
std::string trace_csv(const std::vector<ExperimentReport>& reports);
/// {"runs": [...]} in table order.
Json compare_runs(const std::vector<ExperimentReport>& reports, bool include_timing);

inline constexpr const char* kComparisonColumns =
    "run_id,structure,params,precision,correct,total,iterations,final_ll,final_bound_satisfaction,zero_evidence,"
    "edges";

}  // namespace bnkit
