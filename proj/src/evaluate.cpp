#include "bnkit/evaluate.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "bnkit/inference.hpp"
#include "bnkit/structure.hpp"

namespace bnkit {

namespace {

// Shortest text that parses back to the same double.
std::string number(double v) {
  if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json number_json(double v) {
  if (std::isfinite(v)) return v;
  return v < 0 ? "-inf" : "inf";
}

double number_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    throw Error(ErrorCode::kParseError, "expected a number, got '" + s + "'");
  }
  return j.get<double>();
}

std::vector<std::size_t> names_to_indices(const Dag& dag, const Json& names) {
  std::vector<std::size_t> out;
  for (const auto& n : names) out.push_back(dag.index_of(n.get<std::string>()));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::size_t> all_but(std::size_t n, std::size_t skip) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < n; ++v) {
    if (v != skip) out.push_back(v);
  }
  return out;
}

void reject_unknown_keys(const Json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::kInvalidSchema, where + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw Error(ErrorCode::kInvalidSchema, "unknown key '" + key + "' in " + where);
  }
}

RunSpec run_from_json(const Json& j, const std::filesystem::path& base_dir) {
  reject_unknown_keys(j, {"id", "structure", "path", "tau", "params", "mode", "seed"}, "run");
  RunSpec r;
  r.structure = j.value("structure", r.structure);
  r.params = j.value("params", r.params);
  r.id = j.value("id", r.structure + "-" + r.params);
  if (j.contains("path")) r.path = base_dir / j["path"].get<std::string>();
  r.tau = j.value("tau", r.tau);
  r.seed = j.value("seed", r.seed);
  const std::string mode = j.value("mode", "per-iteration");
  if (mode == "per-iteration") {
    r.mode = ThresholdMode::kPerIteration;
  } else if (mode == "post-hoc") {
    r.mode = ThresholdMode::kPostHoc;
  } else {
    throw Error(ErrorCode::kInvalidSchema, "run mode must be per-iteration or post-hoc, got '" + mode + "'");
  }
  return r;
}

Dag structure_for(const ExperimentConfig& config, const Dataset& train, const RunSpec& run) {
  const std::size_t cls = config.decision;
  const std::string& s = run.structure;
  if (s == "nb") return naive_bayes(train.schema(), cls);
  if (s == "tan") return tan(train, cls);
  if (s == "fan") return fan(train, cls, run.tau);
  if (s == "mwst") return Dag(train.schema(), mwst(mutual_information_matrix(train), cls));
  if (s == "mwst-em") return mwst_em(train, cls, run.seed).network.dag();
  if (s == "sem") return sem(train, nullptr, run.seed).network.dag();
  if (s == "sem+t") return sem_plus_t(train, run.seed).network.dag();
  if (s == "physician") {
    Dag dag = tumor_schema().physician;
    require_same_schema(dag, train);
    return dag;
  }
  if (s == "file") {
    if (run.path.empty()) throw Error(ErrorCode::kInvalidArgument, "run '" + run.id + "' needs a structure path");
    Dag dag = load_dag(run.path);
    require_same_schema(dag, train);
    return dag;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown structure '" + s + "'");
}

}  // namespace

double precision(std::size_t correct, std::size_t total) {
  if (total == 0) throw Error(ErrorCode::kEmptyTestSet, "no test records");
  return static_cast<double>(correct) / static_cast<double>(total);
}

ExperimentReport evaluate(const Network& model, const Dataset& test, const std::vector<std::size_t>& evidence,
                          std::size_t decision) {
  if (test.empty()) throw Error(ErrorCode::kEmptyTestSet, "no test records");
  require_same_schema(model.dag(), test);
  if (decision >= model.size()) throw Error(ErrorCode::kUnknownVariable, "decision node is out of range");
  const JunctionTree jt(model);
  const std::size_t r = model.dag().cardinality(decision);

  ExperimentReport report;
  report.decision_states = model.dag().variable(decision).states;
  report.confusion.assign(r, std::vector<std::size_t>(r, 0));
  report.edges = model.dag().edges().size();
  for (std::size_t t = 0; t < test.size(); ++t) {
    const Assignment& x = test.record(t);
    if (x[decision] == kMissing) {
      throw Error(ErrorCode::kInvalidArgument, "test record " + std::to_string(t) + " has no decision label");
    }
    Assignment e(model.size(), kMissing);
    for (std::size_t v : evidence) {
      if (v != decision) e[v] = x[v];
    }
    const Classification c = classify(jt, e, decision);
    ++report.total;
    if (c.posterior.zero_evidence) {
      ++report.zero_evidence;
      continue;
    }
    ++report.confusion[static_cast<std::size_t>(x[decision])][static_cast<std::size_t>(c.predicted)];
    if (c.predicted == x[decision]) ++report.correct;
  }
  report.precision = precision(report.correct, report.total);
  return report;
}

ExperimentConfig default_experiment(std::uint64_t seed) {
  const TumorSchema tumor = tumor_schema();
  ExperimentConfig c;
  c.name = "tumor-default";
  c.model = tumor.generator;
  c.seed = seed;
  c.decision = tumor.decision;
  c.evidence = tumor.characteristics;
  for (const char* params : {"em", "ems"}) {
    for (const char* structure : {"nb", "tan", "fan", "physician"}) {
      c.runs.push_back({.id = std::string(structure) + "-" + params, .structure = structure, .params = params});
    }
  }
  c.runs.push_back({.id = "generating", .structure = "generating", .params = "none"});
  return c;
}

ExperimentConfig experiment_from_json(const Json& j, const std::filesystem::path& base_dir) {
  reject_unknown_keys(j,
                      {"name", "model", "model_seed", "records", "train", "missing_rate", "seed", "exempt_decision",
                       "decision", "evidence", "train_csv", "test_csv", "tolerance", "max_iterations", "prior", "runs"},
                      "experiment config");
  ExperimentConfig c = default_experiment(j.value("seed", std::uint64_t{1}));
  c.name = j.value("name", c.name);
  const std::string model = j.value("model", "tumor");
  const bool tumor = model == "tumor";
  if (tumor) {
    const TumorSchema schema = tumor_schema(j.value("model_seed", std::uint64_t{1}));
    c.model = schema.generator;
  } else {
    c.model = load_network(base_dir / model);
    if (!j.contains("decision")) throw Error(ErrorCode::kInvalidSchema, "config with a model file needs 'decision'");
  }
  const Dag& dag = c.model.dag();
  if (j.contains("decision")) c.decision = dag.index_of(j["decision"].get<std::string>());
  if (j.contains("evidence")) {
    c.evidence = names_to_indices(dag, j["evidence"]);
  } else if (!tumor) {
    c.evidence = all_but(dag.size(), c.decision);
  }
  c.records = j.value("records", c.records);
  c.train = j.value("train", c.train);
  c.missing_rate = j.value("missing_rate", c.missing_rate);
  c.exempt_decision = j.value("exempt_decision", c.exempt_decision);
  c.tolerance = j.value("tolerance", c.tolerance);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.prior = j.value("prior", c.prior);
  if (j.contains("train_csv")) c.train_data = load_dataset(base_dir / j["train_csv"].get<std::string>(), dag.variables());
  if (j.contains("test_csv")) c.test_data = load_dataset(base_dir / j["test_csv"].get<std::string>(), dag.variables());
  if (j.contains("runs")) {
    c.runs.clear();
    for (const auto& r : j["runs"]) c.runs.push_back(run_from_json(r, base_dir));
  }
  if (c.train >= c.records && !(c.train_data && c.test_data)) {
    throw Error(ErrorCode::kInvalidArgument, "train size must leave at least one test record");
  }
  if (!(c.missing_rate >= 0.0 && c.missing_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "missing_rate must lie in [0, 1)");
  }
  return c;
}

ExperimentData experiment_data(const ExperimentConfig& config) {
  ExperimentData out;
  if (!config.train_data || !config.test_data) {
    const Dataset complete = forward_sample(config.model, config.records, config.seed);
    MaskOptions mask{.rate = config.missing_rate, .seed = config.seed ^ 0x9E3779B97F4A7C15ull};
    if (config.exempt_decision) mask.exempt.push_back(config.decision);
    out.train = mask_mcar(complete.subset(0, config.train), mask);
    out.test = complete.subset(config.train, config.records - config.train);
  }
  if (config.train_data) out.train = *config.train_data;
  if (config.test_data) out.test = *config.test_data;
  return out;
}

ExperimentReport run_experiment(const ExperimentConfig& config, const ExperimentData& data, const RunSpec& run) {
  const auto start = std::chrono::steady_clock::now();
  Network model;
  std::optional<EmTrace> trace;
  if (run.structure == "generating") {
    model = config.model;
  } else {
    const Dag dag = structure_for(config, data.train, run);
    std::optional<DirichletPrior> prior;
    if (config.prior > 0.0) prior = DirichletPrior::uniform(dag, config.prior);
    if (run.params == "mle") {
      model = mle(dag, data.train, prior ? &*prior : nullptr).network;
    } else if (run.params == "em" || run.params == "ems") {
      EmOptions opts{.tolerance = config.tolerance, .max_iterations = config.max_iterations, .seed = run.seed};
      opts.prior = prior;
      EmResult r = run.params == "em" ? em(dag, data.train, opts) : ems(dag, data.train, opts, run.mode);
      model = std::move(r.network);
      trace = std::move(r.trace);
    } else {
      throw Error(ErrorCode::kInvalidArgument, "unknown parameter algorithm '" + run.params + "'");
    }
  }
  ExperimentReport report = evaluate(model, data.test, config.evidence, config.decision);
  report.run_id = run.id;
  report.structure = run.structure;
  report.params = run.structure == "generating" ? "none" : run.params;
  if (trace) {
    report.iterations = trace->num_iterations();
    for (const auto& it : trace->iterations) {
      report.ll_trace.push_back(it.ll.neg_infinity ? -std::numeric_limits<double>::infinity() : it.ll.value);
      report.bound_satisfaction_trace.push_back(it.bound_satisfaction);
    }
    if (trace->post_hoc) report.bound_satisfaction_trace.push_back(trace->post_hoc->bound_satisfaction);
  }
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

std::vector<ExperimentReport> run_experiments(const ExperimentConfig& config) {
  const ExperimentData data = experiment_data(config);
  std::vector<ExperimentReport> out;
  for (const RunSpec& run : config.runs) out.push_back(run_experiment(config, data, run));
  return out;
}

Json to_json(const ExperimentReport& r, bool include_timing) {
  Json j;
  j["run_id"] = r.run_id;
  j["structure"] = r.structure;
  j["params"] = r.params;
  j["precision"] = r.precision;
  j["correct"] = r.correct;
  j["total"] = r.total;
  j["zero_evidence"] = r.zero_evidence;
  j["iterations"] = r.iterations;
  if (include_timing) j["wall_time_s"] = r.wall_time_s;
  j["edges"] = r.edges;
  j["ll_trace"] = Json::array();
  for (double v : r.ll_trace) j["ll_trace"].push_back(number_json(v));
  j["bound_satisfaction_trace"] = r.bound_satisfaction_trace;
  j["decision_states"] = r.decision_states;
  j["confusion"] = r.confusion;
  return j;
}

ExperimentReport report_from_json(const Json& j) {
  ExperimentReport r;
  r.run_id = j.at("run_id").get<std::string>();
  r.structure = j.at("structure").get<std::string>();
  r.params = j.at("params").get<std::string>();
  r.precision = j.at("precision").get<double>();
  r.correct = j.at("correct").get<std::size_t>();
  r.total = j.at("total").get<std::size_t>();
  r.zero_evidence = j.at("zero_evidence").get<std::size_t>();
  r.iterations = j.at("iterations").get<std::size_t>();
  r.wall_time_s = j.value("wall_time_s", 0.0);
  r.edges = j.at("edges").get<std::size_t>();
  for (const auto& v : j.at("ll_trace")) r.ll_trace.push_back(number_from_json(v));
  r.bound_satisfaction_trace = j.at("bound_satisfaction_trace").get<std::vector<double>>();
  r.decision_states = j.at("decision_states").get<std::vector<std::string>>();
  r.confusion = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
  return r;
}

namespace {

std::vector<const ExperimentReport*> table_order(const std::vector<ExperimentReport>& reports) {
  std::vector<const ExperimentReport*> order;
  for (const auto& r : reports) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(), [](const ExperimentReport* a, const ExperimentReport* b) {
    if (a->precision != b->precision) return a->precision > b->precision;
    return a->run_id < b->run_id;
  });
  return order;
}

}  // namespace

std::string comparison_csv(const std::vector<ExperimentReport>& reports, bool include_timing) {
  std::string out = kComparisonColumns;
  if (include_timing) out += ",wall_time_s";
  out += "\n";
  for (const ExperimentReport* r : table_order(reports)) {
    out += r->run_id + "," + r->structure + "," + r->params + "," + number(r->precision) + "," +
           std::to_string(r->correct) + "," + std::to_string(r->total) + "," + std::to_string(r->iterations) + "," +
           (r->ll_trace.empty() ? "" : number(r->ll_trace.back())) + "," +
           (r->bound_satisfaction_trace.empty() ? "" : number(r->bound_satisfaction_trace.back())) + "," +
           std::to_string(r->zero_evidence) + "," + std::to_string(r->edges);
    if (include_timing) out += "," + number(r->wall_time_s);
    out += "\n";
  }
  return out;
}

std::string trace_csv(const std::vector<ExperimentReport>& reports) {
  std::string out = "run_id,iteration,ll,bound_satisfaction\n";
  for (const ExperimentReport* r : table_order(reports)) {
    const std::size_t n = std::max(r->ll_trace.size(), r->bound_satisfaction_trace.size());
    for (std::size_t t = 0; t < n; ++t) {
      out += r->run_id + "," + std::to_string(t + 1) + "," + (t < r->ll_trace.size() ? number(r->ll_trace[t]) : "") +
             "," + (t < r->bound_satisfaction_trace.size() ? number(r->bound_satisfaction_trace[t]) : "") + "\n";
    }
  }
  return out;
}

Json compare_runs(const std::vector<ExperimentReport>& reports, bool include_timing) {
  Json j;
  j["runs"] = Json::array();
  for (const ExperimentReport* r : table_order(reports)) j["runs"].push_back(to_json(*r, include_timing));
  return j;
}

}  // namespace bnkit
