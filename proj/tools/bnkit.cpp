#include <csignal>
#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "bnkit/evaluate.hpp"
#include "bnkit/inference.hpp"
#include "bnkit/io.hpp"
#include "bnkit/params.hpp"
#include "bnkit/service.hpp"
#include "bnkit/structure.hpp"

using namespace bnkit;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

// Thrown for a finished command that must still exit non-zero (e.g. an invalid
// model reported by `validate`); the output has already been written.
struct ExitStatus {
  int code;
};

std::string g_out;

void emit(const std::string& text) {
  if (g_out.empty()) {
    std::cout << text << std::flush;
  } else {
    write_text_file(g_out, text);
  }
}

void emit(const Json& j) { emit(dump_json(j)); }

// "tumor" names the built-in generating model.
Network load_model(const std::string& arg) {
  if (arg == "tumor") return tumor_schema().generator;
  return load_network(arg);
}

Dag load_structure(const std::string& arg) {
  if (arg == "tumor") return tumor_schema().generator.dag();
  return load_dag(arg);
}

std::size_t lookup(const Dag& dag, const std::string& name) { return dag.index_of(name); }

Json posterior_json(const Dag& dag, std::size_t v, const Posterior& p) {
  return Json{{"states", dag.variable(v).states}, {"distribution", p.distribution}};
}

Json evidence_json(const Dag& dag, const Assignment& e) {
  Json j = Json::object();
  for (std::size_t v = 0; v < e.size(); ++v) {
    if (e[v] != kMissing) j[dag.variable(v).name] = dag.variable(v).states[static_cast<std::size_t>(e[v])];
  }
  return j;
}

void report_error(std::string_view code, const std::string& detail) {
  std::cerr << dump_json(Json{{"error", code}, {"detail", detail}});
}

[[noreturn]] void zero_evidence() {
  report_error("ZeroEvidence", "the evidence has probability 0 under the model");
  throw ExitStatus{kExitValidation};
}

std::vector<std::string> split_names(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

// validate <model>

struct ValidateArgs {
  std::string model;
};

void run_validate(const ValidateArgs& a) {
  const Network net = network_from_json(read_json_file(a.model));
  const auto issues = validate_network(net);
  Json list = Json::array();
  for (const auto& issue : issues) list.push_back(Json{{"error", to_string(issue.code)}, {"detail", issue.detail}});
  emit(Json{{"valid", issues.empty()}, {"variables", net.size()}, {"issues", list}});
  if (!issues.empty()) throw ExitStatus{kExitValidation};
}

// infer <model> --evidence --target

struct InferArgs {
  std::string model;
  std::string evidence;
  std::string target;
};

void run_infer(const InferArgs& a) {
  const Network net = load_model(a.model);
  const Dag& dag = net.dag();
  const Assignment e = parse_evidence(dag, a.evidence);
  JunctionTree jt(net);
  Json posteriors = Json::object();
  for (const auto& name : split_names(a.target)) {
    const std::size_t v = lookup(dag, name);
    const Posterior p = jt.query(e, v);
    if (p.zero_evidence) zero_evidence();
    posteriors[name] = p.distribution;
  }
  emit(posteriors);
}

// classify <model> --evidence --decision

struct ClassifyArgs {
  std::string model;
  std::string evidence;
  std::string decision;
};

void run_classify(const ClassifyArgs& a) {
  const Network net = load_model(a.model);
  const Dag& dag = net.dag();
  const Assignment e = parse_evidence(dag, a.evidence);
  const std::size_t d = lookup(dag, a.decision);
  JunctionTree jt(net);
  const Classification c = classify(jt, e, d);
  if (c.posterior.zero_evidence) zero_evidence();
  Json j{{"decision", a.decision}, {"predicted", dag.variable(d).states[static_cast<std::size_t>(c.predicted)]}};
  j.update(posterior_json(dag, d, c.posterior));
  j["evidence"] = evidence_json(dag, e);
  emit(j);
}

// learn-params <structure> <data.csv>

struct LearnParamsArgs {
  std::string structure;
  std::string data;
  std::string algo = "em";
  std::string mode = "per-iteration";
  std::uint64_t seed = 0;
  double tol = 1e-6;
  std::size_t max_iter = 200;
  std::string prior;
  bool timing = false;
};

void run_learn_params(const LearnParamsArgs& a) {
  const Dag dag = load_structure(a.structure);
  const Dataset data = load_dataset(a.data, dag.variables());
  std::optional<DirichletPrior> prior;
  if (!a.prior.empty()) prior = DirichletPrior::from_imaginary_cases(dag, load_dataset(a.prior, dag.variables()));

  if (a.algo == "mle") {
    const MleResult r = mle(dag, data, prior ? &*prior : nullptr);
    Json rows = Json::array();
    for (const auto& [i, j] : r.uniform_rows) rows.push_back(Json{i, j});
    emit(Json{{"algorithm", "mle"}, {"network", to_json(r.network)}, {"uniform_rows", rows}});
    return;
  }
  EmOptions options{.tolerance = a.tol, .max_iterations = a.max_iter, .seed = a.seed};
  options.prior = prior;
  const ThresholdMode mode = a.mode == "post-hoc" ? ThresholdMode::kPostHoc : ThresholdMode::kPerIteration;
  const EmResult r = a.algo == "ems" ? ems(dag, data, options, mode) : em(dag, data, options);
  Json j{{"algorithm", a.algo}};
  if (a.algo == "ems") j["mode"] = a.mode;
  j["seed"] = a.seed;
  j["network"] = to_json(r.network);
  j["trace"] = to_json(r.trace, a.timing);
  emit(j);
}

// bounds <structure> <data.csv>

struct BoundsArgs {
  std::string structure;
  std::string data;
};

void run_bounds(const BoundsArgs& a) {
  const Dag dag = load_structure(a.structure);
  const Dataset data = load_dataset(a.data, dag.variables());
  emit(to_json(rbe_phase1_bounds(dag, data), dag));
}

// learn-structure <data.csv>

struct LearnStructureArgs {
  std::string data;
  std::string algo = "mwst-em";
  std::string cls;
  double tau = 0.01;
  std::string root;
  std::uint64_t seed = 0;
  std::string schema;
};

void run_learn_structure(const LearnStructureArgs& a) {
  const Dataset data = a.schema.empty() ? load_dataset(a.data) : load_dataset(a.data, load_dag(a.schema).variables());
  const auto algo = parse_structure_algorithm(a.algo);
  if (!algo) throw Error(ErrorCode::kInvalidArgument, "unknown structure algorithm '" + a.algo + "'");
  const Dag schema(data.schema(), {});
  LearnStructureOptions options{.algorithm = *algo, .tau = a.tau, .seed = a.seed};
  if (!a.cls.empty()) options.cls = lookup(schema, a.cls);
  if (!a.root.empty()) options.root = lookup(schema, a.root);
  options.search.em.seed = a.seed;
  const StructureCandidate c = learn_structure(data, options);
  emit(Json{{"provenance", provenance_json(c)}, {"network", to_json(c.network)}});
}

// generate --spec

struct GenerateArgs {
  std::string spec;
};

void run_generate(const GenerateArgs& a) {
  const std::filesystem::path path(a.spec);
  const GeneratorSpec spec = generator_spec_from_json(read_json_file(path), path.parent_path());
  emit(dataset_to_csv(generate(spec)));
}

// evaluate --config

struct EvaluateArgs {
  std::string config;
  bool timing = false;
  std::string table;
  std::string trace;
};

void run_evaluate(const EvaluateArgs& a) {
  const std::filesystem::path path(a.config);
  const ExperimentConfig config = experiment_from_json(read_json_file(path), path.parent_path());
  const std::vector<ExperimentReport> reports = run_experiments(config);
  if (!a.table.empty()) write_text_file(a.table, comparison_csv(reports, a.timing));
  if (!a.trace.empty()) write_text_file(a.trace, trace_csv(reports));
  Json j = compare_runs(reports, a.timing);
  j = Json{{"name", config.name}, {"runs", j["runs"]}};
  emit(j);
}

// serve --port

struct ServeArgs {
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string model = "tumor";
  std::string decision;
};

HttpServer* g_server = nullptr;

void run_serve(const ServeArgs& a) {
  const Network net = load_model(a.model);
  std::size_t decision = 0;
  if (!a.decision.empty()) {
    decision = lookup(net.dag(), a.decision);
  } else if (a.model == "tumor") {
    decision = tumor_schema().decision;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "--decision is required with a model file");
  }
  DiagnosisService service(net, decision);
  HttpServer server(service);
  const int port = server.bind(a.host, a.port);
  if (port < 0) throw std::runtime_error("cannot bind " + a.host + ":" + std::to_string(a.port));
  std::cout << dump_json(Json{{"host", a.host}, {"port", port}}) << std::flush;
  g_server = &server;
  std::signal(SIGINT, [](int) { g_server->stop(); });
  std::signal(SIGTERM, [](int) { g_server->stop(); });
  server.listen();
  g_server = nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bnkit: discrete Bayesian networks, EM/EMS parameter learning, structure learning", "bnkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--out", g_out, "Write the result to FILE instead of stdout");

  ValidateArgs validate;
  auto* c_validate = app.add_subcommand("validate", "Check acyclicity, CPT shapes and row sums of a model");
  c_validate->add_option("model", validate.model, "Model JSON file")->required();

  InferArgs infer;
  auto* c_infer = app.add_subcommand("infer", "Posterior marginals under evidence");
  c_infer->add_option("model", infer.model, "Model JSON file, or 'tumor'")->required();
  c_infer->add_option("--evidence", infer.evidence, "Findings as var=state,...");
  c_infer->add_option("--target", infer.target, "Query variable(s), comma separated")->required();

  ClassifyArgs cls;
  auto* c_classify = app.add_subcommand("classify", "Most probable state of the decision node");
  c_classify->add_option("model", cls.model, "Model JSON file, or 'tumor'")->required();
  c_classify->add_option("--evidence", cls.evidence, "Findings as var=state,...");
  c_classify->add_option("--decision", cls.decision, "Decision variable")->required();

  LearnParamsArgs lp;
  auto* c_lp = app.add_subcommand("learn-params", "Fit CPTs to a structure from (incomplete) data");
  c_lp->add_option("structure", lp.structure, "Structure or model JSON file")->required();
  c_lp->add_option("data", lp.data, "CSV dataset, '?' marks missing")->required();
  c_lp->add_option("--algo", lp.algo, "Estimator")->check(CLI::IsMember({"mle", "em", "ems"}))->capture_default_str();
  c_lp->add_option("--mode", lp.mode, "EMS thresholding schedule")
      ->check(CLI::IsMember({"per-iteration", "post-hoc"}))
      ->capture_default_str();
  c_lp->add_option("--seed", lp.seed, "Seed for the initial parameters")->capture_default_str();
  c_lp->add_option("--tol", lp.tol, "Stop when the log-likelihood changes less than this")->capture_default_str();
  c_lp->add_option("--max-iter", lp.max_iter, "Iteration cap")->capture_default_str();
  c_lp->add_option("--prior", lp.prior, "CSV of imaginary cases used as Dirichlet pseudo-counts");
  c_lp->add_flag("--timing", lp.timing, "Include wall-clock time in the trace");

  BoundsArgs bounds;
  auto* c_bounds = app.add_subcommand("bounds", "Probability intervals from incomplete data");
  c_bounds->add_option("structure", bounds.structure, "Structure or model JSON file")->required();
  c_bounds->add_option("data", bounds.data, "CSV dataset, '?' marks missing")->required();

  LearnStructureArgs ls;
  auto* c_ls = app.add_subcommand("learn-structure", "Learn a structure and fit it with EM");
  c_ls->add_option("data", ls.data, "CSV dataset, '?' marks missing")->required();
  c_ls->add_option("--algo", ls.algo, "Search strategy")
      ->check(CLI::IsMember({"nb", "tan", "fan", "mwst", "mwst-em", "sem", "sem+t"}))
      ->capture_default_str();
  c_ls->add_option("--class", ls.cls, "Class variable (nb, tan, fan)");
  c_ls->add_option("--tau", ls.tau, "FAN conditional mutual information threshold")->capture_default_str();
  c_ls->add_option("--root", ls.root, "Tree root (mwst, mwst-em)");
  c_ls->add_option("--seed", ls.seed, "Seed for EM initialization and random choices")->capture_default_str();
  c_ls->add_option("--schema", ls.schema, "Model or structure file fixing variables and state order");

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "Sample a synthetic dataset (CSV) with MCAR masking");
  c_gen->add_option("--spec", gen.spec, "Generator JSON")->required();

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Run an experiment and compare classifiers");
  c_eval->add_option("--config", ev.config, "Experiment JSON")->required();
  c_eval->add_flag("--timing", ev.timing, "Include wall-clock times");
  c_eval->add_option("--table", ev.table, "Also write the comparison table as CSV");
  c_eval->add_option("--trace", ev.trace, "Also write per-iteration traces as CSV");

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "Start the HTTP diagnosis service");
  c_serve->add_option("--port", serve.port, "TCP port (0 picks a free one)")->capture_default_str();
  c_serve->add_option("--host", serve.host, "Bind address")->capture_default_str();
  c_serve->add_option("--model", serve.model, "Model JSON file, or 'tumor'")->capture_default_str();
  c_serve->add_option("--decision", serve.decision, "Decision variable (required with a model file)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("UsageError", e.what());
    return kExitValidation;
  }

  try {
    if (*c_validate) run_validate(validate);
    if (*c_infer) run_infer(infer);
    if (*c_classify) run_classify(cls);
    if (*c_lp) run_learn_params(lp);
    if (*c_bounds) run_bounds(bounds);
    if (*c_ls) run_learn_structure(ls);
    if (*c_gen) run_generate(gen);
    if (*c_eval) run_evaluate(ev);
    if (*c_serve) run_serve(serve);
  } catch (const ExitStatus& s) {
    return s.code;
  } catch (const Error& e) {
    report_error(to_string(e.code()), e.detail());
    return is_validation_error(e.code()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    report_error("RuntimeError", e.what());
    return kExitRuntime;
  }
  return 0;
}
