#include "bnkit/generate.hpp"

#include <algorithm>
#include <numeric>

namespace bnkit {
namespace {

constexpr std::uint64_t kMaskStream = 0x9E3779B97F4A7C15ULL;

Variable binary(const char* name, const char* a, const char* b) { return {name, {a, b}}; }

}  // namespace

Dataset forward_sample(const Network& net, std::size_t n, std::uint64_t seed) {
  require_valid(net);
  const Dag& dag = net.dag();
  const auto order = dag.topological_order();
  Rng rng(seed);
  Dataset data(dag.variables());
  for (std::size_t r = 0; r < n; ++r) {
    Assignment x(dag.size(), kMissing);
    for (std::size_t i : order) {
      const std::size_t j = parent_config_index(dag, i, x);
      x[i] = static_cast<State>(rng.categorical(net.cpt(i).row(j)));
    }
    data.add(std::move(x));
  }
  return data;
}

Dataset mask_mcar(const Dataset& data, const MaskOptions& options) {
  Rng rng(options.seed);
  std::vector<double> rates(data.num_variables(), options.rate);
  for (const auto& [v, rate] : options.overrides) {
    if (v < rates.size()) rates[v] = rate;
  }
  for (std::size_t v : options.exempt) {
    if (v < rates.size()) rates[v] = 0.0;
  }
  for (double r : rates) {
    if (!(r >= 0.0 && r < 1.0)) throw Error(ErrorCode::kInvalidArgument, "missingness rate must lie in [0, 1)");
  }
  Dataset out(data.schema());
  for (const Assignment& rec : data.records()) {
    Assignment masked = rec;
    for (std::size_t v = 0; v < masked.size(); ++v) {
      // one draw per cell keeps the mask pattern independent of the data
      const bool hide = rng.bernoulli(rates[v]);
      if (hide) masked[v] = kMissing;
    }
    out.add(std::move(masked));
  }
  return out;
}

Dataset generate(const GeneratorSpec& spec) {
  if (!(spec.missing_rate >= 0.0 && spec.missing_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "missing_rate must lie in [0, 1)");
  }
  Dataset complete = forward_sample(spec.network, spec.records, spec.seed);
  MaskOptions mask{spec.missing_rate, spec.seed ^ kMaskStream, spec.exempt, spec.overrides};
  return mask_mcar(complete, mask);
}

GeneratorSpec generator_spec_from_json(const Json& j, const std::filesystem::path& base_dir) {
  auto require = [&](const char* key) -> const Json& {
    if (!j.contains(key)) throw Error(ErrorCode::kParseError, std::string("generator spec: missing \"") + key + "\"");
    return j.at(key);
  };
  GeneratorSpec spec;
  const std::string model = j.value("model", std::string("tumor"));
  if (model == "tumor") {
    spec.network = tumor_schema(j.value("model_seed", std::uint64_t{1})).generator;
  } else {
    std::filesystem::path p(model);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    spec.network = load_network(p);
  }
  spec.records = require("records").get<std::size_t>();
  spec.seed = require("seed").get<std::uint64_t>();
  spec.missing_rate = j.value("missing_rate", 0.0);
  const Dag& dag = spec.network.dag();
  if (j.contains("exempt")) {
    for (const auto& name : j.at("exempt")) spec.exempt.push_back(dag.index_of(name.get<std::string>()));
  }
  if (j.contains("overrides")) {
    for (const auto& [name, rate] : j.at("overrides").items()) spec.overrides[dag.index_of(name)] = rate.get<double>();
  }
  return spec;
}

Network random_cpts(const Dag& dag, double concentration, Rng& rng) {
  std::vector<Cpt> cpts;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    Cpt cpt = Cpt::uniform(dag, i);
    for (std::size_t j = 0; j < cpt.num_configs(); ++j) {
      const auto row = rng.dirichlet(cpt.num_states(), concentration);
      std::copy(row.begin(), row.end(), cpt.row(j).begin());
    }
    cpts.push_back(std::move(cpt));
  }
  return Network(dag, std::move(cpts));
}

Network random_peaked_cpts(const Dag& dag, double strength, Rng& rng) {
  std::vector<Cpt> cpts;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    Cpt cpt = Cpt::uniform(dag, i);
    for (std::size_t j = 0; j < cpt.num_configs(); ++j) {
      const auto noise = rng.dirichlet(cpt.num_states(), 1.0);
      const std::size_t top = rng.below(cpt.num_states());
      for (std::size_t k = 0; k < cpt.num_states(); ++k) cpt(j, k) = (1.0 - strength) * noise[k] + (k == top ? strength : 0.0);
    }
    cpts.push_back(std::move(cpt));
  }
  return Network(dag, std::move(cpts));
}

Network random_network(const RandomNetworkOptions& options, Rng& rng) {
  const std::size_t n = options.num_variables;
  std::vector<Variable> vars;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = options.min_states + rng.below(options.max_states - options.min_states + 1);
    Variable v{"V" + std::to_string(i), {}};
    for (std::size_t k = 0; k < r; ++k) v.states.push_back("s" + std::to_string(k));
    vars.push_back(std::move(v));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<Edge> edges;
  for (std::size_t t = 1; t < n; ++t) {
    std::size_t parents = 0;
    for (std::size_t s = 0; s < t && parents < options.max_parents; ++s) {
      if (rng.bernoulli(options.edge_probability)) {
        edges.push_back({order[s], order[t]});
        ++parents;
      }
    }
  }
  return random_cpts(Dag(std::move(vars), std::move(edges)), options.concentration, rng);
}

Network random_tree_network(std::size_t num_variables, std::size_t states, double strength, Rng& rng) {
  std::vector<Variable> vars;
  for (std::size_t i = 0; i < num_variables; ++i) {
    Variable v{"V" + std::to_string(i), {}};
    for (std::size_t k = 0; k < states; ++k) v.states.push_back("s" + std::to_string(k));
    vars.push_back(std::move(v));
  }
  std::vector<std::size_t> order(num_variables);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<Edge> edges;
  for (std::size_t t = 1; t < num_variables; ++t) edges.push_back({order[rng.below(t)], order[t]});
  Dag dag(std::move(vars), std::move(edges));
  std::vector<Cpt> cpts;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    Cpt cpt = Cpt::uniform(dag, i);
    const std::size_t offset = rng.below(states);
    for (std::size_t j = 0; j < cpt.num_configs(); ++j) {
      const auto noise = rng.dirichlet(states, 1.0);
      auto row = cpt.row(j);
      for (std::size_t k = 0; k < states; ++k) row[k] = (1.0 - strength) * noise[k];
      if (!dag.parents(i).empty()) row[(j + offset) % states] += strength;
      else for (std::size_t k = 0; k < states; ++k) row[k] += strength / static_cast<double>(states);
    }
    cpts.push_back(std::move(cpt));
  }
  return Network(std::move(dag), std::move(cpts));
}

std::vector<double> tumor_frequencies() { return {16.66, 11.11, 31.94, 9.72, 2.77, 22.22, 0.0, 5.58}; }

std::vector<double> tumor_class_prior(bool* smoothed) {
  std::vector<double> prior = tumor_frequencies();
  bool any_zero = false;
  for (double& p : prior) {
    p /= 100.0;
    if (p == 0.0) {
      p = kTumorPriorEpsilon;
      any_zero = true;
    }
  }
  const double total = std::accumulate(prior.begin(), prior.end(), 0.0);
  for (double& p : prior) p /= total;
  if (smoothed) *smoothed = any_zero;
  return prior;
}

TumorSchema tumor_schema(std::uint64_t seed) {
  std::vector<Variable> vars = {
      {"AG", {"young", "adult", "elderly"}},
      binary("CK", "absent", "present"),
      binary("CL", "absent", "present"),
      binary("CP", "solid", "mixed"),
      binary("DM", "unremarkable", "relevant"),
      {"DT", {"Tumeur 1", "Tumeur 2", "Tumeur 3", "Tumeur 4", "Tumeur 5", "Tumeur 6", "Tumeur 7", "Tumeur 8"}},
      binary("ECC", "absent", "present"),
      binary("EDA", "normal", "abnormal"),
      binary("EDE", "normal", "abnormal"),
      binary("EDL", "normal", "abnormal"),
      binary("EDT", "normal", "abnormal"),
      binary("EM", "normal", "abnormal"),
      binary("Ems", "absent", "present"),
      binary("EPC", "normal", "abnormal"),
      binary("EPS", "normal", "abnormal"),
      binary("ES", "normal", "abnormal"),
      binary("HM", "absent", "present"),
      binary("IPC", "weak", "strong"),
      {"LT", {"frontal", "temporal", "other"}},
      binary("LTT", "sharp", "blurred"),
      binary("MA", "absent", "present"),
      binary("NT", "single", "multiple"),
      binary("PI", "no", "yes"),
      binary("Poe", "absent", "present"),
      binary("PST1", "hypo", "hyper"),
      binary("PST2", "hypo", "hyper"),
      binary("SG", "supratentorial", "infratentorial"),
      binary("SX", "male", "female"),
      binary("TPC", "homogeneous", "heterogeneous"),
      {"TT", {"small", "medium", "large"}},
  };
  auto idx = [&](const char* name) {
    for (std::size_t i = 0; i < vars.size(); ++i) {
      if (vars[i].name == name) return i;
    }
    throw Error(ErrorCode::kUnknownVariable, name);
  };

  // level 2 intermediate -> its level 1 characteristics
  const std::vector<std::pair<const char*, std::vector<const char*>>> groups = {
      {"EDA", {"AG", "SX", "DM", "MA", "PI"}},
      {"EDE", {"SG", "LT", "NT", "ECC", "Ems", "Poe"}},
      {"EDL", {"CK", "HM", "CL"}},
      {"EDT", {"TT", "LTT", "CP"}},
      {"EPC", {"IPC", "TPC"}},
      {"EPS", {"PST1", "PST2"}},
  };
  // level 3 -> its level 2 nodes
  const std::vector<std::pair<const char*, std::vector<const char*>>> upper = {
      {"ES", {"EDA"}},
      {"EM", {"EDE", "EDL", "EDT", "EPC", "EPS"}},
  };

  TumorSchema schema;
  schema.decision = idx("DT");
  std::vector<Edge> diagnostic;
  std::vector<Edge> generative;
  auto link = [&](std::size_t from, std::size_t to) {
    diagnostic.push_back({from, to});
    generative.push_back({to, from});
  };
  for (const auto& [mid, feats] : groups) {
    schema.intermediates.push_back(idx(mid));
    for (const char* f : feats) {
      schema.characteristics.push_back(idx(f));
      link(idx(f), idx(mid));
    }
  }
  for (const auto& [top, mids] : upper) {
    schema.intermediates.push_back(idx(top));
    for (const char* m : mids) link(idx(m), idx(top));
    link(idx(top), schema.decision);
  }
  std::sort(schema.characteristics.begin(), schema.characteristics.end());
  std::sort(schema.intermediates.begin(), schema.intermediates.end());

  schema.physician = Dag(vars, std::move(diagnostic));
  schema.class_prior = tumor_class_prior(&schema.prior_smoothed);

  Rng rng(seed);
  Network generator = random_peaked_cpts(Dag(std::move(vars), std::move(generative)), kTumorRowStrength, rng);
  std::vector<Cpt> cpts = generator.cpts();
  Cpt& dt = cpts[schema.decision];
  std::copy(schema.class_prior.begin(), schema.class_prior.end(), dt.row(0).begin());
  schema.generator = Network(generator.dag(), std::move(cpts));
  return schema;
}

}  // namespace bnkit
