#include "bnkit/structure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bnkit/random.hpp"

namespace bnkit {

namespace {

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

void require_column(const Dataset& data, std::size_t v) {
  if (v >= data.num_variables()) {
    throw Error(ErrorCode::kUnknownVariable, "column " + std::to_string(v) + " is out of range");
  }
}

std::string pair_name(const Dataset& data, std::initializer_list<std::size_t> vars) {
  std::string out;
  for (std::size_t v : vars) out += (out.empty() ? "" : ", ") + data.schema()[v].name;
  return out;
}

// Tallies over the records observing every listed column; last column fastest.
std::vector<double> joint_tally(const Dataset& data, std::initializer_list<std::size_t> vars, double& total) {
  std::size_t size = 1;
  for (std::size_t v : vars) {
    require_column(data, v);
    size *= data.schema()[v].cardinality();
  }
  std::vector<double> n(size, 0.0);
  total = 0.0;
  for (const Assignment& x : data.records()) {
    std::size_t idx = 0;
    bool seen = true;
    for (std::size_t v : vars) {
      if (x[v] == kMissing) {
        seen = false;
        break;
      }
      idx = idx * data.schema()[v].cardinality() + static_cast<std::size_t>(x[v]);
    }
    if (!seen) continue;
    n[idx] += 1.0;
    total += 1.0;
  }
  if (total == 0.0) {
    throw Error(ErrorCode::kNoCompletePairs, "no record observes all of " + pair_name(data, vars));
  }
  return n;
}

// MI of an rx-by-ry table of counts.
double table_mi(const std::vector<double>& n, std::size_t rx, std::size_t ry) {
  std::vector<double> nx(rx, 0.0), ny(ry, 0.0);
  double total = 0.0;
  for (std::size_t a = 0; a < rx; ++a) {
    for (std::size_t b = 0; b < ry; ++b) {
      nx[a] += n[a * ry + b];
      ny[b] += n[a * ry + b];
      total += n[a * ry + b];
    }
  }
  if (total <= 0.0) return 0.0;
  double mi = 0.0;
  for (std::size_t a = 0; a < rx; ++a) {
    for (std::size_t b = 0; b < ry; ++b) {
      const double c = n[a * ry + b];
      if (c > 0.0) mi += c / total * std::log(c * total / (nx[a] * ny[b]));
    }
  }
  return std::max(mi, 0.0);
}

struct TreeEdge {
  Edge edge;
  double weight;
};

// TAN feature tree with the CMI of every arc.
std::vector<TreeEdge> tan_tree(const Dataset& data, std::size_t cls) {
  require_column(data, cls);
  std::vector<std::size_t> features;
  for (std::size_t v = 0; v < data.num_variables(); ++v) {
    if (v != cls) features.push_back(v);
  }
  if (features.size() < 2) throw Error(ErrorCode::kInvalidArgument, "TAN needs at least two features");

  WeightMatrix w(features.size());
  for (std::size_t a = 0; a < features.size(); ++a) {
    for (std::size_t b = a + 1; b < features.size(); ++b) {
      w.set(a, b, conditional_mutual_information(data, features[a], features[b], cls));
    }
  }
  std::size_t root = 0;
  double best = -1.0;
  for (std::size_t a = 0; a < features.size(); ++a) {
    const double mi = mutual_information(data, features[a], cls);
    if (mi > best) {
      best = mi;
      root = a;
    }
  }
  std::vector<TreeEdge> out;
  for (const Edge& e : mwst(w, root)) out.push_back({{features[e.parent], features[e.child]}, w(e.parent, e.child)});
  return out;
}

std::vector<Edge> class_arcs(std::size_t cls, std::span<const std::size_t> features) {
  std::vector<Edge> edges;
  for (std::size_t f : features) {
    if (f != cls) edges.push_back({cls, f});
  }
  return edges;
}

std::vector<std::size_t> all_but(std::size_t n, std::size_t skip) {
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < n; ++v) {
    if (v != skip) out.push_back(v);
  }
  return out;
}

Network fit(const Dag& dag, const Dataset& data, std::uint64_t seed, const EmOptions& base) {
  EmOptions opts = base;
  opts.seed = seed;
  opts.observer = nullptr;
  return em(dag, data, opts).network;
}

StructureCandidate make_candidate(Network net, const Dataset& data, std::string algorithm, std::uint64_t seed,
                                  std::size_t rounds) {
  StructureCandidate c;
  c.score = bic_score(net, data);
  c.network = std::move(net);
  c.algorithm = std::move(algorithm);
  c.seed = seed;
  c.rounds = rounds;
  return c;
}

// Graph edits for the SEM neighbourhood.
enum class MoveKind { kDelete = 0, kReverse = 1, kAdd = 2 };

struct Move {
  MoveKind kind;
  std::size_t u;  // existing or proposed arc u -> v
  std::size_t v;
  double delta;
};

bool reaches(const std::vector<std::vector<std::size_t>>& children, std::size_t from, std::size_t to,
             std::size_t skip_u, std::size_t skip_v) {
  std::vector<char> seen(children.size(), 0);
  std::vector<std::size_t> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    const std::size_t a = stack.back();
    stack.pop_back();
    if (a == to) return true;
    for (std::size_t b : children[a]) {
      if (a == skip_u && b == skip_v) continue;
      if (!seen[b]) {
        seen[b] = 1;
        stack.push_back(b);
      }
    }
  }
  return false;
}

std::vector<std::size_t> with(std::vector<std::size_t> set, std::size_t v) {
  set.insert(std::upper_bound(set.begin(), set.end(), v), v);
  return set;
}

std::vector<std::size_t> without(std::vector<std::size_t> set, std::size_t v) {
  set.erase(std::find(set.begin(), set.end(), v));
  return set;
}

Dag apply(const Dag& g, const Move& m) {
  std::vector<Edge> edges;
  for (const Edge& e : g.edges()) {
    if (e.parent == m.u && e.child == m.v) continue;
    edges.push_back(e);
  }
  if (m.kind == MoveKind::kReverse) edges.push_back({m.v, m.u});
  if (m.kind == MoveKind::kAdd) edges.push_back({m.u, m.v});
  return g.with_edges(std::move(edges));
}

StructureCandidate search(const Dataset& data, Network theta, Score score, std::uint64_t seed,
                          const SearchOptions& options, std::string algorithm) {
  const double log_n = std::log(static_cast<double>(data.size()));
  std::vector<double> trace{score.value};
  std::size_t moves = 0;
  while (moves < options.max_moves) {
    const Dag& g = theta.dag();
    const std::size_t n = g.size();
    ExpectedStats stats(theta, data);
    auto family_score = [&](std::size_t i, const std::vector<std::size_t>& parents) {
      std::size_t q = 1;
      for (std::size_t p : parents) q *= g.cardinality(p);
      const double dim = static_cast<double>(q * (g.cardinality(i) - 1));
      return stats.family_log_likelihood(i, parents) - 0.5 * dim * log_n;
    };
    std::vector<double> current(n);
    for (std::size_t i = 0; i < n; ++i) current[i] = family_score(i, g.parents(i));

    std::vector<std::vector<std::size_t>> children(n);
    for (std::size_t i = 0; i < n; ++i) children[i] = g.children(i);

    std::vector<Move> candidates;
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = 0; v < n; ++v) {
        if (u == v) continue;
        if (g.has_edge(u, v)) {
          const double del = family_score(v, without(g.parents(v), u)) - current[v];
          candidates.push_back({MoveKind::kDelete, u, v, del});
          if (g.parents(u).size() < options.max_parents && !reaches(children, u, v, u, v)) {
            const double rev = del + family_score(u, with(g.parents(u), v)) - current[u];
            candidates.push_back({MoveKind::kReverse, u, v, rev});
          }
        } else if (!g.has_edge(v, u) && g.parents(v).size() < options.max_parents && !reaches(children, v, u, n, n)) {
          candidates.push_back({MoveKind::kAdd, u, v, family_score(v, with(g.parents(v), u)) - current[v]});
        }
      }
    }
    std::erase_if(candidates, [](const Move& m) { return !(m.delta > 1e-9); });
    std::stable_sort(candidates.begin(), candidates.end(), [](const Move& a, const Move& b) {
      if (a.delta != b.delta) return a.delta > b.delta;
      if (a.kind != b.kind) return a.kind < b.kind;
      return std::pair(a.u, a.v) < std::pair(b.u, b.v);
    });

    bool accepted = false;
    const std::size_t tries = std::min(candidates.size(), options.refit_candidates);
    for (std::size_t t = 0; t < tries && !accepted; ++t) {
      Network next = fit(apply(g, candidates[t]), data, seed, options.em);
      Score s = bic_score(next, data);
      if (s.value > score.value) {
        theta = std::move(next);
        score = s;
        accepted = true;
      }
    }
    if (!accepted) break;
    ++moves;
    trace.push_back(score.value);
  }
  StructureCandidate c;
  c.network = std::move(theta);
  c.algorithm = std::move(algorithm);
  c.seed = seed;
  c.score = score;
  c.rounds = moves;
  c.score_trace = std::move(trace);
  return c;
}

}  // namespace

double mutual_information(const Dataset& data, std::size_t x, std::size_t y) {
  double total = 0.0;
  const auto n = joint_tally(data, {x, y}, total);
  return table_mi(n, data.schema()[x].cardinality(), data.schema()[y].cardinality());
}

double conditional_mutual_information(const Dataset& data, std::size_t x, std::size_t y, std::size_t c) {
  double total = 0.0;
  const auto n = joint_tally(data, {c, x, y}, total);
  const std::size_t rx = data.schema()[x].cardinality();
  const std::size_t ry = data.schema()[y].cardinality();
  double cmi = 0.0;
  for (std::size_t s = 0; s < data.schema()[c].cardinality(); ++s) {
    const std::vector<double> slice(n.begin() + static_cast<std::ptrdiff_t>(s * rx * ry),
                                    n.begin() + static_cast<std::ptrdiff_t>((s + 1) * rx * ry));
    const double ns = std::accumulate(slice.begin(), slice.end(), 0.0);
    if (ns > 0.0) cmi += ns / total * table_mi(slice, rx, ry);
  }
  return std::max(cmi, 0.0);
}

double mutual_information(const Factor& pair_counts) {
  if (pair_counts.vars().size() != 2) throw Error(ErrorCode::kInvalidArgument, "MI needs a table over two variables");
  return table_mi(pair_counts.values(), pair_counts.cards()[0], pair_counts.cards()[1]);
}

WeightMatrix mutual_information_matrix(const Dataset& data) {
  WeightMatrix w(data.num_variables());
  for (std::size_t a = 0; a < w.size(); ++a) {
    for (std::size_t b = a + 1; b < w.size(); ++b) {
      try {
        w.set(a, b, mutual_information(data, a, b));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoCompletePairs) throw;
      }
    }
  }
  return w;
}

std::vector<Edge> mwst(const WeightMatrix& weights, std::size_t root) {
  const std::size_t n = weights.size();
  if (n == 0) return {};
  if (root >= n) throw Error(ErrorCode::kInvalidArgument, "root " + std::to_string(root) + " is out of range");

  std::vector<Edge> pairs;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) pairs.push_back({a, b});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [&](const Edge& x, const Edge& y) {
    return weights(x.parent, x.child) > weights(y.parent, y.child);
  });

  std::vector<std::size_t> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](std::size_t a) {
    while (uf[a] != a) a = uf[a] = uf[uf[a]];
    return a;
  };
  std::vector<std::vector<std::size_t>> adj(n);
  for (const Edge& e : pairs) {
    const std::size_t ra = find(e.parent), rb = find(e.child);
    if (ra == rb) continue;
    uf[ra] = rb;
    adj[e.parent].push_back(e.child);
    adj[e.child].push_back(e.parent);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  std::vector<Edge> out;
  std::vector<char> seen(n, 0);
  auto dfs = [&](auto&& self, std::size_t a) -> void {
    seen[a] = 1;
    for (std::size_t b : adj[a]) {
      if (seen[b]) continue;
      out.push_back({a, b});
      self(self, b);
    }
  };
  dfs(dfs, root);
  return out;
}

Dag naive_bayes(const std::vector<Variable>& schema, std::size_t cls, std::span<const std::size_t> features) {
  if (cls >= schema.size()) throw Error(ErrorCode::kUnknownVariable, "class column is out of range");
  return Dag(schema, class_arcs(cls, features));
}

Dag naive_bayes(const std::vector<Variable>& schema, std::size_t cls) {
  const auto features = all_but(schema.size(), cls);
  return naive_bayes(schema, cls, features);
}

Dag tan(const Dataset& data, std::size_t cls) {
  std::vector<Edge> edges = class_arcs(cls, all_but(data.num_variables(), cls));
  for (const TreeEdge& t : tan_tree(data, cls)) edges.push_back(t.edge);
  return Dag(data.schema(), std::move(edges));
}

Dag fan(const Dataset& data, std::size_t cls, double tau) {
  if (!(tau >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "FAN threshold must be non-negative");
  std::vector<Edge> edges = class_arcs(cls, all_but(data.num_variables(), cls));
  for (const TreeEdge& t : tan_tree(data, cls)) {
    if (!(t.weight < tau)) edges.push_back(t.edge);
  }
  return Dag(data.schema(), std::move(edges));
}

std::size_t dimension(const Dag& dag) {
  std::size_t dim = 0;
  for (std::size_t i = 0; i < dag.size(); ++i) dim += dag.num_configs(i) * (dag.cardinality(i) - 1);
  return dim;
}

Score bic_score(const Network& fitted, const Dataset& data) {
  if (data.empty()) throw Error(ErrorCode::kEmptyData, "BIC needs at least one record");
  require_same_schema(fitted.dag(), data);
  const Counts counts =
      data.is_complete() ? complete_counts(fitted.dag(), data) : expected_counts(fitted, data).counts;
  Score s;
  s.log_likelihood = log_likelihood(fitted, counts);
  s.penalty = 0.5 * static_cast<double>(dimension(fitted.dag())) * std::log(static_cast<double>(data.size()));
  s.value = s.log_likelihood.neg_infinity ? -std::numeric_limits<double>::infinity()
                                          : s.log_likelihood.value - s.penalty;
  return s;
}

ExpectedStats::ExpectedStats(const Network& model, const Dataset& data)
    : model_(model), data_(&data), cals_(data.size()) {
  require_same_schema(model.dag(), data);
  if (!data.is_complete()) jt_ = std::make_unique<JunctionTree>(model_);
}

ExpectedStats::ExpectedStats(ExpectedStats&&) noexcept = default;
ExpectedStats::~ExpectedStats() = default;

const Calibration& ExpectedStats::calibration(std::size_t r) {
  if (!cals_[r]) cals_[r] = std::make_unique<Calibration>(jt_->calibrate(data_->record(r)));
  return *cals_[r];
}

const Factor& ExpectedStats::counts(const std::vector<std::size_t>& vars) {
  if (auto it = cache_.find(vars); it != cache_.end()) return it->second;
  std::vector<std::size_t> cards;
  for (std::size_t v : vars) cards.push_back(model_.dag().cardinality(v));
  Factor f(vars, cards, 0.0);
  const bool in_clique = jt_ && jt_->find_clique(vars) < jt_->cliques().size();
  for (std::size_t r = 0; r < data_->size(); ++r) {
    const Assignment& x = data_->record(r);
    const bool observed = std::all_of(vars.begin(), vars.end(), [&](std::size_t v) { return x[v] != kMissing; });
    if (observed) {
      f[f.index_of(x)] += 1.0;
      continue;
    }
    Factor p;
    if (in_clique) {
      const Calibration& cal = calibration(r);
      if (cal.zero_evidence()) continue;
      p = cal.marginal(vars);
    } else {
      p = posterior_joint(model_, x, vars);
    }
    for (std::size_t t = 0; t < f.size(); ++t) f[t] += p[t];
  }
  return cache_.emplace(vars, std::move(f)).first->second;
}

double ExpectedStats::family_log_likelihood(std::size_t child, const std::vector<std::size_t>& parents) {
  const Factor& joint = counts(with(parents, child));
  double ll = 0.0;
  for (double c : joint.values()) ll += xlogx(c);
  const Factor pa = joint.marginal(parents);
  for (double c : pa.values()) ll -= xlogx(c);
  return ll;
}

StructureCandidate mwst_em(const Dataset& data, std::optional<std::size_t> root, std::uint64_t seed,
                           const SearchOptions& options) {
  const std::size_t n = data.num_variables();
  if (n == 0) throw Error(ErrorCode::kInvalidSchema, "dataset has no columns");
  if (data.empty()) throw Error(ErrorCode::kEmptyData, "MWST-EM needs at least one record");
  if (!root) {
    Rng rng(seed);
    root = rng.below(n);
  }
  std::vector<Edge> edges = mwst(mutual_information_matrix(data), *root);
  std::sort(edges.begin(), edges.end());
  std::size_t rounds = 1;
  Network theta = fit(Dag(data.schema(), edges), data, seed, options.em);
  while (rounds < options.max_rounds) {
    ExpectedStats stats(theta, data);
    WeightMatrix w(n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = a + 1; b < n; ++b) w.set(a, b, mutual_information(stats.counts({a, b})));
    }
    std::vector<Edge> next = mwst(w, *root);
    std::sort(next.begin(), next.end());
    ++rounds;
    if (next == edges) break;
    edges = std::move(next);
    theta = fit(Dag(data.schema(), edges), data, seed, options.em);
  }
  return make_candidate(std::move(theta), data, "mwst-em", seed, rounds);
}

StructureCandidate sem(const Dataset& data, const Dag* init, std::uint64_t seed, const SearchOptions& options) {
  if (data.empty()) throw Error(ErrorCode::kEmptyData, "SEM needs at least one record");
  Dag g;
  if (init) {
    if (!init->is_acyclic()) throw Error(ErrorCode::kCycleDetected, "SEM needs an acyclic starting structure");
    g = *init;
  } else {
    std::vector<Edge> chain;
    for (std::size_t v = 1; v < data.num_variables(); ++v) chain.push_back({v - 1, v});
    g = Dag(data.schema(), std::move(chain));
  }
  Network theta = fit(g, data, seed, options.em);
  Score score = bic_score(theta, data);
  return search(data, std::move(theta), score, seed, options, "sem");
}

StructureCandidate sem_plus_t(const Dataset& data, std::uint64_t seed, const SearchOptions& options) {
  StructureCandidate tree = mwst_em(data, std::nullopt, seed, options);
  return search(data, std::move(tree.network), tree.score, seed, options, "sem+t");
}

std::optional<StructureAlgorithm> parse_structure_algorithm(std::string_view name) {
  for (auto a : {StructureAlgorithm::kNaiveBayes, StructureAlgorithm::kTan, StructureAlgorithm::kFan,
                 StructureAlgorithm::kMwst, StructureAlgorithm::kMwstEm, StructureAlgorithm::kSem,
                 StructureAlgorithm::kSemPlusT}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

std::string_view to_string(StructureAlgorithm algo) {
  switch (algo) {
    case StructureAlgorithm::kNaiveBayes: return "nb";
    case StructureAlgorithm::kTan: return "tan";
    case StructureAlgorithm::kFan: return "fan";
    case StructureAlgorithm::kMwst: return "mwst";
    case StructureAlgorithm::kMwstEm: return "mwst-em";
    case StructureAlgorithm::kSem: return "sem";
    case StructureAlgorithm::kSemPlusT: return "sem+t";
  }
  return "?";
}

StructureCandidate learn_structure(const Dataset& data, const LearnStructureOptions& options) {
  const auto algo = options.algorithm;
  const std::string name(to_string(algo));
  auto need_class = [&] {
    if (!options.cls) throw Error(ErrorCode::kInvalidArgument, "algorithm '" + name + "' needs a class variable");
    return *options.cls;
  };
  Dag dag;
  switch (algo) {
    case StructureAlgorithm::kMwstEm: return mwst_em(data, options.root, options.seed, options.search);
    case StructureAlgorithm::kSem: return sem(data, nullptr, options.seed, options.search);
    case StructureAlgorithm::kSemPlusT: return sem_plus_t(data, options.seed, options.search);
    case StructureAlgorithm::kNaiveBayes: dag = naive_bayes(data.schema(), need_class()); break;
    case StructureAlgorithm::kTan: dag = tan(data, need_class()); break;
    case StructureAlgorithm::kFan: dag = fan(data, need_class(), options.tau); break;
    case StructureAlgorithm::kMwst: {
      if (data.num_variables() == 0) throw Error(ErrorCode::kInvalidSchema, "dataset has no columns");
      std::size_t root = options.root ? *options.root : Rng(options.seed).below(data.num_variables());
      dag = Dag(data.schema(), mwst(mutual_information_matrix(data), root));
      break;
    }
  }
  return make_candidate(fit(dag, data, options.seed, options.search.em), data, name, options.seed, 1);
}

Json provenance_json(const StructureCandidate& candidate) {
  Json j;
  j["algorithm"] = candidate.algorithm;
  j["seed"] = candidate.seed;
  if (std::isfinite(candidate.score.value)) {
    j["score"] = candidate.score.value;
  } else {
    j["score"] = "-inf";
  }
  j["rounds"] = candidate.rounds;
  if (!candidate.score_trace.empty()) j["score_trace"] = candidate.score_trace;
  return j;
}

}  // namespace bnkit
