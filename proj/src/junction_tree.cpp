#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "bnkit/inference.hpp"

namespace bnkit {
namespace {

using Graph = std::vector<std::set<std::size_t>>;

Graph moral_graph(const Dag& dag) {
  Graph g(dag.size());
  for (std::size_t i = 0; i < dag.size(); ++i) {
    const auto& ps = dag.parents(i);
    for (std::size_t a = 0; a < ps.size(); ++a) {
      g[i].insert(ps[a]);
      g[ps[a]].insert(i);
      for (std::size_t b = a + 1; b < ps.size(); ++b) {
        g[ps[a]].insert(ps[b]);
        g[ps[b]].insert(ps[a]);
      }
    }
  }
  return g;
}

std::size_t fill_in(const Graph& g, const std::vector<bool>& gone, std::size_t v) {
  std::vector<std::size_t> nbrs;
  for (std::size_t w : g[v]) {
    if (!gone[w]) nbrs.push_back(w);
  }
  std::size_t fill = 0;
  for (std::size_t a = 0; a < nbrs.size(); ++a) {
    for (std::size_t b = a + 1; b < nbrs.size(); ++b) {
      if (!g[nbrs[a]].count(nbrs[b])) ++fill;
    }
  }
  return fill;
}

// Eliminates in min-fill order and returns the elimination cliques.
std::vector<std::vector<std::size_t>> elimination_cliques(const Dag& dag, std::vector<std::size_t>* order_out) {
  Graph g = moral_graph(dag);
  const std::size_t n = dag.size();
  std::vector<bool> gone(n, false);
  std::vector<std::vector<std::size_t>> cliques;
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t best = n;
    std::size_t best_fill = std::numeric_limits<std::size_t>::max();
    for (std::size_t v = 0; v < n; ++v) {
      if (gone[v]) continue;
      const std::size_t f = fill_in(g, gone, v);
      if (f < best_fill) {
        best_fill = f;
        best = v;
      }
    }
    std::vector<std::size_t> clique{best};
    for (std::size_t w : g[best]) {
      if (!gone[w]) clique.push_back(w);
    }
    for (std::size_t a = 1; a < clique.size(); ++a) {
      for (std::size_t b = a + 1; b < clique.size(); ++b) {
        g[clique[a]].insert(clique[b]);
        g[clique[b]].insert(clique[a]);
      }
    }
    gone[best] = true;
    std::sort(clique.begin(), clique.end());
    cliques.push_back(std::move(clique));
    if (order_out) order_out->push_back(best);
  }
  return cliques;
}

bool is_subset(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

std::vector<std::size_t> intersection(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[std::max(a, b)] = std::min(a, b);
    return true;
  }
};

}  // namespace

std::vector<std::size_t> min_fill_order(const Dag& dag) {
  std::vector<std::size_t> order;
  elimination_cliques(dag, &order);
  return order;
}

JunctionTree::JunctionTree(const Network& net) : net_(net) {
  require_valid(net_);
  const Dag& dag = net_.dag();
  if (dag.size() == 0) throw Error(ErrorCode::kInvalidSchema, "network has no variables");
  const std::size_t n = dag.size();
  auto raw = elimination_cliques(dag, nullptr);

  for (std::size_t a = 0; a < raw.size(); ++a) {
    bool keep = true;
    for (std::size_t b = 0; b < raw.size() && keep; ++b) {
      if (a == b || !is_subset(raw[a], raw[b])) continue;
      if (raw[a].size() < raw[b].size() || b < a) keep = false;
    }
    if (keep) cliques_.push_back({raw[a]});
  }

  // Maximum-weight spanning tree on separator size; zero-weight links join
  // disconnected components so the result is always a single tree.
  struct Link {
    std::size_t weight, a, b;
  };
  std::vector<Link> links;
  for (std::size_t a = 0; a < cliques_.size(); ++a) {
    for (std::size_t b = a + 1; b < cliques_.size(); ++b) {
      links.push_back({intersection(cliques_[a].vars, cliques_[b].vars).size(), a, b});
    }
  }
  std::stable_sort(links.begin(), links.end(), [](const Link& x, const Link& y) { return x.weight > y.weight; });
  std::vector<std::vector<std::size_t>> adj(cliques_.size());
  DisjointSets sets(cliques_.size());
  for (const Link& l : links) {
    if (sets.unite(l.a, l.b)) {
      adj[l.a].push_back(l.b);
      adj[l.b].push_back(l.a);
    }
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  child_separators_.resize(cliques_.size());
  std::vector<std::size_t> parent(cliques_.size(), cliques_.size());
  std::vector<std::size_t> queue{0};
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const std::size_t c = queue[head];
    for (std::size_t d : adj[c]) {
      if (d == parent[c]) continue;
      parent[d] = c;
      child_separators_[c].push_back(separators_.size());
      separators_.push_back({c, d, intersection(cliques_[c].vars, cliques_[d].vars)});
      queue.push_back(d);
    }
  }

  family_clique_.resize(n);
  evidence_clique_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> family = dag.parents(i);
    family.push_back(i);
    std::sort(family.begin(), family.end());
    family_clique_[i] = find_clique(family);
    const std::size_t single[] = {i};
    evidence_clique_[i] = find_clique(single);
  }

  for (const Clique& c : cliques_) {
    std::vector<std::size_t> cards;
    for (std::size_t v : c.vars) cards.push_back(dag.cardinality(v));
    potentials_.emplace_back(c.vars, cards, 1.0);
  }
  for (std::size_t i = 0; i < n; ++i) potentials_[family_clique_[i]].multiply_in(Factor::from_cpt(dag, net_.cpt(i)));
}

std::size_t JunctionTree::find_clique(std::span<const std::size_t> vars) const {
  std::vector<std::size_t> sorted(vars.begin(), vars.end());
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t c = 0; c < cliques_.size(); ++c) {
    if (is_subset(sorted, cliques_[c].vars)) return c;
  }
  return cliques_.size();
}

Calibration JunctionTree::calibrate(const Assignment& evidence) const {
  Calibration cal;
  cal.tree_ = this;
  cal.cliques_ = potentials_;
  for (const Separator& s : separators_) {
    std::vector<std::size_t> cards;
    for (std::size_t v : s.vars) cards.push_back(net_.dag().cardinality(v));
    cal.separators_.emplace_back(s.vars, cards, 1.0);
  }
  for (std::size_t v = 0; v < evidence.size() && v < net_.size(); ++v) {
    if (evidence[v] != kMissing) cal.cliques_[evidence_clique_[v]].observe(v, evidence[v]);
  }
  double log_scale = 0.0;
  cal.collect(0, log_scale);
  if (cal.zero_evidence_) {
    cal.log_evidence_ = -std::numeric_limits<double>::infinity();
    return cal;
  }
  cal.log_evidence_ = log_scale;
  cal.distribute(0);
  return cal;
}

void Calibration::absorb(std::size_t from, std::size_t to, std::size_t sep) {
  Factor msg = cliques_[from].marginal(tree_->separators_[sep].vars);
  cliques_[to].multiply_in(msg);
  cliques_[to].divide_in(separators_[sep]);
  separators_[sep] = std::move(msg);
}

void Calibration::collect(std::size_t c, double& log_scale) {
  for (std::size_t s : tree_->child_separators_[c]) {
    collect(tree_->separators_[s].b, log_scale);
    if (zero_evidence_) return;
    absorb(tree_->separators_[s].b, c, s);
  }
  const double z = cliques_[c].normalize();
  if (z <= 0.0) {
    zero_evidence_ = true;
    return;
  }
  log_scale += std::log(z);
}

void Calibration::distribute(std::size_t c) {
  for (std::size_t s : tree_->child_separators_[c]) {
    const std::size_t child = tree_->separators_[s].b;
    absorb(c, child, s);
    cliques_[child].normalize();
    distribute(child);
  }
}

void Calibration::pass_messages() {
  if (zero_evidence_) return;
  double ignored = 0.0;
  collect(0, ignored);
  distribute(0);
}

Factor Calibration::marginal(std::span<const std::size_t> vars) const {
  const std::size_t c = tree_->find_clique(vars);
  if (c == cliques_.size()) {
    throw Error(ErrorCode::kInvalidArgument, "variable set is not contained in a single clique");
  }
  Factor f = cliques_[c].marginal(vars);
  f.normalize();
  return f;
}

Factor Calibration::family_marginal(std::size_t i) const {
  std::vector<std::size_t> family = tree_->net_.dag().parents(i);
  family.push_back(i);
  return cliques_[tree_->family_clique_[i]].marginal(family);
}

Posterior JunctionTree::query(const Assignment& evidence, std::size_t target) const {
  if (target >= net_.size()) throw Error(ErrorCode::kUnknownVariable, "target index out of range");
  if (target < evidence.size() && evidence[target] != kMissing) {
    throw Error(ErrorCode::kTargetInEvidence, "'" + net_.dag().variable(target).name + "' is part of the evidence");
  }
  Posterior post;
  post.variable = target;
  post.evidence = evidence;
  Calibration cal = calibrate(evidence);
  if (cal.zero_evidence()) {
    post.zero_evidence = true;
    return post;
  }
  const std::size_t vars[] = {target};
  post.distribution = cal.marginal(vars).values();
  return post;
}

}  // namespace bnkit
