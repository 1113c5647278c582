#include "bnkit/params.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "bnkit/inference.hpp"
#include "bnkit/random.hpp"

namespace bnkit {
namespace {

// Maps each entry of the family factor of variable i to its CPT cell j * r + k.
std::vector<std::size_t> family_cell_map(const Dag& dag, std::size_t i) {
  std::vector<std::size_t> fam = dag.parents(i);
  fam.push_back(i);
  std::sort(fam.begin(), fam.end());
  std::vector<std::size_t> cards;
  for (std::size_t v : fam) cards.push_back(dag.cardinality(v));
  Factor f(fam, cards, 0.0);
  std::vector<std::size_t> map(f.size());
  Assignment x(dag.size(), kMissing);
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const auto states = f.decode(idx);
    for (std::size_t t = 0; t < fam.size(); ++t) x[fam[t]] = states[t];
    map[idx] = parent_config_index(dag, i, x) * dag.cardinality(i) + static_cast<std::size_t>(x[i]);
  }
  return map;
}

bool family_observed(const Dag& dag, std::size_t i, const Assignment& x) {
  if (x[i] == kMissing) return false;
  for (std::size_t p : dag.parents(i)) {
    if (x[p] == kMissing) return false;
  }
  return true;
}

void add_ll(LogLikelihood& ll, double term) {
  if (std::isinf(term) && term < 0) {
    ll.neg_infinity = true;
    ll.value = -std::numeric_limits<double>::infinity();
  } else if (!ll.neg_infinity) {
    ll.value += term;
  }
}

void check_observed(const Dag& dag, const Dataset& data, const DirichletPrior* prior) {
  for (std::size_t i = 0; i < dag.size(); ++i) {
    bool seen = false;
    for (const auto& x : data.records()) {
      if (x[i] != kMissing) {
        seen = true;
        break;
      }
    }
    if (seen) continue;
    double mass = 0.0;
    if (prior) {
      for (double a : prior->alpha.tables[i]) mass += a;
    }
    if (mass == 0.0) {
      throw Error(ErrorCode::kNoObservedData, "variable '" + dag.variable(i).name + "' is never observed");
    }
  }
}

bool delta_below(const LogLikelihood& a, const LogLikelihood& b, double tol) {
  if (a.neg_infinity || b.neg_infinity) return false;
  return std::abs(a.value - b.value) < tol;
}

enum class Threshold { kNone, kPerIteration, kPostHoc };

EmResult run_em(const Dag& dag, const Dataset& data, const EmOptions& options, Threshold threshold) {
  const auto start = std::chrono::steady_clock::now();
  if (data.empty()) throw Error(ErrorCode::kEmptyData, "EM needs at least one record");
  require_same_schema(dag, data);
  const DirichletPrior* prior = options.prior ? &*options.prior : nullptr;
  check_observed(dag, data, prior);

  const BoundTable bounds = options.bounds ? *options.bounds : rbe_phase1_bounds(dag, data);
  const bool complete = data.is_complete();

  EmResult result;
  EmTrace& trace = result.trace;
  Network theta = initial_parameters(dag, options);
  Expectation current = expected_counts(theta, data);
  trace.initial_ll = current.log_likelihood;

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    MleResult m = mle_from_counts(dag, current.counts, prior);
    EmIteration rec;
    Network next = m.network;
    std::optional<Network> clamped;
    if (threshold == Threshold::kPerIteration) {
      clamped = clamp_to_bounds(next, bounds);
      rec.clamped_bound_satisfaction = bound_satisfaction(*clamped, bounds);
      next = normalize_rows(*clamped, &trace.degenerate_rows);
    }
    if (options.observer) options.observer({it, m.network, clamped ? &*clamped : nullptr, next});
    rec.expected_ll = log_likelihood(next, current.counts);
    rec.bound_satisfaction = bound_satisfaction(next, bounds);
    Expectation following = expected_counts(next, data);
    rec.ll = following.log_likelihood;
    trace.iterations.push_back(rec);
    trace.uniform_rows = std::move(m.uniform_rows);

    const bool done = complete || delta_below(following.log_likelihood, current.log_likelihood, options.tolerance);
    theta = std::move(next);
    current = std::move(following);
    if (done) {
      trace.converged = true;
      break;
    }
  }

  if (threshold == Threshold::kPostHoc) {
    Network clamped = clamp_to_bounds(theta, bounds);
    EmIteration rec;
    rec.clamped_bound_satisfaction = bound_satisfaction(clamped, bounds);
    Network normalized = normalize_rows(clamped, &trace.degenerate_rows);
    if (options.observer) options.observer({trace.iterations.size(), theta, &clamped, normalized});
    theta = std::move(normalized);
    rec.bound_satisfaction = bound_satisfaction(theta, bounds);
    rec.expected_ll = log_likelihood(theta, current.counts);
    rec.ll = expected_counts(theta, data).log_likelihood;
    trace.post_hoc = rec;
  }

  std::sort(trace.degenerate_rows.begin(), trace.degenerate_rows.end());
  trace.degenerate_rows.erase(std::unique(trace.degenerate_rows.begin(), trace.degenerate_rows.end()),
                              trace.degenerate_rows.end());
  result.network = std::move(theta);
  trace.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace

DirichletPrior DirichletPrior::none(const Dag& dag) { return {Counts::zeros(dag)}; }

DirichletPrior DirichletPrior::uniform(const Dag& dag, double alpha) {
  if (alpha < 0.0) throw Error(ErrorCode::kInvalidArgument, "Dirichlet pseudo-counts must be non-negative");
  DirichletPrior p{Counts::zeros(dag)};
  for (auto& t : p.alpha.tables) std::fill(t.begin(), t.end(), alpha);
  return p;
}

DirichletPrior DirichletPrior::from_imaginary_cases(const Dag& dag, const Dataset& cases) {
  require_same_schema(dag, cases);
  return {complete_counts(dag, cases)};
}

MleResult mle_from_counts(const Dag& dag, const Counts& counts, const DirichletPrior* prior) {
  MleResult out;
  std::vector<Cpt> cpts;
  cpts.reserve(dag.size());
  for (std::size_t i = 0; i < dag.size(); ++i) {
    Cpt cpt = Cpt::uniform(dag, i);
    const std::size_t r = cpt.num_states();
    for (std::size_t j = 0; j < cpt.num_configs(); ++j) {
      double total = 0.0;
      for (std::size_t k = 0; k < r; ++k) {
        double v = counts.tables[i][j * r + k];
        if (prior) v += prior->alpha.tables[i][j * r + k];
        cpt(j, k) = v;
        total += v;
      }
      if (total > 0.0) {
        for (std::size_t k = 0; k < r; ++k) cpt(j, k) /= total;
      } else {
        for (std::size_t k = 0; k < r; ++k) cpt(j, k) = 1.0 / static_cast<double>(r);
        out.uniform_rows.emplace_back(i, j);
      }
    }
    cpts.push_back(std::move(cpt));
  }
  out.network = Network(dag, std::move(cpts));
  return out;
}

MleResult mle(const Dag& dag, const Dataset& data, const DirichletPrior* prior) {
  require_same_schema(dag, data);
  return mle_from_counts(dag, complete_counts(dag, data), prior);
}

BoundTable rbe_phase1_bounds(const Dag& dag, const Dataset& data) {
  require_same_schema(dag, data);
  Counts n = Counts::zeros(dag);
  std::vector<std::vector<double>> m(dag.size());
  for (std::size_t i = 0; i < dag.size(); ++i) m[i].assign(dag.num_configs(i), 0.0);

  for (const Assignment& x : data.records()) {
    for (std::size_t i = 0; i < dag.size(); ++i) {
      if (family_observed(dag, i, x)) {
        n.at(dag, i, parent_config_index(dag, i, x), static_cast<std::size_t>(x[i])) += 1.0;
        continue;
      }
      const auto& parents = dag.parents(i);
      for (std::size_t j = 0; j < dag.num_configs(i); ++j) {
        const auto states = parent_config_states(dag, i, j);
        bool consistent = true;
        for (std::size_t t = 0; t < parents.size() && consistent; ++t) {
          consistent = x[parents[t]] == kMissing || x[parents[t]] == states[t];
        }
        if (consistent) m[i][j] += 1.0;
      }
    }
  }

  BoundTable b{Counts::zeros(dag), Counts::zeros(dag)};
  for (std::size_t i = 0; i < dag.size(); ++i) {
    const std::size_t r = dag.cardinality(i);
    for (std::size_t j = 0; j < dag.num_configs(i); ++j) {
      double row = 0.0;
      for (std::size_t k = 0; k < r; ++k) row += n.at(dag, i, j, k);
      const double total = row + m[i][j];
      for (std::size_t k = 0; k < r; ++k) {
        if (total == 0.0) {
          b.min.at(dag, i, j, k) = 0.0;
          b.max.at(dag, i, j, k) = 1.0;
        } else {
          b.min.at(dag, i, j, k) = n.at(dag, i, j, k) / total;
          b.max.at(dag, i, j, k) = (n.at(dag, i, j, k) + m[i][j]) / total;
        }
      }
    }
  }
  return b;
}

double bound_satisfaction(const Network& net, const BoundTable& bounds) {
  std::size_t total = 0;
  std::size_t inside = 0;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& theta = net.cpt(i).values();
    const auto& lo = bounds.min.tables.at(i);
    const auto& hi = bounds.max.tables.at(i);
    if (lo.size() != theta.size()) throw Error(ErrorCode::kShapeMismatch, "bound table does not match the CPTs");
    for (std::size_t t = 0; t < theta.size(); ++t) {
      ++total;
      if (theta[t] >= lo[t] - kBoundSlack && theta[t] <= hi[t] + kBoundSlack) ++inside;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(inside) / static_cast<double>(total);
}

Network clamp_to_bounds(const Network& net, const BoundTable& bounds) {
  std::vector<Cpt> cpts = net.cpts();
  for (std::size_t i = 0; i < cpts.size(); ++i) {
    auto& theta = cpts[i].values();
    const auto& lo = bounds.min.tables.at(i);
    const auto& hi = bounds.max.tables.at(i);
    for (std::size_t t = 0; t < theta.size(); ++t) theta[t] = std::clamp(theta[t], lo[t], hi[t]);
  }
  return Network(net.dag(), std::move(cpts));
}

Network normalize_rows(const Network& net, std::vector<RowRef>* degenerate) {
  std::vector<Cpt> cpts = net.cpts();
  for (std::size_t i = 0; i < cpts.size(); ++i) {
    Cpt& cpt = cpts[i];
    for (std::size_t j = 0; j < cpt.num_configs(); ++j) {
      auto row = cpt.row(j);
      double total = 0.0;
      for (double v : row) total += v;
      if (total > 0.0) {
        for (double& v : row) v /= total;
      } else {
        for (double& v : row) v = 1.0 / static_cast<double>(row.size());
        if (degenerate) degenerate->emplace_back(i, j);
      }
    }
  }
  return Network(net.dag(), std::move(cpts));
}

Expectation expected_counts(const Network& net, const Dataset& data) {
  const Dag& dag = net.dag();
  Expectation out{Counts::zeros(dag), {}};
  JunctionTree jt(net);
  std::vector<std::vector<std::size_t>> cell_maps(dag.size());

  for (const Assignment& x : data.records()) {
    if (std::find(x.begin(), x.end(), kMissing) == x.end()) {
      double logp = 0.0;
      for (std::size_t i = 0; i < dag.size(); ++i) {
        const std::size_t j = parent_config_index(dag, i, x);
        const std::size_t k = static_cast<std::size_t>(x[i]);
        out.counts.at(dag, i, j, k) += 1.0;
        logp += std::log(net.cpt(i)(j, k));
      }
      add_ll(out.log_likelihood, logp);
      continue;
    }
    Calibration cal = jt.calibrate(x);
    if (cal.zero_evidence()) {
      add_ll(out.log_likelihood, -std::numeric_limits<double>::infinity());
      continue;
    }
    add_ll(out.log_likelihood, cal.log_evidence());
    for (std::size_t i = 0; i < dag.size(); ++i) {
      if (family_observed(dag, i, x)) {
        out.counts.at(dag, i, parent_config_index(dag, i, x), static_cast<std::size_t>(x[i])) += 1.0;
        continue;
      }
      if (cell_maps[i].empty()) cell_maps[i] = family_cell_map(dag, i);
      const Factor fam = cal.family_marginal(i);
      auto& table = out.counts.tables[i];
      for (std::size_t idx = 0; idx < fam.size(); ++idx) table[cell_maps[i][idx]] += fam[idx];
    }
  }
  return out;
}

Network initial_parameters(const Dag& dag, const EmOptions& options) {
  switch (options.init) {
    case InitKind::kUniform:
      return Network::uniform(dag);
    case InitKind::kGiven: {
      if (!options.initial) throw Error(ErrorCode::kInvalidArgument, "init 'given' needs starting parameters");
      const Network& given = *options.initial;
      if (given.size() != dag.size()) throw Error(ErrorCode::kShapeMismatch, "initial parameters do not match the structure");
      for (std::size_t i = 0; i < dag.size(); ++i) {
        if (given.dag().parents(i) != dag.parents(i) || given.dag().cardinality(i) != dag.cardinality(i)) {
          throw Error(ErrorCode::kShapeMismatch, "initial parameters do not match the structure");
        }
      }
      Network net(dag, given.cpts());
      require_valid(net);
      return net;
    }
    case InitKind::kDirichlet:
      break;
  }
  Rng rng(options.seed);
  std::vector<Cpt> cpts;
  for (std::size_t i = 0; i < dag.size(); ++i) {
    Cpt cpt = Cpt::uniform(dag, i);
    for (std::size_t j = 0; j < cpt.num_configs(); ++j) {
      const auto row = rng.dirichlet(cpt.num_states(), 1.0);
      std::copy(row.begin(), row.end(), cpt.row(j).begin());
    }
    cpts.push_back(std::move(cpt));
  }
  return Network(dag, std::move(cpts));
}

EmResult em(const Dag& dag, const Dataset& data, const EmOptions& options) {
  return run_em(dag, data, options, Threshold::kNone);
}

EmResult ems(const Dag& dag, const Dataset& data, const EmOptions& options, ThresholdMode mode) {
  return run_em(dag, data, options, mode == ThresholdMode::kPerIteration ? Threshold::kPerIteration : Threshold::kPostHoc);
}

Json to_json(const BoundTable& bounds, const Dag& dag) {
  Json vars = Json::array();
  for (std::size_t i = 0; i < dag.size(); ++i) {
    Json rows = Json::array();
    const std::size_t r = dag.cardinality(i);
    for (std::size_t j = 0; j < dag.num_configs(i); ++j) {
      Json row = Json::array();
      for (std::size_t k = 0; k < r; ++k) {
        row.push_back(Json::array({bounds.min.at(dag, i, j, k), bounds.max.at(dag, i, j, k)}));
      }
      rows.push_back(std::move(row));
    }
    vars.push_back(Json{{"child", i}, {"name", dag.variable(i).name}, {"parents", dag.parents(i)}, {"rows", std::move(rows)}});
  }
  return Json{{"bounds", std::move(vars)}};
}

namespace {

Json ll_json(const LogLikelihood& ll) {
  if (ll.neg_infinity) return Json("-inf");
  return Json(ll.value);
}

Json iteration_json(const EmIteration& it) {
  Json j{{"ll", ll_json(it.ll)}, {"expected_ll", ll_json(it.expected_ll)}, {"bound_satisfaction", it.bound_satisfaction}};
  if (it.clamped_bound_satisfaction) j["clamped_bound_satisfaction"] = *it.clamped_bound_satisfaction;
  return j;
}

Json rows_json(const std::vector<RowRef>& rows) {
  Json out = Json::array();
  for (const auto& [i, j] : rows) out.push_back(Json::array({i, j}));
  return out;
}

}  // namespace

Json to_json(const EmTrace& trace, bool include_timing) {
  Json iters = Json::array();
  for (const auto& it : trace.iterations) iters.push_back(iteration_json(it));
  Json j;
  j["initial_ll"] = ll_json(trace.initial_ll);
  j["iterations"] = std::move(iters);
  if (trace.post_hoc) j["post_hoc"] = iteration_json(*trace.post_hoc);
  if (include_timing) j["wall_time_s"] = trace.wall_time_s;
  j["converged"] = trace.converged;
  j["uniform_rows"] = rows_json(trace.uniform_rows);
  j["degenerate_rows"] = rows_json(trace.degenerate_rows);
  return j;
}

}  // namespace bnkit
