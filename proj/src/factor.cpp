#include "bnkit/factor.hpp"

#include <algorithm>
#include <cassert>

namespace bnkit {
namespace {

std::vector<std::size_t> own_strides(const std::vector<std::size_t>& cards) {
  std::vector<std::size_t> strides(cards.size());
  std::size_t s = 1;
  for (std::size_t t = cards.size(); t-- > 0;) {
    strides[t] = s;
    s *= cards[t];
  }
  return strides;
}

// Walks the entries of a scope in layout order while tracking the matching
// entry index of one or two embedded factors.
class Odometer {
 public:
  explicit Odometer(const std::vector<std::size_t>& cards) : cards_(cards), digits_(cards.size(), 0) {}

  // Advances and updates `offsets` using per-factor strides. Returns false at the end.
  template <std::size_t N>
  bool next(std::size_t (&offsets)[N], const std::vector<std::size_t>* (&strides)[N]) {
    for (std::size_t t = cards_.size(); t-- > 0;) {
      if (++digits_[t] < cards_[t]) {
        for (std::size_t f = 0; f < N; ++f) offsets[f] += (*strides[f])[t];
        return true;
      }
      digits_[t] = 0;
      for (std::size_t f = 0; f < N; ++f) offsets[f] -= (*strides[f])[t] * (cards_[t] - 1);
    }
    return false;
  }

 private:
  const std::vector<std::size_t>& cards_;
  std::vector<std::size_t> digits_;
};

}  // namespace

Factor::Factor(std::vector<std::size_t> vars, std::vector<std::size_t> cards, double fill)
    : vars_(std::move(vars)), cards_(std::move(cards)) {
  assert(vars_.size() == cards_.size());
  assert(std::is_sorted(vars_.begin(), vars_.end()));
  std::size_t n = 1;
  for (std::size_t c : cards_) n *= c;
  values_.assign(n, fill);
}

Factor Factor::from_cpt(const Dag& dag, const Cpt& cpt) {
  std::vector<std::size_t> vars = cpt.parents();
  vars.push_back(cpt.child());
  std::sort(vars.begin(), vars.end());
  std::vector<std::size_t> cards;
  for (std::size_t v : vars) cards.push_back(dag.cardinality(v));
  Factor f(vars, cards, 0.0);
  Assignment x(dag.size(), kMissing);
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    const auto states = f.decode(idx);
    for (std::size_t t = 0; t < vars.size(); ++t) x[vars[t]] = states[t];
    const std::size_t j = parent_config_index(dag, cpt.child(), x);
    f.values_[idx] = cpt(j, static_cast<std::size_t>(x[cpt.child()]));
  }
  return f;
}

bool Factor::contains(std::size_t var) const { return std::binary_search(vars_.begin(), vars_.end(), var); }

std::size_t Factor::position(std::size_t var) const {
  auto it = std::lower_bound(vars_.begin(), vars_.end(), var);
  if (it == vars_.end() || *it != var) return vars_.size();
  return static_cast<std::size_t>(it - vars_.begin());
}

std::size_t Factor::index_of(const Assignment& x) const {
  std::size_t idx = 0;
  for (std::size_t t = 0; t < vars_.size(); ++t) idx = idx * cards_[t] + static_cast<std::size_t>(x[vars_[t]]);
  return idx;
}

std::vector<State> Factor::decode(std::size_t idx) const {
  std::vector<State> states(vars_.size());
  for (std::size_t t = vars_.size(); t-- > 0;) {
    states[t] = static_cast<State>(idx % cards_[t]);
    idx /= cards_[t];
  }
  return states;
}

std::vector<std::size_t> embedded_strides(const Factor& scope, const Factor& sub) {
  const auto sub_strides = own_strides(sub.cards());
  std::vector<std::size_t> strides(scope.vars().size(), 0);
  for (std::size_t t = 0; t < scope.vars().size(); ++t) {
    const std::size_t p = sub.position(scope.vars()[t]);
    if (p < sub.vars().size()) strides[t] = sub_strides[p];
  }
  return strides;
}

Factor Factor::product(const Factor& other) const {
  std::vector<std::size_t> vars;
  std::set_union(vars_.begin(), vars_.end(), other.vars_.begin(), other.vars_.end(), std::back_inserter(vars));
  std::vector<std::size_t> cards;
  for (std::size_t v : vars) {
    const std::size_t p = position(v);
    cards.push_back(p < vars_.size() ? cards_[p] : other.cards_[other.position(v)]);
  }
  Factor out(std::move(vars), std::move(cards), 0.0);
  const auto sa = embedded_strides(out, *this);
  const auto sb = embedded_strides(out, other);
  std::size_t offsets[2] = {0, 0};
  const std::vector<std::size_t>* strides[2] = {&sa, &sb};
  Odometer odo(out.cards_);
  std::size_t idx = 0;
  do {
    out.values_[idx++] = values_[offsets[0]] * other.values_[offsets[1]];
  } while (odo.next(offsets, strides));
  return out;
}

Factor Factor::marginal(std::span<const std::size_t> keep) const {
  std::vector<std::size_t> vars;
  std::vector<std::size_t> cards;
  for (std::size_t t = 0; t < vars_.size(); ++t) {
    if (std::find(keep.begin(), keep.end(), vars_[t]) != keep.end()) {
      vars.push_back(vars_[t]);
      cards.push_back(cards_[t]);
    }
  }
  Factor out(std::move(vars), std::move(cards), 0.0);
  const auto so = embedded_strides(*this, out);
  std::size_t offsets[1] = {0};
  const std::vector<std::size_t>* strides[1] = {&so};
  Odometer odo(cards_);
  std::size_t idx = 0;
  do {
    out.values_[offsets[0]] += values_[idx++];
  } while (odo.next(offsets, strides));
  return out;
}

Factor Factor::reduce(std::size_t var, State state) const {
  const std::size_t p = position(var);
  if (p == vars_.size()) return *this;
  std::vector<std::size_t> vars = vars_;
  std::vector<std::size_t> cards = cards_;
  vars.erase(vars.begin() + static_cast<std::ptrdiff_t>(p));
  cards.erase(cards.begin() + static_cast<std::ptrdiff_t>(p));
  Factor out(std::move(vars), std::move(cards), 0.0);
  const auto strides = own_strides(cards_);
  // outer = variables before p, inner = variables after p
  const std::size_t inner = strides[p];
  const std::size_t outer = values_.size() / (inner * cards_[p]);
  std::size_t o = 0;
  for (std::size_t a = 0; a < outer; ++a) {
    const std::size_t base = a * inner * cards_[p] + static_cast<std::size_t>(state) * inner;
    for (std::size_t b = 0; b < inner; ++b) out.values_[o++] = values_[base + b];
  }
  return out;
}

void Factor::multiply_in(const Factor& other) {
  const auto so = embedded_strides(*this, other);
  std::size_t offsets[1] = {0};
  const std::vector<std::size_t>* strides[1] = {&so};
  Odometer odo(cards_);
  std::size_t idx = 0;
  do {
    values_[idx++] *= other.values_[offsets[0]];
  } while (odo.next(offsets, strides));
}

void Factor::divide_in(const Factor& other) {
  const auto so = embedded_strides(*this, other);
  std::size_t offsets[1] = {0};
  const std::vector<std::size_t>* strides[1] = {&so};
  Odometer odo(cards_);
  std::size_t idx = 0;
  do {
    const double d = other.values_[offsets[0]];
    values_[idx] = d == 0.0 ? 0.0 : values_[idx] / d;
    ++idx;
  } while (odo.next(offsets, strides));
}

void Factor::observe(std::size_t var, State state) {
  const std::size_t p = position(var);
  if (p == vars_.size()) return;
  const auto strides = own_strides(cards_);
  for (std::size_t idx = 0; idx < values_.size(); ++idx) {
    if ((idx / strides[p]) % cards_[p] != static_cast<std::size_t>(state)) values_[idx] = 0.0;
  }
}

double Factor::sum() const {
  double s = 0.0;
  for (double v : values_) s += v;
  return s;
}

void Factor::scale(double s) {
  for (double& v : values_) v *= s;
}

double Factor::normalize() {
  const double s = sum();
  if (s > 0.0) scale(1.0 / s);
  return s;
}

}  // namespace bnkit
