#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bnkit/network.hpp"

namespace bnkit {

/// Non-negative table over a sorted set of variables. Entries are laid out
/// row-major with the last (highest-index) variable varying fastest.
class Factor {
 public:
  /// Scalar factor with value 1.
  Factor() : values_(1, 1.0) {}
  Factor(std::vector<std::size_t> vars, std::vector<std::size_t> cards, double fill = 1.0);

  /// theta as a factor over {child} U parents.
  static Factor from_cpt(const Dag& dag, const Cpt& cpt);

  const std::vector<std::size_t>& vars() const { return vars_; }
  const std::vector<std::size_t>& cards() const { return cards_; }
  std::size_t size() const { return values_.size(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  double operator[](std::size_t idx) const { return values_[idx]; }
  double& operator[](std::size_t idx) { return values_[idx]; }

  bool contains(std::size_t var) const;
  /// Position of `var` in vars(); vars().size() when absent.
  std::size_t position(std::size_t var) const;

  /// Entry index for a full network assignment (only this factor's variables are read).
  std::size_t index_of(const Assignment& x) const;
  /// States of vars() for entry `idx`.
  std::vector<State> decode(std::size_t idx) const;

  Factor product(const Factor& other) const;
  /// Sums out every variable not listed in `keep`.
  Factor marginal(std::span<const std::size_t> keep) const;
  /// Slice at var = state; the variable leaves the scope.
  Factor reduce(std::size_t var, State state) const;

  /// this *= other, where other's scope is a subset of this scope.
  void multiply_in(const Factor& other);
  /// this /= other with 0/0 = 0, other's scope a subset of this scope.
  void divide_in(const Factor& other);
  /// Zeroes entries where var != state.
  void observe(std::size_t var, State state);

  double sum() const;
  void scale(double s);
  /// Divides by the sum and returns it (no-op when the sum is zero).
  double normalize();

 private:
  std::vector<std::size_t> vars_;
  std::vector<std::size_t> cards_;
  std::vector<double> values_;
};

/// Strides of `sub`'s entries along `scope`'s variables (0 where sub lacks one).
std::vector<std::size_t> embedded_strides(const Factor& scope, const Factor& sub);

}  // namespace bnkit
