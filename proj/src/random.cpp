#include "bnkit/random.hpp"

namespace bnkit {

std::size_t Rng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double u = uniform() * total;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (u < weights[k]) return k;
    u -= weights[k];
  }
  // rounding at the upper edge: last positive weight
  for (std::size_t k = weights.size(); k-- > 0;) {
    if (weights[k] > 0.0) return k;
  }
  return 0;
}

std::vector<double> Rng::dirichlet(std::size_t k, double alpha) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> out(k);
  double total = 0.0;
  do {
    total = 0.0;
    for (double& v : out) {
      v = gamma(engine_);
      total += v;
    }
  } while (total <= 0.0);
  for (double& v : out) v /= total;
  return out;
}

}  // namespace bnkit
