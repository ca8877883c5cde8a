#include "dshmm/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "dshmm/kernels.hpp"

namespace dshmm {

double runif(Rng& rng) {
  // (0,1) open: shift 53-bit mantissa draw to the cell midpoint
  return (static_cast<double>(rng() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double rgamma(Rng& rng, double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0) throw std::invalid_argument("rgamma: nonpositive parameter");
  std::gamma_distribution<double> d(shape, 1.0);
  double x = d(rng) / rate;
  // tiny shapes underflow to 0; the exact draw is positive almost surely, so
  // return the smallest normal double instead of a degenerate zero
  if (x < std::numeric_limits<double>::min()) x = std::numeric_limits<double>::min();
  return x;
}

double rbeta(Rng& rng, double a, double b) {
  double x = rgamma(rng, a, 1.0);
  double y = rgamma(rng, b, 1.0);
  double r = x / (x + y);
  // 0 and 1 are probability-zero draws that only arise from rounding
  if (r >= 1.0) r = std::nextafter(1.0, 0.0);
  if (r < std::numeric_limits<double>::min()) r = std::numeric_limits<double>::min();
  return r;
}

double rnorm(Rng& rng, double mean, double sd) {
  std::normal_distribution<double> d(mean, sd);
  return d(rng);
}

bool rbernoulli(Rng& rng, double p) { return runif(rng) < p; }

std::vector<double> rdirichlet(Rng& rng, const std::vector<double>& conc) {
  std::vector<double> out(conc.size());
  double total = 0.0;
  for (std::size_t i = 0; i < conc.size(); ++i) {
    out[i] = rgamma(rng, conc[i], 1.0);
    total += out[i];
  }
  if (total <= 0.0) throw std::runtime_error("rdirichlet: degenerate draw");
  kernels::scale(out.data(), 1.0 / total, out.size());
  return out;
}

int rcategorical(Rng& rng, const double* weights, std::size_t n) {
  double total = kernels::sum(weights, n);
  if (!(total > 0.0)) throw std::runtime_error("rcategorical: zero total weight");
  double u = runif(rng) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += weights[i];
    if (u <= acc) return static_cast<int>(i);
  }
  return static_cast<int>(n) - 1;
}

int rcategorical(Rng& rng, const std::vector<double>& weights) {
  return rcategorical(rng, weights.data(), weights.size());
}

int rcategorical_logits(Rng& rng, const std::vector<double>& logits) {
  double m = kernels::max(logits.data(), logits.size());
  if (!std::isfinite(m)) throw std::runtime_error("rcategorical_logits: no finite logit");
  std::vector<double> w(logits.size());
  kernels::exp_shift(logits.data(), m, w.data(), w.size());
  return rcategorical(rng, w);
}

}  // namespace dshmm
