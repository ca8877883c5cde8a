#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dshmm {

// One RNG stream per chain; chain c uses seed base_seed + c.
using Rng = std::mt19937_64;

// Uniform on (0,1); never returns 0 or 1.
double runif(Rng& rng);

// Gamma with shape/rate parameterization: mean = shape/rate.
double rgamma(Rng& rng, double shape, double rate);

double rbeta(Rng& rng, double a, double b);

double rnorm(Rng& rng, double mean, double sd);

bool rbernoulli(Rng& rng, double p);

std::vector<double> rdirichlet(Rng& rng, const std::vector<double>& conc);

// Draw an index proportional to the (nonnegative, not necessarily
// normalized) weights.
int rcategorical(Rng& rng, const std::vector<double>& weights);
int rcategorical(Rng& rng, const double* weights, std::size_t n);

// Draw an index proportional to exp(logits); max-shift normalization.
int rcategorical_logits(Rng& rng, const std::vector<double>& logits);

}  // namespace dshmm
