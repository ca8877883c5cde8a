#include "dshmm/synth.hpp"

#include <cmath>

#include "dshmm/rng.hpp"

namespace dshmm {

namespace {

void simulate_into(GroundTruth& gt, std::size_t T, Rng& rng) {
  const std::size_t K = gt.initial.size();
  require(gt.pi.rows == K && gt.pi.cols == K, "gen_hmm: dimension mismatch");
  require(gt.theta.size() == K, "gen_hmm: theta count mismatch");
  for (std::size_t j = 0; j < K; ++j)
    require(std::abs(gt.pi.row_sum(j) - 1.0) <= 1e-9, "gen_hmm: pi row not stochastic");

  gt.z.resize(T);
  gt.data.y.resize(T);
  gt.data.block.assign(T, 0);
  for (std::size_t t = 0; t < T; ++t) {
    if (t == 0)
      gt.z[t] = rcategorical(rng, gt.initial.data(), K);
    else
      gt.z[t] = rcategorical(rng, gt.pi.row(gt.z[t - 1]), K);
    const Obs* ctx = t > 0 ? &gt.data.y[t - 1] : nullptr;
    gt.data.y[t] = gt.emis->sample_data(*gt.theta[gt.z[t]], ctx, rng);
  }
}

// state-identity multinomial channel with the given diagonal probability
void multinomial_channel(GroundTruth& gt, int states, double diag) {
  gt.emis = std::make_unique<MultinomialEmission>(states, 1.0);
  for (int j = 0; j < states; ++j) {
    auto p = std::make_unique<MultinomialParams>();
    p->p.assign(states, (1.0 - diag) / (states - 1));
    p->p[j] = diag;
    gt.theta.push_back(std::move(p));
  }
}

void gaussian_channel(GroundTruth& gt, int states, Rng& rng) {
  gt.emis = std::make_unique<GaussianKnownVarEmission>(3.5, 36.0, 0.25);
  for (int j = 0; j < states; ++j) {
    auto p = std::make_unique<GaussianParams>();
    p->mean = rnorm(rng, 3.5, 6.0);
    gt.theta.push_back(std::move(p));
  }
}

}  // namespace

GroundTruth gen_hmm(const DMat& pi, const std::vector<double>& initial, const EmissionModel& emis,
                    const std::vector<const EmissionParams*>& theta, std::size_t T,
                    std::uint64_t seed) {
  GroundTruth gt;
  gt.seed = seed;
  gt.pi = pi;
  gt.initial = initial;
  gt.kappa.assign(initial.size(), 0.0);
  gt.emis = emis.clone();
  for (const EmissionParams* p : theta) gt.theta.push_back(p->clone());
  Rng rng(seed);
  simulate_into(gt, T, rng);
  return gt;
}

GroundTruth gen_same_transition(int states, std::size_t T, SynthEmission emission,
                                std::uint64_t seed) {
  require(states >= 2, "gen_same_transition: need >= 2 states");
  GroundTruth gt;
  gt.seed = seed;
  Rng rng(seed);

  gt.kappa.resize(states);
  for (int j = 0; j < states; ++j) gt.kappa[j] = 0.3 + 0.65 * runif(rng);
  std::vector<double> pibar = rdirichlet(rng, std::vector<double>(states, 1.0));

  gt.pi = DMat(states, states);
  for (int j = 0; j < states; ++j) {
    for (int k = 0; k < states; ++k) gt.pi(j, k) = (1.0 - gt.kappa[j]) * pibar[k];
    gt.pi(j, j) += gt.kappa[j];
  }
  gt.initial.assign(states, 1.0 / states);

  if (emission == SynthEmission::Multinomial)
    multinomial_channel(gt, states, 0.9);
  else
    gaussian_channel(gt, states, rng);
  simulate_into(gt, T, rng);
  return gt;
}

GroundTruth gen_same_selfpersistence(int states, std::size_t T, SynthEmission emission,
                                     std::uint64_t seed) {
  require(states >= 2, "gen_same_selfpersistence: need >= 2 states");
  GroundTruth gt;
  gt.seed = seed;
  Rng rng(seed);

  const double kappa = 0.8;
  gt.kappa.assign(states, kappa);
  gt.pi = DMat(states, states);
  for (int j = 0; j < states; ++j) {
    // switching row over the other states only, so pi_jj == kappa exactly
    std::vector<double> row = rdirichlet(rng, std::vector<double>(states - 1, 0.5));
    int idx = 0;
    for (int k = 0; k < states; ++k)
      gt.pi(j, k) = (k == j) ? kappa : (1.0 - kappa) * row[idx++];
  }
  gt.initial.assign(states, 1.0 / states);

  if (emission == SynthEmission::Multinomial)
    multinomial_channel(gt, states, 0.8);
  else
    gaussian_channel(gt, states, rng);
  simulate_into(gt, T, rng);
  return gt;
}

}  // namespace dshmm
