#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "dshmm/common.hpp"
#include "dshmm/emissions.hpp"
#include "dshmm/hdp_core.hpp"
#include "dshmm/rng.hpp"

namespace dshmm {

struct SamplerOptions {
  bool resample_hyper = true;
  HyperPriors priors;
  HyperGrids grids;
};

// Collapsed direct-assignment chain: transition rows and emission parameters
// are marginalized out; K grows and shrinks as states appear and empty.
struct DirectChainState {
  const Dataset* data = nullptr;
  std::unique_ptr<EmissionModel> emis;

  std::vector<int> z;
  std::vector<std::uint8_t> w;  // w[t] = 1 iff step t self-persisted; block starts have w = 0
  int K = 0;
  GlobalWeights beta;           // K weights + remainder
  std::vector<double> kappa;    // K active + 1 prospective slot
  HyperParams hyper;
  IMat n;                       // K x K switching-transition counts
  std::vector<long long> sticks;    // per-state self-persistence trials with w = 1
  std::vector<long long> switches;  // per-state self-persistence trials with w = 0
  std::vector<std::unique_ptr<SuffStats>> stats;
  Rng rng;
};

// Collapsed one-step transition predictive (alpha*beta_k + n_jk) / (alpha + n_j.).
double transition_predictive(double alpha, double beta_k, long long n_jk, long long n_jdot);

// Both steps j -> k(=j) -> l drawn from the same integrated row.
double transition_predictive_double(double alpha, double beta_j, double beta_l, long long n_jj,
                                    long long n_jl, long long n_jdot, bool j_equals_l);

// One enumerated outcome of the {z_t, w_t, w_t+1} block. wt/wt1 are -1 at
// sequence boundaries where the corresponding indicator does not exist.
struct BlockCandidate {
  int k;
  int wt;
  int wt1;
  double logweight;
};

// Everything-at-once initialization: all observations in one state.
DirectChainState init_direct_chain(const Dataset& data, const EmissionModel& emis,
                                   const HyperParams& hyper, std::uint64_t seed);

// The exact block conditional at position t on the current state (state is
// restored before returning).
std::vector<BlockCandidate> block_conditional(DirectChainState& state, std::size_t t);

// Resample {z_t, w_t, w_t+1} from the block conditional.
void block_sample_zwt(DirectChainState& state, std::size_t t);

// Relabel occupied states densely; fold removed beta mass into the remainder.
void compact_states(DirectChainState& state);

// One full Gibbs iteration (Algorithm steps 1-4).
void direct_sweep(DirectChainState& state, const SamplerOptions& opts);

// Recompute every derived quantity from (z, w) and compare; throws on mismatch.
void validate_direct(const DirectChainState& state);

// log p(y | z) with emission parameters marginalized (sequential predictive).
double direct_obs_loglik(const DirectChainState& state);

}  // namespace dshmm
