#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "dshmm/common.hpp"
#include "dshmm/emissions.hpp"
#include "dshmm/hdp_core.hpp"
#include "dshmm/rng.hpp"
#include "dshmm/sampler_direct.hpp"  // SamplerOptions

namespace dshmm {

// Finite L-state blocked Gibbs chain approximating the HDP prior.
struct WeakLimitChainState {
  const Dataset* data = nullptr;
  std::unique_ptr<EmissionModel> emis;

  int L = 0;
  std::vector<int> z;
  std::vector<std::uint8_t> w;
  std::vector<double> beta;  // L entries, sum 1
  DMat pibar;                // L x L, row-stochastic
  std::vector<double> kappa;
  std::vector<std::unique_ptr<EmissionParams>> theta;
  HyperParams hyper;
  IMat n;  // switching-transition counts
  Rng rng;

  // log p(y) under the parameters of the most recent sweep, from the
  // forward-backward normalizers
  double last_marginal_loglik = 0.0;
};

struct Messages {
  DMat msg;                     // msg(t, j), each slice normalized to sum 1
  std::vector<double> log_norm; // per-slice log normalizer
};

// log f(y_t | theta_j) for every t, j.
DMat loglik_table(const WeakLimitChainState& state);

// Backward recursion over the effective transition kappa_j*delta_j +
// (1-kappa_j)*pibar_j; block boundaries restart the recursion.
Messages backward_messages(const WeakLimitChainState& state, const DMat& loglik);

// Marginal log p(y) implied by the messages and per-slice emission shifts.
double marginal_loglik(const WeakLimitChainState& state, const DMat& loglik,
                       const Messages& msgs);

// Draw (z, w) jointly given the messages; updates state.z / state.w.
void forward_sample_zw(WeakLimitChainState& state, const DMat& loglik, const Messages& msgs);

// beta ~ Dir(gamma/L + m_.k + init_k), pibar_j ~ Dir(alpha*beta + n_j).
// init_counts (block-start assignments) may be empty.
std::pair<std::vector<double>, DMat> sample_pibar_beta(const IMat& n, const IMat& m, double alpha,
                                                       double gamma, int L,
                                                       const std::vector<long long>& init_counts,
                                                       Rng& rng);

WeakLimitChainState init_weak_limit_chain(const Dataset& data, const EmissionModel& emis,
                                          const HyperParams& hyper, int L, std::uint64_t seed,
                                          const std::vector<int>* init_labels = nullptr);

// One blocked iteration (Algorithm steps 1-5).
void weak_limit_sweep(WeakLimitChainState& state, const SamplerOptions& opts);

void validate_weak_limit(const WeakLimitChainState& state);

}  // namespace dshmm
