#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "dshmm/common.hpp"
#include "dshmm/emissions.hpp"

namespace dshmm {

// A simulated dataset together with everything that generated it.
struct GroundTruth {
  std::uint64_t seed = 0;
  DMat pi;  // effective transition matrix, row-stochastic
  std::vector<double> initial;
  std::vector<double> kappa;  // per-state self-stick mass baked into pi
  std::vector<int> z;
  Dataset data;
  std::unique_ptr<EmissionModel> emis;
  std::vector<std::unique_ptr<EmissionParams>> theta;
};

enum class SynthEmission { Multinomial, Gaussian };

// Forward simulation of a fixed-parameter HMM (single block).
GroundTruth gen_hmm(const DMat& pi, const std::vector<double>& initial, const EmissionModel& emis,
                    const std::vector<const EmissionParams*>& theta, std::size_t T,
                    std::uint64_t seed);

// Regime 1: heterogeneous kappa_j ~ Uniform(0.3, 0.95), one switching row
// pibar ~ Dir(1,...,1) shared by every state. Multinomial channel emits the
// state identity with probability 0.9, otherwise uniform over the other
// symbols; Gaussian channel draws state means from N(3.5, 6^2), noise sd 0.5.
GroundTruth gen_same_transition(int states, std::size_t T, SynthEmission emission,
                                std::uint64_t seed);

// Regime 2: shared kappa = 0.8, per-state switching rows pibar_j ~
// Dir(0.5,...,0.5) over the other states (zero diagonal, so every pi_jj
// equals kappa exactly). Multinomial channel probability 0.8.
GroundTruth gen_same_selfpersistence(int states, std::size_t T, SynthEmission emission,
                                     std::uint64_t seed);

}  // namespace dshmm
