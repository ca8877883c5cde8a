#pragma once

#include <memory>
#include <vector>

#include "dshmm/common.hpp"
#include "dshmm/emissions.hpp"

namespace dshmm {

struct AssignmentResult {
  // assign[i] = column matched to row i, or -1 for a dummy (unmatched) row
  std::vector<int> assign;
  double cost = 0.0;
};

// Minimum-cost one-to-one assignment (Munkres problem) via the O(n^3)
// shortest-augmenting-path method. Rectangular inputs are padded with
// zero-cost dummy rows/columns.
AssignmentResult hungarian_min_cost(const DMat& cost);

// Normalized Hamming distance after the overlap-maximizing relabeling of
// `estimated` against `truth`. Surplus estimated labels (more labels than
// truth has) stay unmatched and count every occurrence as a mismatch.
double hamming_distance(const std::vector<int>& estimated, const std::vector<int>& truth);

struct ForwardResult {
  double loglik = 0.0;
  bool underflow = false;  // a step had zero probability; loglik is -inf
};

// Exact log p(y_begin..y_end-1) for the fixed-parameter HMM (pi, initial,
// theta), scaled forward algorithm. The range must lie inside one block.
ForwardResult forward_loglik(const DMat& pi, const std::vector<double>& initial,
                             const EmissionModel& emis,
                             const std::vector<const EmissionParams*>& theta, const Dataset& data,
                             std::size_t begin, std::size_t end);

// One posterior draw of everything the forward algorithm needs.
struct HmmSnapshot {
  DMat pi;  // effective transition kappa_j*delta_j + (1-kappa_j)*pibar_j
  std::vector<double> initial;
  std::vector<std::unique_ptr<EmissionParams>> theta;
};

// Per-snapshot negative log-likelihood of the test data, each block treated
// as an independent sequence (forward pass restarted with `initial`).
std::vector<double> predictive_nll(const std::vector<HmmSnapshot>& snapshots,
                                   const EmissionModel& emis, const Dataset& test);

}  // namespace dshmm
