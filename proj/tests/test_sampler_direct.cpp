#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <tuple>

#include "doctest.h"

#include "dshmm/sampler_direct.hpp"
#include "dshmm/synth.hpp"

using namespace dshmm;

namespace {

Obs sym(int s) {
  Obs y(1);
  y(0) = s;
  return y;
}

Dataset symbol_data(const std::vector<int>& symbols, const std::vector<int>& blocks = {}) {
  Dataset d;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    d.y.push_back(sym(symbols[i]));
    d.block.push_back(blocks.empty() ? 0 : blocks[i]);
  }
  return d;
}

// Joint collapsed log-probability of a full (z, w) configuration, computed
// from first principles: Beta-Bernoulli marginals of the per-state
// persistence indicators (kappa integrated out), the Dirichlet-process row
// marginals in Gamma-function form, the global-weight factor at block
// starts, and the per-state Dirichlet-multinomial emission marginals.
// Independent of the sampler's six-case table.
double joint_logprob(const Dataset& data, const EmissionModel& emis, const std::vector<int>& z,
                     const std::vector<std::uint8_t>& w, const std::vector<double>& beta_ext,
                     double rho1, double rho2, double alpha) {
  const int K = static_cast<int>(beta_ext.size());
  double la = 0.0;
  IMat n(K, K);
  std::vector<long long> sticks(K, 0), switches(K, 0);
  for (std::size_t t = 0; t < data.size(); ++t) {
    if (!data.has_prev(t)) {
      la += std::log(beta_ext[z[t]]);
      continue;
    }
    if (w[t]) {
      if (z[t] != z[t - 1]) return -std::numeric_limits<double>::infinity();
      ++sticks[z[t - 1]];
    } else {
      ++switches[z[t - 1]];
      ++n(z[t - 1], z[t]);
    }
  }
  auto lbeta = [](double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  };
  for (int j = 0; j < K; ++j) {
    if (rho1 > 0.0)
      la += lbeta(rho1 + sticks[j], rho2 + switches[j]) - lbeta(rho1, rho2);
    else if (sticks[j] > 0)  // plain-HDP reduction: self-persistence impossible
      return -std::numeric_limits<double>::infinity();
  }
  for (int j = 0; j < K; ++j) {
    la += std::lgamma(alpha) - std::lgamma(alpha + n.row_sum(j));
    for (int k = 0; k < K; ++k)
      la += std::lgamma(alpha * beta_ext[k] + n(j, k)) - std::lgamma(alpha * beta_ext[k]);
  }
  // emission marginal per state via sequential predictives
  std::vector<std::unique_ptr<SuffStats>> stats;
  for (int k = 0; k < K; ++k) stats.push_back(emis.make_stats());
  for (std::size_t t = 0; t < data.size(); ++t) {
    la += emis.predictive_loglik(*stats[z[t]], data.y[t], nullptr);
    emis.add(*stats[z[t]], data.y[t], nullptr);
  }
  return la;
}

}  // namespace

TEST_SUITE("sampler_direct") {

TEST_CASE("transition predictive formulas") {
  CHECK(transition_predictive(1.0, 0.5, 2, 4) == doctest::Approx(0.5));
  CHECK(transition_predictive(1.0, 0.3, 0, 0) == doctest::Approx(0.3));  // fresh state
  CHECK_THROWS(transition_predictive(1.0, 0.5, -1, 4));
}

TEST_CASE("double-use predictive matches a Dirichlet Monte Carlo oracle") {
  // j -> j -> l with both steps drawn from the same integrated row:
  // E[pi_jj * pi_jl] under pi_j ~ Dir(alpha*beta + n_j)
  const double alpha = 1.5;
  std::vector<double> beta{0.5, 0.3, 0.2};
  std::vector<long long> nrow{2, 1, 0};
  const int j = 0;
  Rng rng(41);
  std::vector<double> conc(3);
  long long ndot = 3;
  for (int k = 0; k < 3; ++k) conc[k] = alpha * beta[k] + nrow[k];

  for (int l : {0, 1, 2}) {
    double direct = transition_predictive_double(alpha, beta[j], beta[l], nrow[j], nrow[l], ndot,
                                                 j == l);
    double mc = 0.0;
    const int N = 1000000;
    for (int i = 0; i < N; ++i) {
      std::vector<double> pi = rdirichlet(rng, conc);
      mc += pi[j] * pi[l];
    }
    CHECK(direct == doctest::Approx(mc / N).epsilon(0.005));
  }
}

TEST_CASE("block conditional equals the first-principles enumeration (TV < 1e-12)") {
  MultinomialEmission emis(3, 1.0);
  Dataset data = symbol_data({0, 1, 1});
  HyperParams hyper;
  hyper.alpha = 1.3;
  hyper.gamma = 2.0;
  hyper.rho1 = 2.0;
  hyper.rho2 = 1.5;
  DirectChainState st = init_direct_chain(data, emis, hyper, 99);

  // grow to K = 2 with a deterministic configuration: z = (0,1,1), w = (0,0,1)
  for (int sweep = 0; sweep < 5; ++sweep)
    for (std::size_t t = 0; t < 3; ++t) block_sample_zwt(st, t);
  compact_states(st);
  validate_direct(st);

  std::vector<double> beta_ext = st.beta.weights;
  beta_ext.push_back(st.beta.remainder);  // fresh-state slot

  for (std::size_t t = 0; t < 3; ++t) {
    std::vector<BlockCandidate> cand = block_conditional(st, t);

    // oracle: evaluate the full-joint probability of every candidate configuration
    std::map<std::tuple<int, int, int>, double> oracle;
    const bool first = !data.has_prev(t);
    const bool last = t + 1 >= data.size() || !data.has_prev(t + 1);
    for (int k = 0; k <= st.K; ++k) {
      for (int wt : first ? std::vector<int>{-1} : std::vector<int>{0, 1}) {
        for (int wt1 : last ? std::vector<int>{-1} : std::vector<int>{0, 1}) {
          std::vector<int> z = st.z;
          std::vector<std::uint8_t> w = st.w;
          z[t] = k;
          if (wt >= 0) w[t] = static_cast<std::uint8_t>(wt);
          if (wt1 >= 0) w[t + 1] = static_cast<std::uint8_t>(wt1);
          if (wt == 1 && z[t] != z[t - 1]) continue;
          if (wt1 == 1 && z[t + 1] != z[t]) continue;
          double lp = joint_logprob(data, emis, z, w, beta_ext, st.hyper.rho1, st.hyper.rho2,
                                    st.hyper.alpha);
          if (std::isfinite(lp)) oracle[{k, wt, wt1}] = lp;
        }
      }
    }

    REQUIRE(cand.size() == oracle.size());
    // normalize both and compare as distributions
    double m1 = -1e300, m2 = -1e300;
    for (const auto& c : cand) m1 = std::max(m1, c.logweight);
    for (const auto& [key, lp] : oracle) m2 = std::max(m2, lp);
    double z1 = 0.0, z2 = 0.0;
    for (const auto& c : cand) z1 += std::exp(c.logweight - m1);
    for (const auto& [key, lp] : oracle) z2 += std::exp(lp - m2);
    double tv = 0.0;
    for (const auto& c : cand) {
      auto it = oracle.find({c.k, c.wt, c.wt1});
      REQUIRE(it != oracle.end());
      tv += 0.5 * std::abs(std::exp(c.logweight - m1) / z1 - std::exp(it->second - m2) / z2);
    }
    CHECK(tv < 1e-12);
  }
}

TEST_CASE("sweep keeps every chain invariant on synthetic data") {
  GroundTruth gt = gen_same_transition(4, 120, SynthEmission::Multinomial, 5);
  MultinomialEmission emis(4, 1.0);
  HyperParams hyper;
  DirectChainState st = init_direct_chain(gt.data, emis, hyper, 6);
  SamplerOptions opts;
  opts.grids.rho.phi_cells = 10;
  opts.grids.rho.eta_cells = 10;
  int max_k = 0;
  for (int i = 0; i < 150; ++i) {
    direct_sweep(st, opts);
    validate_direct(st);
    max_k = std::max(max_k, st.K);
  }
  CHECK(max_k >= 2);
}

TEST_CASE("multi-block data never counts transitions across block boundaries") {
  Dataset data = symbol_data({0, 0, 1, 1, 0, 1}, {0, 0, 0, 1, 1, 1});
  MultinomialEmission emis(2, 1.0);
  DirectChainState st = init_direct_chain(data, emis, HyperParams{}, 7);
  SamplerOptions opts;
  opts.grids.rho.phi_cells = 5;
  opts.grids.rho.eta_cells = 5;
  for (int i = 0; i < 20; ++i) {
    direct_sweep(st, opts);
    validate_direct(st);
    long long total = 0;
    for (std::size_t j = 0; j < st.n.rows; ++j) total += st.n.row_sum(j);
    long long switching = 0;
    for (std::size_t t = 0; t < data.size(); ++t)
      if (data.has_prev(t) && !st.w[t]) ++switching;
    CHECK(total == switching);  // 4 in-block steps at most
    CHECK(st.w[0] == 0);
    CHECK(st.w[3] == 0);  // block starts
  }
}

TEST_CASE("T=1 degenerates to a single assignment update") {
  Dataset data = symbol_data({1});
  MultinomialEmission emis(3, 1.0);
  DirectChainState st = init_direct_chain(data, emis, HyperParams{}, 8);
  SamplerOptions opts;
  opts.grids.rho.phi_cells = 5;
  opts.grids.rho.eta_cells = 5;
  for (int i = 0; i < 10; ++i) {
    direct_sweep(st, opts);
    validate_direct(st);
    CHECK(st.K == 1);
    for (std::size_t j = 0; j < st.n.rows; ++j) CHECK(st.n.row_sum(j) == 0);
  }
}

TEST_CASE("compaction preserves the collapsed joint likelihood") {
  MultinomialEmission emis(3, 1.0);
  Dataset data = symbol_data({0, 1, 2, 1, 0, 2, 2, 1});
  DirectChainState st = init_direct_chain(data, emis, HyperParams{}, 9);
  // grow states without compaction until an empty state exists
  bool found = false;
  for (int round = 0; round < 200 && !found; ++round) {
    for (std::size_t t = 0; t < data.size(); ++t) block_sample_zwt(st, t);
    std::vector<char> used(st.K, 0);
    for (int z : st.z) used[z] = 1;
    for (char u : used)
      if (!u) found = true;
  }
  REQUIRE(found);

  auto joint = [&](const DirectChainState& s) {
    std::vector<double> beta_ext = s.beta.weights;
    beta_ext.push_back(s.beta.remainder);
    return joint_logprob(*s.data, emis, s.z, s.w, beta_ext, s.hyper.rho1, s.hyper.rho2,
                         s.hyper.alpha);
  };
  // relabeling only: empty rows contribute Gamma-ratio factors of exactly 1,
  // and the fresh-state slot absorbs the folded beta mass, which changes the
  // remainder but not the probability of the realized configuration
  double before = joint(st);
  int k_before = st.K;
  compact_states(st);
  validate_direct(st);
  CHECK(st.K < k_before);
  CHECK(joint(st) == doctest::Approx(before).epsilon(1e-9));
}

TEST_CASE("HDP variant keeps every w at zero") {
  GroundTruth gt = gen_same_transition(3, 80, SynthEmission::Multinomial, 10);
  MultinomialEmission emis(3, 1.0);
  HyperParams hyper;
  hyper.variant = Variant::HDP;
  hyper.rho1 = 0.0;
  DirectChainState st = init_direct_chain(gt.data, emis, hyper, 11);
  SamplerOptions opts;
  opts.grids.rho.phi_cells = 5;
  opts.grids.rho.eta_cells = 5;
  for (int i = 0; i < 25; ++i) {
    direct_sweep(st, opts);
    for (std::uint8_t w : st.w) CHECK(w == 0);
    for (double k : st.kappa) CHECK(k == 0.0);
  }
}

TEST_CASE("sticky variant keeps rho2 tied to alpha through sweeps") {
  GroundTruth gt = gen_same_selfpersistence(3, 80, SynthEmission::Multinomial, 12);
  MultinomialEmission emis(3, 1.0);
  HyperParams hyper;
  hyper.variant = Variant::Sticky;
  hyper.rho2 = hyper.alpha;
  DirectChainState st = init_direct_chain(gt.data, emis, hyper, 13);
  SamplerOptions opts;
  opts.grids.sticky.c_cells = 10;
  opts.grids.sticky.phi_cells = 10;
  for (int i = 0; i < 25; ++i) {
    direct_sweep(st, opts);
    validate_direct(st);
    CHECK(st.hyper.rho2 == st.hyper.alpha);
  }
}

}  // TEST_SUITE
