#include "dshmm/sampler_direct.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace dshmm {

double transition_predictive(double alpha, double beta_k, long long n_jk, long long n_jdot) {
  if (n_jk < 0 || n_jdot < 0) throw std::runtime_error("transition_predictive: negative count");
  return (alpha * beta_k + n_jk) / (alpha + n_jdot);
}

double transition_predictive_double(double alpha, double beta_j, double beta_l, long long n_jj,
                                    long long n_jl, long long n_jdot, bool j_equals_l) {
  if (n_jj < 0 || n_jl < 0 || n_jdot < 0)
    throw std::runtime_error("transition_predictive: negative count");
  double delta = j_equals_l ? 1.0 : 0.0;
  return (alpha * beta_j + n_jj) * (alpha * beta_l + n_jl + delta) /
         ((alpha + n_jdot) * (alpha + n_jdot + 1.0));
}

namespace {

bool has_prev(const DirectChainState& s, std::size_t t) { return s.data->has_prev(t); }
bool has_next(const DirectChainState& s, std::size_t t) {
  return t + 1 < s.data->size() && s.data->has_prev(t + 1);
}

// Remove y_t, the transitions adjacent to position t and the persistence
// trials adjacent to position t (w_t on z_t-1's record, w_t+1 on z_t's) from
// the state.
void downdate(DirectChainState& s, std::size_t t) {
  int k = s.z[t];
  s.emis->remove(*s.stats[k], s.data->y[t], s.data->context(t));
  if (has_prev(s, t)) {
    if (s.w[t] == 0) {
      if (--s.n(s.z[t - 1], k) < 0) throw std::runtime_error("direct: negative count on downdate");
    }
    if (--(s.w[t] ? s.sticks : s.switches)[s.z[t - 1]] < 0)
      throw std::runtime_error("direct: negative trial count on downdate");
  }
  if (has_next(s, t)) {
    if (s.w[t + 1] == 0) {
      if (--s.n(k, s.z[t + 1]) < 0) throw std::runtime_error("direct: negative count on downdate");
    }
    if (--(s.w[t + 1] ? s.sticks : s.switches)[k] < 0)
      throw std::runtime_error("direct: negative trial count on downdate");
  }
}

void restore(DirectChainState& s, std::size_t t) {
  int k = s.z[t];
  s.emis->add(*s.stats[k], s.data->y[t], s.data->context(t));
  if (has_prev(s, t)) {
    if (s.w[t] == 0) ++s.n(s.z[t - 1], k);
    ++(s.w[t] ? s.sticks : s.switches)[s.z[t - 1]];
  }
  if (has_next(s, t)) {
    if (s.w[t + 1] == 0) ++s.n(k, s.z[t + 1]);
    ++(s.w[t + 1] ? s.sticks : s.switches)[k];
  }
}

// Case weights of the {z_t, w_t, w_t+1} block on a downdated state.
// Candidate k = K is the fresh state. The per-state persistence probabilities
// kappa are integrated out by Beta-Bernoulli conjugacy: each indicator is a
// trial of its source state's urn, weighted by the urn predictive given the
// remaining trials. Keeping realized kappas in the weights instead is not a
// valid collapsed conditional: the fresh candidate would need the realized
// kappa-weighted mass of the uninstantiated tail, which no plug-in value can
// represent inside the normalization.
std::vector<BlockCandidate> enumerate_block(DirectChainState& s, std::size_t t) {
  const int K = s.K;
  const double alpha = s.hyper.alpha;
  const bool hp = has_prev(s, t), hn = has_next(s, t);
  const int j = hp ? s.z[t - 1] : -1;
  const int l = hn ? s.z[t + 1] : -1;

  std::vector<long long> rowsum(K, 0);
  for (int a = 0; a < K; ++a) rowsum[a] = s.n.row_sum(a);

  auto beta_of = [&](int k) { return k < K ? s.beta.weights[k] : s.beta.remainder; };
  auto n_at = [&](int a, int b) -> long long { return (a < K && b < K) ? s.n(a, b) : 0; };
  auto nrow = [&](int a) -> long long { return a < K ? rowsum[a] : 0; };

  // Urn predictives on the downdated trial counts; the second draw from the
  // same urn shifts by the first outcome. The plain-HDP reduction has no
  // persistence urn: sticks are impossible and switches are certain.
  const bool hdp = s.hyper.variant == Variant::HDP;
  const double r1 = s.hyper.rho1, r2 = s.hyper.rho2;
  auto trials = [&](int a, long long& st, long long& sw) {
    st = a < K ? s.sticks[a] : 0;
    sw = a < K ? s.switches[a] : 0;
  };
  auto p1 = [&](int a, int extra_sticks = 0, int extra_trials = 0) {
    if (hdp) return 0.0;
    long long st, sw;
    trials(a, st, sw);
    return (r1 + st + extra_sticks) / (r1 + r2 + st + sw + extra_trials);
  };
  auto p0 = [&](int a, int extra_switches = 0, int extra_trials = 0) {
    if (hdp) return 1.0;
    long long st, sw;
    trials(a, st, sw);
    return (r2 + sw + extra_switches) / (r1 + r2 + st + sw + extra_trials);
  };

  std::unique_ptr<SuffStats> fresh = s.emis->make_stats();
  const Obs& y = s.data->y[t];
  const Obs* ctx = s.data->context(t);

  std::vector<BlockCandidate> out;
  out.reserve(4 * (K + 1));
  for (int k = 0; k <= K; ++k) {
    double pred =
        s.emis->predictive_loglik(k < K ? *s.stats[k] : *fresh, y, ctx);
    auto push = [&](int wt, int wt1, double prior_weight) {
      if (prior_weight > 0.0)
        out.push_back({k, wt, wt1, std::log(prior_weight) + pred});
    };

    if (hp && hn) {
      // w_t = 1, w_t+1 = 1: k = j = l, both trials on j's urn
      if (k == j && l == j) push(1, 1, p1(j) * p1(j, 1, 1));
      // w_t = 0, w_t+1 = 1: k = l; w_t on j's urn, w_t+1 on k's
      if (k == l)
        push(0, 1,
             p0(j) * (k == j ? p1(j, 0, 1) : p1(k)) *
                 transition_predictive(alpha, beta_of(l), n_at(j, l), nrow(j)));
      // w_t = 1, w_t+1 = 0: k = j, both trials on j's urn
      if (k == j)
        push(1, 0,
             p1(j) * p0(j, 0, 1) *
                 transition_predictive(alpha, beta_of(l), n_at(j, l), nrow(j)));
      // w_t = 0, w_t+1 = 0
      if (k == j)
        push(0, 0,
             p0(j) * p0(j, 1, 1) *
                 transition_predictive_double(alpha, beta_of(j), beta_of(l), n_at(j, j),
                                              n_at(j, l), nrow(j), j == l));
      else
        push(0, 0,
             p0(j) * p0(k) *
                 transition_predictive(alpha, beta_of(k), n_at(j, k), nrow(j)) *
                 transition_predictive(alpha, beta_of(l), n_at(k, l), nrow(k)));
    } else if (!hp && hn) {
      // block start: z_t ~ beta, w_t = 0 by convention; w_t+1 on k's urn
      double base = beta_of(k);
      if (k == l) push(-1, 1, base * p1(k));
      push(-1, 0,
           base * p0(k) * transition_predictive(alpha, beta_of(l), n_at(k, l), nrow(k)));
    } else if (hp && !hn) {
      // block end: only w_t exists, on j's urn
      if (k == j) push(1, -1, p1(j));
      push(0, -1, p0(j) * transition_predictive(alpha, beta_of(k), n_at(j, k), nrow(j)));
    } else {
      push(-1, -1, beta_of(k));
    }
  }
  if (out.empty()) throw std::runtime_error("direct: empty block conditional");
  return out;
}

void apply_choice(DirectChainState& s, std::size_t t, const BlockCandidate& c) {
  int k = c.k;
  if (k == s.K) {
    // fresh state: the prospective kappa slot becomes real, draw a new one
    extend_global_weights(s.beta, s.hyper.gamma, s.rng);
    double fresh_kappa = 0.0;
    if (s.hyper.variant != Variant::HDP)
      fresh_kappa = rbeta(s.rng, s.hyper.rho1, s.hyper.rho2);
    s.kappa.push_back(fresh_kappa);
    s.n.resize_preserving(s.K + 1, s.K + 1);
    s.sticks.push_back(0);
    s.switches.push_back(0);
    s.stats.push_back(s.emis->make_stats());
    ++s.K;
  }
  s.z[t] = k;
  if (c.wt >= 0) s.w[t] = static_cast<std::uint8_t>(c.wt);
  if (c.wt1 >= 0) s.w[t + 1] = static_cast<std::uint8_t>(c.wt1);
  restore(s, t);
}

}  // namespace

DirectChainState init_direct_chain(const Dataset& data, const EmissionModel& emis,
                                   const HyperParams& hyper, std::uint64_t seed) {
  hyper.validate();
  require(data.size() > 0, "direct: empty dataset");
  DirectChainState s;
  s.data = &data;
  s.emis = emis.clone();
  s.hyper = hyper;
  s.rng.seed(seed);
  const std::size_t T = data.size();
  s.z.assign(T, 0);
  s.w.assign(T, 0);
  s.K = 1;
  s.beta = gem_prefix(hyper.gamma, 1, s.rng);
  s.kappa = sample_kappa({0}, {0}, hyper, s.rng, true);
  s.n = IMat(1, 1);
  for (std::size_t t = 0; t < T; ++t)
    if (data.has_prev(t)) ++s.n(0, 0);
  s.sticks.assign(1, 0);
  s.switches.assign(1, s.n(0, 0));
  s.stats.push_back(s.emis->make_stats());
  for (std::size_t t = 0; t < T; ++t)
    s.emis->add(*s.stats[0], data.y[t], data.context(t));
  return s;
}

std::vector<BlockCandidate> block_conditional(DirectChainState& state, std::size_t t) {
  downdate(state, t);
  std::vector<BlockCandidate> out = enumerate_block(state, t);
  restore(state, t);
  return out;
}

void block_sample_zwt(DirectChainState& state, std::size_t t) {
  downdate(state, t);
  std::vector<BlockCandidate> cands = enumerate_block(state, t);
  std::vector<double> logits(cands.size());
  for (std::size_t i = 0; i < cands.size(); ++i) logits[i] = cands[i].logweight;
  apply_choice(state, t, cands[static_cast<std::size_t>(rcategorical_logits(state.rng, logits))]);
}

void compact_states(DirectChainState& state) {
  std::vector<long long> occupancy(state.K, 0);
  for (int zt : state.z) ++occupancy[zt];
  std::vector<int> relabel(state.K, -1);
  int newK = 0;
  for (int k = 0; k < state.K; ++k)
    if (occupancy[k] > 0) relabel[k] = newK++;
  if (newK == state.K) return;

  for (auto& zt : state.z) zt = relabel[zt];

  GlobalWeights beta;
  std::vector<double> kappa;
  std::vector<long long> sticks, switches;
  IMat n(newK, newK);
  std::vector<std::unique_ptr<SuffStats>> stats;
  beta.remainder = state.beta.remainder;
  for (int k = 0; k < state.K; ++k) {
    if (relabel[k] >= 0) {
      beta.weights.push_back(state.beta.weights[k]);
      kappa.push_back(state.kappa[k]);
      sticks.push_back(state.sticks[k]);
      switches.push_back(state.switches[k]);
      stats.push_back(std::move(state.stats[k]));
    } else {
      beta.remainder += state.beta.weights[k];
      if (state.n.row_sum(k) != 0 || state.n.col_sum(k) != 0)
        throw std::runtime_error("direct: empty state with transition counts");
      if (state.sticks[k] != 0 || state.switches[k] != 0)
        throw std::runtime_error("direct: empty state with persistence trials");
    }
  }
  kappa.push_back(state.kappa[state.K]);  // prospective slot
  for (int a = 0; a < state.K; ++a)
    for (int b = 0; b < state.K; ++b)
      if (relabel[a] >= 0 && relabel[b] >= 0) n(relabel[a], relabel[b]) = state.n(a, b);

  state.K = newK;
  state.beta = std::move(beta);
  state.kappa = std::move(kappa);
  state.sticks = std::move(sticks);
  state.switches = std::move(switches);
  state.n = std::move(n);
  state.stats = std::move(stats);
}

namespace {

void stick_switch_counts(const DirectChainState& s, std::vector<long long>& sticks,
                         std::vector<long long>& switches) {
  sticks.assign(s.K, 0);
  switches.assign(s.K, 0);
  for (std::size_t t = 0; t < s.data->size(); ++t) {
    if (!s.data->has_prev(t)) continue;
    if (s.w[t])
      ++sticks[s.z[t - 1]];
    else
      ++switches[s.z[t - 1]];
  }
}

// Block-start assignments act as direct beta-likelihood terms; they augment
// the Dirichlet update of beta alongside the CRF table counts.
std::vector<long long> initial_state_counts(const DirectChainState& s) {
  std::vector<long long> init(s.K, 0);
  for (std::size_t t = 0; t < s.data->size(); ++t)
    if (!s.data->has_prev(t)) ++init[s.z[t]];
  return init;
}

}  // namespace

void direct_sweep(DirectChainState& state, const SamplerOptions& opts) {
  const std::size_t T = state.data->size();
  for (std::size_t t = 0; t < T; ++t) block_sample_zwt(state, t);
  compact_states(state);

  state.kappa = sample_kappa(state.sticks, state.switches, state.hyper, state.rng, true);

  IMat m = sample_table_counts(state.n, state.hyper.alpha, state.beta, state.rng);
  std::vector<long long> init = initial_state_counts(state);
  IMat m_aug = m;
  m_aug.resize_preserving(m.rows + 1, m.cols);
  for (int k = 0; k < state.K; ++k) m_aug(m.rows, k) = init[k];

  // alpha and gamma condition on (n, m) with the transition rows and beta
  // marginalized out, so they are updated before beta is redrawn
  if (opts.resample_hyper) {
    GammaEvidence ev;
    for (std::size_t r = 0; r < m_aug.rows; ++r) ev.customers += m_aug.row_sum(r);
    ev.dishes = state.K;
    state.hyper = resample_hyperparameters(state.hyper, state.n, m, ev, state.kappa, opts.priors,
                                           opts.grids, state.rng);
  }

  state.beta = sample_global_weights(m_aug, state.hyper.gamma, state.rng);
}

void validate_direct(const DirectChainState& state) {
  const std::size_t T = state.data->size();
  std::vector<bool> seen(state.K, false);
  int distinct = 0;
  for (std::size_t t = 0; t < T; ++t) {
    int k = state.z[t];
    require(k >= 0 && k < state.K, "validate: z out of range");
    if (!seen[k]) {
      seen[k] = true;
      ++distinct;
    }
    if (state.w[t]) {
      require(state.data->has_prev(t), "validate: w = 1 at block start");
      require(state.z[t] == state.z[t - 1], "validate: w = 1 without self-transition");
    }
  }
  require(distinct == state.K, "validate: K != distinct states");

  IMat n(state.K, state.K);
  for (std::size_t t = 0; t < T; ++t)
    if (state.data->has_prev(t) && state.w[t] == 0) ++n(state.z[t - 1], state.z[t]);
  require(n == state.n, "validate: transition counts inconsistent");

  std::vector<long long> sticks, switches;
  stick_switch_counts(state, sticks, switches);
  require(sticks == state.sticks && switches == state.switches,
          "validate: persistence trial counts inconsistent");

  require(state.beta.size() == static_cast<std::size_t>(state.K), "validate: beta size");
  state.beta.validate();
  require(state.kappa.size() == static_cast<std::size_t>(state.K) + 1, "validate: kappa size");
  for (double k : state.kappa) require(k >= 0.0 && k <= 1.0, "validate: kappa range");

  for (int k = 0; k < state.K; ++k) {
    auto fresh = state.emis->make_stats();
    for (std::size_t t = 0; t < T; ++t)
      if (state.z[t] == k) state.emis->add(*fresh, state.data->y[t], state.data->context(t));
    nlohmann::json a = state.emis->stats_to_json(*state.stats[k]);
    nlohmann::json b = state.emis->stats_to_json(*fresh);
    std::function<bool(const nlohmann::json&, const nlohmann::json&)> close =
        [&](const nlohmann::json& x, const nlohmann::json& y) -> bool {
      if (x.is_number() && y.is_number())
        return std::abs(x.get<double>() - y.get<double>()) <= 1e-9;
      if (x.type() != y.type() || x.size() != y.size()) return false;
      if (x.is_object()) {
        for (auto& [key, val] : x.items())
          if (!y.contains(key) || !close(val, y.at(key))) return false;
        return true;
      }
      if (x.is_array()) {
        for (std::size_t i = 0; i < x.size(); ++i)
          if (!close(x[i], y[i])) return false;
        return true;
      }
      return x == y;
    };
    require(close(a, b), "validate: sufficient statistics inconsistent");
  }
}

double direct_obs_loglik(const DirectChainState& state) {
  const std::size_t T = state.data->size();
  std::vector<std::unique_ptr<SuffStats>> acc;
  for (int k = 0; k < state.K; ++k) acc.push_back(state.emis->make_stats());
  double ll = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    int k = state.z[t];
    ll += state.emis->predictive_loglik(*acc[k], state.data->y[t], state.data->context(t));
    state.emis->add(*acc[k], state.data->y[t], state.data->context(t));
  }
  return ll;
}

}  // namespace dshmm
