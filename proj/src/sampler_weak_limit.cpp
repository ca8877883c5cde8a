#include "dshmm/sampler_weak_limit.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <tuple>

#include "dshmm/kernels.hpp"

namespace dshmm {

namespace {

bool block_start(const Dataset& d, std::size_t t) { return !d.has_prev(t); }
bool block_end(const Dataset& d, std::size_t t) {
  return t + 1 >= d.size() || !d.has_prev(t + 1);
}

}  // namespace

DMat loglik_table(const WeakLimitChainState& s) {
  const std::size_t T = s.data->size();
  DMat lik(T, s.L);
  for (std::size_t t = 0; t < T; ++t) {
    const Obs* ctx = s.data->context(t);
    for (int j = 0; j < s.L; ++j) lik(t, j) = s.emis->data_loglik(*s.theta[j], s.data->y[t], ctx);
  }
  return lik;
}

Messages backward_messages(const WeakLimitChainState& s, const DMat& lik) {
  const std::size_t T = s.data->size();
  const int L = s.L;
  Messages out;
  out.msg = DMat(T, L);
  out.log_norm.assign(T, 0.0);

  std::vector<double> u(L), raw(L);
  for (std::size_t ti = T; ti-- > 0;) {
    if (block_end(*s.data, ti)) {
      for (int j = 0; j < L; ++j) out.msg(ti, j) = 1.0 / L;
      out.log_norm[ti] = std::log(static_cast<double>(L));
      continue;
    }
    // u_k = exp(lik[t+1][k] - c) * msg[t+1][k]; the shift c rides in the
    // marginal-likelihood bookkeeping, not here
    double c = kernels::max(lik.row(ti + 1), L);
    kernels::exp_shift(lik.row(ti + 1), c, u.data(), L);
    kernels::mul(u.data(), out.msg.row(ti + 1), u.data(), L);
    for (int j = 0; j < L; ++j)
      raw[j] = (1.0 - s.kappa[j]) * kernels::dot(s.pibar.row(j), u.data(), L) + s.kappa[j] * u[j];
    double norm = kernels::sum(raw.data(), L);
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw std::runtime_error("backward_messages: message slice underflow");
    for (int j = 0; j < L; ++j) out.msg(ti, j) = raw[j] / norm;
    out.log_norm[ti] = norm > 0 ? std::log(norm) : 0.0;
  }
  return out;
}

double marginal_loglik(const WeakLimitChainState& s, const DMat& lik, const Messages& msgs) {
  const std::size_t T = s.data->size();
  const int L = s.L;
  double total = 0.0;
  std::vector<double> u(L);
  for (std::size_t t = 0; t < T; ++t) {
    double c = kernels::max(lik.row(t), L);
    total += c;  // per-slice emission shift
    if (block_start(*s.data, t)) {
      kernels::exp_shift(lik.row(t), c, u.data(), L);
      kernels::mul(u.data(), msgs.msg.row(t), u.data(), L);
      total += std::log(kernels::dot(s.beta.data(), u.data(), L));
    }
    total += msgs.log_norm[t];
  }
  return total;
}

void forward_sample_zw(WeakLimitChainState& s, const DMat& lik, const Messages& msgs) {
  const std::size_t T = s.data->size();
  const int L = s.L;
  std::vector<double> logits;
  for (std::size_t t = 0; t < T; ++t) {
    if (block_start(*s.data, t)) {
      logits.assign(L, 0.0);
      for (int k = 0; k < L; ++k)
        logits[k] = std::log(s.beta[k]) + lik(t, k) + std::log(msgs.msg(t, k));
      s.z[t] = rcategorical_logits(s.rng, logits);
      s.w[t] = 0;
      continue;
    }
    const int j = s.z[t - 1];
    double kap = s.kappa[j];
    logits.assign(L + 1, 0.0);
    for (int k = 0; k < L; ++k)
      logits[k] =
          std::log1p(-kap) + std::log(s.pibar(j, k)) + lik(t, k) + std::log(msgs.msg(t, k));
    logits[L] = kap > 0.0 ? std::log(kap) + lik(t, j) + std::log(msgs.msg(t, j))
                          : -std::numeric_limits<double>::infinity();
    int pick = rcategorical_logits(s.rng, logits);
    if (pick == L) {
      s.z[t] = j;
      s.w[t] = 1;
    } else {
      s.z[t] = pick;
      s.w[t] = 0;
    }
  }
}

std::pair<std::vector<double>, DMat> sample_pibar_beta(const IMat& n, const IMat& m, double alpha,
                                                       double gamma, int L,
                                                       const std::vector<long long>& init_counts,
                                                       Rng& rng) {
  require(n.rows == static_cast<std::size_t>(L) && n.cols == static_cast<std::size_t>(L),
          "sample_pibar_beta: count dimensions");
  require(m.rows == n.rows && m.cols == n.cols, "sample_pibar_beta: table dimensions");
  std::vector<double> conc(L);
  for (int k = 0; k < L; ++k) {
    conc[k] = gamma / L + m.col_sum(k);
    if (!init_counts.empty()) conc[k] += init_counts[k];
  }
  std::vector<double> beta = rdirichlet(rng, conc);
  DMat pibar(L, L);
  for (int j = 0; j < L; ++j) {
    for (int k = 0; k < L; ++k) conc[k] = alpha * beta[k] + n(j, k);
    std::vector<double> row = rdirichlet(rng, conc);
    for (int k = 0; k < L; ++k) pibar(j, k) = row[k];
  }
  return {std::move(beta), std::move(pibar)};
}

namespace {

void recount(WeakLimitChainState& s, std::vector<long long>& sticks,
             std::vector<long long>& switches, std::vector<long long>& init) {
  s.n = IMat(s.L, s.L);
  sticks.assign(s.L, 0);
  switches.assign(s.L, 0);
  init.assign(s.L, 0);
  for (std::size_t t = 0; t < s.data->size(); ++t) {
    if (!s.data->has_prev(t)) {
      ++init[s.z[t]];
      continue;
    }
    if (s.w[t]) {
      ++sticks[s.z[t - 1]];
    } else {
      ++switches[s.z[t - 1]];
      ++s.n(s.z[t - 1], s.z[t]);
    }
  }
}

void resample_theta(WeakLimitChainState& s) {
  std::vector<std::unique_ptr<SuffStats>> stats;
  for (int j = 0; j < s.L; ++j) stats.push_back(s.emis->make_stats());
  for (std::size_t t = 0; t < s.data->size(); ++t)
    s.emis->add(*stats[s.z[t]], s.data->y[t], s.data->context(t));
  s.theta.clear();
  for (int j = 0; j < s.L; ++j) s.theta.push_back(s.emis->sample_params(*stats[j], s.rng));
  std::vector<const EmissionParams*> ptrs;
  for (auto& p : s.theta) ptrs.push_back(p.get());
  s.emis->resample_hyper(ptrs, s.rng);
}

}  // namespace

WeakLimitChainState init_weak_limit_chain(const Dataset& data, const EmissionModel& emis,
                                          const HyperParams& hyper, int L, std::uint64_t seed,
                                          const std::vector<int>* init_labels) {
  hyper.validate();
  require(L >= 1, "weak limit: L must be >= 1");
  require(data.size() > 0, "weak limit: empty dataset");
  WeakLimitChainState s;
  s.data = &data;
  s.emis = emis.clone();
  s.L = L;
  s.hyper = hyper;
  s.rng.seed(seed);
  const std::size_t T = data.size();

  if (init_labels) {
    require(init_labels->size() == T, "weak limit: init labels length mismatch");
    for (int lab : *init_labels) require(lab >= 0 && lab < L, "weak limit: init label out of range");
    s.z = *init_labels;
  } else {
    s.z.resize(T);
    for (std::size_t t = 0; t < T; ++t)
      s.z[t] = static_cast<int>(runif(s.rng) * L) % L;
  }
  s.w.assign(T, 0);

  std::vector<long long> sticks, switches, init;
  recount(s, sticks, switches, init);
  s.kappa = sample_kappa(std::vector<long long>(L, 0), std::vector<long long>(L, 0), hyper, s.rng,
                         false);
  s.beta = rdirichlet(s.rng, std::vector<double>(L, hyper.gamma / L));
  s.pibar = DMat(L, L);
  for (int j = 0; j < L; ++j) {
    std::vector<double> conc(L);
    for (int k = 0; k < L; ++k) conc[k] = hyper.alpha * s.beta[k];
    std::vector<double> row = rdirichlet(s.rng, conc);
    for (int k = 0; k < L; ++k) s.pibar(j, k) = row[k];
  }
  resample_theta(s);
  return s;
}

void weak_limit_sweep(WeakLimitChainState& s, const SamplerOptions& opts) {
  DMat lik = loglik_table(s);
  Messages msgs = backward_messages(s, lik);
  s.last_marginal_loglik = marginal_loglik(s, lik, msgs);
  forward_sample_zw(s, lik, msgs);

  std::vector<long long> sticks, switches, init;
  recount(s, sticks, switches, init);
  s.kappa = sample_kappa(sticks, switches, s.hyper, s.rng, false);

  IMat m = sample_table_counts(s.n, s.hyper.alpha, s.beta, s.rng);

  // alpha and gamma condition on the auxiliary counts with (beta, pibar)
  // marginalized; update them before redrawing beta and pibar
  if (opts.resample_hyper) {
    GammaEvidence ev;
    for (int k = 0; k < s.L; ++k) {
      long long customers = m.col_sum(k) + init[k];
      ev.customers += customers;
      ev.dishes += sample_crt(customers, s.hyper.gamma / s.L, s.rng);
    }
    s.hyper = resample_hyperparameters(s.hyper, s.n, m, ev, s.kappa, opts.priors, opts.grids,
                                       s.rng);
  }

  std::tie(s.beta, s.pibar) =
      sample_pibar_beta(s.n, m, s.hyper.alpha, s.hyper.gamma, s.L, init, s.rng);

  resample_theta(s);
}

void validate_weak_limit(const WeakLimitChainState& s) {
  const std::size_t T = s.data->size();
  require(s.z.size() == T && s.w.size() == T, "validate: sequence lengths");
  IMat n(s.L, s.L);
  for (std::size_t t = 0; t < T; ++t) {
    require(s.z[t] >= 0 && s.z[t] < s.L, "validate: z out of range");
    if (s.w[t]) {
      require(s.data->has_prev(t), "validate: w = 1 at block start");
      require(s.z[t] == s.z[t - 1], "validate: w = 1 without self-transition");
    } else if (s.data->has_prev(t)) {
      ++n(s.z[t - 1], s.z[t]);
    }
  }
  require(n == s.n, "validate: transition counts inconsistent");

  double bsum = kernels::sum(s.beta.data(), s.beta.size());
  require(std::abs(bsum - 1.0) <= 1e-9, "validate: beta not normalized");
  for (int j = 0; j < s.L; ++j) {
    double rsum = kernels::sum(s.pibar.row(j), s.L);
    require(std::abs(rsum - 1.0) <= 1e-9, "validate: pibar row not normalized");
  }
  for (double k : s.kappa) require(k >= 0.0 && k <= 1.0, "validate: kappa range");
}

}  // namespace dshmm
