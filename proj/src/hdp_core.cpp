#include "dshmm/hdp_core.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dshmm/kernels.hpp"

namespace dshmm {

namespace {

double lbeta(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double clamp_kappa(double k) {
  if (std::isnan(k) || k < 0.0 || k > 1.0)
    throw std::domain_error("kappa outside [0,1]");
  return std::clamp(k, 1e-12, 1.0 - 1e-12);
}

}  // namespace

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::DS: return "ds";
    case Variant::Sticky: return "sticky";
    case Variant::HDP: return "hdp";
  }
  return "?";
}

Variant variant_from_name(const std::string& s) {
  if (s == "ds") return Variant::DS;
  if (s == "sticky") return Variant::Sticky;
  if (s == "hdp") return Variant::HDP;
  throw std::invalid_argument("unknown model variant: " + s);
}

void HyperParams::validate() const {
  require(alpha > 0.0, "alpha must be positive");
  require(gamma > 0.0, "gamma must be positive");
  require(rho2 > 0.0, "rho2 must be positive");
  require(rho1 >= 0.0, "rho1 must be nonnegative");
  if (variant == Variant::HDP) require(rho1 == 0.0, "HDP variant requires rho1 = 0");
  if (variant == Variant::Sticky) require(rho2 == alpha, "Sticky variant requires rho2 = alpha");
}

double GlobalWeights::total() const {
  return kernels::sum(weights.data(), weights.size()) + remainder;
}

void GlobalWeights::validate(double tol) const {
  for (double w : weights)
    if (!(w >= 0.0)) throw std::runtime_error("negative global weight");
  if (!(remainder >= 0.0)) throw std::runtime_error("negative remainder");
  if (std::abs(total() - 1.0) > tol) throw std::runtime_error("global weights do not sum to 1");
}

GlobalWeights gem_prefix(double gamma, std::size_t k, Rng& rng) {
  require(gamma > 0.0, "gem_prefix: gamma must be positive");
  GlobalWeights beta;
  beta.weights.reserve(k);
  double rem = 1.0;
  for (std::size_t i = 0; i < k; ++i) {
    double v = rbeta(rng, 1.0, gamma);
    beta.weights.push_back(v * rem);
    rem *= (1.0 - v);
  }
  beta.remainder = rem;
  return beta;
}

void extend_with_fraction(GlobalWeights& beta, double b) {
  if (!(beta.remainder > 0.0)) throw std::runtime_error("extend: degenerate remainder");
  require(b > 0.0 && b < 1.0, "extend: break fraction outside (0,1)");
  beta.weights.push_back(b * beta.remainder);
  beta.remainder *= (1.0 - b);
}

void extend_global_weights(GlobalWeights& beta, double gamma, Rng& rng) {
  require(gamma > 0.0, "extend: gamma must be positive");
  extend_with_fraction(beta, rbeta(rng, 1.0, gamma));
}

long long sample_crt(long long n, double alpha_beta, Rng& rng) {
  long long m = 0;
  for (long long s = 0; s < n; ++s)
    if (runif(rng) < alpha_beta / (s + alpha_beta)) ++m;
  return m;
}

IMat sample_table_counts(const IMat& n, double alpha, const std::vector<double>& beta, Rng& rng) {
  require(n.cols == beta.size(), "sample_table_counts: dimension mismatch");
  IMat m(n.rows, n.cols);
  for (std::size_t j = 0; j < n.rows; ++j)
    for (std::size_t k = 0; k < n.cols; ++k)
      if (n(j, k) > 0) m(j, k) = sample_crt(n(j, k), alpha * beta[k], rng);
  return m;
}

IMat sample_table_counts(const IMat& n, double alpha, const GlobalWeights& beta, Rng& rng) {
  return sample_table_counts(n, alpha, beta.weights, rng);
}

GlobalWeights sample_global_weights(const IMat& m, double gamma, Rng& rng) {
  require(gamma > 0.0, "sample_global_weights: gamma must be positive");
  const std::size_t K = m.cols;
  if (K == 0) return GlobalWeights{};
  std::vector<double> conc(K + 1);
  for (std::size_t k = 0; k < K; ++k) {
    long long c = m.col_sum(k);
    if (c < 1)
      throw std::runtime_error("sample_global_weights: active state with zero table count");
    conc[k] = static_cast<double>(c);
  }
  conc[K] = gamma;
  std::vector<double> draw = rdirichlet(rng, conc);
  GlobalWeights beta;
  beta.weights.assign(draw.begin(), draw.begin() + K);
  beta.remainder = draw[K];
  return beta;
}

std::vector<double> sample_kappa(const std::vector<long long>& sticks,
                                 const std::vector<long long>& switches, const HyperParams& hyper,
                                 Rng& rng, bool add_new_slot) {
  require(sticks.size() == switches.size(), "sample_kappa: length mismatch");
  const std::size_t J = sticks.size();
  std::vector<double> kappa(J + (add_new_slot ? 1 : 0), 0.0);
  if (hyper.variant == Variant::HDP) return kappa;
  for (std::size_t j = 0; j < J; ++j) {
    require(sticks[j] >= 0 && switches[j] >= 0, "sample_kappa: negative count");
    double a = hyper.rho1 + sticks[j];
    double b = hyper.rho2 + switches[j];
    if (!(a > 0.0) || !(b > 0.0))
      throw std::invalid_argument("sample_kappa: improper beta posterior");
    kappa[j] = rbeta(rng, a, b);
  }
  if (add_new_slot) {
    if (!(hyper.rho1 > 0.0) || !(hyper.rho2 > 0.0))
      throw std::invalid_argument("sample_kappa: improper beta prior");
    kappa[J] = rbeta(rng, hyper.rho1, hyper.rho2);
  }
  return kappa;
}

double sample_alpha(double alpha, const std::vector<long long>& restaurant_sizes,
                    long long total_tables, const GammaPrior& prior, Rng& rng) {
  require(prior.shape > 0.0 && prior.rate > 0.0, "sample_alpha: bad prior");
  double shape = prior.shape + total_tables;
  double rate = prior.rate;
  for (long long nj : restaurant_sizes) {
    if (nj <= 0) continue;
    double x = rbeta(rng, alpha + 1.0, static_cast<double>(nj));
    rate -= std::log(x);
    if (rbernoulli(rng, nj / (nj + alpha))) shape -= 1.0;
  }
  return rgamma(rng, shape, rate);
}

double sample_gamma_conc(double gamma, long long total_tables, long long num_dishes,
                         const GammaPrior& prior, Rng& rng) {
  require(prior.shape > 0.0 && prior.rate > 0.0, "sample_gamma_conc: bad prior");
  if (total_tables <= 0) return rgamma(rng, prior.shape, prior.rate);
  double x = rbeta(rng, gamma + 1.0, static_cast<double>(total_tables));
  double rate = prior.rate - std::log(x);
  double odds = (prior.shape + num_dishes - 1.0) / (total_tables * rate);
  double shape = prior.shape + num_dishes;
  if (!rbernoulli(rng, odds / (1.0 + odds))) shape -= 1.0;
  return rgamma(rng, shape, rate);
}

std::vector<double> rho_grid_log_posterior(const std::vector<double>& kappa, const RhoGrid& grid) {
  std::vector<double> table(static_cast<std::size_t>(grid.cells()));
  std::vector<double> logk(kappa.size()), log1mk(kappa.size());
  for (std::size_t j = 0; j < kappa.size(); ++j) {
    double k = clamp_kappa(kappa[j]);
    logk[j] = std::log(k);
    log1mk[j] = std::log1p(-k);
  }
  double sum_logk = kernels::sum(logk.data(), logk.size());
  double sum_log1mk = kernels::sum(log1mk.data(), log1mk.size());
  const double J = static_cast<double>(kappa.size());
  std::size_t idx = 0;
  for (int i = 0; i < grid.phi_cells; ++i) {
    double phi = grid.phi_mid(i);
    for (int e = 0; e < grid.eta_cells; ++e, ++idx) {
      double eta = grid.eta_mid(e);
      double conc = 1.0 / (eta * eta * eta);
      double r1 = phi * conc, r2 = (1.0 - phi) * conc;
      table[idx] = (r1 - 1.0) * sum_logk + (r2 - 1.0) * sum_log1mk - J * lbeta(r1, r2);
    }
  }
  return table;
}

std::pair<double, double> sample_rho_on_grid(const std::vector<double>& kappa, const RhoGrid& grid,
                                             Rng& rng) {
  require(grid.phi_cells >= 2 && grid.eta_cells >= 2, "rho grid too coarse");
  std::vector<double> table = rho_grid_log_posterior(kappa, grid);
  int cell = rcategorical_logits(rng, table);
  int i = cell / grid.eta_cells, e = cell % grid.eta_cells;
  double phi = grid.phi_mid(i);
  double conc = 1.0 / std::pow(grid.eta_mid(e), 3.0);
  return {phi * conc, (1.0 - phi) * conc};
}

std::vector<double> sticky_grid_log_posterior(const std::vector<double>& kappa,
                                              const std::vector<long long>& restaurant_sizes,
                                              long long total_tables, const GammaPrior& c_prior,
                                              const StickyGrid& grid) {
  std::vector<double> table(static_cast<std::size_t>(grid.c_cells) * grid.phi_cells);
  double sum_logk = 0.0, sum_log1mk = 0.0;
  for (double k : kappa) {
    double kc = clamp_kappa(k);
    sum_logk += std::log(kc);
    sum_log1mk += std::log1p(-kc);
  }
  const double J = static_cast<double>(kappa.size());
  std::size_t idx = 0;
  for (int i = 0; i < grid.c_cells; ++i) {
    double c = grid.c_mid(i);
    double prior_lp = (c_prior.shape - 1.0) * std::log(c) - c_prior.rate * c;
    for (int p = 0; p < grid.phi_cells; ++p, ++idx) {
      double phi = grid.phi_mid(p);
      double r1 = c * phi;           // kappa of the sticky model
      double alpha = c * (1.0 - phi);
      double lp = prior_lp + (r1 - 1.0) * sum_logk + (alpha - 1.0) * sum_log1mk - J * lbeta(r1, alpha);
      lp += total_tables * std::log(alpha);
      for (long long nj : restaurant_sizes)
        if (nj > 0) lp += std::lgamma(alpha) - std::lgamma(alpha + nj);
      table[idx] = lp;
    }
  }
  return table;
}

StickyHyperDraw sample_sticky_on_grid(const std::vector<double>& kappa,
                                      const std::vector<long long>& restaurant_sizes,
                                      long long total_tables, const GammaPrior& c_prior,
                                      const StickyGrid& grid, Rng& rng) {
  std::vector<double> table =
      sticky_grid_log_posterior(kappa, restaurant_sizes, total_tables, c_prior, grid);
  int cell = rcategorical_logits(rng, table);
  int i = cell / grid.phi_cells, p = cell % grid.phi_cells;
  double c = grid.c_mid(i), phi = grid.phi_mid(p);
  return {c * (1.0 - phi), c * phi, c * (1.0 - phi)};
}

HyperParams resample_hyperparameters(const HyperParams& cur, const IMat& n, const IMat& m_tables,
                                     const GammaEvidence& gamma_ev,
                                     const std::vector<double>& kappa_active,
                                     const HyperPriors& priors, const HyperGrids& grids, Rng& rng) {
  std::vector<long long> restaurant_sizes(n.rows);
  for (std::size_t j = 0; j < n.rows; ++j) restaurant_sizes[j] = n.row_sum(j);
  long long total_tables = 0;
  for (std::size_t j = 0; j < m_tables.rows; ++j) total_tables += m_tables.row_sum(j);

  HyperParams out = cur;
  switch (cur.variant) {
    case Variant::DS:
      out.alpha = sample_alpha(cur.alpha, restaurant_sizes, total_tables, priors.alpha, rng);
      out.gamma = sample_gamma_conc(cur.gamma, gamma_ev.customers, gamma_ev.dishes, priors.gamma, rng);
      std::tie(out.rho1, out.rho2) = sample_rho_on_grid(kappa_active, grids.rho, rng);
      break;
    case Variant::HDP:
      out.alpha = sample_alpha(cur.alpha, restaurant_sizes, total_tables, priors.alpha, rng);
      out.gamma = sample_gamma_conc(cur.gamma, gamma_ev.customers, gamma_ev.dishes, priors.gamma, rng);
      out.rho1 = 0.0;
      break;
    case Variant::Sticky: {
      out.gamma = sample_gamma_conc(cur.gamma, gamma_ev.customers, gamma_ev.dishes, priors.gamma, rng);
      StickyHyperDraw d = sample_sticky_on_grid(kappa_active, restaurant_sizes, total_tables,
                                                priors.alpha, grids.sticky, rng);
      out.alpha = d.alpha;
      out.rho1 = d.rho1;
      out.rho2 = d.rho2;
      break;
    }
    default:
      throw std::invalid_argument("resample_hyperparameters: unknown variant");
  }
  out.validate();
  return out;
}

}  // namespace dshmm
