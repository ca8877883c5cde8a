#pragma once

#include <utility>
#include <vector>

#include "dshmm/common.hpp"
#include "dshmm/rng.hpp"

namespace dshmm {

enum class Variant { DS, Sticky, HDP };

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& s);

struct HyperParams {
  double alpha = 1.0;
  double gamma = 1.0;
  double rho1 = 1.0;
  double rho2 = 1.0;
  Variant variant = Variant::DS;

  void validate() const;
};

// Global transition distribution over the active states plus the mass left
// for all not-yet-instantiated states.
struct GlobalWeights {
  std::vector<double> weights;
  double remainder = 1.0;

  std::size_t size() const { return weights.size(); }
  double total() const;
  void validate(double tol = 1e-9) const;
};

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

struct HyperPriors {
  GammaPrior alpha{1.0, 0.01};
  GammaPrior gamma{2.0, 1.0};
};

// Grid over (phi, eta) with phi = rho1/(rho1+rho2) in (0, phi_max) and
// eta = (rho1+rho2)^(-1/3) in (0, eta_max]. Cell midpoints only, so eta = 0
// (infinite concentration) is excluded.
struct RhoGrid {
  int phi_cells = 100;
  int eta_cells = 100;
  double phi_max = 1.0;
  double eta_max = 2.0;

  double phi_mid(int i) const { return (i + 0.5) * phi_max / phi_cells; }
  double eta_mid(int j) const { return (j + 0.5) * eta_max / eta_cells; }
  int cells() const { return phi_cells * eta_cells; }
};

// Grid for the sticky-baseline joint update of c = alpha + kappa and phi.
struct StickyGrid {
  int c_cells = 100;
  int phi_cells = 100;
  double c_max = 500.0;  // Gamma(1,0.01) leaves ~0.7% mass beyond 500

  double c_mid(int i) const { return (i + 0.5) * c_max / c_cells; }
  double phi_mid(int j) const { return (j + 0.5) / phi_cells; }
};

// First k weights of a stick-breaking draw with concentration gamma.
GlobalWeights gem_prefix(double gamma, std::size_t k, Rng& rng);

// Carve a new state's weight out of the remainder with the given break
// fraction b in (0,1).
void extend_with_fraction(GlobalWeights& beta, double b);

// Sample b ~ Beta(1, gamma) and carve a new state's weight from the
// remainder.
void extend_global_weights(GlobalWeights& beta, double gamma, Rng& rng);

// Chinese-restaurant table count for n customers and dish weight alpha_beta.
long long sample_crt(long long n, double alpha_beta, Rng& rng);

// m_jk | n_jk via the restaurant dynamics with dish weight alpha*beta_k.
IMat sample_table_counts(const IMat& n, double alpha, const std::vector<double>& beta, Rng& rng);
IMat sample_table_counts(const IMat& n, double alpha, const GlobalWeights& beta, Rng& rng);

// (beta_1..beta_K, remainder) ~ Dir(m_.1, ..., m_.K, gamma).
GlobalWeights sample_global_weights(const IMat& m, double gamma, Rng& rng);

// kappa_j ~ Beta(rho1 + sticks_j, rho2 + switches_j). With add_new_slot an
// extra prior draw is appended for the prospective new state. HDP pins all
// entries to 0.
std::vector<double> sample_kappa(const std::vector<long long>& sticks,
                                 const std::vector<long long>& switches, const HyperParams& hyper,
                                 Rng& rng, bool add_new_slot);

// One auxiliary-variable update of alpha given per-restaurant customer
// counts n_j. and total table count m_.. (Escobar-West scheme extended to
// multiple restaurants). Restaurants with zero customers drop out.
double sample_alpha(double alpha, const std::vector<long long>& restaurant_sizes,
                    long long total_tables, const GammaPrior& prior, Rng& rng);

// One auxiliary-variable update of gamma given the top-level restaurant:
// total_tables customers, num_dishes distinct dishes.
double sample_gamma_conc(double gamma, long long total_tables, long long num_dishes,
                         const GammaPrior& prior, Rng& rng);

// Log-posterior table over the (phi, eta) grid midpoints given active-state
// kappas, flattened row-major over (phi, eta).
std::vector<double> rho_grid_log_posterior(const std::vector<double>& kappa, const RhoGrid& grid);

// Sample (rho1, rho2) from the grid posterior. Kappas are clamped to
// [1e-12, 1-1e-12] before evaluation.
std::pair<double, double> sample_rho_on_grid(const std::vector<double>& kappa, const RhoGrid& grid,
                                             Rng& rng);

// Sticky-baseline joint grid update of (c, phi): returns (alpha, rho1, rho2)
// with rho2 == alpha. Likelihood combines the kappa beta terms and the
// transition CRF terms.
std::vector<double> sticky_grid_log_posterior(const std::vector<double>& kappa,
                                              const std::vector<long long>& restaurant_sizes,
                                              long long total_tables, const GammaPrior& c_prior,
                                              const StickyGrid& grid);
struct StickyHyperDraw {
  double alpha, rho1, rho2;
};
StickyHyperDraw sample_sticky_on_grid(const std::vector<double>& kappa,
                                      const std::vector<long long>& restaurant_sizes,
                                      long long total_tables, const GammaPrior& c_prior,
                                      const StickyGrid& grid, Rng& rng);

struct HyperGrids {
  RhoGrid rho;
  StickyGrid sticky;
};

// Top-level restaurant evidence for the gamma update: how many customers the
// global DP has seen and how many distinct dishes they produced.
struct GammaEvidence {
  long long customers = 0;
  long long dishes = 0;
};

// Variant-dispatched hyperparameter resampling given the sufficient pieces
// of the chain state. m_tables are the CRF table counts (they drive alpha
// through the per-restaurant likelihood); gamma_ev drives gamma.
HyperParams resample_hyperparameters(const HyperParams& cur, const IMat& n, const IMat& m_tables,
                                     const GammaEvidence& gamma_ev,
                                     const std::vector<double>& kappas, const HyperPriors& priors,
                                     const HyperGrids& grids, Rng& rng);

}  // namespace dshmm
