#include <algorithm>
#include <cmath>
#include <numeric>

#include <stdexcept>

#include "doctest.h"

#include "dshmm/hdp_core.hpp"

using namespace dshmm;

namespace {

// Kolmogorov-Smirnov distance between sorted samples and a CDF tabulated on
// a grid (linear interpolation between grid points).
double ks_distance(std::vector<double> samples, const std::vector<double>& grid,
                   const std::vector<double>& cdf) {
  std::sort(samples.begin(), samples.end());
  auto cdf_at = [&](double x) {
    if (x <= grid.front()) return 0.0;
    if (x >= grid.back()) return 1.0;
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t i = it - grid.begin();
    double w = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
    return cdf[i - 1] + w * (cdf[i] - cdf[i - 1]);
  };
  double d = 0.0;
  const double n = static_cast<double>(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = cdf_at(samples[i]);
    d = std::max(d, std::abs(f - i / n));
    d = std::max(d, std::abs(f - (i + 1) / n));
  }
  return d;
}

// normalized CDF from an unnormalized log-density on a uniform grid
std::vector<double> cdf_from_logpdf(const std::vector<double>& grid,
                                    const std::vector<double>& logpdf) {
  double m = *std::max_element(logpdf.begin(), logpdf.end());
  std::vector<double> cdf(grid.size(), 0.0);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    double trap = 0.5 * (std::exp(logpdf[i - 1] - m) + std::exp(logpdf[i] - m)) *
                  (grid[i] - grid[i - 1]);
    cdf[i] = cdf[i - 1] + trap;
  }
  for (double& c : cdf) c /= cdf.back();
  return cdf;
}

}  // namespace

TEST_SUITE("hdp_core") {

TEST_CASE("hyperparameter validation enforces the variant ties") {
  HyperParams h;
  h.validate();
  h.variant = Variant::Sticky;
  h.alpha = 2.0;
  h.rho2 = 1.0;
  CHECK_THROWS(h.validate());
  h.rho2 = 2.0;
  h.validate();
  h.variant = Variant::HDP;
  h.rho1 = 0.5;
  CHECK_THROWS(h.validate());
  h.rho1 = 0.0;
  h.validate();
  h.alpha = -1.0;
  CHECK_THROWS(h.validate());
}

TEST_CASE("gem_prefix: empty prefix and stick means") {
  Rng rng(11);
  GlobalWeights g = gem_prefix(2.0, 0, rng);
  CHECK(g.weights.empty());
  CHECK(g.remainder == 1.0);
  CHECK_THROWS(gem_prefix(0.0, 1, rng));

  double m1 = 0.0, m2 = 0.0;
  for (int i = 0; i < 100000; ++i) {
    m1 += gem_prefix(1.0, 1, rng).weights[0];  // Beta(1,1) mean 1/2
    m2 += gem_prefix(2.0, 1, rng).weights[0];  // Beta(1,2) mean 1/3
  }
  CHECK(m1 / 100000 == doctest::Approx(0.5).epsilon(0.01));
  CHECK(m2 / 100000 == doctest::Approx(1.0 / 3).epsilon(0.01));
}

TEST_CASE("extend_with_fraction arithmetic and mass conservation") {
  GlobalWeights g;
  g.weights = {0.6};
  g.remainder = 0.4;
  extend_with_fraction(g, 0.5);
  CHECK(g.weights[1] == doctest::Approx(0.2));
  CHECK(g.remainder == doctest::Approx(0.2));

  GlobalWeights e;
  extend_with_fraction(e, 0.3);
  CHECK(e.weights[0] == doctest::Approx(0.3));
  CHECK(e.remainder == doctest::Approx(0.7));

  GlobalWeights zero;
  zero.remainder = 0.0;
  CHECK_THROWS(extend_with_fraction(zero, 0.5));

  Rng rng(12);
  GlobalWeights w;
  for (int i = 0; i < 10000; ++i) {
    if (i % 100 == 0) w = GlobalWeights{};  // the remainder decays geometrically
    extend_global_weights(w, 1.5, rng);
    REQUIRE(std::abs(w.total() - 1.0) < 1e-12);
  }
}

TEST_CASE("sample_table_counts: trivial cases, bounds and the CRT expectation") {
  Rng rng(13);
  IMat n(1, 2);
  n(0, 0) = 0;
  n(0, 1) = 1;
  std::vector<double> beta{0.5, 0.5};
  for (int i = 0; i < 200; ++i) {
    IMat m = sample_table_counts(n, 1.0, beta, rng);
    CHECK(m(0, 0) == 0);  // no customers, no tables
    CHECK(m(0, 1) == 1);  // a single customer always opens a table
  }

  // n = 5 customers at dish weight alpha*beta = 1: E[m] = sum_{s=0}^{4} 1/(s+1)
  IMat n5(1, 1);
  n5(0, 0) = 5;
  std::vector<double> b1{1.0};
  double acc = 0.0;
  for (int i = 0; i < 100000; ++i) {
    IMat m = sample_table_counts(n5, 1.0, b1, rng);
    REQUIRE(m(0, 0) >= 1);
    REQUIRE(m(0, 0) <= 5);
    acc += m(0, 0);
  }
  CHECK(acc / 100000 == doctest::Approx(137.0 / 60.0).epsilon(0.01));
}

TEST_CASE("sample_global_weights: Dirichlet means, empty case, degenerate column") {
  Rng rng(14);
  IMat empty(0, 0);
  GlobalWeights g = sample_global_weights(empty, 1.0, rng);
  CHECK(g.weights.empty());
  CHECK(g.remainder == 1.0);

  IMat m(2, 2);
  m(0, 0) = 2;
  m(1, 0) = 3;
  m(0, 1) = 5;  // column sums (5, 5), gamma = 2: E[beta_1] = 5/12
  double acc = 0.0;
  for (int i = 0; i < 100000; ++i) {
    GlobalWeights w = sample_global_weights(m, 2.0, rng);
    REQUIRE(std::abs(w.total() - 1.0) < 1e-12);
    acc += w.weights[0];
  }
  CHECK(acc / 100000 == doctest::Approx(5.0 / 12.0).epsilon(0.01));

  IMat bad(1, 2);
  bad(0, 0) = 3;  // column 1 empty: the state should have been compacted
  CHECK_THROWS(sample_global_weights(bad, 1.0, rng));
}

TEST_CASE("sample_kappa: beta-binomial conjugacy, prior slot, HDP pinning") {
  Rng rng(15);
  HyperParams h;
  h.rho1 = 1.0;
  h.rho2 = 1.0;
  double acc = 0.0;
  for (int i = 0; i < 100000; ++i) {
    auto k = sample_kappa({3}, {2}, h, rng, true);
    REQUIRE(k.size() == 2);  // one active + one prospective
    acc += k[0];             // Beta(4, 3) mean 4/7
  }
  CHECK(acc / 100000 == doctest::Approx(4.0 / 7.0).epsilon(0.01));

  h.variant = Variant::HDP;
  h.rho1 = 0.0;
  auto k = sample_kappa({3, 1}, {2, 2}, h, rng, true);
  for (double v : k) CHECK(v == 0.0);
}

TEST_CASE("sample_alpha: prior-only mean and quadrature oracle") {
  Rng rng(16);
  GammaPrior prior{1.0, 0.01};
  double acc = 0.0;
  double a = 1.0;
  for (int i = 0; i < 100000; ++i) {
    a = sample_alpha(a, {}, 0, prior, rng);  // no evidence: posterior = prior
    acc += a;
  }
  CHECK(acc / 100000 == doctest::Approx(100.0).epsilon(0.03));

  // one restaurant, 10 customers, 3 tables: p(alpha) ∝ alpha^{a0-1+m} e^{-b0 a}
  // Gamma(alpha)/Gamma(alpha+n)
  GammaPrior p2{2.0, 0.5};
  const long long nj = 10, m = 3;
  std::vector<double> grid, lp;
  for (double x = 1e-4; x <= 60.0; x += 0.002) {
    grid.push_back(x);
    lp.push_back((p2.shape - 1 + m) * std::log(x) - p2.rate * x + std::lgamma(x) -
                 std::lgamma(x + nj));
  }
  std::vector<double> cdf = cdf_from_logpdf(grid, lp);
  std::vector<double> samples;
  a = 1.0;
  for (int i = 0; i < 100000; ++i) {
    a = sample_alpha(a, {nj}, m, p2, rng);
    samples.push_back(a);
  }
  CHECK(ks_distance(samples, grid, cdf) < 0.02);
}

TEST_CASE("sample_gamma_conc: quadrature oracle at m=4 tables, 2 dishes") {
  Rng rng(17);
  GammaPrior prior{2.0, 1.0};
  const long long tables = 4, dishes = 2;
  std::vector<double> grid, lp;
  for (double x = 1e-4; x <= 30.0; x += 0.001) {
    grid.push_back(x);
    lp.push_back((prior.shape - 1 + dishes) * std::log(x) - prior.rate * x + std::lgamma(x) -
                 std::lgamma(x + tables));
  }
  std::vector<double> cdf = cdf_from_logpdf(grid, lp);
  std::vector<double> samples;
  double g = 1.0;
  for (int i = 0; i < 100000; ++i) {
    g = sample_gamma_conc(g, tables, dishes, prior, rng);
    samples.push_back(g);
  }
  CHECK(ks_distance(samples, grid, cdf) < 0.02);
}

TEST_CASE("rho grid: normalization, uniform case, concentrated-kappa mode") {
  RhoGrid grid;
  grid.phi_cells = 20;
  grid.eta_cells = 20;

  // no active states: exact uniform posterior
  std::vector<double> table = rho_grid_log_posterior({}, grid);
  double m = *std::max_element(table.begin(), table.end());
  double z = 0.0;
  for (double v : table) z += std::exp(v - m);
  for (double v : table)
    CHECK(std::exp(v - m) / z == doctest::Approx(1.0 / grid.cells()).epsilon(1e-10));

  // high kappas push the mode to phi > 0.5
  std::vector<double> t2 = rho_grid_log_posterior({0.9, 0.92, 0.88}, grid);
  std::size_t argmax = std::max_element(t2.begin(), t2.end()) - t2.begin();
  int phi_idx = static_cast<int>(argmax) / grid.eta_cells;
  CHECK(grid.phi_mid(phi_idx) > 0.5);

  Rng rng(18);
  auto [r1, r2] = sample_rho_on_grid({0.9, 0.92, 0.88}, grid, rng);
  CHECK(r1 > 0.0);
  CHECK(r2 > 0.0);
  CHECK_THROWS_AS(sample_rho_on_grid({std::nan("")}, grid, rng), std::domain_error);
  // boundary kappas are clamped, not rejected
  auto [c1, c2] = sample_rho_on_grid({0.0, 1.0}, grid, rng);
  CHECK(c1 > 0.0);
  CHECK(c2 > 0.0);
}

TEST_CASE("rho grid sampling matches the normalized table frequencies") {
  RhoGrid grid;
  grid.phi_cells = 4;
  grid.eta_cells = 3;
  std::vector<double> kappa{0.7, 0.4};
  std::vector<double> table = rho_grid_log_posterior(kappa, grid);
  double mx = *std::max_element(table.begin(), table.end());
  std::vector<double> p(table.size());
  double z = 0.0;
  for (std::size_t i = 0; i < table.size(); ++i) z += (p[i] = std::exp(table[i] - mx));
  for (double& v : p) v /= z;

  // map each draw back to its cell by matching (rho1, rho2) to midpoints
  Rng rng(19);
  std::vector<long long> hist(table.size(), 0);
  const int N = 200000;
  for (int i = 0; i < N; ++i) {
    auto [r1, r2] = sample_rho_on_grid(kappa, grid, rng);
    double phi = r1 / (r1 + r2);
    double eta = std::pow(r1 + r2, -1.0 / 3.0);
    int pi = static_cast<int>(phi / (grid.phi_max / grid.phi_cells));
    int ei = static_cast<int>(eta / (grid.eta_max / grid.eta_cells));
    ++hist[pi * grid.eta_cells + ei];
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    double se = std::sqrt(p[i] * (1 - p[i]) / N);
    CHECK(std::abs(hist[i] / double(N) - p[i]) < 4 * se + 1e-9);
  }
}

TEST_CASE("resample_hyperparameters: variant contracts") {
  Rng rng(20);
  HyperPriors priors;
  HyperGrids grids;
  grids.rho.phi_cells = 10;
  grids.rho.eta_cells = 10;
  grids.sticky.c_cells = 10;
  grids.sticky.phi_cells = 10;
  IMat n(1, 1), m(1, 1);
  n(0, 0) = 4;
  m(0, 0) = 2;
  GammaEvidence ev{2, 1};

  HyperParams hdp;
  hdp.variant = Variant::HDP;
  hdp.rho1 = 0.0;
  HyperParams out = resample_hyperparameters(hdp, n, m, ev, {0.0}, priors, grids, rng);
  CHECK(out.rho1 == 0.0);
  CHECK(out.variant == Variant::HDP);

  HyperParams st;
  st.variant = Variant::Sticky;
  st.rho2 = st.alpha;
  HyperParams so = resample_hyperparameters(st, n, m, ev, {0.5}, priors, grids, rng);
  CHECK(so.rho2 == so.alpha);

  // DS with no evidence: alpha marginal matches the Gamma(1, 0.01) prior mean
  IMat n0(0, 0), m0(0, 0);
  HyperParams ds;
  double acc = 0.0;
  for (int i = 0; i < 20000; ++i) {
    ds = resample_hyperparameters(ds, n0, m0, GammaEvidence{}, {}, priors, grids, rng);
    acc += ds.alpha;
  }
  CHECK(acc / 20000 == doctest::Approx(100.0).epsilon(0.05));
}

TEST_CASE("sticky grid posterior prefers large c*phi for sticky kappas") {
  StickyGrid grid;
  grid.c_cells = 30;
  grid.phi_cells = 30;
  GammaPrior c_prior{1.0, 0.01};
  Rng rng(21);
  double mean_r1 = 0.0, mean_alpha = 0.0;
  const int N = 3000;
  for (int i = 0; i < N; ++i) {
    StickyHyperDraw d = sample_sticky_on_grid({0.9, 0.88, 0.92}, {20, 20, 20}, 9, c_prior, grid, rng);
    CHECK(d.rho2 == d.alpha);
    mean_r1 += d.rho1;
    mean_alpha += d.alpha;
  }
  CHECK(mean_r1 / N > mean_alpha / N);  // phi posterior concentrates above 1/2
}

}  // TEST_SUITE
