#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "dshmm/rng.hpp"

namespace dshmm {

// One observation. Multinomial stores the symbol in element 0; the count
// and real-valued families use the full vector.
using Obs = Eigen::VectorXd;

// Observations grouped into independent blocks: transitions (and AR
// contexts) never cross a block boundary.
struct Dataset {
  std::vector<Obs> y;
  std::vector<int> block;

  std::size_t size() const { return y.size(); }
  bool has_prev(std::size_t t) const { return t > 0 && block[t] == block[t - 1]; }
  const Obs* context(std::size_t t) const { return has_prev(t) ? &y[t - 1] : nullptr; }
};

struct SuffStats {
  virtual ~SuffStats() = default;
  virtual std::unique_ptr<SuffStats> clone() const = 0;
};

struct EmissionParams {
  virtual ~EmissionParams() = default;
  virtual std::unique_ptr<EmissionParams> clone() const = 0;
};

// Conjugate emission family contract. A model instance owns its fixed prior
// hyperparameters; chains that mutate emission hyperparameters (the Poisson
// scale resampling) work on their own clone.
class EmissionModel {
 public:
  virtual ~EmissionModel() = default;

  virtual std::string family() const = 0;
  virtual std::unique_ptr<EmissionModel> clone() const = 0;
  virtual bool needs_context() const { return false; }

  virtual std::unique_ptr<SuffStats> make_stats() const = 0;
  virtual void add(SuffStats& s, const Obs& y, const Obs* ctx) const = 0;
  virtual void remove(SuffStats& s, const Obs& y, const Obs* ctx) const = 0;

  // log p(y | prior, observations accumulated in s)
  virtual double predictive_loglik(const SuffStats& s, const Obs& y, const Obs* ctx) const = 0;

  // exact posterior parameter draw given s
  virtual std::unique_ptr<EmissionParams> sample_params(const SuffStats& s, Rng& rng) const = 0;

  // log f(y | theta)
  virtual double data_loglik(const EmissionParams& p, const Obs& y, const Obs* ctx) const = 0;

  virtual Obs sample_data(const EmissionParams& p, const Obs* ctx, Rng& rng) const = 0;

  // draw from the posterior predictive (needed by the joint-distribution
  // correctness tests); not every family implements it
  virtual Obs sample_predictive(const SuffStats& s, const Obs* ctx, Rng& rng) const;

  // emission-level hyperparameter resampling given current per-state
  // parameter draws; default is a no-op
  virtual void resample_hyper(const std::vector<const EmissionParams*>& theta, Rng& rng);

  // checkpoint support
  virtual nlohmann::json stats_to_json(const SuffStats& s) const = 0;
  virtual std::unique_ptr<SuffStats> stats_from_json(const nlohmann::json& j) const = 0;
  virtual nlohmann::json params_to_json(const EmissionParams& p) const = 0;
  virtual std::unique_ptr<EmissionParams> params_from_json(const nlohmann::json& j) const = 0;
  virtual nlohmann::json hyper_to_json() const { return nlohmann::json::object(); }
  virtual void hyper_from_json(const nlohmann::json&) {}
};

// --- Multinomial with Dirichlet prior ---------------------------------------

struct MultinomialStats : SuffStats {
  std::vector<long long> counts;
  long long total = 0;
  std::unique_ptr<SuffStats> clone() const override;
};

struct MultinomialParams : EmissionParams {
  std::vector<double> p;
  std::unique_ptr<EmissionParams> clone() const override;
};

class MultinomialEmission : public EmissionModel {
 public:
  explicit MultinomialEmission(std::vector<double> dirichlet_prior);
  MultinomialEmission(int symbols, double pseudo_count);

  std::string family() const override { return "multinomial"; }
  std::unique_ptr<EmissionModel> clone() const override;
  std::unique_ptr<SuffStats> make_stats() const override;
  void add(SuffStats&, const Obs&, const Obs*) const override;
  void remove(SuffStats&, const Obs&, const Obs*) const override;
  double predictive_loglik(const SuffStats&, const Obs&, const Obs*) const override;
  std::unique_ptr<EmissionParams> sample_params(const SuffStats&, Rng&) const override;
  double data_loglik(const EmissionParams&, const Obs&, const Obs*) const override;
  Obs sample_data(const EmissionParams&, const Obs*, Rng&) const override;
  Obs sample_predictive(const SuffStats&, const Obs*, Rng&) const override;
  nlohmann::json stats_to_json(const SuffStats&) const override;
  std::unique_ptr<SuffStats> stats_from_json(const nlohmann::json&) const override;
  nlohmann::json params_to_json(const EmissionParams&) const override;
  std::unique_ptr<EmissionParams> params_from_json(const nlohmann::json&) const override;

  int symbols() const { return static_cast<int>(prior_.size()); }

 private:
  std::vector<double> prior_;
  double prior_total_;
};

// --- Gaussian with known observation noise ----------------------------------

struct GaussianStats : SuffStats {
  long long n = 0;
  double sum = 0.0;
  std::unique_ptr<SuffStats> clone() const override;
};

struct GaussianParams : EmissionParams {
  double mean = 0.0;
  std::unique_ptr<EmissionParams> clone() const override;
};

class GaussianKnownVarEmission : public EmissionModel {
 public:
  GaussianKnownVarEmission(double prior_mean, double prior_var, double noise_var);

  std::string family() const override { return "gaussian"; }
  std::unique_ptr<EmissionModel> clone() const override;
  std::unique_ptr<SuffStats> make_stats() const override;
  void add(SuffStats&, const Obs&, const Obs*) const override;
  void remove(SuffStats&, const Obs&, const Obs*) const override;
  double predictive_loglik(const SuffStats&, const Obs&, const Obs*) const override;
  std::unique_ptr<EmissionParams> sample_params(const SuffStats&, Rng&) const override;
  double data_loglik(const EmissionParams&, const Obs&, const Obs*) const override;
  Obs sample_data(const EmissionParams&, const Obs*, Rng&) const override;
  Obs sample_predictive(const SuffStats&, const Obs*, Rng&) const override;
  nlohmann::json stats_to_json(const SuffStats&) const override;
  std::unique_ptr<SuffStats> stats_from_json(const nlohmann::json&) const override;
  nlohmann::json params_to_json(const EmissionParams&) const override;
  std::unique_ptr<EmissionParams> params_from_json(const nlohmann::json&) const override;

  double noise_var() const { return noise_var_; }

 private:
  // posterior (mean, var) of the state mean given stats
  std::pair<double, double> posterior(const GaussianStats& s) const;

  double prior_mean_, prior_var_, noise_var_;
};

// --- Vector of independent Poisson counts with gamma priors ------------------

struct PoissonStats : SuffStats {
  long long n = 0;
  std::vector<long long> sums;
  std::unique_ptr<SuffStats> clone() const override;
};

struct PoissonParams : EmissionParams {
  std::vector<double> rates;
  std::unique_ptr<EmissionParams> clone() const override;
};

class PoissonVectorEmission : public EmissionModel {
 public:
  struct GammaPriorSpec {
    double shape = 1.0;
    double rate = 1.0;
  };

  // shape a shared across coordinates, per-coordinate rate b_c, and the
  // gamma hyperprior on b_c
  PoissonVectorEmission(int dims, double shape, double rate, GammaPriorSpec hyper = GammaPriorSpec{1.0, 1.0});

  std::string family() const override { return "poisson"; }
  std::unique_ptr<EmissionModel> clone() const override;
  std::unique_ptr<SuffStats> make_stats() const override;
  void add(SuffStats&, const Obs&, const Obs*) const override;
  void remove(SuffStats&, const Obs&, const Obs*) const override;
  double predictive_loglik(const SuffStats&, const Obs&, const Obs*) const override;
  std::unique_ptr<EmissionParams> sample_params(const SuffStats&, Rng&) const override;
  double data_loglik(const EmissionParams&, const Obs&, const Obs*) const override;
  Obs sample_data(const EmissionParams&, const Obs*, Rng&) const override;
  void resample_hyper(const std::vector<const EmissionParams*>& theta, Rng& rng) override;
  nlohmann::json stats_to_json(const SuffStats&) const override;
  std::unique_ptr<SuffStats> stats_from_json(const nlohmann::json&) const override;
  nlohmann::json params_to_json(const EmissionParams&) const override;
  std::unique_ptr<EmissionParams> params_from_json(const nlohmann::json&) const override;
  nlohmann::json hyper_to_json() const override;
  void hyper_from_json(const nlohmann::json&) override;

  const std::vector<double>& rate_params() const { return b_; }

 private:
  int dims_;
  double a_;
  std::vector<double> b_;
  double hyper_shape_, hyper_rate_;
};

// --- First-order autoregressive Gaussian with MNIW prior ---------------------

struct ARStats : SuffStats {
  long long n = 0;
  Eigen::MatrixXd syy, syx, sxx;
  std::unique_ptr<SuffStats> clone() const override;
};

struct ARParams : EmissionParams {
  Eigen::MatrixXd A, Sigma;
  std::unique_ptr<EmissionParams> clone() const override;
};

class ARGaussianEmission : public EmissionModel {
 public:
  ARGaussianEmission(Eigen::MatrixXd M, Eigen::MatrixXd V, double n0, Eigen::MatrixXd S0);

  // paper defaults: M = 0, V = I, n0 = d+2, S0 = 0.75 * data covariance
  static ARGaussianEmission with_defaults(const Eigen::MatrixXd& data_cov);

  std::string family() const override { return "ar_gaussian"; }
  std::unique_ptr<EmissionModel> clone() const override;
  bool needs_context() const override { return true; }
  std::unique_ptr<SuffStats> make_stats() const override;
  void add(SuffStats&, const Obs&, const Obs*) const override;
  void remove(SuffStats&, const Obs&, const Obs*) const override;
  double predictive_loglik(const SuffStats&, const Obs&, const Obs*) const override;
  std::unique_ptr<EmissionParams> sample_params(const SuffStats&, Rng&) const override;
  double data_loglik(const EmissionParams&, const Obs&, const Obs*) const override;
  Obs sample_data(const EmissionParams&, const Obs*, Rng&) const override;
  nlohmann::json stats_to_json(const SuffStats&) const override;
  std::unique_ptr<SuffStats> stats_from_json(const nlohmann::json&) const override;
  nlohmann::json params_to_json(const EmissionParams&) const override;
  std::unique_ptr<EmissionParams> params_from_json(const nlohmann::json&) const override;

  struct Posterior {
    Eigen::MatrixXd M, V, S;
    double n0;
  };
  Posterior posterior(const ARStats& s) const;

  int dims() const { return static_cast<int>(M_.rows()); }

 private:
  Eigen::MatrixXd M_, V_, Vinv_, MVinv_, S0_;
  double n0_;
};

}  // namespace dshmm
