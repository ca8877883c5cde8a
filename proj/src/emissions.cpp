#include "dshmm/emissions.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dshmm/common.hpp"

namespace dshmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Eigen::MatrixXd json_to_mat(const nlohmann::json& j) {
  std::size_t r = j.size(), c = r ? j[0].size() : 0;
  Eigen::MatrixXd m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k < c; ++k) m(i, k) = j[i][k].get<double>();
  return m;
}

nlohmann::json mat_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

// Lower-triangular Bartlett factor of a Wishart(I, df) draw in d dimensions.
Eigen::MatrixXd bartlett(int d, double df, Rng& rng) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    A(i, i) = std::sqrt(2.0 * rgamma(rng, 0.5 * (df - i), 1.0));
    for (int j = 0; j < i; ++j) A(i, j) = rnorm(rng, 0.0, 1.0);
  }
  return A;
}

}  // namespace

Obs EmissionModel::sample_predictive(const SuffStats&, const Obs*, Rng&) const {
  throw std::logic_error(family() + ": posterior-predictive sampling not implemented");
}

void EmissionModel::resample_hyper(const std::vector<const EmissionParams*>&, Rng&) {}

// --- Multinomial -------------------------------------------------------------

std::unique_ptr<SuffStats> MultinomialStats::clone() const {
  return std::make_unique<MultinomialStats>(*this);
}
std::unique_ptr<EmissionParams> MultinomialParams::clone() const {
  return std::make_unique<MultinomialParams>(*this);
}

MultinomialEmission::MultinomialEmission(std::vector<double> dirichlet_prior)
    : prior_(std::move(dirichlet_prior)) {
  require(!prior_.empty(), "multinomial: empty prior");
  prior_total_ = 0.0;
  for (double a : prior_) {
    require(a > 0.0, "multinomial: nonpositive Dirichlet pseudo-count");
    prior_total_ += a;
  }
}

MultinomialEmission::MultinomialEmission(int symbols, double pseudo_count)
    : MultinomialEmission(std::vector<double>(symbols, pseudo_count)) {}

std::unique_ptr<EmissionModel> MultinomialEmission::clone() const {
  return std::make_unique<MultinomialEmission>(*this);
}

std::unique_ptr<SuffStats> MultinomialEmission::make_stats() const {
  auto s = std::make_unique<MultinomialStats>();
  s->counts.assign(prior_.size(), 0);
  return s;
}

static int symbol_of(const Obs& y, std::size_t n_symbols) {
  require(y.size() == 1, "multinomial: observation must be a single symbol");
  int s = static_cast<int>(y[0]);
  require(s >= 0 && static_cast<std::size_t>(s) < n_symbols, "multinomial: symbol out of range");
  return s;
}

void MultinomialEmission::add(SuffStats& st, const Obs& y, const Obs*) const {
  auto& s = static_cast<MultinomialStats&>(st);
  ++s.counts[symbol_of(y, prior_.size())];
  ++s.total;
}

void MultinomialEmission::remove(SuffStats& st, const Obs& y, const Obs*) const {
  auto& s = static_cast<MultinomialStats&>(st);
  int sym = symbol_of(y, prior_.size());
  require(s.counts[sym] > 0, "multinomial: removing unseen symbol");
  --s.counts[sym];
  --s.total;
}

double MultinomialEmission::predictive_loglik(const SuffStats& st, const Obs& y,
                                              const Obs*) const {
  const auto& s = static_cast<const MultinomialStats&>(st);
  int sym = symbol_of(y, prior_.size());
  return std::log((prior_[sym] + s.counts[sym]) / (prior_total_ + s.total));
}

std::unique_ptr<EmissionParams> MultinomialEmission::sample_params(const SuffStats& st,
                                                                  Rng& rng) const {
  const auto& s = static_cast<const MultinomialStats&>(st);
  std::vector<double> conc(prior_.size());
  for (std::size_t i = 0; i < conc.size(); ++i) conc[i] = prior_[i] + s.counts[i];
  auto p = std::make_unique<MultinomialParams>();
  p->p = rdirichlet(rng, conc);
  return p;
}

double MultinomialEmission::data_loglik(const EmissionParams& pp, const Obs& y, const Obs*) const {
  const auto& p = static_cast<const MultinomialParams&>(pp);
  return std::log(p.p[symbol_of(y, p.p.size())]);
}

Obs MultinomialEmission::sample_data(const EmissionParams& pp, const Obs*, Rng& rng) const {
  const auto& p = static_cast<const MultinomialParams&>(pp);
  Obs y(1);
  y[0] = rcategorical(rng, p.p);
  return y;
}

Obs MultinomialEmission::sample_predictive(const SuffStats& st, const Obs*, Rng& rng) const {
  const auto& s = static_cast<const MultinomialStats&>(st);
  std::vector<double> w(prior_.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = prior_[i] + s.counts[i];
  Obs y(1);
  y[0] = rcategorical(rng, w);
  return y;
}

nlohmann::json MultinomialEmission::stats_to_json(const SuffStats& st) const {
  const auto& s = static_cast<const MultinomialStats&>(st);
  return {{"counts", s.counts}, {"total", s.total}};
}
std::unique_ptr<SuffStats> MultinomialEmission::stats_from_json(const nlohmann::json& j) const {
  auto s = std::make_unique<MultinomialStats>();
  s->counts = j.at("counts").get<std::vector<long long>>();
  s->total = j.at("total").get<long long>();
  return s;
}
nlohmann::json MultinomialEmission::params_to_json(const EmissionParams& pp) const {
  return {{"p", static_cast<const MultinomialParams&>(pp).p}};
}
std::unique_ptr<EmissionParams> MultinomialEmission::params_from_json(
    const nlohmann::json& j) const {
  auto p = std::make_unique<MultinomialParams>();
  p->p = j.at("p").get<std::vector<double>>();
  return p;
}

// --- Gaussian, known noise ----------------------------------------------------

std::unique_ptr<SuffStats> GaussianStats::clone() const {
  return std::make_unique<GaussianStats>(*this);
}
std::unique_ptr<EmissionParams> GaussianParams::clone() const {
  return std::make_unique<GaussianParams>(*this);
}

GaussianKnownVarEmission::GaussianKnownVarEmission(double prior_mean, double prior_var,
                                                  double noise_var)
    : prior_mean_(prior_mean), prior_var_(prior_var), noise_var_(noise_var) {
  require(prior_var > 0.0 && noise_var > 0.0, "gaussian: nonpositive variance");
}

std::unique_ptr<EmissionModel> GaussianKnownVarEmission::clone() const {
  return std::make_unique<GaussianKnownVarEmission>(*this);
}

std::unique_ptr<SuffStats> GaussianKnownVarEmission::make_stats() const {
  return std::make_unique<GaussianStats>();
}

void GaussianKnownVarEmission::add(SuffStats& st, const Obs& y, const Obs*) const {
  require(y.size() == 1, "gaussian: observation must be scalar");
  auto& s = static_cast<GaussianStats&>(st);
  ++s.n;
  s.sum += y[0];
}

void GaussianKnownVarEmission::remove(SuffStats& st, const Obs& y, const Obs*) const {
  auto& s = static_cast<GaussianStats&>(st);
  require(s.n > 0, "gaussian: removing from empty stats");
  --s.n;
  s.sum -= y[0];
}

std::pair<double, double> GaussianKnownVarEmission::posterior(const GaussianStats& s) const {
  double prec = 1.0 / prior_var_ + s.n / noise_var_;
  double var = 1.0 / prec;
  double mean = var * (prior_mean_ / prior_var_ + s.sum / noise_var_);
  return {mean, var};
}

double GaussianKnownVarEmission::predictive_loglik(const SuffStats& st, const Obs& y,
                                                   const Obs*) const {
  auto [mean, var] = posterior(static_cast<const GaussianStats&>(st));
  double v = var + noise_var_;
  double r = y[0] - mean;
  return -0.5 * (kLog2Pi + std::log(v) + r * r / v);
}

std::unique_ptr<EmissionParams> GaussianKnownVarEmission::sample_params(const SuffStats& st,
                                                                       Rng& rng) const {
  auto [mean, var] = posterior(static_cast<const GaussianStats&>(st));
  auto p = std::make_unique<GaussianParams>();
  p->mean = rnorm(rng, mean, std::sqrt(var));
  return p;
}

double GaussianKnownVarEmission::data_loglik(const EmissionParams& pp, const Obs& y,
                                             const Obs*) const {
  double r = y[0] - static_cast<const GaussianParams&>(pp).mean;
  return -0.5 * (kLog2Pi + std::log(noise_var_) + r * r / noise_var_);
}

Obs GaussianKnownVarEmission::sample_data(const EmissionParams& pp, const Obs*, Rng& rng) const {
  Obs y(1);
  y[0] = rnorm(rng, static_cast<const GaussianParams&>(pp).mean, std::sqrt(noise_var_));
  return y;
}

Obs GaussianKnownVarEmission::sample_predictive(const SuffStats& st, const Obs*, Rng& rng) const {
  auto [mean, var] = posterior(static_cast<const GaussianStats&>(st));
  Obs y(1);
  y[0] = rnorm(rng, mean, std::sqrt(var + noise_var_));
  return y;
}

nlohmann::json GaussianKnownVarEmission::stats_to_json(const SuffStats& st) const {
  const auto& s = static_cast<const GaussianStats&>(st);
  return {{"n", s.n}, {"sum", s.sum}};
}
std::unique_ptr<SuffStats> GaussianKnownVarEmission::stats_from_json(
    const nlohmann::json& j) const {
  auto s = std::make_unique<GaussianStats>();
  s->n = j.at("n").get<long long>();
  s->sum = j.at("sum").get<double>();
  return s;
}
nlohmann::json GaussianKnownVarEmission::params_to_json(const EmissionParams& pp) const {
  return {{"mean", static_cast<const GaussianParams&>(pp).mean}};
}
std::unique_ptr<EmissionParams> GaussianKnownVarEmission::params_from_json(
    const nlohmann::json& j) const {
  auto p = std::make_unique<GaussianParams>();
  p->mean = j.at("mean").get<double>();
  return p;
}

// --- Poisson vector ----------------------------------------------------------

std::unique_ptr<SuffStats> PoissonStats::clone() const {
  return std::make_unique<PoissonStats>(*this);
}
std::unique_ptr<EmissionParams> PoissonParams::clone() const {
  return std::make_unique<PoissonParams>(*this);
}

PoissonVectorEmission::PoissonVectorEmission(int dims, double shape, double rate,
                                             GammaPriorSpec hyper)
    : dims_(dims), a_(shape), b_(dims, rate), hyper_shape_(hyper.shape), hyper_rate_(hyper.rate) {
  require(dims > 0, "poisson: dims must be positive");
  require(shape > 0.0 && rate > 0.0, "poisson: nonpositive gamma prior parameter");
}

std::unique_ptr<EmissionModel> PoissonVectorEmission::clone() const {
  return std::make_unique<PoissonVectorEmission>(*this);
}

std::unique_ptr<SuffStats> PoissonVectorEmission::make_stats() const {
  auto s = std::make_unique<PoissonStats>();
  s->sums.assign(dims_, 0);
  return s;
}

void PoissonVectorEmission::add(SuffStats& st, const Obs& y, const Obs*) const {
  require(y.size() == dims_, "poisson: dimension mismatch");
  auto& s = static_cast<PoissonStats&>(st);
  ++s.n;
  for (int c = 0; c < dims_; ++c) {
    long long v = static_cast<long long>(y[c]);
    require(v >= 0, "poisson: negative count");
    s.sums[c] += v;
  }
}

void PoissonVectorEmission::remove(SuffStats& st, const Obs& y, const Obs*) const {
  auto& s = static_cast<PoissonStats&>(st);
  require(s.n > 0, "poisson: removing from empty stats");
  --s.n;
  for (int c = 0; c < dims_; ++c) s.sums[c] -= static_cast<long long>(y[c]);
}

double PoissonVectorEmission::predictive_loglik(const SuffStats& st, const Obs& y,
                                                const Obs*) const {
  require(y.size() == dims_, "poisson: dimension mismatch");
  const auto& s = static_cast<const PoissonStats&>(st);
  double ll = 0.0;
  for (int c = 0; c < dims_; ++c) {
    double ap = a_ + s.sums[c];
    double bp = b_[c] + s.n;
    double yc = y[c];
    ll += std::lgamma(ap + yc) - std::lgamma(ap) - std::lgamma(yc + 1.0);
    ll += ap * std::log(bp / (bp + 1.0)) - yc * std::log(bp + 1.0);
  }
  return ll;
}

std::unique_ptr<EmissionParams> PoissonVectorEmission::sample_params(const SuffStats& st,
                                                                    Rng& rng) const {
  const auto& s = static_cast<const PoissonStats&>(st);
  auto p = std::make_unique<PoissonParams>();
  p->rates.resize(dims_);
  for (int c = 0; c < dims_; ++c) p->rates[c] = rgamma(rng, a_ + s.sums[c], b_[c] + s.n);
  return p;
}

double PoissonVectorEmission::data_loglik(const EmissionParams& pp, const Obs& y,
                                          const Obs*) const {
  const auto& p = static_cast<const PoissonParams&>(pp);
  double ll = 0.0;
  for (int c = 0; c < dims_; ++c)
    ll += y[c] * std::log(p.rates[c]) - p.rates[c] - std::lgamma(y[c] + 1.0);
  return ll;
}

Obs PoissonVectorEmission::sample_data(const EmissionParams& pp, const Obs*, Rng& rng) const {
  const auto& p = static_cast<const PoissonParams&>(pp);
  Obs y(dims_);
  for (int c = 0; c < dims_; ++c) {
    std::poisson_distribution<long long> d(p.rates[c]);
    y[c] = static_cast<double>(d(rng));
  }
  return y;
}

void PoissonVectorEmission::resample_hyper(const std::vector<const EmissionParams*>& theta,
                                           Rng& rng) {
  if (theta.empty()) return;
  for (int c = 0; c < dims_; ++c) {
    double rate_sum = 0.0;
    for (const EmissionParams* pp : theta)
      rate_sum += static_cast<const PoissonParams*>(pp)->rates[c];
    b_[c] = rgamma(rng, hyper_shape_ + theta.size() * a_, hyper_rate_ + rate_sum);
  }
}

nlohmann::json PoissonVectorEmission::stats_to_json(const SuffStats& st) const {
  const auto& s = static_cast<const PoissonStats&>(st);
  return {{"n", s.n}, {"sums", s.sums}};
}
std::unique_ptr<SuffStats> PoissonVectorEmission::stats_from_json(const nlohmann::json& j) const {
  auto s = std::make_unique<PoissonStats>();
  s->n = j.at("n").get<long long>();
  s->sums = j.at("sums").get<std::vector<long long>>();
  return s;
}
nlohmann::json PoissonVectorEmission::params_to_json(const EmissionParams& pp) const {
  return {{"rates", static_cast<const PoissonParams&>(pp).rates}};
}
std::unique_ptr<EmissionParams> PoissonVectorEmission::params_from_json(
    const nlohmann::json& j) const {
  auto p = std::make_unique<PoissonParams>();
  p->rates = j.at("rates").get<std::vector<double>>();
  return p;
}
nlohmann::json PoissonVectorEmission::hyper_to_json() const { return {{"b", b_}}; }
void PoissonVectorEmission::hyper_from_json(const nlohmann::json& j) {
  b_ = j.at("b").get<std::vector<double>>();
  require(static_cast<int>(b_.size()) == dims_, "poisson: checkpoint dims mismatch");
}

// --- AR Gaussian -------------------------------------------------------------

std::unique_ptr<SuffStats> ARStats::clone() const { return std::make_unique<ARStats>(*this); }
std::unique_ptr<EmissionParams> ARParams::clone() const {
  return std::make_unique<ARParams>(*this);
}

ARGaussianEmission::ARGaussianEmission(Eigen::MatrixXd M, Eigen::MatrixXd V, double n0,
                                       Eigen::MatrixXd S0)
    : M_(std::move(M)), V_(std::move(V)), S0_(std::move(S0)), n0_(n0) {
  const int d = dims();
  require(V_.rows() == d && S0_.rows() == d, "ar: prior dimension mismatch");
  require(n0 > d + 1, "ar: n0 must exceed d+1");
  Eigen::LLT<Eigen::MatrixXd> llt_v(V_);
  require(llt_v.info() == Eigen::Success, "ar: V not positive-definite");
  Eigen::LLT<Eigen::MatrixXd> llt_s(S0_);
  require(llt_s.info() == Eigen::Success, "ar: S0 not positive-definite");
  Vinv_ = llt_v.solve(Eigen::MatrixXd::Identity(d, d));
  MVinv_ = M_ * Vinv_;
}

ARGaussianEmission ARGaussianEmission::with_defaults(const Eigen::MatrixXd& data_cov) {
  const int d = static_cast<int>(data_cov.rows());
  return ARGaussianEmission(Eigen::MatrixXd::Zero(d, d), Eigen::MatrixXd::Identity(d, d),
                            d + 2.0, 0.75 * data_cov);
}

std::unique_ptr<EmissionModel> ARGaussianEmission::clone() const {
  return std::make_unique<ARGaussianEmission>(*this);
}

std::unique_ptr<SuffStats> ARGaussianEmission::make_stats() const {
  auto s = std::make_unique<ARStats>();
  const int d = dims();
  s->syy = Eigen::MatrixXd::Zero(d, d);
  s->syx = Eigen::MatrixXd::Zero(d, d);
  s->sxx = Eigen::MatrixXd::Zero(d, d);
  return s;
}

void ARGaussianEmission::add(SuffStats& st, const Obs& y, const Obs* ctx) const {
  if (!ctx) return;  // first step of a block is not modeled
  require(y.size() == dims() && ctx->size() == dims(), "ar: dimension mismatch");
  auto& s = static_cast<ARStats&>(st);
  ++s.n;
  s.syy += y * y.transpose();
  s.syx += y * ctx->transpose();
  s.sxx += *ctx * ctx->transpose();
}

void ARGaussianEmission::remove(SuffStats& st, const Obs& y, const Obs* ctx) const {
  if (!ctx) return;
  auto& s = static_cast<ARStats&>(st);
  require(s.n > 0, "ar: removing from empty stats");
  --s.n;
  s.syy -= y * y.transpose();
  s.syx -= y * ctx->transpose();
  s.sxx -= *ctx * ctx->transpose();
}

ARGaussianEmission::Posterior ARGaussianEmission::posterior(const ARStats& s) const {
  const int d = dims();
  Eigen::MatrixXd vn_inv = Vinv_ + s.sxx;
  Eigen::LLT<Eigen::MatrixXd> llt(vn_inv);
  if (llt.info() != Eigen::Success) throw std::runtime_error("ar: degenerate posterior V");
  Eigen::MatrixXd vn = llt.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::MatrixXd mn = (MVinv_ + s.syx) * vn;
  Eigen::MatrixXd sn =
      S0_ + s.syy + MVinv_ * M_.transpose() - mn * vn_inv * mn.transpose();
  sn = 0.5 * (sn + sn.transpose());  // symmetrize
  return {std::move(mn), std::move(vn), std::move(sn), n0_ + s.n};
}

double ARGaussianEmission::predictive_loglik(const SuffStats& st, const Obs& y,
                                             const Obs* ctx) const {
  if (!ctx) return 0.0;
  const int d = dims();
  Posterior post = posterior(static_cast<const ARStats&>(st));
  double nu = post.n0 - d + 1.0;
  Eigen::VectorXd mu = post.M * (*ctx);
  double scale = (1.0 + ctx->dot(post.V * (*ctx))) / nu;
  Eigen::MatrixXd shape = post.S * scale;
  Eigen::LLT<Eigen::MatrixXd> llt(shape);
  if (llt.info() != Eigen::Success) throw std::runtime_error("ar: degenerate predictive scale");
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  Eigen::VectorXd r = y - mu;
  double maha = r.dot(llt.solve(r));
  return std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) -
         0.5 * d * std::log(nu * std::numbers::pi) - 0.5 * logdet -
         0.5 * (nu + d) * std::log1p(maha / nu);
}

std::unique_ptr<EmissionParams> ARGaussianEmission::sample_params(const SuffStats& st,
                                                                 Rng& rng) const {
  const int d = dims();
  Posterior post = posterior(static_cast<const ARStats&>(st));

  // Sigma ~ IW(S, n0): invert a Wishart(S^-1, n0) draw via Bartlett
  Eigen::LLT<Eigen::MatrixXd> llt_s(post.S);
  if (llt_s.info() != Eigen::Success)
    throw std::runtime_error("ar: posterior scale not positive-definite");
  Eigen::MatrixXd L = llt_s.matrixL();
  Eigen::MatrixXd A = bartlett(d, post.n0, rng);
  // W = (L^-T A) (L^-T A)^T is Wishart(S^-1, n0); Sigma = W^-1
  Eigen::MatrixXd ltA = L.transpose().triangularView<Eigen::Upper>().solve(A);
  Eigen::MatrixXd W = ltA * ltA.transpose();
  Eigen::LLT<Eigen::MatrixXd> llt_w(W);
  Eigen::MatrixXd sigma = llt_w.solve(Eigen::MatrixXd::Identity(d, d));
  sigma = 0.5 * (sigma + sigma.transpose());

  // A | Sigma ~ MN(M, Sigma, V)
  Eigen::LLT<Eigen::MatrixXd> llt_sig(sigma);
  Eigen::LLT<Eigen::MatrixXd> llt_v(post.V);
  Eigen::MatrixXd G(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) G(i, j) = rnorm(rng, 0.0, 1.0);
  auto p = std::make_unique<ARParams>();
  p->Sigma = sigma;
  p->A = post.M + Eigen::MatrixXd(llt_sig.matrixL()) * G *
                      Eigen::MatrixXd(llt_v.matrixL()).transpose();
  return p;
}

double ARGaussianEmission::data_loglik(const EmissionParams& pp, const Obs& y,
                                       const Obs* ctx) const {
  if (!ctx) return 0.0;
  const auto& p = static_cast<const ARParams&>(pp);
  const int d = dims();
  Eigen::LLT<Eigen::MatrixXd> llt(p.Sigma);
  if (llt.info() != Eigen::Success) throw std::runtime_error("ar: singular Sigma");
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  Eigen::VectorXd r = y - p.A * (*ctx);
  return -0.5 * (d * kLog2Pi + logdet + r.dot(llt.solve(r)));
}

Obs ARGaussianEmission::sample_data(const EmissionParams& pp, const Obs* ctx, Rng& rng) const {
  const auto& p = static_cast<const ARParams&>(pp);
  const int d = dims();
  Eigen::VectorXd eps(d);
  for (int i = 0; i < d; ++i) eps[i] = rnorm(rng, 0.0, 1.0);
  Eigen::LLT<Eigen::MatrixXd> llt(p.Sigma);
  Eigen::VectorXd mean = ctx ? Eigen::VectorXd(p.A * (*ctx)) : Eigen::VectorXd::Zero(d);
  return mean + Eigen::MatrixXd(llt.matrixL()) * eps;
}

nlohmann::json ARGaussianEmission::stats_to_json(const SuffStats& st) const {
  const auto& s = static_cast<const ARStats&>(st);
  return {{"n", s.n},
          {"syy", mat_to_json(s.syy)},
          {"syx", mat_to_json(s.syx)},
          {"sxx", mat_to_json(s.sxx)}};
}
std::unique_ptr<SuffStats> ARGaussianEmission::stats_from_json(const nlohmann::json& j) const {
  auto s = std::make_unique<ARStats>();
  s->n = j.at("n").get<long long>();
  s->syy = json_to_mat(j.at("syy"));
  s->syx = json_to_mat(j.at("syx"));
  s->sxx = json_to_mat(j.at("sxx"));
  return s;
}
nlohmann::json ARGaussianEmission::params_to_json(const EmissionParams& pp) const {
  const auto& p = static_cast<const ARParams&>(pp);
  return {{"A", mat_to_json(p.A)}, {"Sigma", mat_to_json(p.Sigma)}};
}
std::unique_ptr<EmissionParams> ARGaussianEmission::params_from_json(
    const nlohmann::json& j) const {
  auto p = std::make_unique<ARParams>();
  p->A = json_to_mat(j.at("A"));
  p->Sigma = json_to_mat(j.at("Sigma"));
  return p;
}

}  // namespace dshmm
