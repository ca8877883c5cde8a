#include "dshmm/io_cli.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace dshmm {

namespace fs = std::filesystem;

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// --- configuration -----------------------------------------------------------

void RunConfig::validate() const {
  require(sampler == "direct" || sampler == "weaklimit", "config: unknown sampler");
  require(sampler != "weaklimit" || L >= 1, "config: weaklimit needs L >= 1");
  require(sampler != "direct" || L == 0, "config: direct sampler takes no L");
  require(burn_in < iterations, "config: burn_in must be < iterations");
  require(thin >= 1, "config: thin must be >= 1");
  require(chains >= 1, "config: need at least one chain");
  require(grids.rho.phi_cells >= 2 && grids.rho.eta_cells >= 2, "config: rho grid too small");
  require(grids.sticky.c_cells >= 2 && grids.sticky.phi_cells >= 2,
          "config: sticky grid too small");
  require(!train_path.empty(), "config: train path required");
  require(!output_dir.empty(), "config: output dir required");
  const std::string& f = emission.family;
  require(f == "multinomial" || f == "gaussian" || f == "poisson" || f == "ar_gaussian",
          "config: unknown emission family");
}

static json gamma_prior_to_json(const GammaPrior& g) {
  return json{{"shape", g.shape}, {"rate", g.rate}};
}
static GammaPrior gamma_prior_from_json(const json& j, GammaPrior def) {
  if (j.is_null()) return def;
  return {j.value("shape", def.shape), j.value("rate", def.rate)};
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  c.variant = variant_from_name(j.value("variant", "ds"));
  c.sampler = j.value("sampler", c.sampler);
  c.L = j.value("L", c.L);

  if (j.contains("emission")) {
    const json& e = j["emission"];
    EmissionConfig& ec = c.emission;
    ec.family = e.value("family", ec.family);
    ec.symbols = e.value("symbols", ec.symbols);
    ec.pseudo_count = e.value("pseudo_count", ec.pseudo_count);
    ec.prior_mean = e.value("prior_mean", ec.prior_mean);
    ec.prior_var = e.value("prior_var", ec.prior_var);
    ec.noise_var = e.value("noise_var", ec.noise_var);
    ec.dims = e.value("dims", ec.dims);
    ec.shape = e.value("shape", ec.shape);
    ec.rate = e.value("rate", ec.rate);
    ec.hyper_shape = e.value("hyper_shape", ec.hyper_shape);
    ec.hyper_rate = e.value("hyper_rate", ec.hyper_rate);
    ec.cov_scale = e.value("cov_scale", ec.cov_scale);
  }

  c.iterations = j.value("iterations", c.iterations);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.thin = j.value("thin", c.thin);
  c.chains = j.value("chains", c.chains);
  c.base_seed = j.value("base_seed", c.base_seed);

  c.init_hyper.alpha = j.value("init_alpha", c.init_hyper.alpha);
  c.init_hyper.gamma = j.value("init_gamma", c.init_hyper.gamma);
  c.init_hyper.rho1 = j.value("init_rho1", c.init_hyper.rho1);
  c.init_hyper.rho2 = j.value("init_rho2", c.init_hyper.rho2);
  c.init_hyper.variant = c.variant;
  if (c.variant == Variant::HDP) c.init_hyper.rho1 = 0.0;
  if (c.variant == Variant::Sticky) c.init_hyper.rho2 = c.init_hyper.alpha;

  c.priors.alpha = gamma_prior_from_json(j.value("alpha_prior", json()), c.priors.alpha);
  c.priors.gamma = gamma_prior_from_json(j.value("gamma_prior", json()), c.priors.gamma);
  if (j.contains("grid")) {
    const json& g = j["grid"];
    c.grids.rho.phi_cells = g.value("phi_cells", c.grids.rho.phi_cells);
    c.grids.rho.eta_cells = g.value("eta_cells", c.grids.rho.eta_cells);
    c.grids.rho.phi_max = g.value("phi_max", c.grids.rho.phi_max);
    c.grids.rho.eta_max = g.value("eta_max", c.grids.rho.eta_max);
    c.grids.sticky.c_cells = g.value("c_cells", c.grids.sticky.c_cells);
    c.grids.sticky.phi_cells = g.value("sticky_phi_cells", c.grids.sticky.phi_cells);
    c.grids.sticky.c_max = g.value("c_max", c.grids.sticky.c_max);
  }
  c.resample_hyper = j.value("resample_hyper", c.resample_hyper);

  c.train_path = j.value("train", c.train_path);
  c.test_path = j.value("test", c.test_path);
  c.labels_path = j.value("labels", c.labels_path);
  c.init_labels_path = j.value("init_labels", c.init_labels_path);
  c.output_dir = j.value("output", c.output_dir);
  c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
  c.resume_path = j.value("resume", c.resume_path);
  return c;
}

json config_to_json(const RunConfig& c) {
  json e{{"family", c.emission.family},
         {"symbols", c.emission.symbols},
         {"pseudo_count", c.emission.pseudo_count},
         {"prior_mean", c.emission.prior_mean},
         {"prior_var", c.emission.prior_var},
         {"noise_var", c.emission.noise_var},
         {"dims", c.emission.dims},
         {"shape", c.emission.shape},
         {"rate", c.emission.rate},
         {"hyper_shape", c.emission.hyper_shape},
         {"hyper_rate", c.emission.hyper_rate},
         {"cov_scale", c.emission.cov_scale}};
  return json{{"variant", variant_name(c.variant)},
              {"sampler", c.sampler},
              {"L", c.L},
              {"emission", e},
              {"iterations", c.iterations},
              {"burn_in", c.burn_in},
              {"thin", c.thin},
              {"chains", c.chains},
              {"base_seed", c.base_seed},
              {"init_alpha", c.init_hyper.alpha},
              {"init_gamma", c.init_hyper.gamma},
              {"init_rho1", c.init_hyper.rho1},
              {"init_rho2", c.init_hyper.rho2},
              {"alpha_prior", gamma_prior_to_json(c.priors.alpha)},
              {"gamma_prior", gamma_prior_to_json(c.priors.gamma)},
              {"grid",
               json{{"phi_cells", c.grids.rho.phi_cells},
                    {"eta_cells", c.grids.rho.eta_cells},
                    {"phi_max", c.grids.rho.phi_max},
                    {"eta_max", c.grids.rho.eta_max},
                    {"c_cells", c.grids.sticky.c_cells},
                    {"sticky_phi_cells", c.grids.sticky.phi_cells},
                    {"c_max", c.grids.sticky.c_max}}},
              {"resample_hyper", c.resample_hyper},
              {"train", c.train_path},
              {"test", c.test_path},
              {"labels", c.labels_path},
              {"init_labels", c.init_labels_path},
              {"output", c.output_dir},
              {"checkpoint_every", c.checkpoint_every}};
}

// --- ingestion ---------------------------------------------------------------

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t lineno, const std::string& msg) {
  throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + msg);
}

double parse_num(const std::string& s, const std::string& path, std::size_t lineno) {
  double v;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    parse_fail(path, lineno, "non-numeric field '" + s + "'");
  return v;
}

long long parse_int(const std::string& s, const std::string& path, std::size_t lineno) {
  long long v;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    parse_fail(path, lineno, "non-integer field '" + s + "'");
  return v;
}

}  // namespace

Dataset ingest_csv(const std::string& path, const std::string& family) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  std::vector<std::string> header = split_csv(line);

  std::size_t col0 = 0;
  bool has_seq = !header.empty() && header[0] == "seq";
  if (has_seq) col0 = 1;
  require(header.size() > col0, path + ": no data columns");

  enum class Kind { Symbol, Real, Count } kind;
  if (header[col0] == "y" && header.size() == col0 + 1) {
    kind = Kind::Symbol;
  } else if (header[col0] == "y1") {
    kind = Kind::Real;
  } else if (header[col0] == "count1") {
    kind = Kind::Count;
  } else {
    throw std::runtime_error(path + ":1: unrecognized columns (want y, y1..yd or count1..countC)");
  }
  const std::size_t dims = header.size() - col0;
  if (kind != Kind::Symbol) {
    for (std::size_t d = 0; d < dims; ++d) {
      std::string want = (kind == Kind::Real ? "y" : "count") + std::to_string(d + 1);
      if (header[col0 + d] != want)
        throw std::runtime_error(path + ":1: expected column '" + want + "'");
    }
  }
  if (family == "multinomial") require(kind == Kind::Symbol, path + ": multinomial wants a y column");
  if (family == "poisson") require(kind == Kind::Count, path + ": poisson wants count columns");
  if (family == "gaussian" || family == "ar_gaussian")
    require(kind == Kind::Real, path + ": real-valued family wants y1..yd columns");

  Dataset data;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size())
      parse_fail(path, lineno, "ragged row: expected " + std::to_string(header.size()) +
                                   " fields, got " + std::to_string(cells.size()));
    int block = 0;
    if (has_seq) block = static_cast<int>(parse_int(cells[0], path, lineno));
    Obs y(dims);
    for (std::size_t d = 0; d < dims; ++d) {
      const std::string& cell = cells[col0 + d];
      if (kind == Kind::Real) {
        y(d) = parse_num(cell, path, lineno);
      } else {
        long long v = parse_int(cell, path, lineno);
        if (kind == Kind::Count && v < 0) parse_fail(path, lineno, "negative count");
        if (kind == Kind::Symbol && v < 0) parse_fail(path, lineno, "negative symbol");
        y(d) = static_cast<double>(v);
      }
    }
    data.y.push_back(std::move(y));
    data.block.push_back(block);
  }
  require(!data.y.empty(), path + ": no data rows");
  return data;
}

ColumnMoments compute_moments(const Dataset& data) {
  require(!data.y.empty(), "compute_moments: empty dataset");
  const std::size_t d = data.y[0].size();
  ColumnMoments m;
  m.mean.assign(d, 0.0);
  m.sd.assign(d, 0.0);
  for (const Obs& y : data.y)
    for (std::size_t c = 0; c < d; ++c) m.mean[c] += y(c);
  for (std::size_t c = 0; c < d; ++c) m.mean[c] /= data.y.size();
  for (const Obs& y : data.y)
    for (std::size_t c = 0; c < d; ++c) m.sd[c] += (y(c) - m.mean[c]) * (y(c) - m.mean[c]);
  for (std::size_t c = 0; c < d; ++c) {
    m.sd[c] = std::sqrt(m.sd[c] / data.y.size());
    if (m.sd[c] <= 0.0) m.sd[c] = 1.0;  // constant column: leave it centered only
  }
  return m;
}

void standardize(Dataset& data, const ColumnMoments& m) {
  for (Obs& y : data.y) {
    require(static_cast<std::size_t>(y.size()) == m.mean.size(), "standardize: dimension mismatch");
    for (std::size_t c = 0; c < m.mean.size(); ++c) y(c) = (y(c) - m.mean[c]) / m.sd[c];
  }
}

std::vector<int> ingest_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  std::vector<std::string> header = split_csv(line);
  std::size_t col = header.size() - 1;  // label is the last column
  std::vector<int> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv(line);
    if (cells.size() != header.size()) parse_fail(path, lineno, "ragged row");
    out.push_back(static_cast<int>(parse_int(cells[col], path, lineno)));
  }
  return out;
}

std::unique_ptr<EmissionModel> make_emission(const EmissionConfig& cfg, const Dataset* train) {
  if (cfg.family == "multinomial") {
    int symbols = cfg.symbols;
    if (symbols == 0) {
      require(train, "multinomial: symbol count unspecified and no data to infer it from");
      for (const Obs& y : train->y) symbols = std::max(symbols, static_cast<int>(y(0)) + 1);
    }
    return std::make_unique<MultinomialEmission>(symbols, cfg.pseudo_count);
  }
  if (cfg.family == "gaussian")
    return std::make_unique<GaussianKnownVarEmission>(cfg.prior_mean, cfg.prior_var, cfg.noise_var);
  if (cfg.family == "poisson") {
    int dims = cfg.dims;
    if (dims == 0) {
      require(train, "poisson: dims unspecified and no data to infer from");
      dims = static_cast<int>(train->y[0].size());
    }
    return std::make_unique<PoissonVectorEmission>(
        dims, cfg.shape, cfg.rate,
        PoissonVectorEmission::GammaPriorSpec{cfg.hyper_shape, cfg.hyper_rate});
  }
  if (cfg.family == "ar_gaussian") {
    require(train, "ar_gaussian: prior needs the training data covariance");
    const int d = static_cast<int>(train->y[0].size());
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const Obs& y : train->y) mean += y;
    mean /= static_cast<double>(train->y.size());
    for (const Obs& y : train->y) cov += (y - mean) * (y - mean).transpose();
    cov /= static_cast<double>(train->y.size());
    return std::make_unique<ARGaussianEmission>(Eigen::MatrixXd::Zero(d, d),
                                               Eigen::MatrixXd::Identity(d, d), d + 2,
                                               cfg.cov_scale * cov * (d + 2 + d + 1));
  }
  throw std::invalid_argument("unknown emission family " + cfg.family);
}

// --- checkpointing -----------------------------------------------------------

namespace {

json imat_to_json(const IMat& m) { return json{{"rows", m.rows}, {"cols", m.cols}, {"v", m.v}}; }
IMat imat_from_json(const json& j) {
  IMat m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.v = j.at("v").get<std::vector<long long>>();
  require(m.v.size() == m.rows * m.cols, "checkpoint: matrix size mismatch");
  return m;
}

json dmat_to_json(const DMat& m) { return json{{"rows", m.rows}, {"cols", m.cols}, {"v", m.v}}; }
DMat dmat_from_json(const json& j) {
  DMat m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.v = j.at("v").get<std::vector<double>>();
  require(m.v.size() == m.rows * m.cols, "checkpoint: matrix size mismatch");
  return m;
}

std::string rng_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_string(const std::string& s) {
  Rng rng;
  std::istringstream is(s);
  is >> rng;
  if (!is) throw std::runtime_error("checkpoint: corrupt rng state");
  return rng;
}

json hyper_to_json(const HyperParams& h) {
  return json{{"alpha", h.alpha},
              {"gamma", h.gamma},
              {"rho1", h.rho1},
              {"rho2", h.rho2},
              {"variant", variant_name(h.variant)}};
}

HyperParams hyper_from_json(const json& j) {
  HyperParams h;
  h.alpha = j.at("alpha");
  h.gamma = j.at("gamma");
  h.rho1 = j.at("rho1");
  h.rho2 = j.at("rho2");
  h.variant = variant_from_name(j.at("variant"));
  return h;
}

}  // namespace

json checkpoint_direct(const DirectChainState& s) {
  json stats = json::array();
  for (const auto& st : s.stats) stats.push_back(s.emis->stats_to_json(*st));
  return json{{"kind", "direct"},
              {"z", s.z},
              {"w", std::vector<int>(s.w.begin(), s.w.end())},
              {"K", s.K},
              {"beta", s.beta.weights},
              {"beta_rem", s.beta.remainder},
              {"kappa", s.kappa},
              {"hyper", hyper_to_json(s.hyper)},
              {"n", imat_to_json(s.n)},
              {"stats", stats},
              {"emis_hyper", s.emis->hyper_to_json()},
              {"rng", rng_to_string(s.rng)}};
}

DirectChainState restore_direct(const json& j, const Dataset& data, const EmissionModel& emis) {
  require(j.at("kind") == "direct", "checkpoint: sampler kind mismatch");
  DirectChainState s;
  s.data = &data;
  s.emis = emis.clone();
  s.emis->hyper_from_json(j.at("emis_hyper"));
  s.z = j.at("z").get<std::vector<int>>();
  auto w = j.at("w").get<std::vector<int>>();
  s.w.assign(w.begin(), w.end());
  s.K = j.at("K");
  s.beta.weights = j.at("beta").get<std::vector<double>>();
  s.beta.remainder = j.at("beta_rem");
  s.kappa = j.at("kappa").get<std::vector<double>>();
  s.hyper = hyper_from_json(j.at("hyper"));
  s.n = imat_from_json(j.at("n"));
  s.sticks.assign(s.K, 0);
  s.switches.assign(s.K, 0);
  for (std::size_t t = 0; t < data.size(); ++t)
    if (data.has_prev(t)) ++(s.w[t] ? s.sticks : s.switches)[s.z[t - 1]];
  for (const json& st : j.at("stats")) s.stats.push_back(s.emis->stats_from_json(st));
  s.rng = rng_from_string(j.at("rng"));
  validate_direct(s);
  return s;
}

json checkpoint_weak_limit(const WeakLimitChainState& s) {
  json theta = json::array();
  for (const auto& p : s.theta) theta.push_back(s.emis->params_to_json(*p));
  return json{{"kind", "weaklimit"},
              {"L", s.L},
              {"z", s.z},
              {"w", std::vector<int>(s.w.begin(), s.w.end())},
              {"beta", s.beta},
              {"pibar", dmat_to_json(s.pibar)},
              {"kappa", s.kappa},
              {"theta", theta},
              {"hyper", hyper_to_json(s.hyper)},
              {"n", imat_to_json(s.n)},
              {"loglik", s.last_marginal_loglik},
              {"emis_hyper", s.emis->hyper_to_json()},
              {"rng", rng_to_string(s.rng)}};
}

WeakLimitChainState restore_weak_limit(const json& j, const Dataset& data,
                                       const EmissionModel& emis) {
  require(j.at("kind") == "weaklimit", "checkpoint: sampler kind mismatch");
  WeakLimitChainState s;
  s.data = &data;
  s.emis = emis.clone();
  s.emis->hyper_from_json(j.at("emis_hyper"));
  s.L = j.at("L");
  s.z = j.at("z").get<std::vector<int>>();
  auto w = j.at("w").get<std::vector<int>>();
  s.w.assign(w.begin(), w.end());
  s.beta = j.at("beta").get<std::vector<double>>();
  s.pibar = dmat_from_json(j.at("pibar"));
  s.kappa = j.at("kappa").get<std::vector<double>>();
  for (const json& p : j.at("theta")) s.theta.push_back(s.emis->params_from_json(p));
  s.hyper = hyper_from_json(j.at("hyper"));
  s.n = imat_from_json(j.at("n"));
  s.last_marginal_loglik = j.at("loglik");
  s.rng = rng_from_string(j.at("rng"));
  validate_weak_limit(s);
  return s;
}

json snapshot_to_json(const HmmSnapshot& s, const EmissionModel& emis) {
  json theta = json::array();
  for (const auto& p : s.theta) theta.push_back(emis.params_to_json(*p));
  return json{{"pi", dmat_to_json(s.pi)}, {"initial", s.initial}, {"theta", theta}};
}

HmmSnapshot snapshot_from_json(const json& j, const EmissionModel& emis) {
  HmmSnapshot s;
  s.pi = dmat_from_json(j.at("pi"));
  s.initial = j.at("initial").get<std::vector<double>>();
  for (const json& p : j.at("theta")) s.theta.push_back(emis.params_from_json(p));
  return s;
}

void save_run_checkpoint(const std::string& path, const RunConfig& cfg,
                         const std::vector<json>& chain_states, int completed_iterations) {
  json j{{"version", kCheckpointVersion},
         {"config", config_to_json(cfg)},
         {"completed_iterations", completed_iterations},
         {"chains", chain_states}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

json load_run_checkpoint(const std::string& path, const RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": corrupt checkpoint: " + e.what());
  }
  require(j.value("version", -1) == kCheckpointVersion, "checkpoint: version mismatch");
  const json& c = j.at("config");
  // the resumed run must be a continuation of the same experiment
  require(c.at("variant") == variant_name(cfg.variant), "checkpoint: variant mismatch");
  require(c.at("sampler") == cfg.sampler, "checkpoint: sampler mismatch");
  require(c.at("L") == cfg.L, "checkpoint: L mismatch");
  require(c.at("emission").at("family") == cfg.emission.family,
          "checkpoint: emission family mismatch");
  require(c.at("chains") == cfg.chains, "checkpoint: chain count mismatch");
  require(c.at("base_seed") == cfg.base_seed, "checkpoint: seed mismatch");
  require(c.at("thin") == cfg.thin && c.at("burn_in") == cfg.burn_in,
          "checkpoint: schedule mismatch");
  require(j.at("completed_iterations").get<int>() <= cfg.iterations,
          "checkpoint: already past the requested iteration count");
  return j;
}

// --- orchestration -----------------------------------------------------------

namespace {

int worker_count() {
  const char* env = std::getenv("DSHMM_WORKERS");
  if (!env) return 1;
  int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

// posterior draw of the effective HMM from a collapsed chain. The occupied
// states are augmented with a few prospective states carved out of the
// stick-breaking remainder (prior kappa / theta, transition mass alpha*beta),
// so the materialized HMM keeps the nonparametric model's ability to explain
// held-out data through states the training data never visited.
HmmSnapshot materialize_direct(DirectChainState& s) {
  HmmSnapshot snap;
  const int K = s.K;
  const int aux = 64;
  const int M = K + aux;

  std::vector<double> beta(s.beta.weights.begin(), s.beta.weights.begin() + K);
  double rem = s.beta.remainder;
  for (int a = 0; a < aux; ++a) {
    double b = (a + 1 < aux) ? rbeta(s.rng, 1.0, s.hyper.gamma) : 1.0;
    // deep tail sticks underflow to exactly 0, which would make the Dirichlet
    // concentration below degenerate; the true weight is positive a.s.
    beta.push_back(std::max(rem * b, std::numeric_limits<double>::min()));
    rem *= 1.0 - b;
  }
  snap.initial = beta;

  std::vector<double> kappa(s.kappa.begin(), s.kappa.begin() + K);
  for (int a = 0; a < aux; ++a)
    kappa.push_back(s.hyper.rho1 > 0.0 ? rbeta(s.rng, s.hyper.rho1, s.hyper.rho2) : 0.0);

  snap.pi = DMat(M, M);
  std::vector<double> conc(M);
  for (int j = 0; j < M; ++j) {
    for (int k = 0; k < M; ++k) {
      conc[k] = s.hyper.alpha * beta[k];
      if (j < K && k < K) conc[k] += static_cast<double>(s.n(j, k));
    }
    std::vector<double> row = rdirichlet(s.rng, conc);
    for (int k = 0; k < M; ++k) snap.pi(j, k) = (1.0 - kappa[j]) * row[k];
    snap.pi(j, j) += kappa[j];
  }
  for (int k = 0; k < K; ++k) snap.theta.push_back(s.emis->sample_params(*s.stats[k], s.rng));
  for (int a = 0; a < aux; ++a)
    snap.theta.push_back(s.emis->sample_params(*s.emis->make_stats(), s.rng));
  return snap;
}

HmmSnapshot materialize_weak_limit(const WeakLimitChainState& s) {
  HmmSnapshot snap;
  snap.initial = s.beta;
  snap.pi = DMat(s.L, s.L);
  for (int j = 0; j < s.L; ++j) {
    for (int k = 0; k < s.L; ++k) snap.pi(j, k) = (1.0 - s.kappa[j]) * s.pibar(j, k);
    snap.pi(j, j) += s.kappa[j];
  }
  for (const auto& p : s.theta) snap.theta.push_back(p->clone());
  return snap;
}

int occupied_states(const std::vector<int>& z, int L) {
  std::vector<char> seen(L, 0);
  int n = 0;
  for (int s : z)
    if (!seen[s]) {
      seen[s] = 1;
      ++n;
    }
  return n;
}

struct ChainTask {
  const RunConfig* cfg;
  const Dataset* train;
  const EmissionModel* emis;
  const std::vector<int>* init_labels;
  const json* resume_state;  // nullptr: fresh start
  int start_iteration = 0;
};

ChainOutput run_chain(const ChainTask& task, int chain_id) {
  const RunConfig& cfg = *task.cfg;
  ChainOutput out;
  SamplerOptions opts;
  opts.resample_hyper = cfg.resample_hyper;
  opts.priors = cfg.priors;
  opts.grids = cfg.grids;
  const std::uint64_t seed = cfg.base_seed + static_cast<std::uint64_t>(chain_id);

  auto record_iter = [&](int iter, int states, const HyperParams& h, double ll, double ms) {
    SampleRecord r;
    r.chain = chain_id;
    r.iteration = iter;
    r.states = states;
    r.alpha = h.alpha;
    r.gamma = h.gamma;
    r.rho1 = h.rho1;
    r.rho2 = h.rho2;
    r.loglik = ll;
    r.wall_ms = ms;
    out.records.push_back(r);
  };
  auto want_snapshot = [&](int iter) {
    return iter > cfg.burn_in && (iter - cfg.burn_in) % cfg.thin == 0;
  };

  using clock = std::chrono::steady_clock;
  if (cfg.sampler == "direct") {
    DirectChainState state =
        task.resume_state ? restore_direct(*task.resume_state, *task.train, *task.emis)
                          : init_direct_chain(*task.train, *task.emis, cfg.init_hyper, seed);
    for (int iter = task.start_iteration + 1; iter <= cfg.iterations; ++iter) {
      auto t0 = clock::now();
      direct_sweep(state, opts);
      double ll = direct_obs_loglik(state);
      double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      if (std::isnan(ll) || std::isnan(state.hyper.alpha)) {
        record_iter(iter, state.K, state.hyper, ll, ms);
        throw std::runtime_error("chain " + std::to_string(chain_id) +
                                 ": NaN detected at iteration " + std::to_string(iter));
      }
      record_iter(iter, state.K, state.hyper, ll, ms);
      if (want_snapshot(iter)) {
        out.snapshots.push_back(materialize_direct(state));
        out.snapshot_iters.push_back(iter);
        out.snapshot_z.push_back(state.z);
      }
    }
    out.final_state = checkpoint_direct(state);
  } else {
    WeakLimitChainState state =
        task.resume_state
            ? restore_weak_limit(*task.resume_state, *task.train, *task.emis)
            : init_weak_limit_chain(*task.train, *task.emis, cfg.init_hyper, cfg.L, seed,
                                    task.init_labels);
    for (int iter = task.start_iteration + 1; iter <= cfg.iterations; ++iter) {
      auto t0 = clock::now();
      weak_limit_sweep(state, opts);
      double ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
      double ll = state.last_marginal_loglik;
      int occ = occupied_states(state.z, state.L);
      if (std::isnan(ll) || std::isnan(state.hyper.alpha)) {
        record_iter(iter, occ, state.hyper, ll, ms);
        throw std::runtime_error("chain " + std::to_string(chain_id) +
                                 ": NaN detected at iteration " + std::to_string(iter));
      }
      record_iter(iter, occ, state.hyper, ll, ms);
      if (want_snapshot(iter)) {
        out.snapshots.push_back(materialize_weak_limit(state));
        out.snapshot_iters.push_back(iter);
        out.snapshot_z.push_back(state.z);
      }
    }
    out.final_state = checkpoint_weak_limit(state);
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RunResult run(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  cfg.init_hyper.variant = cfg.variant;
  if (cfg.variant == Variant::HDP) cfg.init_hyper.rho1 = 0.0;
  if (cfg.variant == Variant::Sticky) cfg.init_hyper.rho2 = cfg.init_hyper.alpha;
  cfg.validate();
  fs::create_directories(cfg.output_dir);

  Dataset train = ingest_csv(cfg.train_path, cfg.emission.family);
  ColumnMoments moments;
  const bool standardized = cfg.emission.family == "ar_gaussian";
  if (standardized) {
    moments = compute_moments(train);
    standardize(train, moments);
    json mj{{"mean", moments.mean}, {"sd", moments.sd}};
    std::ofstream mout(fs::path(cfg.output_dir) / "moments.json");
    mout << mj.dump(2) << "\n";
  }
  std::unique_ptr<EmissionModel> emis = make_emission(cfg.emission, &train);

  std::optional<Dataset> test;
  if (!cfg.test_path.empty()) {
    test = ingest_csv(cfg.test_path, cfg.emission.family);
    if (standardized) standardize(*test, moments);
  }
  std::vector<int> truth_labels;
  if (!cfg.labels_path.empty()) {
    truth_labels = ingest_labels(cfg.labels_path);
    require(truth_labels.size() == train.size(), "labels length != training length");
  }
  std::vector<int> init_labels;
  if (!cfg.init_labels_path.empty()) {
    init_labels = ingest_labels(cfg.init_labels_path);
    require(init_labels.size() == train.size(), "init labels length != training length");
  }

  json resume;
  int start_iteration = 0;
  if (!cfg.resume_path.empty()) {
    resume = load_run_checkpoint(cfg.resume_path, cfg);
    start_iteration = resume.at("completed_iterations");
  }

  std::vector<ChainTask> tasks(cfg.chains);
  for (int c = 0; c < cfg.chains; ++c) {
    tasks[c] = ChainTask{&cfg, &train, emis.get(),
                         init_labels.empty() ? nullptr : &init_labels,
                         resume.is_null() ? nullptr : &resume.at("chains").at(c),
                         start_iteration};
  }

  RunResult res;
  res.chains.resize(cfg.chains);
  std::vector<std::string> chain_errors(cfg.chains);
  const int workers = std::min(worker_count(), cfg.chains);
  std::atomic<int> next{0};
  auto work = [&] {
    for (int c = next.fetch_add(1); c < cfg.chains; c = next.fetch_add(1)) {
      try {
        res.chains[c] = run_chain(tasks[c], c);
      } catch (const std::exception& e) {
        chain_errors[c] = e.what();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // records: one JSON object per line; wall times go to a separate file so
  // the primary outputs are bit-reproducible
  {
    std::ofstream rec(fs::path(cfg.output_dir) / "records.jsonl");
    std::ofstream tim(fs::path(cfg.output_dir) / "timings.csv");
    tim << "chain,iteration,wall_ms\n";
    for (int c = 0; c < cfg.chains; ++c) {
      for (const SampleRecord& r : res.chains[c].records) {
        json line{{"chain", r.chain},     {"iteration", r.iteration}, {"states", r.states},
                  {"alpha", r.alpha},     {"gamma", r.gamma},         {"rho1", r.rho1},
                  {"rho2", r.rho2},       {"loglik", r.loglik}};
        rec << line.dump() << "\n";
        tim << r.chain << "," << r.iteration << "," << format_double(r.wall_ms) << "\n";
      }
      if (!chain_errors[c].empty()) {
        json line{{"chain", c}, {"error", chain_errors[c]}};
        rec << line.dump() << "\n";
      }
    }
  }

  // posterior label sequences, one row per snapshot
  {
    std::ofstream zf(fs::path(cfg.output_dir) / "z.csv");
    zf << "chain,iteration";
    for (std::size_t t = 0; t < train.size(); ++t) zf << ",t" << t;
    zf << "\n";
    for (int c = 0; c < cfg.chains; ++c) {
      const ChainOutput& co = res.chains[c];
      for (std::size_t i = 0; i < co.snapshot_z.size(); ++i) {
        zf << c << "," << co.snapshot_iters[i];
        for (int zt : co.snapshot_z[i]) zf << "," << zt;
        zf << "\n";
      }
    }
  }

  {
    std::ofstream sf(fs::path(cfg.output_dir) / "snapshots.jsonl");
    for (int c = 0; c < cfg.chains; ++c) {
      const ChainOutput& co = res.chains[c];
      for (std::size_t i = 0; i < co.snapshots.size(); ++i) {
        json line = snapshot_to_json(co.snapshots[i], *emis);
        line["chain"] = c;
        line["iteration"] = co.snapshot_iters[i];
        sf << line.dump() << "\n";
      }
    }
  }

  if (test) {
    std::ofstream nf(fs::path(cfg.output_dir) / "nll.csv");
    nf << "chain,iteration,nll\n";
    for (int c = 0; c < cfg.chains; ++c) {
      const ChainOutput& co = res.chains[c];
      if (co.snapshots.empty()) continue;
      std::vector<double> nll = predictive_nll(co.snapshots, *emis, *test);
      for (std::size_t i = 0; i < nll.size(); ++i)
        nf << c << "," << co.snapshot_iters[i] << "," << format_double(nll[i]) << "\n";
    }
  }

  if (!truth_labels.empty()) {
    std::ofstream hf(fs::path(cfg.output_dir) / "hamming.csv");
    hf << "chain,iteration,hamming\n";
    for (int c = 0; c < cfg.chains; ++c) {
      const ChainOutput& co = res.chains[c];
      for (std::size_t i = 0; i < co.snapshot_z.size(); ++i)
        hf << c << "," << co.snapshot_iters[i] << ","
           << format_double(hamming_distance(co.snapshot_z[i], truth_labels)) << "\n";
    }
  }

  // summary over post-burn-in records of all chains
  {
    std::vector<double> a, g, r1, r2;
    std::map<int, int> khist;
    for (const ChainOutput& co : res.chains)
      for (const SampleRecord& r : co.records)
        if (r.iteration > cfg.burn_in) {
          a.push_back(r.alpha);
          g.push_back(r.gamma);
          r1.push_back(r.rho1);
          r2.push_back(r.rho2);
          ++khist[r.states];
        }
    json hist = json::object();
    for (auto& [k, cnt] : khist) hist[std::to_string(k)] = cnt;
    res.summary = json{{"median_alpha", median(a)},
                       {"median_gamma", median(g)},
                       {"median_rho1", median(r1)},
                       {"median_rho2", median(r2)},
                       {"state_count_histogram", hist}};
    for (int c = 0; c < cfg.chains; ++c)
      if (!chain_errors[c].empty()) res.summary["errors"][std::to_string(c)] = chain_errors[c];
    std::ofstream sf(fs::path(cfg.output_dir) / "summary.json");
    sf << res.summary.dump(2) << "\n";
  }

  // final checkpoint enables resume with a larger iteration budget
  bool all_ok = true;
  for (const std::string& e : chain_errors)
    if (!e.empty()) all_ok = false;
  if (all_ok) {
    std::vector<json> states;
    for (const ChainOutput& co : res.chains) states.push_back(co.final_state);
    save_run_checkpoint((fs::path(cfg.output_dir) / "checkpoint.json").string(), cfg, states,
                        cfg.iterations);
  }
  return res;
}

}  // namespace dshmm
