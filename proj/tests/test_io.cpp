#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "doctest.h"

#include "dshmm/io_cli.hpp"
#include "dshmm/synth.hpp"

using namespace dshmm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("dshmm_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  f << content;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("config JSON round trip preserves every field") {
  RunConfig c;
  c.variant = Variant::Sticky;
  c.sampler = "weaklimit";
  c.L = 15;
  c.emission.family = "gaussian";
  c.emission.prior_mean = 1.25;
  c.iterations = 321;
  c.burn_in = 12;
  c.thin = 7;
  c.chains = 3;
  c.base_seed = 987654321;
  c.init_hyper.alpha = 2.5;
  c.priors.gamma.shape = 3.0;
  c.grids.rho.phi_cells = 33;
  c.resample_hyper = false;
  c.train_path = "a.csv";
  c.output_dir = "out";
  c.checkpoint_every = 25;

  RunConfig d = config_from_json(config_to_json(c));
  CHECK(d.variant == Variant::Sticky);
  CHECK(d.sampler == "weaklimit");
  CHECK(d.L == 15);
  CHECK(d.emission.family == "gaussian");
  CHECK(d.emission.prior_mean == 1.25);
  CHECK(d.iterations == 321);
  CHECK(d.burn_in == 12);
  CHECK(d.thin == 7);
  CHECK(d.chains == 3);
  CHECK(d.base_seed == 987654321);
  CHECK(d.init_hyper.alpha == 2.5);
  CHECK(d.priors.gamma.shape == 3.0);
  CHECK(d.grids.rho.phi_cells == 33);
  CHECK(d.resample_hyper == false);
  CHECK(d.train_path == "a.csv");
  CHECK(d.checkpoint_every == 25);
}

TEST_CASE("config validation rejects bad combinations") {
  RunConfig c;
  c.train_path = "x.csv";
  c.output_dir = "out";
  CHECK_NOTHROW(c.validate());
  c.sampler = "weaklimit";  // missing L
  CHECK_THROWS(c.validate());
  c.L = 10;
  CHECK_NOTHROW(c.validate());
  c.burn_in = c.iterations;
  CHECK_THROWS(c.validate());
}

TEST_CASE("csv ingestion: symbols, reals, counts, seq column") {
  TempDir dir;
  write_file(dir.file("sym.csv"), "seq,y\n0,2\n0,0\n1,1\n");
  Dataset d = ingest_csv(dir.file("sym.csv"), "multinomial");
  REQUIRE(d.size() == 3);
  CHECK(d.y[0](0) == 2.0);
  CHECK(d.block[0] == d.block[1]);
  CHECK(d.block[2] != d.block[1]);
  CHECK(!d.has_prev(2));

  write_file(dir.file("real.csv"), "y1,y2\n1.5,-2.0\n0.25,3.5\n");
  Dataset r = ingest_csv(dir.file("real.csv"), "ar_gaussian");
  REQUIRE(r.size() == 2);
  CHECK(r.y[0].size() == 2);
  CHECK(r.y[1](1) == 3.5);

  write_file(dir.file("cnt.csv"), "count1,count2,count3\n0,5,2\n1,0,0\n");
  Dataset cd = ingest_csv(dir.file("cnt.csv"), "poisson");
  REQUIRE(cd.size() == 2);
  CHECK(cd.y[0](1) == 5.0);
}

TEST_CASE("csv ingestion errors carry 1-based line numbers") {
  TempDir dir;
  write_file(dir.file("ragged.csv"), "y1,y2\n1.0,2.0\n3.0\n");
  CHECK_THROWS_WITH_AS(ingest_csv(dir.file("ragged.csv"), "gaussian"),
                       doctest::Contains(":3:"), std::runtime_error);

  write_file(dir.file("nan.csv"), "y\n1\nfoo\n");
  CHECK_THROWS_WITH_AS(ingest_csv(dir.file("nan.csv"), "multinomial"),
                       doctest::Contains(":3:"), std::runtime_error);

  write_file(dir.file("neg.csv"), "count1\n3\n-1\n");
  CHECK_THROWS_WITH_AS(ingest_csv(dir.file("neg.csv"), "poisson"),
                       doctest::Contains(":3:"), std::runtime_error);

  CHECK_THROWS(ingest_csv(dir.file("missing.csv"), "multinomial"));
}

TEST_CASE("standardization zeroes means and unit-scales columns") {
  Dataset d;
  for (double v : {1.0, 2.0, 3.0, 4.0}) {
    Obs y(1);
    y(0) = v;
    d.y.push_back(y);
    d.block.push_back(0);
  }
  ColumnMoments m = compute_moments(d);
  CHECK(m.mean[0] == doctest::Approx(2.5));
  standardize(d, m);
  double s = 0, s2 = 0;
  for (const Obs& y : d.y) {
    s += y(0);
    s2 += y(0) * y(0);
  }
  CHECK(s == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s2 / 4 == doctest::Approx(1.0).epsilon(0.35));  // population-vs-sample factor only
}

TEST_CASE("label ingestion reads the last column") {
  TempDir dir;
  write_file(dir.file("lab.csv"), "seq,z\n0,3\n0,1\n0,3\n");
  std::vector<int> z = ingest_labels(dir.file("lab.csv"));
  CHECK(z == std::vector<int>{3, 1, 3});
}

TEST_CASE("direct chain checkpoint restores an equivalent state") {
  GroundTruth gt = gen_same_transition(3, 60, SynthEmission::Multinomial, 50);
  MultinomialEmission emis(3, 1.0);
  DirectChainState st = init_direct_chain(gt.data, emis, HyperParams{}, 51);
  SamplerOptions opts;
  opts.grids.rho.phi_cells = 5;
  opts.grids.rho.eta_cells = 5;
  for (int i = 0; i < 10; ++i) direct_sweep(st, opts);

  json j = checkpoint_direct(st);
  DirectChainState re = restore_direct(j, gt.data, emis);
  CHECK(re.z == st.z);
  CHECK(re.w == st.w);
  CHECK(re.K == st.K);
  CHECK(re.beta.weights == st.beta.weights);
  CHECK(re.beta.remainder == st.beta.remainder);
  CHECK(re.kappa == st.kappa);
  CHECK(re.n == st.n);
  CHECK(re.hyper.alpha == st.hyper.alpha);
  validate_direct(re);

  // the restored RNG continues the same stream
  direct_sweep(st, opts);
  direct_sweep(re, opts);
  CHECK(re.z == st.z);
  CHECK(re.hyper.alpha == st.hyper.alpha);
}

TEST_CASE("weak-limit chain checkpoint restores an equivalent state") {
  GroundTruth gt = gen_same_transition(3, 60, SynthEmission::Gaussian, 52);
  GaussianKnownVarEmission emis(0.0, 25.0, 0.25);
  WeakLimitChainState st = init_weak_limit_chain(gt.data, emis, HyperParams{}, 6, 53);
  SamplerOptions opts;
  opts.grids.rho.phi_cells = 5;
  opts.grids.rho.eta_cells = 5;
  for (int i = 0; i < 10; ++i) weak_limit_sweep(st, opts);

  json j = checkpoint_weak_limit(st);
  WeakLimitChainState re = restore_weak_limit(j, gt.data, emis);
  CHECK(re.z == st.z);
  CHECK(re.beta == st.beta);
  CHECK(re.pibar == st.pibar);
  CHECK(re.kappa == st.kappa);
  validate_weak_limit(re);

  weak_limit_sweep(st, opts);
  weak_limit_sweep(re, opts);
  CHECK(re.z == st.z);
  CHECK(re.last_marginal_loglik == st.last_marginal_loglik);
}

TEST_CASE("run checkpoints reject a mismatched configuration") {
  TempDir dir;
  RunConfig cfg;
  cfg.train_path = "t.csv";
  cfg.output_dir = dir.file("out");
  save_run_checkpoint(dir.file("ck.json"), cfg, {json::object()}, 40);
  CHECK_NOTHROW(load_run_checkpoint(dir.file("ck.json"), cfg));

  RunConfig other = cfg;
  other.emission.family = "gaussian";
  CHECK_THROWS(load_run_checkpoint(dir.file("ck.json"), other));
  other = cfg;
  other.base_seed = 999;
  CHECK_THROWS(load_run_checkpoint(dir.file("ck.json"), other));
}

TEST_CASE("end-to-end run writes outputs and is byte-deterministic") {
  TempDir dir;
  GroundTruth gt = gen_same_transition(3, 80, SynthEmission::Multinomial, 54);
  {
    std::ofstream f(dir.file("train.csv"));
    f << "y\n";
    for (const Obs& y : gt.data.y) f << static_cast<int>(y(0)) << "\n";
  }
  RunConfig cfg;
  cfg.train_path = dir.file("train.csv");
  cfg.emission.family = "multinomial";
  cfg.iterations = 30;
  cfg.burn_in = 10;
  cfg.thin = 5;
  cfg.chains = 2;
  cfg.base_seed = 7;
  cfg.grids.rho.phi_cells = 10;
  cfg.grids.rho.eta_cells = 10;
  cfg.output_dir = dir.file("out1");
  RunResult r1 = run(cfg);

  REQUIRE(r1.chains.size() == 2);
  // records for every iteration, snapshots only after burn-in at thin spacing
  CHECK(r1.chains[0].records.size() == 30);
  CHECK(r1.chains[0].snapshots.size() == 4);  // iterations 15, 20, 25, 30
  CHECK(fs::exists(dir.file("out1") + "/records.jsonl"));
  CHECK(fs::exists(dir.file("out1") + "/z.csv"));
  CHECK(fs::exists(dir.file("out1") + "/summary.json"));
  CHECK(!fs::exists(dir.file("out1") + "/nll.csv"));  // no test data supplied

  cfg.output_dir = dir.file("out2");
  run(cfg);
  for (const char* f : {"/records.jsonl", "/z.csv", "/snapshots.jsonl", "/summary.json"})
    CHECK(read_file(dir.file("out1") + f) == read_file(dir.file("out2") + f));
}

TEST_CASE("single-iteration run produces one record and one snapshot") {
  TempDir dir;
  write_file(dir.file("train.csv"), "y\n0\n1\n0\n1\n");
  RunConfig cfg;
  cfg.train_path = dir.file("train.csv");
  cfg.iterations = 1;
  cfg.burn_in = 0;
  cfg.thin = 1;
  cfg.grids.rho.phi_cells = 5;
  cfg.grids.rho.eta_cells = 5;
  cfg.output_dir = dir.file("out");
  RunResult r = run(cfg);
  REQUIRE(r.chains.size() == 1);
  CHECK(r.chains[0].records.size() == 1);
  CHECK(r.chains[0].snapshots.size() == 1);
  CHECK(r.chains[0].snapshot_iters == std::vector<int>{1});
}

TEST_CASE("format_double round-trips exactly") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0}) {
    CHECK(std::stod(format_double(x)) == x);
  }
}

}  // TEST_SUITE
