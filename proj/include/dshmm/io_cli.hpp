#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dshmm/emissions.hpp"
#include "dshmm/evaluation.hpp"
#include "dshmm/hdp_core.hpp"
#include "dshmm/sampler_direct.hpp"
#include "dshmm/sampler_weak_limit.hpp"

namespace dshmm {

using nlohmann::json;

// --- configuration -----------------------------------------------------------

struct EmissionConfig {
  std::string family = "multinomial";  // multinomial | gaussian | poisson | ar_gaussian

  // multinomial
  int symbols = 0;  // 0: infer from the training data
  double pseudo_count = 1.0;

  // gaussian (known noise variance)
  double prior_mean = 3.5;
  double prior_var = 36.0;
  double noise_var = 0.25;

  // poisson vector
  int dims = 0;  // 0: infer
  double shape = 1.0;
  double rate = 1.0;
  double hyper_shape = 1.0;
  double hyper_rate = 1.0;

  // ar_gaussian: MNIW prior built from the training data covariance
  double cov_scale = 0.75;
};

struct RunConfig {
  Variant variant = Variant::DS;
  std::string sampler = "direct";  // direct | weaklimit
  int L = 0;                       // weak-limit truncation; required iff sampler == weaklimit

  EmissionConfig emission;

  int iterations = 100;
  int burn_in = 0;
  int thin = 10;
  int chains = 1;
  std::uint64_t base_seed = 0;

  HyperParams init_hyper;  // starting values; variant is overwritten from `variant`
  HyperPriors priors;
  HyperGrids grids;
  bool resample_hyper = true;

  std::string train_path;
  std::string test_path;        // optional: held-out NLL
  std::string labels_path;      // optional: ground-truth labels for Hamming
  std::string init_labels_path; // optional: weak-limit label init
  std::string output_dir;

  int checkpoint_every = 0;  // 0: no checkpoints
  std::string resume_path;

  void validate() const;
};

RunConfig config_from_json(const json& j);
json config_to_json(const RunConfig& c);

// --- ingestion ---------------------------------------------------------------

// Per-column standardization moments for the AR family.
struct ColumnMoments {
  std::vector<double> mean, sd;
};

// CSV with header; columns: optional `seq` block id, then `y` (integer
// symbol), `y1..yd` (reals), or `count1..countC` (nonnegative integers).
// Parse errors carry 1-based line numbers.
Dataset ingest_csv(const std::string& path, const std::string& family);

ColumnMoments compute_moments(const Dataset& data);
void standardize(Dataset& data, const ColumnMoments& m);

// Single column of integer labels (optional `seq` ignored).
std::vector<int> ingest_labels(const std::string& path);

// Emission model from config; AR priors need the (standardized) training data.
std::unique_ptr<EmissionModel> make_emission(const EmissionConfig& cfg, const Dataset* train);

// --- checkpointing -----------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;

json checkpoint_direct(const DirectChainState& s);
DirectChainState restore_direct(const json& j, const Dataset& data, const EmissionModel& emis);

json checkpoint_weak_limit(const WeakLimitChainState& s);
WeakLimitChainState restore_weak_limit(const json& j, const Dataset& data,
                                       const EmissionModel& emis);

json snapshot_to_json(const HmmSnapshot& s, const EmissionModel& emis);
HmmSnapshot snapshot_from_json(const json& j, const EmissionModel& emis);

// Full run checkpoint: config + per-chain states + completed iteration count.
void save_run_checkpoint(const std::string& path, const RunConfig& cfg,
                         const std::vector<json>& chain_states, int completed_iterations);
json load_run_checkpoint(const std::string& path, const RunConfig& cfg);

// --- orchestration -----------------------------------------------------------

struct SampleRecord {
  int chain = 0;
  int iteration = 0;
  int states = 0;  // K (direct) or occupied-state count (weak limit)
  double alpha = 0, gamma = 0, rho1 = 0, rho2 = 0;
  double loglik = 0;
  double wall_ms = 0;
};

struct ChainOutput {
  std::vector<SampleRecord> records;
  std::vector<HmmSnapshot> snapshots;
  std::vector<int> snapshot_iters;
  std::vector<std::vector<int>> snapshot_z;
  json final_state;  // chain checkpoint at the last iteration
};

struct RunResult {
  std::vector<ChainOutput> chains;
  json summary;
};

// Runs all chains (worker count from DSHMM_WORKERS, default 1), writes
// records.jsonl, z.csv, nll.csv, hamming.csv and summary.json under
// cfg.output_dir (only the files whose inputs were supplied), and returns
// everything in memory.
RunResult run(const RunConfig& cfg);

// 17-significant-digit text form; round-trips doubles exactly
std::string format_double(double x);

}  // namespace dshmm
