#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "dshmm/io_cli.hpp"
#include "dshmm/synth.hpp"

namespace fs = std::filesystem;
using namespace dshmm;

namespace {

void write_dataset_csv(const std::string& path, const Dataset& data, const std::string& family) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::size_t d = data.y.empty() ? 1 : data.y[0].size();
  out << "seq";
  if (family == "multinomial") {
    out << ",y";
  } else if (family == "poisson") {
    for (std::size_t c = 0; c < d; ++c) out << ",count" << c + 1;
  } else {
    for (std::size_t c = 0; c < d; ++c) out << ",y" << c + 1;
  }
  out << "\n";
  for (std::size_t t = 0; t < data.size(); ++t) {
    out << data.block[t];
    for (std::size_t c = 0; c < d; ++c) {
      if (family == "multinomial" || family == "poisson")
        out << "," << static_cast<long long>(data.y[t](c));
      else
        out << "," << format_double(data.y[t](c));
    }
    out << "\n";
  }
}

void write_labels_csv(const std::string& path, const std::vector<int>& z,
                      const std::vector<int>& block) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "seq,z\n";
  for (std::size_t t = 0; t < z.size(); ++t) out << block[t] << "," << z[t] << "\n";
}

int cmd_simulate(const std::string& preset, int states, long long T, long long test_T,
                 const std::string& emission, std::uint64_t seed, const std::string& out_dir) {
  SynthEmission kind;
  if (emission == "multinomial")
    kind = SynthEmission::Multinomial;
  else if (emission == "gaussian")
    kind = SynthEmission::Gaussian;
  else
    throw CLI::ValidationError("emission must be multinomial or gaussian");

  const std::size_t total = static_cast<std::size_t>(T + test_T);
  GroundTruth gt;
  if (preset == "same-transition")
    gt = gen_same_transition(states, total, kind, seed);
  else if (preset == "same-selfpersistence")
    gt = gen_same_selfpersistence(states, total, kind, seed);
  else
    throw CLI::ValidationError("preset must be same-transition or same-selfpersistence");

  fs::create_directories(out_dir);
  Dataset train{{gt.data.y.begin(), gt.data.y.begin() + T},
                std::vector<int>(gt.data.block.begin(), gt.data.block.begin() + T)};
  write_dataset_csv((fs::path(out_dir) / "train.csv").string(), train, emission);
  write_labels_csv((fs::path(out_dir) / "labels.csv").string(),
                   {gt.z.begin(), gt.z.begin() + T},
                   {gt.data.block.begin(), gt.data.block.begin() + T});
  if (test_T > 0) {
    Dataset test{{gt.data.y.begin() + T, gt.data.y.end()},
                 std::vector<int>(gt.data.block.begin() + T, gt.data.block.end())};
    // the test stretch is its own independent block
    for (int& b : test.block) b += 1;
    write_dataset_csv((fs::path(out_dir) / "test.csv").string(), test, emission);
  }

  json truth{{"seed", gt.seed},
             {"kappa", gt.kappa},
             {"pi", json::array()},
             {"states", states}};
  for (std::size_t j = 0; j < gt.pi.rows; ++j)
    truth["pi"].push_back(
        std::vector<double>(gt.pi.row(j), gt.pi.row(j) + gt.pi.cols));
  std::ofstream tf(fs::path(out_dir) / "truth.json");
  tf << truth.dump(2) << "\n";
  std::cout << "wrote " << out_dir << " (train " << T << " steps, test " << test_T << ")\n";
  return 0;
}

int cmd_fit(const std::string& config_path, const std::string& resume, int iterations) {
  std::ifstream in(config_path);
  if (!in) throw std::runtime_error("cannot open " + config_path);
  json j;
  in >> j;
  RunConfig cfg = config_from_json(j);
  if (!resume.empty()) cfg.resume_path = resume;
  if (iterations > 0) cfg.iterations = iterations;
  RunResult res = run(cfg);
  std::cout << res.summary.dump(2) << "\n";
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& snapshots_path,
             const std::string& test_path, const std::string& z_path,
             const std::string& labels_path, const std::string& out_dir) {
  fs::create_directories(out_dir);
  if (!snapshots_path.empty()) {
    require(!config_path.empty() && !test_path.empty(),
            "eval: snapshots need --config and --test");
    std::ifstream cin_(config_path);
    json cj;
    cin_ >> cj;
    RunConfig cfg = config_from_json(cj);
    Dataset test = ingest_csv(test_path, cfg.emission.family);
    std::unique_ptr<EmissionModel> emis = make_emission(cfg.emission, &test);

    std::ifstream sin(snapshots_path);
    if (!sin) throw std::runtime_error("cannot open " + snapshots_path);
    std::vector<HmmSnapshot> snaps;
    std::vector<std::pair<int, int>> ids;
    std::string line;
    while (std::getline(sin, line)) {
      if (line.empty()) continue;
      json sj = json::parse(line);
      snaps.push_back(snapshot_from_json(sj, *emis));
      ids.emplace_back(sj.value("chain", 0), sj.value("iteration", 0));
    }
    std::vector<double> nll = predictive_nll(snaps, *emis, test);
    std::ofstream nf(fs::path(out_dir) / "nll.csv");
    nf << "chain,iteration,nll\n";
    for (std::size_t i = 0; i < nll.size(); ++i)
      nf << ids[i].first << "," << ids[i].second << "," << format_double(nll[i]) << "\n";
    std::cout << "wrote " << (fs::path(out_dir) / "nll.csv").string() << "\n";
  }
  if (!z_path.empty()) {
    require(!labels_path.empty(), "eval: --z needs --labels");
    std::vector<int> truth = ingest_labels(labels_path);
    std::ifstream zin(z_path);
    if (!zin) throw std::runtime_error("cannot open " + z_path);
    std::string line;
    std::getline(zin, line);  // header
    std::ofstream hf(fs::path(out_dir) / "hamming.csv");
    hf << "chain,iteration,hamming\n";
    std::size_t lineno = 1;
    while (std::getline(zin, line)) {
      ++lineno;
      if (line.empty()) continue;
      std::vector<int> z;
      std::string cell;
      std::vector<std::string> cells;
      for (std::stringstream ss(line); std::getline(ss, cell, ',');) cells.push_back(cell);
      require(cells.size() == truth.size() + 2,
              z_path + ":" + std::to_string(lineno) + ": ragged row");
      for (std::size_t i = 2; i < cells.size(); ++i) z.push_back(std::stoi(cells[i]));
      hf << cells[0] << "," << cells[1] << ","
         << format_double(hamming_distance(z, truth)) << "\n";
    }
    std::cout << "wrote " << (fs::path(out_dir) / "hamming.csv").string() << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"disentangled sticky HDP-HMM inference engine"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  std::string preset = "same-transition", emission = "multinomial", out_dir = "sim_out";
  int states = 8;
  long long T = 1000, test_T = 0;
  std::uint64_t seed = 0;
  sim->add_option("--preset", preset, "same-transition | same-selfpersistence");
  sim->add_option("--states", states);
  sim->add_option("--T", T, "training steps");
  sim->add_option("--test-T", test_T, "held-out steps appended as a separate block");
  sim->add_option("--emission", emission, "multinomial | gaussian");
  sim->add_option("--seed", seed);
  sim->add_option("--out", out_dir);

  auto* fit = app.add_subcommand("fit", "run the Gibbs sampler(s) from a config file");
  std::string config_path, resume;
  int iterations = 0;
  fit->add_option("--config", config_path)->required();
  fit->add_option("--resume", resume, "checkpoint.json from a previous run");
  fit->add_option("--iterations", iterations, "override the config's iteration budget");

  auto* ev = app.add_subcommand("eval", "metrics from stored run outputs");
  std::string ev_config, ev_snapshots, ev_test, ev_z, ev_labels, ev_out = "eval_out";
  ev->add_option("--config", ev_config);
  ev->add_option("--snapshots", ev_snapshots, "snapshots.jsonl from a fit");
  ev->add_option("--test", ev_test, "held-out data CSV");
  ev->add_option("--z", ev_z, "z.csv from a fit");
  ev->add_option("--labels", ev_labels, "ground-truth labels CSV");
  ev->add_option("--out", ev_out);

  auto* desc = app.add_subcommand("describe-config", "print the default config as JSON");

  CLI11_PARSE(app, argc, argv);
  try {
    if (sim->parsed()) return cmd_simulate(preset, states, T, test_T, emission, seed, out_dir);
    if (fit->parsed()) return cmd_fit(config_path, resume, iterations);
    if (ev->parsed()) return cmd_eval(ev_config, ev_snapshots, ev_test, ev_z, ev_labels, ev_out);
    if (desc->parsed()) {
      std::cout << config_to_json(RunConfig{}).dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
