// Command line front end: dataset generation, training, sampling, scoring,
// the moment validation gate, and the full experiment grid.
//
// Exit codes: 0 success, 2 validation gate failed or inconsistent request,
// 3 I/O failure, 4 numeric divergence.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "markovgen/markovgen.hpp"

#ifndef MARKOVGEN_GIT_DESCRIBE
#define MARKOVGEN_GIT_DESCRIBE "unknown"
#endif

namespace {

constexpr int kExitOk = 0;
constexpr int kExitGate = 2;
constexpr int kExitIo = 3;
constexpr int kExitDiverged = 4;

using nlohmann::json;

// Every artifact gets a sidecar recording what produced it.
void write_provenance(const std::string& artifact_path, const json& config,
                      std::uint64_t seed) {
  json j{{"config_hash", markovgen::fnv1a64_hex(config.dump())},
         {"git_describe", MARKOVGEN_GIT_DESCRIBE},
         {"seed", seed}};
  std::ofstream out(artifact_path + ".provenance.json");
  if (!out) throw markovgen::IoError("cannot write provenance for " + artifact_path);
  out << j.dump(1) << "\n";
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": bad integer '" + tok + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return out;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string(what) + ": bad number '" + tok + "'");
    }
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + ": empty list");
  return out;
}

// grid argument "equidistant:K" -> K knots evenly spaced on [0, horizon]
std::vector<double> parse_grid(const std::string& arg, double horizon) {
  const std::string prefix = "equidistant:";
  if (arg.rfind(prefix, 0) != 0) {
    throw std::invalid_argument("grid: expected 'equidistant:<K>', got '" + arg + "'");
  }
  const int k = std::stoi(arg.substr(prefix.size()));
  if (k < 2) throw std::invalid_argument("grid: need at least 2 knots");
  std::vector<double> grid(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) grid[static_cast<size_t>(i)] = horizon * i / (k - 1);
  return grid;
}

// --config file provides defaults; flags given on the command line win
json load_config_json(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw markovgen::IoError("cannot read config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw markovgen::IoError("config " + path + ": " + e.what());
  }
  if (!j.is_object()) throw markovgen::IoError("config " + path + ": not a JSON object");
  return j;
}

template <typename T>
void cfg_override(const CLI::App& cmd, const json& cfg, const std::string& flag,
                  const std::string& key, T& var) {
  if (cmd.count(flag) == 0 && cfg.contains(key)) var = cfg.at(key).get<T>();
}

// ---- verify-moments ----------------------------------------------------

struct VerifyArgs {
  int trials = 200;
  double eta = 1.0;
  double rho = 0.2;
  std::uint64_t seed = 7;
  std::string bins_list = "256,512,1024,2048,4096,8192,16384,32768,65536";
  std::string out_prefix = "moment_check";
  bool no_gate = false;
  double gate_tol = 1e-4;
};

int cmd_verify_moments(const VerifyArgs& a, const json& config) {
  const std::vector<int> bins_list = parse_int_list(a.bins_list, "--bins-list");
  for (int b : bins_list) {
    if (b < 2) throw std::invalid_argument("--bins-list: bin counts must be >= 2");
  }
  markovgen::Rng rng = markovgen::derive_stream(a.seed, 0x766d);

  std::vector<markovgen::BridgeSegment> segs;
  segs.reserve(static_cast<size_t>(a.trials));
  for (int i = 0; i < a.trials; ++i) {
    segs.push_back(markovgen::BridgeSegment{rng.normal(0.0, 0.5), rng.uniform(0.5, 1.5),
                                            0.0, 1.0, a.eta, a.rho});
  }
  // fixed evaluation times, the exact midpoint is skipped below
  std::vector<double> ts;
  for (int i = 1; i <= 19; ++i) ts.push_back(i / 20.0);

  std::vector<double> err_mu(bins_list.size(), 0.0), err_sigma(bins_list.size(), 0.0);
  for (const markovgen::BridgeSegment& seg : segs) {
    for (double t : ts) {
      if (markovgen::near_midpoint(seg, t)) continue;
      const markovgen::JumpMoments an = markovgen::jump_moments(seg, t);
      for (size_t bi = 0; bi < bins_list.size(); ++bi) {
        const markovgen::JumpMoments q = markovgen::quadrature_oracle(seg, t, bins_list[bi]);
        err_mu[bi] = std::max(err_mu[bi], std::abs(an.mu_j - q.mu_j));
        err_sigma[bi] =
            std::max(err_sigma[bi], std::abs(std::sqrt(an.var_j) - std::sqrt(q.var_j)));
      }
    }
  }

  const std::string csv_path = a.out_prefix + ".csv";
  std::ofstream csv(csv_path);
  if (!csv) throw markovgen::IoError("cannot write " + csv_path);
  csv << "bins,max_err_mu,max_err_sigma\n";
  std::vector<double> xs;
  for (size_t bi = 0; bi < bins_list.size(); ++bi) {
    char line[96];
    std::snprintf(line, sizeof line, "%d,%.6e,%.6e\n", bins_list[bi], err_mu[bi],
                  err_sigma[bi]);
    csv << line;
    xs.push_back(std::log2(static_cast<double>(bins_list[bi])));
  }
  csv.close();

  markovgen::SvgPlot plot("jump moment error vs quadrature resolution", "log2(bins)",
                          "max abs error");
  plot.set_log_y(true);
  plot.add_series(xs, err_mu);
  plot.add_series(xs, err_sigma);
  plot.write(a.out_prefix + ".svg");
  write_provenance(csv_path, config, a.seed);

  const double final_err = std::max(err_mu.back(), err_sigma.back());
  std::printf("trials=%d times=%zu final max error: mu=%.3e sigma=%.3e (tol %.1e)\n",
              a.trials, ts.size(), err_mu.back(), err_sigma.back(), a.gate_tol);
  if (!a.no_gate && !(final_err < a.gate_tol)) {
    std::fprintf(stderr, "gate FAILED: %.3e >= %.1e\n", final_err, a.gate_tol);
    return kExitGate;
  }
  std::printf("gate %s\n", a.no_gate ? "skipped" : "passed");
  return kExitOk;
}

// ---- gen-data ------------------------------------------------------------

struct GenDataArgs {
  std::string dataset = "trend";
  int n = 1000;
  int steps = 50;
  std::uint64_t seed = 1;
  double noise_prob = 0.2;
  double bs_mu = 0.05;
  double bs_sigma = 0.3;
  double bs_s0 = 1.0;
  int keep = 0;  // 0: no subsampling
  std::string mode = "random";
  std::uint64_t sub_seed = 0;
  std::string out = "data.csv";
};

int cmd_gen_data(const GenDataArgs& a, const json& config) {
  markovgen::Dataset ds;
  if (a.dataset == "trend") {
    ds = markovgen::gen_trend(a.n, a.steps, a.seed, a.noise_prob);
  } else if (a.dataset == "black_scholes") {
    ds = markovgen::gen_black_scholes(a.n, a.steps, a.bs_mu, a.bs_sigma, a.bs_s0, a.seed);
  } else {
    std::fprintf(stderr, "unknown dataset '%s'\n", a.dataset.c_str());
    return kExitGate;
  }
  if (a.keep > 0) {
    markovgen::SubsampleMode mode;
    if (a.mode == "random") {
      mode = markovgen::SubsampleMode::random_irregular;
    } else if (a.mode == "equidistant") {
      mode = markovgen::SubsampleMode::equidistant;
    } else {
      std::fprintf(stderr, "unknown subsample mode '%s'\n", a.mode.c_str());
      return kExitGate;
    }
    ds = markovgen::subsample(ds, a.keep, mode, a.sub_seed);
  }
  markovgen::write_csv(ds, a.out);
  write_provenance(a.out, config, a.seed);
  std::printf("wrote %zu series to %s\n", ds.series.size(), a.out.c_str());
  return kExitOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string val_data;  // optional explicit validation set
  std::string loss = "drift";
  markovgen::TrainConfig cfg;
  std::string hidden = "256,256,256,256";
  std::string out = "model.json";
  std::string log;
};

int cmd_train(const TrainArgs& a, const json& config) {
  markovgen::TrainConfig cfg = a.cfg;
  cfg.loss_kind = markovgen::loss_from_name(a.loss);
  cfg.hidden_dims = parse_int_list(a.hidden, "--hidden");

  const markovgen::Dataset full = markovgen::read_csv(a.data);
  markovgen::Dataset train_ds, val_ds;
  if (!a.val_data.empty()) {
    train_ds = full;
    val_ds = markovgen::read_csv(a.val_data);
  } else {
    // hold out every fifth series id; their grids must agree for scoring
    train_ds.horizon = val_ds.horizon = full.horizon;
    train_ds.meta = val_ds.meta = full.meta;
    for (const markovgen::TimeSeries& s : full.series) {
      (s.id % 5 == 4 ? val_ds : train_ds).series.push_back(s);
    }
  }
  if (train_ds.series.empty() || val_ds.series.empty()) {
    std::fprintf(stderr, "empty train or validation split\n");
    return kExitGate;
  }

  const markovgen::TrainResult res = markovgen::train(train_ds, val_ds, cfg);
  markovgen::save_checkpoint(a.out, res.model,
                             markovgen::fnv1a64_hex(config.dump() + a.loss));
  write_provenance(a.out, config, cfg.seed);
  if (!a.log.empty()) markovgen::write_log_csv(a.log, res.log);
  std::printf("trained %s model: best val MMD %.5f at epoch %d -> %s\n", a.loss.c_str(),
              res.best_val, res.best_epoch, a.out.c_str());
  return kExitOk;
}

// ---- sample -----------------------------------------------------------------

struct SampleArgs {
  std::string ckpt_drift;
  std::string ckpt_jump;
  std::string ckpt_tfm;
  double alpha = 1.0;
  std::string grid = "equidistant:50";
  int n = 64;
  int steps = 25;
  double eta2 = 0.3;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  std::string x0_data;
  double x0 = 0.0;
  std::string out = "samples.csv";
};

int cmd_sample(const SampleArgs& a, const json& config) {
  markovgen::Mlp drift_model, jump_model, tfm_model;
  const bool tfm = !a.ckpt_tfm.empty();
  if (tfm && (!a.ckpt_drift.empty() || !a.ckpt_jump.empty())) {
    std::fprintf(stderr, "--ckpt-tfm excludes --ckpt-drift/--ckpt-jump\n");
    return kExitGate;
  }
  int memory_len = -1;
  const auto take = [&memory_len](const std::string& path, markovgen::Mlp& into) {
    into = markovgen::load_checkpoint(path).model;
    const int m = markovgen::memory_len_from_input(into.in_dim());
    if (memory_len >= 0 && m != memory_len) {
      throw std::invalid_argument("checkpoints disagree on memory length");
    }
    memory_len = m;
  };
  if (!a.ckpt_drift.empty()) take(a.ckpt_drift, drift_model);
  if (!a.ckpt_jump.empty()) take(a.ckpt_jump, jump_model);
  if (tfm) take(a.ckpt_tfm, tfm_model);

  markovgen::StepPlan plan;
  plan.n_steps = a.steps;
  plan.alpha = tfm ? 1.0 : a.alpha;
  plan.eta = tfm ? 0.0 : std::sqrt(a.eta2);
  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitGate;
  }

  markovgen::SeriesGenFactory factory;
  if (tfm) {
    factory = markovgen::tfm_factory(&tfm_model, a.horizon);
  } else {
    if (a.alpha > 0.0 && a.ckpt_drift.empty()) {
      std::fprintf(stderr, "alpha=%g needs --ckpt-drift\n", a.alpha);
      return kExitGate;
    }
    if (a.alpha < 1.0 && a.ckpt_jump.empty()) {
      std::fprintf(stderr, "alpha=%g needs --ckpt-jump\n", a.alpha);
      return kExitGate;
    }
    factory = markovgen::learned_factory(a.ckpt_drift.empty() ? nullptr : &drift_model,
                                         a.ckpt_jump.empty() ? nullptr : &jump_model,
                                         a.horizon, a.alpha);
  }

  std::vector<double> x0_pool;
  if (!a.x0_data.empty()) {
    const markovgen::Dataset src = markovgen::read_csv(a.x0_data);
    for (const markovgen::TimeSeries& s : src.series) x0_pool.push_back(s.values.front());
  } else {
    x0_pool.push_back(a.x0);
  }

  const std::vector<double> grid = parse_grid(a.grid, a.horizon);
  markovgen::Rng rng = markovgen::derive_stream(a.seed, 0x73616d70);
  markovgen::StepStats stats;
  markovgen::Dataset out_ds;
  out_ds.horizon = a.horizon;
  out_ds.meta.name = "samples";
  out_ds.meta.seed = a.seed;
  for (int i = 0; i < a.n; ++i) {
    const double x0 = x0_pool[rng.uniform_int(x0_pool.size())];
    markovgen::TimeSeries s =
        markovgen::simulate_series(x0, grid, memory_len, factory, plan, rng, &stats);
    s.id = i;
    out_ds.series.push_back(std::move(s));
  }
  markovgen::write_csv(out_ds, a.out);
  write_provenance(a.out, config, a.seed);
  std::printf("sampled %d series (%lld steps, %lld jumps, clamp fraction %.2e) -> %s\n",
              a.n, static_cast<long long>(stats.steps), static_cast<long long>(stats.jumps),
              stats.clamp_fraction(), a.out.c_str());
  return kExitOk;
}

// ---- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string gen;
  std::string truth;
  std::string out;
};

int cmd_eval(const EvalArgs& args, const json& config) {
  const markovgen::Dataset da = markovgen::read_csv(args.gen);
  const markovgen::Dataset db = markovgen::read_csv(args.truth);
  if (da.series.empty() || db.series.empty()) {
    std::fprintf(stderr, "empty dataset\n");
    return kExitGate;
  }
  const std::vector<double>& grid = da.series.front().times;
  for (const markovgen::Dataset* d : {&da, &db}) {
    for (const markovgen::TimeSeries& s : d->series) {
      if (s.times != grid) {
        std::fprintf(stderr, "series %d does not share the common time grid\n", s.id);
        return kExitGate;
      }
    }
  }
  std::vector<std::vector<double>> ma, mb;
  for (const markovgen::TimeSeries& s : da.series) ma.push_back(s.values);
  for (const markovgen::TimeSeries& s : db.series) mb.push_back(s.values);
  const markovgen::MmdResult r = markovgen::energy_mmd_detail(ma, mb);
  std::printf("mmd=%.6f mmd2=%.6e n_a=%zu n_b=%zu\n", r.mmd, r.mmd2, ma.size(), mb.size());
  if (!args.out.empty()) {
    json j{{"mmd", r.mmd}, {"mmd2", r.mmd2}, {"clamped", r.clamped},
           {"n_a", ma.size()}, {"n_b", mb.size()}};
    std::ofstream out(args.out);
    if (!out) throw markovgen::IoError("cannot write " + args.out);
    out << j.dump(1) << "\n";
    write_provenance(args.out, config, 0);
  }
  return kExitOk;
}

// ---- experiment --------------------------------------------------------------

struct ExperimentArgs {
  markovgen::ExperimentConfig cfg;
  std::string keeps = "25";
  std::string seeds = "1,2,3";
  std::string methods = "untrained,sde,jump,superposition";
  std::string alphas = "0,0.25,0.5,0.75,1";
  std::string hidden = "64,64";

  // defaults are the desk-scale profile that finishes on one core; pass
  // --hidden/--lr/--epochs for the full-scale settings
  ExperimentArgs() {
    cfg.train.hidden_dims = {64, 64};
    cfg.train.lr = 1e-3;
    cfg.train.epochs = 60;
  }
};

int cmd_experiment(ExperimentArgs a, const json& config) {
  a.cfg.keeps = parse_int_list(a.keeps, "--subsample-rates");
  a.cfg.seeds.clear();
  for (int s : parse_int_list(a.seeds, "--seeds")) {
    a.cfg.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  a.cfg.methods.clear();
  std::stringstream ss(a.methods);
  std::string tok;
  while (std::getline(ss, tok, ',')) a.cfg.methods.push_back(tok);
  a.cfg.alpha_grid = parse_double_list(a.alphas, "--alphas");
  a.cfg.train.hidden_dims = parse_int_list(a.hidden, "--hidden");

  markovgen::ExperimentRunner runner(a.cfg);
  runner.run(stdout);
  write_provenance(runner.table_path(), config, a.cfg.seeds.front());

  std::ifstream table(runner.table_path());
  std::printf("---- %s ----\n", runner.table_path().c_str());
  std::string line;
  while (std::getline(table, line)) std::printf("%s\n", line.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory generator toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON file with default option values");

  VerifyArgs va;
  CLI::App* verify = app.add_subcommand("verify-moments",
                                        "compare analytic jump moments against quadrature");
  verify->add_option("--trials", va.trials, "number of random (x0,x1) segments");
  verify->add_option("--eta", va.eta, "bridge diffusion scale");
  verify->add_option("--rho", va.rho, "knot stabilization scale");
  verify->add_option("--bins-list", va.bins_list, "comma separated quadrature bin counts");
  verify->add_option("--seed", va.seed, "rng seed");
  verify->add_option("--out", va.out_prefix, "output prefix for .csv and .svg");
  verify->add_option("--tol", va.gate_tol, "gate tolerance on the finest error");
  verify->add_flag("--no-gate", va.no_gate, "report only, never exit nonzero");

  GenDataArgs ga;
  CLI::App* gen = app.add_subcommand("gen-data", "generate a synthetic dataset CSV");
  gen->add_option("--dataset", ga.dataset, "trend | black_scholes");
  gen->add_option("--n", ga.n, "number of series");
  gen->add_option("--steps", ga.steps, "knots per series before subsampling");
  gen->add_option("--seed", ga.seed, "rng seed");
  gen->add_option("--noise-prob", ga.noise_prob, "trend: probability of a noisy step");
  gen->add_option("--bs-mu", ga.bs_mu, "black_scholes: drift");
  gen->add_option("--bs-sigma", ga.bs_sigma, "black_scholes: volatility");
  gen->add_option("--bs-s0", ga.bs_s0, "black_scholes: initial price");
  gen->add_option("--keep", ga.keep, "subsample to this many knots (0: keep all)");
  gen->add_option("--mode", ga.mode, "subsample mode: random | equidistant");
  gen->add_option("--sub-seed", ga.sub_seed, "subsample rng seed");
  gen->add_option("--out", ga.out, "output CSV path");

  TrainArgs ta;
  CLI::App* tr = app.add_subcommand("train", "fit a drift, jump, or endpoint model");
  tr->add_option("--data", ta.data, "training CSV")->required();
  tr->add_option("--val-data", ta.val_data, "validation CSV (default: hold out by id)");
  tr->add_option("--loss", ta.loss, "drift | jump | tfm");
  tr->add_option("--epochs", ta.cfg.epochs, "training epochs");
  tr->add_option("--lr", ta.cfg.lr, "Adam learning rate");
  tr->add_option("--batch", ta.cfg.batch_size, "minibatch size");
  tr->add_option("--memory", ta.cfg.memory_len, "memory window length m");
  tr->add_option("--hidden", ta.hidden, "comma separated hidden layer widths");
  tr->add_option("--eta2", ta.cfg.eta2, "bridge diffusion variance");
  tr->add_option("--rho2", ta.cfg.rho2, "knot stabilization variance");
  tr->add_option("--seed", ta.cfg.seed, "rng seed");
  tr->add_option("--steps-per-epoch", ta.cfg.steps_per_epoch, "0: one pass over segments");
  tr->add_option("--n-val-gen", ta.cfg.n_val_gen, "series generated per validation pass");
  tr->add_option("--sample-steps", ta.cfg.sample_steps, "Euler steps per segment");
  tr->add_option("--out-ckpt", ta.out, "checkpoint path");
  tr->add_option("--log", ta.log, "per-epoch CSV log path");

  SampleArgs sa;
  CLI::App* sm = app.add_subcommand("sample", "generate series from trained models");
  sm->add_option("--ckpt-drift", sa.ckpt_drift, "drift model checkpoint");
  sm->add_option("--ckpt-jump", sa.ckpt_jump, "jump model checkpoint");
  sm->add_option("--ckpt-tfm", sa.ckpt_tfm, "endpoint baseline checkpoint");
  sm->add_option("--alpha", sa.alpha, "superposition weight in [0,1]");
  sm->add_option("--grid", sa.grid, "knot grid, e.g. equidistant:50");
  sm->add_option("--n", sa.n, "number of series");
  sm->add_option("--steps", sa.steps, "Euler steps per segment");
  sm->add_option("--eta2", sa.eta2, "diffusion variance used when sampling");
  sm->add_option("--horizon", sa.horizon, "time horizon T");
  sm->add_option("--seed", sa.seed, "rng seed");
  sm->add_option("--x0-data", sa.x0_data, "CSV whose initial values seed x0");
  sm->add_option("--x0", sa.x0, "constant initial value when no --x0-data");
  sm->add_option("--out", sa.out, "output CSV path");

  EvalArgs ea;
  CLI::App* ev = app.add_subcommand("eval", "energy MMD between two datasets");
  ev->add_option("--gen", ea.gen, "generated CSV")->required();
  ev->add_option("--truth", ea.truth, "reference CSV")->required();
  ev->add_option("--out", ea.out, "JSON result path");

  ExperimentArgs xa;
  CLI::App* ex = app.add_subcommand("experiment", "run the method x subsampling grid");
  ex->add_option("--out-dir", xa.cfg.out_dir, "cell and table directory");
  ex->add_option("--dataset", xa.cfg.dataset, "trend | black_scholes");
  ex->add_option("--n-series", xa.cfg.n_series, "series per train/val pool");
  ex->add_option("--steps", xa.cfg.n_steps, "full grid size");
  ex->add_option("--n-test", xa.cfg.n_test, "fresh test series");
  ex->add_option("--subsample-rates", xa.keeps, "comma separated subsample knot counts");
  ex->add_option("--seeds", xa.seeds, "comma separated seeds");
  ex->add_option("--methods", xa.methods, "untrained,sde,jump,tfm,superposition");
  ex->add_option("--alphas", xa.alphas, "alpha grid for superposition");
  ex->add_option("--epochs", xa.cfg.train.epochs, "training epochs");
  ex->add_option("--lr", xa.cfg.train.lr, "Adam learning rate");
  ex->add_option("--batch", xa.cfg.train.batch_size, "minibatch size");
  ex->add_option("--memory", xa.cfg.train.memory_len, "memory window length m");
  ex->add_option("--hidden", xa.hidden, "comma separated hidden layer widths");
  ex->add_option("--eta2", xa.cfg.train.eta2, "bridge diffusion variance");
  ex->add_option("--rho2", xa.cfg.train.rho2, "knot stabilization variance");
  ex->add_option("--n-val-gen", xa.cfg.train.n_val_gen, "series per validation pass");
  ex->add_option("--sample-steps", xa.cfg.train.sample_steps, "Euler steps per segment");

  CLI11_PARSE(app, argc, argv);

  try {
    const json config = load_config_json(config_path);

    if (*verify) {
      cfg_override(*verify, config, "--trials", "trials", va.trials);
      cfg_override(*verify, config, "--eta", "eta", va.eta);
      cfg_override(*verify, config, "--rho", "rho", va.rho);
      cfg_override(*verify, config, "--bins-list", "bins_list", va.bins_list);
      cfg_override(*verify, config, "--seed", "seed", va.seed);
      cfg_override(*verify, config, "--out", "out", va.out_prefix);
      cfg_override(*verify, config, "--tol", "tol", va.gate_tol);
      return cmd_verify_moments(va, config);
    }
    if (*gen) {
      cfg_override(*gen, config, "--dataset", "dataset", ga.dataset);
      cfg_override(*gen, config, "--n", "n", ga.n);
      cfg_override(*gen, config, "--steps", "steps", ga.steps);
      cfg_override(*gen, config, "--seed", "seed", ga.seed);
      cfg_override(*gen, config, "--keep", "keep", ga.keep);
      cfg_override(*gen, config, "--mode", "mode", ga.mode);
      cfg_override(*gen, config, "--out", "out", ga.out);
      return cmd_gen_data(ga, config);
    }
    if (*tr) {
      cfg_override(*tr, config, "--loss", "loss", ta.loss);
      cfg_override(*tr, config, "--epochs", "epochs", ta.cfg.epochs);
      cfg_override(*tr, config, "--lr", "lr", ta.cfg.lr);
      cfg_override(*tr, config, "--batch", "batch", ta.cfg.batch_size);
      cfg_override(*tr, config, "--memory", "memory", ta.cfg.memory_len);
      cfg_override(*tr, config, "--hidden", "hidden", ta.hidden);
      cfg_override(*tr, config, "--eta2", "eta2", ta.cfg.eta2);
      cfg_override(*tr, config, "--rho2", "rho2", ta.cfg.rho2);
      cfg_override(*tr, config, "--seed", "seed", ta.cfg.seed);
      cfg_override(*tr, config, "--out-ckpt", "out_ckpt", ta.out);
      return cmd_train(ta, config);
    }
    if (*sm) {
      cfg_override(*sm, config, "--alpha", "alpha", sa.alpha);
      cfg_override(*sm, config, "--grid", "grid", sa.grid);
      cfg_override(*sm, config, "--n", "n", sa.n);
      cfg_override(*sm, config, "--steps", "steps", sa.steps);
      cfg_override(*sm, config, "--eta2", "eta2", sa.eta2);
      cfg_override(*sm, config, "--horizon", "horizon", sa.horizon);
      cfg_override(*sm, config, "--seed", "seed", sa.seed);
      cfg_override(*sm, config, "--out", "out", sa.out);
      return cmd_sample(sa, config);
    }
    if (*ev) return cmd_eval(ea, config);
    if (*ex) {
      cfg_override(*ex, config, "--out-dir", "out_dir", xa.cfg.out_dir);
      cfg_override(*ex, config, "--dataset", "dataset", xa.cfg.dataset);
      cfg_override(*ex, config, "--n-series", "n_series", xa.cfg.n_series);
      cfg_override(*ex, config, "--steps", "steps", xa.cfg.n_steps);
      cfg_override(*ex, config, "--n-test", "n_test", xa.cfg.n_test);
      cfg_override(*ex, config, "--subsample-rates", "subsample_rates", xa.keeps);
      cfg_override(*ex, config, "--seeds", "seeds", xa.seeds);
      cfg_override(*ex, config, "--methods", "methods", xa.methods);
      cfg_override(*ex, config, "--alphas", "alphas", xa.alphas);
      cfg_override(*ex, config, "--epochs", "epochs", xa.cfg.train.epochs);
      cfg_override(*ex, config, "--lr", "lr", xa.cfg.train.lr);
      cfg_override(*ex, config, "--batch", "batch", xa.cfg.train.batch_size);
      cfg_override(*ex, config, "--memory", "memory", xa.cfg.train.memory_len);
      cfg_override(*ex, config, "--hidden", "hidden", xa.hidden);
      cfg_override(*ex, config, "--eta2", "eta2", xa.cfg.train.eta2);
      cfg_override(*ex, config, "--rho2", "rho2", xa.cfg.train.rho2);
      return cmd_experiment(xa, config);
    }
  } catch (const markovgen::IoError& e) {
    std::fprintf(stderr, "I/O error: %s\n", e.what());
    return kExitIo;
  } catch (const markovgen::DivergenceError& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kExitDiverged;
  } catch (const markovgen::TrainingDiverged& e) {
    std::fprintf(stderr, "diverged: %s\n", e.what());
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitGate;
  }
  return kExitOk;
}
