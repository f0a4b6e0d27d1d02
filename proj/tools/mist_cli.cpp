// mist: command-line driver for dataset generation, the two training stages,
// leakage evaluation, the MI probe, the lambda sweep and the self-test.
//
// Exit codes: 0 success, 1 usage or config error, 2 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mist/checkpoint.hpp"
#include "mist/config.hpp"
#include "mist/evaluation.hpp"
#include "mist/io.hpp"
#include "mist/selftest.hpp"
#include "mist/synth.hpp"
#include "mist/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mist;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Flags {
  std::string config;
  std::string data;
  std::string run;
  std::string out;
  std::optional<double> lambda;
  std::optional<std::size_t> tokens;
  std::optional<std::uint64_t> seed;
  std::vector<double> lambda_list;
  std::size_t jobs = 1;
  std::string source = "model";
  std::string inject_fault;
};

fs::path run_dir(const Flags& f) {
  if (!f.run.empty()) return f.run;
  if (const char* root = std::getenv("MIST_RUN_ROOT"); root && *root) return root;
  throw UsageError("no run directory: pass --run DIR or set MIST_RUN_ROOT");
}

fs::path data_dir(const Flags& f) {
  if (f.data.empty()) throw UsageError("--data DIR is required");
  return f.data;
}

// flag > --config file > the run's config.json > built-in default
RunConfig resolve_config(const Flags& f, const std::optional<fs::path>& run) {
  RunConfig c;
  if (!f.config.empty()) {
    if (!fs::exists(f.config)) throw UsageError("config file not found: " + f.config);
    c = load_run_config(f.config);
  } else if (run && fs::exists(*run / "config.json")) {
    c = load_run_config(*run / "config.json");
  }
  if (f.lambda) c.train.lambda = *f.lambda;
  if (f.tokens) c.model.num_tokens = *f.tokens;
  if (f.seed) {
    c.train.pretrain_seed = *f.seed;
    c.train.train_seed = *f.seed;
  }
  validate(c);
  return c;
}

Dataset load_data(const Flags& f, RunConfig& cfg) {
  Dataset d = read_dataset(data_dir(f));
  // the dataset on disk is authoritative for its own generation parameters
  cfg.dataset = d.world.config;
  validate(cfg);
  return d;
}

void prepare_run_dir(const fs::path& run, const RunConfig& cfg) {
  fs::create_directories(run / "checkpoints");
  fs::create_directories(run / "reports");
  atomic_write(run / "config.json", run_config_to_json(cfg).dump(2) + "\n");
}

std::string report_name(const std::string& kind, const RunConfig& cfg, const std::string& ext) {
  return kind + "_" + config_hash(cfg) + "_seed" + std::to_string(cfg.train.train_seed) + ext;
}

fs::path pretrain_checkpoint(const fs::path& run) { return run / "checkpoints" / "pretrain.json"; }
fs::path final_checkpoint(const fs::path& run) { return run / "checkpoints" / "final.json"; }

Checkpoint require_checkpoint(const fs::path& path, const std::string& what) {
  if (!fs::exists(path)) throw std::runtime_error(what + ": expected checkpoint at " + path.string());
  return load_checkpoint(path);
}

void write_training_artifacts(const fs::path& run, const RunConfig& cfg, const TrainResult& r) {
  atomic_write(run / "metrics.csv", metrics_csv(r.metrics));
  Checkpoint ck = r.checkpoint;
  ck.config = run_config_to_json(cfg);
  save_checkpoint(final_checkpoint(run), ck);
}

void write_leakage(const fs::path& run, const RunConfig& cfg, LeakageReport rep) {
  rep.config = run_config_to_json(cfg);
  atomic_write(run / "reports" / report_name("leakage", cfg, ".json"), leakage_report_json(rep).dump(2) + "\n");
  atomic_write(run / "reports" / report_name("leakage", cfg, ".csv"), leakage_report_csv(rep));
}

// ---- commands --------------------------------------------------------------

int cmd_gen_data(const Flags& f) {
  if (f.out.empty()) throw UsageError("--out DIR is required");
  RunConfig cfg = resolve_config(f, std::nullopt);
  if (f.seed) cfg.dataset.seed = *f.seed;
  const fs::path out = f.out;
  const fs::path parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw std::runtime_error("output parent directory does not exist: " + parent.string());
  fs::create_directories(out);
  World w = make_world(cfg.dataset);
  write_dataset(out, w, make_splits(w));
  std::cout << "separable=" << (w.separable ? "true" : "false") << " min_separation=" << w.min_separation << "\n";
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_pretrain(const Flags& f) {
  const fs::path run = run_dir(f);
  RunConfig cfg = resolve_config(f, run);
  Dataset d = load_data(f, cfg);
  prepare_run_dir(run, cfg);
  PretrainResult r = pretrain(d.splits.pretrain, d.splits.heldout, cfg.model, cfg.train);
  Checkpoint ck = r.checkpoint;
  ck.config = run_config_to_json(cfg);
  save_checkpoint(pretrain_checkpoint(run), ck);
  json rep{{"heldout_l1", r.heldout_l1},
           {"threshold", cfg.train.pretrain_l1_threshold},
           {"converged", r.converged},
           {"epoch_loss", r.epoch_loss},
           {"config", run_config_to_json(cfg)}};
  atomic_write(run / "reports" / report_name("pretrain", cfg, ".json"), rep.dump(2) + "\n");
  std::cout << "heldout_l1=" << r.heldout_l1 << "\n";
  if (!r.converged) {
    std::cerr << "error: pretraining did not reach held-out L1 < " << cfg.train.pretrain_l1_threshold << "\n";
    return 2;
  }
  return 0;
}

int cmd_train(const Flags& f) {
  const fs::path run = run_dir(f);
  RunConfig cfg = resolve_config(f, run);
  if (!fs::exists(pretrain_checkpoint(run)))
    throw std::runtime_error("pretrained content encoder required: expected checkpoint at " +
                             pretrain_checkpoint(run).string() + " (run `mist pretrain` first)");
  Dataset d = load_data(f, cfg);
  ContentEncoder enc = content_encoder_from_checkpoint(load_checkpoint(pretrain_checkpoint(run)), cfg.model);
  prepare_run_dir(run, cfg);
  TrainHooks hooks;
  hooks.on_epoch_end = [&](std::size_t, const MistTrainer& t) {
    save_checkpoint(run / "checkpoints" / "latest.json",
                    make_checkpoint(t.model(), run_config_to_json(cfg), t.streams().state()));
  };
  TrainResult r = train_mist(d.splits.train, enc, cfg.model, cfg.train, hooks);
  write_training_artifacts(run, cfg, r);
  std::cout << "final_epoch_recon=" << r.epoch_recon.back() << "\n";
  return 0;
}

int cmd_eval(const Flags& f) {
  const fs::path run = run_dir(f);
  RunConfig cfg = resolve_config(f, run);
  Dataset d = load_data(f, cfg);
  SynthesisModel m = model_from_checkpoint(require_checkpoint(final_checkpoint(run), "eval"), cfg.model);
  LeakageReport rep = evaluate_leakage(m, d.world, d.splits.eval_pairs);
  fs::create_directories(run / "reports");
  write_leakage(run, cfg, rep);
  std::printf("mean_ter=%.17g\n", rep.mean_ter);
  std::printf("style_match_rate=%.17g\n", rep.style_match_rate);
  return 0;
}

int cmd_mi_probe(const Flags& f) {
  const fs::path run = run_dir(f);
  RunConfig cfg = resolve_config(f, run);
  Dataset d = load_data(f, cfg);
  ProbeSource source;
  if (f.source == "model") source = ProbeSource::kModel;
  else if (f.source == "noise") source = ProbeSource::kIndependentNoise;
  else if (f.source == "copy") source = ProbeSource::kCopy;
  else throw UsageError("--source must be model, noise or copy");
  SynthesisModel m = model_from_checkpoint(require_checkpoint(final_checkpoint(run), "mi-probe"), cfg.model);
  MiProbeOptions o{.epochs = cfg.eval.probe_epochs,
                   .batch_size = cfg.eval.probe_batch_size,
                   .learning_rate = cfg.eval.probe_learning_rate,
                   .hidden = cfg.model.statistics_hidden,
                   .seed = cfg.eval.probe_seed};
  MiProbeCurve c = mi_probe(m, d.splits.train, o, source);
  fs::create_directories(run / "reports");
  const std::string kind = "mi_probe_" + f.source;
  atomic_write(run / "reports" / report_name(kind, cfg, ".csv"), probe_curve_csv(c));
  json rep{{"source", f.source}, {"estimate", c.estimate}, {"config", run_config_to_json(cfg)}};
  atomic_write(run / "reports" / report_name(kind, cfg, ".json"), rep.dump(2) + "\n");
  std::printf("mi_final=%.17g\n", c.estimate.empty() ? 0.0 : c.estimate.back());
  return 0;
}

std::string lambda_tag(double l) {
  std::ostringstream os;
  os << l;
  return "lambda_" + os.str();
}

int cmd_sweep(const Flags& f) {
  const fs::path root = run_dir(f);
  RunConfig cfg = resolve_config(f, std::nullopt);
  Dataset d = load_data(f, cfg);
  std::vector<double> lambdas = f.lambda_list.empty() ? cfg.eval.lambda_list : f.lambda_list;
  std::vector<std::uint64_t> seeds = f.seed ? std::vector<std::uint64_t>{*f.seed} : cfg.eval.seeds;
  if (f.jobs < 1) throw UsageError("--jobs must be >= 1");

  ExperimentRunner runner(d, cfg);
  std::vector<SweepRow> rows = lambda_sweep(runner, lambdas, seeds, f.jobs);
  fs::create_directories(root);
  for (const auto& row : rows) {
    for (auto seed : seeds) {
      const ArmResult& a = runner.arm({.lambda = row.lambda, .clip_mi = cfg.train.clip_mi, .seed = seed});
      RunConfig rc = cfg;
      rc.train = runner.train_config(a.spec);
      const fs::path run = root / lambda_tag(row.lambda) / ("seed_" + std::to_string(seed));
      prepare_run_dir(run, rc);
      Checkpoint pre = runner.stage1(seed).checkpoint;
      pre.config = run_config_to_json(rc);
      save_checkpoint(pretrain_checkpoint(run), pre);
      write_training_artifacts(run, rc, a.training);
      write_leakage(run, rc, a.leakage);
    }
  }
  RunConfig echo = cfg;
  echo.eval.lambda_list = lambdas;
  echo.eval.seeds = seeds;
  atomic_write(root / ("sweep_" + config_hash(echo) + ".csv"), sweep_csv(rows));
  atomic_write(root / "config.json", run_config_to_json(echo).dump(2) + "\n");
  for (const auto& r : rows) std::printf("lambda=%g mean_ter=%.17g\n", r.lambda, r.mean_ter);
  return 0;
}

int cmd_selftest(const Flags& f) {
  SelfTestOptions o;
  o.fault_op = f.inject_fault;
  if (!o.fault_op.empty()) std::cout << "fault injected into gradient rule of op: " << o.fault_op << "\n";
  auto checks = run_selftest(o, std::cout);
  std::size_t failed = 0;
  for (const auto& c : checks)
    if (!c.ok) {
      ++failed;
      std::cerr << "selftest: check failed: " << c.name << "\n";
    }
  std::cout << (failed == 0 ? "selftest: all " + std::to_string(checks.size()) + " checks passed\n"
                            : "selftest: " + std::to_string(failed) + " of " + std::to_string(checks.size()) +
                                  " checks failed\n");
  return failed == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MIST: style/content disentanglement via adversarial MI minimization on synthetic sequences"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* s, bool training_flags) {
    s->add_option("--config", f.config, "run config JSON");
    s->add_option("--data", f.data, "dataset directory (from gen-data)");
    s->add_option("--run", f.run, "run directory (default: $MIST_RUN_ROOT)");
    s->add_option("--seed", f.seed, "seed for pretraining and training");
    if (training_flags) {
      s->add_option("--lambda", f.lambda, "MI weight")->check(CLI::NonNegativeNumber);
      s->add_option("--tokens", f.tokens, "number of style tokens K")->check(CLI::PositiveNumber);
    }
  };

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  gen->add_option("--config", f.config, "run config JSON (dataset block)");
  gen->add_option("--out", f.out, "output directory")->required();
  gen->add_option("--seed", f.seed, "dataset seed");
  auto* pre = app.add_subcommand("pretrain", "stage 1: content encoder on single-style data");
  common(pre, true);
  auto* train = app.add_subcommand("train", "stage 2: style encoder and decoder with the MI penalty");
  common(train, true);
  auto* eval = app.add_subcommand("eval", "content leakage on mismatched eval pairs");
  common(eval, true);
  auto* probe = app.add_subcommand("mi-probe", "post-hoc MI estimate against the frozen model");
  common(probe, true);
  probe->add_option("--source", f.source, "model | noise | copy");
  auto* sweep = app.add_subcommand("sweep", "lambda sweep with paired seeds");
  common(sweep, true);
  sweep->add_option("--lambda-list", f.lambda_list, "comma-separated lambda values")->delimiter(',');
  sweep->add_option("--jobs", f.jobs, "parallel training arms");
  auto* self = app.add_subcommand("selftest", "fast invariant suite");
  self->add_option("--inject-fault", f.inject_fault, "corrupt this op's gradient rule (test fixture)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*gen) return cmd_gen_data(f);
    if (*pre) return cmd_pretrain(f);
    if (*train) return cmd_train(f);
    if (*eval) return cmd_eval(f);
    if (*probe) return cmd_mi_probe(f);
    if (*sweep) return cmd_sweep(f);
    if (*self) return cmd_selftest(f);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
