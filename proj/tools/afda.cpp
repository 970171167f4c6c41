#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "afda/config.hpp"
#include "afda/data.hpp"
#include "afda/gradcheck_suite.hpp"
#include "afda/metrics.hpp"
#include "afda/metrics_log.hpp"
#include "afda/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct RunSpec {
  afda::ExperimentConfig cfg;
  std::uint64_t split_seed = 0;
  std::uint64_t train_seed = 0;
  std::string run_id;
};

std::vector<RunSpec> expand_runs(const afda::ExperimentConfig& base) {
  std::vector<afda::Backend> backends =
      base.grid_backends.empty() ? std::vector<afda::Backend>{base.backend} : base.grid_backends;
  std::vector<int> alignments = base.grid_alignment.empty()
                                    ? std::vector<int>{base.use_adversarial_alignment ? 1 : 0}
                                    : base.grid_alignment;
  std::vector<int> budgets = base.grid_label_budgets.empty()
                                 ? std::vector<int>{base.labeled}
                                 : base.grid_label_budgets;

  std::vector<RunSpec> runs;
  for (afda::Backend backend : backends)
    for (int alignment : alignments)
      for (int budget : budgets)
        for (std::uint64_t split_seed : base.split_seeds)
          for (std::uint64_t train_seed : base.train_seeds) {
            RunSpec run;
            run.cfg = base;
            run.cfg.backend = backend;
            run.cfg.use_adversarial_alignment = alignment != 0;
            run.cfg.labeled = budget;
            run.cfg.grid_backends.clear();
            run.cfg.grid_alignment.clear();
            run.cfg.grid_label_budgets.clear();
            run.cfg.split_seeds = {split_seed};
            run.cfg.train_seeds = {train_seed};
            run.split_seed = split_seed;
            run.train_seed = train_seed;
            run.run_id = afda::make_run_id(afda::backend_name(backend), alignment != 0, budget,
                                           split_seed, train_seed);
            runs.push_back(std::move(run));
          }
  return runs;
}

void dump_features(const afda::Trainer& trainer, const std::string& path) {
  const afda::SplitDataset& data = trainer.data();
  const afda::ParamSet& params = trainer.params();

  std::ofstream out(path);
  if (!out) throw std::runtime_error("feature dump: cannot open " + path);
  std::size_t feat_dim = static_cast<std::size_t>(trainer.config().feature_dim);
  out << "set,class,pred";
  for (std::size_t c = 0; c < feat_dim; ++c) out << ",f" << c;
  out << '\n';
  out.precision(17);

  auto write_rows = [&](const char* tag, const afda::Tensor& x, const std::vector<int>& y) {
    afda::Tensor feats = afda::mlp_eval(params.f, x);
    afda::Tensor logits = afda::mlp_eval_logits(params.g, feats);
    std::vector<int> pred = afda::predict_classes(logits);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      out << tag << ',' << y[r] << ',' << pred[r];
      for (std::size_t c = 0; c < feat_dim; ++c) out << ',' << feats.at(r, c);
      out << '\n';
    }
  };

  write_rows("l", data.x_labeled(), data.y_labeled());
  data.unlock_oracle();
  write_rows("ul", data.x_unlabeled(), data.unlabeled_oracle_labels());
  data.lock_oracle();
  write_rows("test", data.x_test(), data.y_test());
}

struct RunReport {
  std::string run_id;
  int final_epoch = -1;
  double final_test_error = 0.0;
  bool completed = false;
};

RunReport execute_run(const RunSpec& run, const fs::path& out_dir, int stop_after) {
  auto trainer = std::make_unique<afda::Trainer>(run.cfg, run.split_seed, run.train_seed);

  fs::path log_path = out_dir / (run.run_id + ".jsonl");
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw std::runtime_error("train: cannot open " + log_path.string());

  RunReport report;
  report.run_id = run.run_id;
  int ran = 0;
  while (!trainer->done() && (stop_after <= 0 || ran < stop_after)) {
    afda::EpochRecord rec = trainer->run_epoch();
    afda::MetricsRecord line;
    line.run_id = run.run_id;
    line.method = afda::backend_name(run.cfg.backend);
    line.alignment = run.cfg.use_adversarial_alignment;
    line.label_budget = run.cfg.labeled;
    line.split_seed = run.split_seed;
    line.train_seed = run.train_seed;
    line.epoch = rec;
    log << afda::metrics_to_json(line) << '\n';
    report.final_epoch = rec.epoch;
    report.final_test_error = rec.test_error;
    ++ran;
  }
  log.flush();

  std::ofstream ckpt(out_dir / (run.run_id + ".ckpt"), std::ios::binary | std::ios::trunc);
  trainer->save_checkpoint(ckpt);
  if (trainer->done()) {
    dump_features(*trainer, (out_dir / (run.run_id + "_features.csv")).string());
    report.completed = true;
  }
  return report;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              const std::string& seeds_csv, int workers, const std::string& resume_path,
              int stop_after) {
  fs::create_directories(out_dir);

  if (!resume_path.empty()) {
    std::ifstream in(resume_path, std::ios::binary);
    if (!in) {
      std::cerr << "train: cannot open checkpoint " << resume_path << '\n';
      return kExitUsage;
    }
    auto trainer = afda::Trainer::load_checkpoint(in);
    const afda::ExperimentConfig& cfg = trainer->config();
    std::string run_id =
        afda::make_run_id(afda::backend_name(cfg.backend), cfg.use_adversarial_alignment,
                          cfg.labeled, trainer->split_seed(), trainer->train_seed());
    fs::path log_path = fs::path(out_dir) / (run_id + ".jsonl");
    std::ofstream log(log_path, std::ios::app);
    if (!log) throw std::runtime_error("train: cannot open " + log_path.string());
    int ran = 0;
    while (!trainer->done() && (stop_after <= 0 || ran < stop_after)) {
      afda::EpochRecord rec = trainer->run_epoch();
      afda::MetricsRecord line;
      line.run_id = run_id;
      line.method = afda::backend_name(cfg.backend);
      line.alignment = cfg.use_adversarial_alignment;
      line.label_budget = cfg.labeled;
      line.split_seed = trainer->split_seed();
      line.train_seed = trainer->train_seed();
      line.epoch = rec;
      log << afda::metrics_to_json(line) << '\n';
      ++ran;
    }
    log.flush();
    std::ofstream ckpt(fs::path(out_dir) / (run_id + ".ckpt"),
                       std::ios::binary | std::ios::trunc);
    trainer->save_checkpoint(ckpt);
    if (trainer->done())
      dump_features(*trainer, (fs::path(out_dir) / (run_id + "_features.csv")).string());
    std::cout << "resumed " << run_id << " to epoch " << trainer->epoch() << '\n';
    return kExitOk;
  }

  afda::ExperimentConfig cfg =
      config_path.empty() ? afda::ExperimentConfig{} : afda::parse_config(config_path);
  if (!seeds_csv.empty()) {
    cfg.split_seeds.clear();
    std::istringstream is(seeds_csv);
    std::string item;
    while (std::getline(is, item, ','))
      cfg.split_seeds.push_back(static_cast<std::uint64_t>(std::stoull(item)));
    if (cfg.split_seeds.empty()) throw std::invalid_argument("--seeds: empty list");
  }
  cfg.validate();

  std::vector<RunSpec> runs = expand_runs(cfg);
  std::atomic<std::size_t> next{0};
  std::mutex io_mutex;
  std::vector<RunReport> reports(runs.size());
  std::atomic<bool> failed{false};
  std::string first_error;

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= runs.size() || failed.load()) return;
      try {
        RunReport report = execute_run(runs[i], out_dir, stop_after);
        std::lock_guard<std::mutex> lock(io_mutex);
        reports[i] = report;
        std::cout << report.run_id << ": epoch " << report.final_epoch << ", test error "
                  << report.final_test_error << (report.completed ? "" : " (stopped early)")
                  << '\n';
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(io_mutex);
        if (!failed.exchange(true)) first_error = runs[i].run_id + ": " + e.what();
        return;
      }
    }
  };

  int n_workers = std::max(1, workers);
  std::vector<std::thread> pool;
  for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  if (failed.load()) {
    std::cerr << "train: " << first_error << '\n';
    return kExitRuntime;
  }

  if (runs.size() > 1) {
    std::string csv = afda::summarize_csv(afda::collect_final_records(out_dir));
    std::ofstream summary(fs::path(out_dir) / "summary.csv", std::ios::trunc);
    summary << csv;
    std::cout << csv;
  }
  return kExitOk;
}

int cmd_mmd(const std::string& path_a, const std::string& path_b,
            const std::string& bandwidth) {
  for (const std::string& p : {path_a, path_b}) {
    if (!fs::exists(p)) {
      std::cerr << "mmd: no such file: " << p << '\n';
      return kExitUsage;
    }
  }
  afda::Tensor a = afda::load_feature_matrix(path_a);
  afda::Tensor b = afda::load_feature_matrix(path_b);

  afda::KernelSpec kernel;
  if (bandwidth != "median") {
    kernel.bandwidth_rule = afda::BandwidthRule::fixed;
    kernel.fixed_bandwidth = std::stod(bandwidth);
  }
  afda::MmdReport report = afda::mmd2_unbiased(a, b, kernel);

  ordered_json j;
  j["mmd2"] = report.mmd2;
  j["bandwidth"] = report.bandwidth;
  j["n_p"] = report.n_p;
  j["n_q"] = report.n_q;
  j["degenerate_bandwidth"] = report.degenerate_bandwidth;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

int cmd_bound(const std::string& ckpt_path, const std::string& config_path,
              long long split_seed_override) {
  std::ifstream in(ckpt_path, std::ios::binary);
  if (!in) {
    std::cerr << "bound: cannot open checkpoint " << ckpt_path << '\n';
    return kExitUsage;
  }
  auto trainer = afda::Trainer::load_checkpoint(in);

  const afda::ParamSet& params = trainer->params();
  if (params.g.weights.size() != 1)
    throw std::invalid_argument("bound: classifier g must be a single dense layer");

  afda::BoundReport report;
  if (config_path.empty()) {
    const afda::SplitDataset& data = trainer->data();
    data.unlock_oracle();
    report = afda::bound_report(params.f, params.g, data.x_labeled(), data.y_labeled(),
                                data.x_unlabeled(), data.unlabeled_oracle_labels());
  } else {
    afda::ExperimentConfig data_cfg = afda::parse_config(config_path);
    std::uint64_t seed = split_seed_override >= 0
                             ? static_cast<std::uint64_t>(split_seed_override)
                             : trainer->split_seed();
    afda::RawDataset raw = afda::build_raw_dataset(data_cfg);
    afda::SplitDataset data(raw, static_cast<std::size_t>(data_cfg.labeled),
                            data_cfg.test_fraction, seed);
    if (data_cfg.standardize) data.standardize();
    report = afda::bound_report(params.f, params.g, data.x_labeled(), data.y_labeled(),
                                data.x_unlabeled(), data.unlabeled_oracle_labels());
  }

  ordered_json j;
  j["lhs"] = report.lhs;
  j["feats_true"] = report.feats_true;
  j["label_true"] = report.label_true;
  j["feats_pred"] = report.feats_pred;
  j["label_pred"] = report.label_pred;
  j["rhs"] = report.rhs;
  j["lse_residual"] = report.lse_residual;
  std::cout << j.dump() << '\n';
  return kExitOk;
}

int cmd_summarize(const std::string& dir, const std::string& out_file) {
  if (!fs::is_directory(dir)) {
    std::cerr << "summarize: no such directory: " << dir << '\n';
    return kExitUsage;
  }
  std::string csv = afda::summarize_csv(afda::collect_final_records(dir));
  if (!out_file.empty()) {
    std::ofstream out(out_file, std::ios::trunc);
    if (!out) throw std::runtime_error("summarize: cannot open " + out_file);
    out << csv;
  }
  std::cout << csv;
  return kExitOk;
}

int cmd_gradcheck(int instances, std::uint64_t seed) {
  std::vector<afda::GradSuiteCase> results = afda::run_gradient_suite(instances, seed);
  bool ok = true;
  for (const afda::GradSuiteCase& c : results) {
    std::cout << (c.pass ? "[pass] " : "[FAIL] ") << c.name << "  max rel err "
              << c.max_rel_err;
    if (!c.pass && !c.worst_location.empty()) std::cout << "  (" << c.worst_location << ')';
    std::cout << '\n';
    ok = ok && c.pass;
  }
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adversarial feature distribution alignment for semi-supervised learning"};
  app.require_subcommand(1);

  std::string config_path, out_dir, seeds_csv, resume_path;
  int workers = 1, stop_after = 0;
  CLI::App* train = app.add_subcommand("train", "run experiments and write metrics/checkpoints");
  train->add_option("--config", config_path, "experiment config file (defaults when omitted)");
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seeds", seeds_csv, "comma-separated split seeds (overrides config)");
  train->add_option("--workers", workers, "parallel run slots")->check(CLI::PositiveNumber);
  train->add_option("--resume", resume_path, "continue training from a checkpoint");
  train->add_option("--stop-after", stop_after,
                    "stop each run after this many epochs (0 = train to completion)");

  std::string mmd_a, mmd_b, bandwidth = "median";
  CLI::App* mmd = app.add_subcommand("mmd", "unbiased MMD^2 between two feature CSV files");
  mmd->add_option("file_a", mmd_a, "first CSV file")->required();
  mmd->add_option("file_b", mmd_b, "second CSV file")->required();
  mmd->add_option("--bandwidth", bandwidth, "median or a fixed value (squared-distance units)");

  std::string ckpt_path, bound_config;
  long long bound_split_seed = -1;
  CLI::App* bound = app.add_subcommand("bound", "risk-gap bound terms of a checkpoint");
  bound->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
  bound->add_option("--config", bound_config, "dataset config (defaults to the checkpoint's)");
  bound->add_option("--split-seed", bound_split_seed, "split seed for --config datasets");

  std::string sum_dir, sum_out;
  CLI::App* summarize = app.add_subcommand("summarize", "aggregate metrics logs into a table");
  summarize->add_option("--dir", sum_dir, "directory of .jsonl logs")->required();
  summarize->add_option("--out", sum_out, "also write the CSV here");

  int gc_instances = 100;
  std::uint64_t gc_seed = 17;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--instances", gc_instances, "random instances per case")
      ->check(CLI::PositiveNumber);
  gradcheck->add_option("--seed", gc_seed, "suite RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed())
      return cmd_train(config_path, out_dir, seeds_csv, workers, resume_path, stop_after);
    if (mmd->parsed()) return cmd_mmd(mmd_a, mmd_b, bandwidth);
    if (bound->parsed()) return cmd_bound(ckpt_path, bound_config, bound_split_seed);
    if (summarize->parsed()) return cmd_summarize(sum_dir, sum_out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_instances, gc_seed);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
