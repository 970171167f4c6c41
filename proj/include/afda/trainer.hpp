#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "afda/adam.hpp"
#include "afda/config.hpp"
#include "afda/data.hpp"
#include "afda/losses.hpp"
#include "afda/metrics.hpp"
#include "afda/models.hpp"
#include "afda/schedules.hpp"

namespace afda {

/// Loss values of one alternating step, evaluated at the step's starting
/// parameters. Disabled components are NaN.
struct StepLosses {
  double sup = 0.0;
  double adv = 0.0;
  double cons = 0.0;
  double ent = 0.0;
};

/// One per-epoch row of the metrics stream. Heavy diagnostics (MMD, bound
/// terms) are NaN on epochs outside the evaluation cadence.
struct EpochRecord {
  int epoch = 0;
  StepLosses losses;
  double test_error = 0.0;
  double mmd2 = 0.0;
  double bandwidth = 0.0;
  double feats_true = 0.0, label_true = 0.0, feats_pred = 0.0, label_pred = 0.0;
  double lhs = 0.0;
  double mu = 0.0, eta = 0.0, gamma = 0.0;
  double wall_ms = 0.0;
};

/// Owns one experiment: dataset, the three parameter groups, optimizer and
/// schedule state. Runs the alternating optimization
///   theta_f descends L_Sup + mu L_Adv + eta L_Cons (+ L_Ent),
///   theta_g descends L_Sup + eta L_Cons (+ L_Ent) at the fresh theta_f,
///   theta_d ascends L_Adv at the fresh theta_f,
/// with an EMA teacher update when the Mean-Teacher backend is active.
class Trainer {
 public:
  Trainer(const ExperimentConfig& cfg, std::uint64_t split_seed, std::uint64_t train_seed);

  /// Runs epoch t (one pass over the unlabeled set) and returns its record.
  EpochRecord run_epoch();

  /// One alternating update on explicit batches under the given schedule.
  StepLosses train_step(const Batch& labeled, const Batch& unlabeled,
                        const ScheduleState& sched);

  int epoch() const { return t_; }
  bool done() const { return t_ >= cfg_.epochs; }

  const ExperimentConfig& config() const { return cfg_; }
  const SplitDataset& data() const { return data_; }
  ParamSet& params() { return params_; }
  const ParamSet& params() const { return params_; }
  const std::optional<TeacherState>& teacher() const { return teacher_; }
  std::uint64_t split_seed() const { return split_seed_; }
  std::uint64_t train_seed() const { return train_seed_; }

  EpochRecord evaluate(int epoch_for_record, bool heavy) const;

  void save_checkpoint(std::ostream& out) const;
  static std::unique_ptr<Trainer> load_checkpoint(std::istream& in);

 private:
  ExperimentConfig cfg_;
  std::uint64_t split_seed_, train_seed_;
  SplitDataset data_;
  BatchSampler sampler_;
  ParamSet params_;
  std::optional<TeacherState> teacher_;
  AdamState opt_f_, opt_g_, opt_d_;
  Rng train_rng_;
  int t_ = 0;

  Tensor make_perturbation(const Tensor& x);
};

/// Builds the raw dataset a config describes (moons / blobs / csv).
RawDataset build_raw_dataset(const ExperimentConfig& cfg);

/// Full run: epochs 0..T-1 with per-epoch records. T == 0 yields the
/// initial parameters and an empty log.
struct ExperimentResult {
  std::vector<EpochRecord> log;
  std::unique_ptr<Trainer> trainer;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t split_seed,
                                std::uint64_t train_seed);

/// Loss evaluations at fixed parameters (no tape retained), used by the
/// sign-contract checks and diagnostics.
double eval_adversarial_value(const Mlp& f, const Mlp& d, const Tensor& x_l,
                              const Tensor& x_ul);
double eval_supervised_value(const Mlp& f, const Mlp& g, const Tensor& x_l,
                             const std::vector<int>& y_l);

}  // namespace afda
