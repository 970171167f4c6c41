#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "afda/losses.hpp"
#include "afda/schedules.hpp"

namespace afda {

enum class DatasetKind { moons, blobs, csv };

/// Everything one experiment needs, with desk-scale defaults: two-moons,
/// 6 labels, adversarial alignment plus VAT consistency.
struct ExperimentConfig {
  // data
  DatasetKind data_kind = DatasetKind::moons;
  std::string csv_path;
  int moons_count = 1000;
  double moons_noise = 0.1;
  int blobs_classes = 4;
  int blobs_per_class = 250;
  double blobs_sigma = 1.0;
  double blobs_spread = 2.0;  // centers at (+-spread, +-spread)
  std::uint64_t data_seed = 7;
  int labeled = 6;
  double test_fraction = 0.25;
  bool standardize = true;

  // model
  int feature_dim = 16;
  std::vector<int> f_hidden = {64, 64};
  std::vector<int> d_hidden = {64, 64};

  // loss
  Backend backend = Backend::vat;
  bool use_adversarial_alignment = true;
  std::optional<bool> use_entropy;  // unset: enabled iff backend == vat
  DivergenceKind divergence = DivergenceKind::kl;
  double epsilon = 0.5;
  double vat_xi = 1e-6;
  int vat_power_iters = 1;
  double ema_alpha = 0.999;

  // training
  int epochs = 300;
  double lambda = 5.0;
  double eta_max = 1.0;
  int eta_ramp_epochs = 75;
  double learning_rate = 5e-4;
  int batch_labeled = 8;
  int batch_unlabeled = 92;
  int eval_every = 10;
  std::vector<std::uint64_t> split_seeds = {0, 1, 2, 3, 4};
  std::vector<std::uint64_t> train_seeds = {0};
  bool log_wall_clock = false;

  // optional ablation grid; empty = run this config as-is
  std::vector<Backend> grid_backends;
  std::vector<int> grid_alignment;  // 0 / 1
  std::vector<int> grid_label_budgets;

  bool entropy_enabled() const { return use_entropy.value_or(backend == Backend::vat); }
  bool has_grid() const {
    return !grid_backends.empty() || !grid_alignment.empty() || !grid_label_budgets.empty();
  }

  void validate() const;

  /// Canonical key=value round-trip (used by checkpoints).
  std::string to_text() const;
};

/// Parses the flat key=value config format ('#' comments, module-prefixed
/// keys). Unknown keys and out-of-range values are rejected. An empty file
/// yields all defaults.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

const char* backend_name(Backend b);
Backend backend_from_name(const std::string& name);
const char* divergence_name(DivergenceKind d);

}  // namespace afda
