#include "afda/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace afda {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

MlpSpec feature_spec(const ExperimentConfig& cfg, std::size_t input_dim) {
  MlpSpec spec;
  spec.widths.push_back(input_dim);
  for (int w : cfg.f_hidden) spec.widths.push_back(static_cast<std::size_t>(w));
  spec.widths.push_back(static_cast<std::size_t>(cfg.feature_dim));
  spec.out_act = OutputAct::none;
  return spec;
}

MlpSpec classifier_spec(const ExperimentConfig& cfg, std::size_t n_classes) {
  MlpSpec spec;
  spec.widths = {static_cast<std::size_t>(cfg.feature_dim), n_classes};
  spec.out_act = OutputAct::none;
  return spec;
}

MlpSpec discriminator_spec(const ExperimentConfig& cfg) {
  MlpSpec spec;
  spec.widths.push_back(static_cast<std::size_t>(cfg.feature_dim));
  for (int w : cfg.d_hidden) spec.widths.push_back(static_cast<std::size_t>(w));
  spec.widths.push_back(1);
  spec.out_act = OutputAct::sigmoid;
  return spec;
}

Tensor concat_tensors(const Tensor& a, const Tensor& b) {
  return eval_op(Op::concat_rows, &a, &b, 0.0);
}

std::vector<const Tensor*> grads_of(const GradStore& store, const std::vector<int>& ids,
                                    std::vector<Tensor>& storage) {
  storage.clear();
  storage.reserve(ids.size());
  for (int id : ids) storage.push_back(store.grad(id));
  std::vector<const Tensor*> out;
  for (const Tensor& t : storage) out.push_back(&t);
  return out;
}

}  // namespace

RawDataset build_raw_dataset(const ExperimentConfig& cfg) {
  switch (cfg.data_kind) {
    case DatasetKind::moons:
      return make_moons(cfg.moons_count, cfg.moons_noise, cfg.data_seed);
    case DatasetKind::blobs: {
      // Class centers evenly spaced on a circle; for four classes this puts
      // them at the corners (+-spread, +-spread).
      std::vector<std::vector<double>> centers;
      double radius = cfg.blobs_spread * std::numbers::sqrt2;
      for (int k = 0; k < cfg.blobs_classes; ++k) {
        double angle = 2.0 * std::numbers::pi * k / cfg.blobs_classes + std::numbers::pi / 4.0;
        centers.push_back({radius * std::cos(angle), radius * std::sin(angle)});
      }
      return make_blobs(cfg.blobs_classes, cfg.blobs_per_class, centers, cfg.blobs_sigma,
                        cfg.data_seed);
    }
    case DatasetKind::csv: {
      RawDataset raw = load_csv(cfg.csv_path);
      for (int y : raw.labels)
        if (y < 0)
          throw std::invalid_argument("csv dataset for training must be fully labeled");
      if (raw.n_classes < 2)
        throw std::invalid_argument("csv dataset needs at least 2 classes");
      return raw;
    }
  }
  throw std::logic_error("build_raw_dataset: unknown kind");
}

Trainer::Trainer(const ExperimentConfig& cfg, std::uint64_t split_seed,
                 std::uint64_t train_seed)
    : cfg_(cfg), split_seed_(split_seed), train_seed_(train_seed),
      data_([&] {
        cfg.validate();
        RawDataset raw = build_raw_dataset(cfg);
        return SplitDataset(raw, static_cast<std::size_t>(cfg.labeled), cfg.test_fraction,
                            split_seed);
      }()),
      sampler_(data_, static_cast<std::size_t>(cfg.batch_labeled),
               static_cast<std::size_t>(cfg.batch_unlabeled),
               mix_seed(split_seed, mix_seed(train_seed, 3))),
      train_rng_(mix_seed(split_seed, mix_seed(train_seed, 2))) {
  if (cfg_.standardize) data_.standardize();

  Rng init_rng(mix_seed(split_seed, mix_seed(train_seed, 1)));
  params_.f = init_mlp(feature_spec(cfg_, data_.dim()), init_rng);
  params_.g = init_mlp(classifier_spec(cfg_, static_cast<std::size_t>(data_.n_classes())),
                       init_rng);
  params_.d = init_mlp(discriminator_spec(cfg_), init_rng);

  opt_f_ = AdamState::like(std::as_const(params_.f).params());
  opt_g_ = AdamState::like(std::as_const(params_.g).params());
  opt_d_ = AdamState::like(std::as_const(params_.d).params());

  if (cfg_.backend == Backend::mean_teacher)
    teacher_ = make_teacher(params_.f, params_.g, cfg_.ema_alpha);

  data_.lock_oracle();
}

Tensor Trainer::make_perturbation(const Tensor& x) {
  if (cfg_.backend == Backend::vat) {
    PerturbationSpec spec;
    spec.kind = PerturbationKind::vat;
    spec.epsilon = cfg_.epsilon;
    spec.vat_xi = cfg_.vat_xi;
    spec.vat_power_iters = cfg_.vat_power_iters;
    return vat_perturbation(params_.f, params_.g, x, spec, train_rng_);
  }
  return random_perturbation(x, cfg_.epsilon, train_rng_);
}

StepLosses Trainer::train_step(const Batch& labeled, const Batch& unlabeled,
                               const ScheduleState& sched) {
  const bool align = cfg_.use_adversarial_alignment;
  const bool consistency = cfg_.backend != Backend::none;
  const bool entropy = cfg_.entropy_enabled();
  StepLosses out{kNan, kNan, kNan, kNan};

  // Consistency is applied to labeled and unlabeled samples alike.
  Tensor x_cons;
  if (consistency) x_cons = concat_tensors(labeled.x, unlabeled.x);

  // ---- theta_f: descend the full objective -------------------------------
  {
    Tape tape;
    MlpBinding bf = bind_mlp(tape, params_.f);
    MlpBinding bg = bind_mlp(tape, params_.g);
    int x_l = tape.leaf(labeled.x);
    int x_ul = tape.leaf(unlabeled.x);

    int objective = supervised_loss(tape, bf, bg, x_l, labeled.y);
    out.sup = tape.val(objective)[0];

    if (align) {
      MlpBinding bd = bind_mlp(tape, params_.d);
      int adv = adversarial_loss(tape, bf, bd, x_l, x_ul);
      out.adv = tape.val(adv)[0];
      objective = tape.add(objective, tape.scale(adv, sched.mu));
    }
    if (consistency) {
      Tensor pert = make_perturbation(x_cons);
      int x_c = tape.leaf(x_cons);
      int cons;
      if (cfg_.backend == Backend::mean_teacher) {
        MlpBinding tf = bind_mlp(tape, teacher_->f);
        MlpBinding tg = bind_mlp(tape, teacher_->g);
        cons = consistency_loss(tape, bf, bg, tf, tg, x_c, pert, cfg_.divergence);
      } else {
        cons = consistency_loss(tape, bf, bg, bf, bg, x_c, pert, cfg_.divergence);
      }
      out.cons = tape.val(cons)[0];
      objective = tape.add(objective, tape.scale(cons, sched.eta));
    }
    if (entropy) {
      int ent = entropy_loss(tape, bf, bg, x_ul);
      out.ent = tape.val(ent)[0];
      objective = tape.add(objective, ent);
    }

    std::vector<int> ids = bf.all_ids();
    GradStore grads = tape.backward(objective, ids);
    std::vector<Tensor> storage;
    adam_step(opt_f_, params_.f.params(), grads_of(grads, ids, storage), sched.gamma,
              sched.beta1, Direction::descent);
  }

  // ---- theta_g: descend at the fresh theta_f -----------------------------
  {
    Tape tape;
    MlpBinding bf = bind_mlp(tape, params_.f);
    MlpBinding bg = bind_mlp(tape, params_.g);
    int x_l = tape.leaf(labeled.x);

    int objective = supervised_loss(tape, bf, bg, x_l, labeled.y);
    if (consistency) {
      Tensor pert = make_perturbation(x_cons);
      int x_c = tape.leaf(x_cons);
      int cons;
      if (cfg_.backend == Backend::mean_teacher) {
        MlpBinding tf = bind_mlp(tape, teacher_->f);
        MlpBinding tg = bind_mlp(tape, teacher_->g);
        cons = consistency_loss(tape, bf, bg, tf, tg, x_c, pert, cfg_.divergence);
      } else {
        cons = consistency_loss(tape, bf, bg, bf, bg, x_c, pert, cfg_.divergence);
      }
      objective = tape.add(objective, tape.scale(cons, sched.eta));
    }
    if (entropy) {
      int x_ul = tape.leaf(unlabeled.x);
      objective = tape.add(objective, entropy_loss(tape, bf, bg, x_ul));
    }

    std::vector<int> ids = bg.all_ids();
    GradStore grads = tape.backward(objective, ids);
    std::vector<Tensor> storage;
    adam_step(opt_g_, params_.g.params(), grads_of(grads, ids, storage), sched.gamma,
              sched.beta1, Direction::descent);
  }

  // ---- theta_d: ascend the adversarial loss at the fresh theta_f ---------
  if (align) {
    Tape tape;
    MlpBinding bf = bind_mlp(tape, params_.f);
    MlpBinding bd = bind_mlp(tape, params_.d);
    int adv = adversarial_loss(tape, bf, bd, tape.leaf(labeled.x), tape.leaf(unlabeled.x));
    std::vector<int> ids = bd.all_ids();
    GradStore grads = tape.backward(adv, ids);
    std::vector<Tensor> storage;
    adam_step(opt_d_, params_.d.params(), grads_of(grads, ids, storage), sched.gamma,
              sched.beta1, Direction::ascent);
  }

  if (teacher_) ema_update(*teacher_, params_.f, params_.g);
  return out;
}

EpochRecord Trainer::evaluate(int epoch_for_record, bool heavy) const {
  EpochRecord rec;
  rec.epoch = epoch_for_record;
  rec.test_error = test_error(params_.f, params_.g, data_.x_test(), data_.y_test());
  rec.mmd2 = rec.bandwidth = kNan;
  rec.feats_true = rec.label_true = rec.feats_pred = rec.label_pred = rec.lhs = kNan;
  if (!heavy) return rec;

  Tensor feats_l = mlp_eval(params_.f, data_.x_labeled());
  Tensor feats_ul = mlp_eval(params_.f, data_.x_unlabeled());
  KernelSpec kernel;  // median heuristic
  MmdReport mmd = mmd2_unbiased(feats_l, feats_ul, kernel);
  rec.mmd2 = mmd.mmd2;
  rec.bandwidth = mmd.bandwidth;

  data_.unlock_oracle();
  BoundReport bound = bound_report(params_.f, params_.g, data_.x_labeled(), data_.y_labeled(),
                                   data_.x_unlabeled(), data_.unlabeled_oracle_labels());
  data_.lock_oracle();
  rec.feats_true = bound.feats_true;
  rec.label_true = bound.label_true;
  rec.feats_pred = bound.feats_pred;
  rec.label_pred = bound.label_pred;
  rec.lhs = bound.lhs;
  return rec;
}

EpochRecord Trainer::run_epoch() {
  if (done()) throw std::logic_error("run_epoch: training already finished");
  auto started = std::chrono::steady_clock::now();

  ScheduleState sched = ScheduleState::at(t_, cfg_.epochs, cfg_.lambda, cfg_.eta_ramp_epochs,
                                          cfg_.eta_max, cfg_.backend, cfg_.learning_rate);

  sampler_.start_epoch();
  StepLosses total{0.0, 0.0, 0.0, 0.0};
  std::size_t steps = 0;
  while (auto batches = sampler_.next()) {
    StepLosses losses = train_step(batches->first, batches->second, sched);
    total.sup += losses.sup;
    total.adv += losses.adv;
    total.cons += losses.cons;
    total.ent += losses.ent;
    ++steps;
  }

  bool heavy = cfg_.eval_every > 0 &&
               (t_ % cfg_.eval_every == 0 || t_ == cfg_.epochs - 1);
  EpochRecord rec = evaluate(t_, heavy);
  double inv = steps > 0 ? 1.0 / static_cast<double>(steps) : 0.0;
  rec.losses = {total.sup * inv, total.adv * inv, total.cons * inv, total.ent * inv};
  rec.mu = sched.mu;
  rec.eta = sched.eta;
  rec.gamma = sched.gamma;

  if (cfg_.log_wall_clock) {
    auto elapsed = std::chrono::steady_clock::now() - started;
    rec.wall_ms =
        std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(elapsed).count();
  }

  ++t_;
  return rec;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::uint64_t split_seed,
                                std::uint64_t train_seed) {
  ExperimentResult result;
  result.trainer = std::make_unique<Trainer>(cfg, split_seed, train_seed);
  while (!result.trainer->done()) result.log.push_back(result.trainer->run_epoch());
  return result;
}

double eval_adversarial_value(const Mlp& f, const Mlp& d, const Tensor& x_l,
                              const Tensor& x_ul) {
  Tape tape;
  MlpBinding bf = bind_mlp(tape, f);
  MlpBinding bd = bind_mlp(tape, d);
  return tape.val(adversarial_loss(tape, bf, bd, tape.leaf(x_l), tape.leaf(x_ul)))[0];
}

double eval_supervised_value(const Mlp& f, const Mlp& g, const Tensor& x_l,
                             const std::vector<int>& y_l) {
  Tape tape;
  MlpBinding bf = bind_mlp(tape, f);
  MlpBinding bg = bind_mlp(tape, g);
  return tape.val(supervised_loss(tape, bf, bg, tape.leaf(x_l), y_l))[0];
}

}  // namespace afda
