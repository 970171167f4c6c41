// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit status is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "afda/gradcheck_suite.hpp"
#include "afda/losses.hpp"
#include "afda/metrics.hpp"
#include "afda/metrics_log.hpp"
#include "afda/models.hpp"
#include "afda/rng.hpp"
#include "afda/schedules.hpp"
#include "afda/trainer.hpp"

using namespace afda;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Check {
  // appends "name: ok" or raises the failure flag with a message
  Outcome* out;
  bool ok = true;
  std::ostringstream detail;

  explicit Check(Outcome* o) : out(o) {}
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << (detail.tellp() > 0 ? "; " : "") << what;
    }
  }
  void note(const std::string& what) {
    detail << (detail.tellp() > 0 ? "; " : "") << what;
  }
  void finish() {
    out->pass = ok;
    out->detail = detail.str();
  }
};

Tensor gaussian_cloud(Rng& rng, std::size_t n, std::size_t d, double shift = 0.0) {
  Tensor x({n, d});
  for (double& v : x.data()) v = rng.normal() + shift;
  return x;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = mean_of(a), mb = mean_of(b);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------
// 1. gradient suite
// ---------------------------------------------------------------------------

Outcome criterion_gradients() {
  Outcome out;
  Check check(&out);
  std::vector<GradSuiteCase> results = run_gradient_suite(100, 20260811);
  double worst = 0.0;
  for (const GradSuiteCase& c : results) {
    check.expect(c.pass, c.name + " failed (" + c.worst_location + ")");
    worst = std::max(worst, c.max_rel_err);
  }
  check.note("max rel err " + fmt(worst, 3) + " over " + std::to_string(results.size()) +
             " cases x 100 instances");
  check.finish();
  return out;
}

// ---------------------------------------------------------------------------
// 2. MMD suite
// ---------------------------------------------------------------------------

Outcome criterion_mmd() {
  Outcome out;
  Check check(&out);

  // (a) hand-derived fixture P = Q = {0, 2}, bandwidth 4 -> e^-1 - 1
  Tensor p = Tensor::matrix(2, 1, {0.0, 2.0});
  KernelSpec fixed;
  fixed.bandwidth_rule = BandwidthRule::fixed;
  fixed.fixed_bandwidth = 4.0;
  double fixture = mmd2_unbiased(p, p, fixed).mmd2;
  check.expect(std::fabs(fixture - (std::exp(-1.0) - 1.0)) <= 1e-12,
               "fixture deviates: " + fmt(fixture, 16));

  // (b) unbiasedness over 200 two-sample resamples of one 2-D Gaussian
  Rng rng(42);
  KernelSpec mc;
  mc.bandwidth_rule = BandwidthRule::fixed;
  mc.fixed_bandwidth = 2.0;
  std::vector<double> values;
  for (int i = 0; i < 200; ++i)
    values.push_back(
        mmd2_unbiased(gaussian_cloud(rng, 25, 2), gaussian_cloud(rng, 25, 2), mc).mmd2);
  double mean = mean_of(values);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (values.size() - 1.0);
  double sem = std::sqrt(var / static_cast<double>(values.size()));
  check.expect(std::fabs(mean) <= 3.0 * sem,
               "monte-carlo mean " + fmt(mean) + " outside 3 SE " + fmt(3.0 * sem));
  check.note("MC mean " + fmt(mean, 2) + " (3 SE " + fmt(3.0 * sem, 2) + ")");

  // (c) strict monotone increase across mean gaps {0, 2, 5, 10} sigma
  KernelSpec median;  // production configuration
  double prev = -2.0;
  bool monotone = true;
  std::vector<double> curve;
  for (double gap : {0.0, 2.0, 5.0, 10.0}) {
    double acc = 0.0;
    for (int rep = 0; rep < 5; ++rep)
      acc += mmd2_unbiased(gaussian_cloud(rng, 200, 2), gaussian_cloud(rng, 200, 2, gap),
                           median)
                 .mmd2;
    acc /= 5.0;
    curve.push_back(acc);
    monotone = monotone && acc > prev;
    prev = acc;
  }
  check.expect(monotone, "gap curve not strictly increasing");
  check.expect(curve.back() > 0.5, "10-sigma separation only reaches " + fmt(curve.back()));
  check.finish();
  return out;
}

// ---------------------------------------------------------------------------
// 3. schedule laws
// ---------------------------------------------------------------------------

Outcome criterion_schedules() {
  Outcome out;
  Check check(&out);
  for (int total : {1, 10, 300})
    for (double lambda : {0.5, 5.0, 20.0})
      check.expect(mu_schedule(0, total, lambda) == 0.0, "mu(0) != 0");

  double prev = -1.0;
  bool monotone = true;
  for (int t = 0; t <= 300; ++t) {
    double mu = mu_schedule(t, 300, 5.0);
    monotone = monotone && mu >= prev;
    prev = mu;
  }
  check.expect(monotone, "mu not monotone for lambda = 5");
  check.expect(std::fabs(mu_schedule(300, 300, 5.0) - std::tanh(2.5)) <= 1e-12,
               "mu(T) misses tanh(2.5)");

  for (int t : {0, 1, 150, 299})
    check.expect(eta_schedule(t, 80, 7.0, Backend::vat) == 1.0, "eta_vat != 1");
  check.expect(std::fabs(eta_schedule(0, 80, 7.0, Backend::pi) - 7.0 * std::exp(-5.0)) <= 1e-12,
               "eta ramp start");
  check.expect(std::fabs(eta_schedule(80, 80, 7.0, Backend::pi) - 7.0) <= 1e-12,
               "eta ramp end");
  check.expect(std::fabs(eta_schedule(200, 80, 7.0, Backend::mean_teacher) - 7.0) <= 1e-12,
               "eta after ramp");
  check.finish();
  return out;
}

// ---------------------------------------------------------------------------
// 4. bound verification
// ---------------------------------------------------------------------------

struct BoundInstance {
  Tensor w, b, feats_l, feats_ul, z_l, z_ul;
  std::vector<int> y_l, y_ul;
};

Tensor linear_logits(const Tensor& w, const Tensor& b, const Tensor& f) {
  Tensor z = eval_op(Op::matmul, &f, &w, 0.0);
  return eval_op(Op::add, &z, &b, 0.0);
}

BoundInstance random_bound_instance(Rng& rng, double weight_scale) {
  BoundInstance inst;
  const std::size_t n = 10, m = 14, fdim = 3, k = 3;
  inst.w = Tensor({fdim, k});
  for (double& v : inst.w.data()) v = weight_scale * rng.normal();
  inst.b = Tensor({k});
  for (double& v : inst.b.data()) v = 0.3 * weight_scale * rng.normal();
  inst.feats_l = gaussian_cloud(rng, n, fdim);
  inst.feats_ul = gaussian_cloud(rng, m, fdim);
  for (std::size_t i = 0; i < n; ++i) inst.y_l.push_back(static_cast<int>(rng.index(k)));
  for (std::size_t i = 0; i < m; ++i) inst.y_ul.push_back(static_cast<int>(rng.index(k)));
  inst.z_l = linear_logits(inst.w, inst.b, inst.feats_l);
  inst.z_ul = linear_logits(inst.w, inst.b, inst.feats_ul);
  return inst;
}

double min_margin(const Tensor& z) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < z.rows(); ++r) {
    double top = -std::numeric_limits<double>::infinity(), second = top;
    for (std::size_t c = 0; c < z.cols(); ++c) {
      if (z.at(r, c) > top) {
        second = top;
        top = z.at(r, c);
      } else if (z.at(r, c) > second) {
        second = z.at(r, c);
      }
    }
    worst = std::min(worst, top - second);
  }
  return worst;
}

Outcome criterion_bound() {
  Outcome out;
  Check check(&out);
  Rng rng(7);

  // (a) triangle chain with the LSE term kept exact: zero violations
  int chain_violations = 0;
  for (int i = 0; i < 100; ++i) {
    BoundInstance inst = random_bound_instance(rng, 1.2);
    BoundReport report =
        bound_terms(inst.w, inst.b, inst.feats_l, inst.y_l, inst.feats_ul, inst.y_ul,
                    predict_classes(inst.z_l), predict_classes(inst.z_ul));

    std::vector<double> delta(3, 0.0);
    double inv_n = 1.0 / 10.0, inv_m = 1.0 / 14.0;
    for (std::size_t r = 0; r < 10; ++r)
      delta[static_cast<std::size_t>(inst.y_l[r])] +=
          inv_n * inst.z_l.at(r, static_cast<std::size_t>(inst.y_l[r]));
    for (std::size_t r = 0; r < 14; ++r)
      delta[static_cast<std::size_t>(inst.y_ul[r])] -=
          inv_m * inst.z_ul.at(r, static_cast<std::size_t>(inst.y_ul[r]));
    Tensor lse_l = eval_op(Op::lse_row, &inst.z_l, nullptr, 0.0);
    Tensor lse_ul = eval_op(Op::lse_row, &inst.z_ul, nullptr, 0.0);
    double lse_gap = 0.0;
    for (std::size_t r = 0; r < 14; ++r) lse_gap += inv_m * lse_ul.at(r, 0);
    for (std::size_t r = 0; r < 10; ++r) lse_gap -= inv_n * lse_l.at(r, 0);

    double reordered = lse_gap, abs_sum = 0.0;
    for (double d : delta) {
      reordered += d;
      abs_sum += std::fabs(d);
    }
    bool equality = std::fabs(report.lhs - std::fabs(reordered)) <=
                    1e-9 * std::max(1.0, report.lhs);
    bool triangle1 = report.lhs <= abs_sum + std::fabs(lse_gap) + 1e-12;
    bool triangle2 = abs_sum <= report.feats_true + report.label_true + 1e-12;
    if (!(equality && triangle1 && triangle2)) ++chain_violations;
  }
  check.expect(chain_violations == 0,
               std::to_string(chain_violations) + " exact-chain violations");

  // (b) approximate bound lhs <= rhs on 100 confident instances
  int approx_violations = 0, built = 0;
  while (built < 100) {
    BoundInstance inst = random_bound_instance(rng, 1.0);
    double margin = std::min(min_margin(inst.z_l), min_margin(inst.z_ul));
    if (margin < 0.05) continue;
    double scale = std::max(1.0, 5.0 / margin * 1.02);
    for (double& v : inst.w.data()) v *= scale;
    for (double& v : inst.b.data()) v *= scale;
    inst.z_l = linear_logits(inst.w, inst.b, inst.feats_l);
    inst.z_ul = linear_logits(inst.w, inst.b, inst.feats_ul);
    if (std::min(min_margin(inst.z_l), min_margin(inst.z_ul)) < 5.0) continue;
    BoundReport report =
        bound_terms(inst.w, inst.b, inst.feats_l, inst.y_l, inst.feats_ul, inst.y_ul,
                    predict_classes(inst.z_l), predict_classes(inst.z_ul));
    if (report.lhs > report.rhs) ++approx_violations;
    ++built;
  }
  check.expect(approx_violations == 0,
               std::to_string(approx_violations) + " approximate-bound violations");

  // (c) worked 1-sample fixture
  Tensor w = Tensor::matrix(1, 2, {1.0, -1.0});
  Tensor b = Tensor::vec({0.0, 0.0});
  BoundReport fixture = bound_terms(w, b, Tensor::matrix(1, 1, {2.0}), {0},
                                    Tensor::matrix(1, 1, {4.0}), {0}, {0}, {0});
  check.expect(fixture.rhs == 4.0, "fixture rhs " + fmt(fixture.rhs, 10));
  check.expect(std::fabs(fixture.lhs - 0.017815) <= 1e-6,
               "fixture lhs " + fmt(fixture.lhs, 10));
  check.finish();
  return out;
}

// ---------------------------------------------------------------------------
// 5. toy ablation trend
// ---------------------------------------------------------------------------

ExperimentConfig trend_base_config() {
  ExperimentConfig cfg;
  cfg.data_kind = DatasetKind::moons;
  cfg.moons_count = 1000;
  cfg.moons_noise = 0.1;
  cfg.labeled = 6;
  cfg.test_fraction = 0.25;
  cfg.epochs = 300;
  cfg.eval_every = 300;  // heavy metrics on the first and final epoch only
  cfg.epsilon = 0.5;
  return cfg;
}

Outcome criterion_trend() {
  Outcome out;
  Check check(&out);

  struct Cell {
    const char* name;
    Backend backend;
    bool alignment;
    std::vector<double> errors, mmd2s;
  };
  std::vector<Cell> cells = {{"supervised-only", Backend::none, false, {}, {}},
                             {"alignment-only", Backend::none, true, {}, {}},
                             {"afda", Backend::vat, true, {}, {}}};

  for (Cell& cell : cells) {
    for (std::uint64_t seed : {0, 1, 2, 3, 4}) {
      ExperimentConfig cfg = trend_base_config();
      cfg.backend = cell.backend;
      cfg.use_adversarial_alignment = cell.alignment;
      ExperimentResult result = run_experiment(cfg, seed, 0);
      cell.errors.push_back(result.log.back().test_error);
      cell.mmd2s.push_back(result.log.back().mmd2);
    }
  }

  double err_sup = mean_of(cells[0].errors);
  double err_align = mean_of(cells[1].errors);
  double err_afda = mean_of(cells[2].errors);
  double mmd_sup = mean_of(cells[0].mmd2s);
  double mmd_afda = mean_of(cells[2].mmd2s);

  check.note("mean err sup/align/afda = " + fmt(err_sup) + "/" + fmt(err_align) + "/" +
             fmt(err_afda) + ", mean mmd2 sup/afda = " + fmt(mmd_sup) + "/" + fmt(mmd_afda));
  check.expect(err_afda < err_align, "afda not better than alignment-only");
  check.expect(err_align < err_sup, "alignment-only not better than supervised-only");
  check.expect(mmd_afda < mmd_sup, "afda mmd2 not below supervised-only");
  check.finish();
  return out;
}

// ---------------------------------------------------------------------------
// 6. error <-> MMD correlation
// ---------------------------------------------------------------------------

Outcome criterion_correlation() {
  Outcome out;
  Check check(&out);

  std::vector<double> errors, mmd2s;
  for (int budget : {8, 16, 64}) {
    for (std::uint64_t seed : {0, 1, 2, 3, 4}) {
      ExperimentConfig cfg;
      cfg.data_kind = DatasetKind::blobs;
      cfg.blobs_classes = 4;
      cfg.blobs_per_class = 250;
      cfg.blobs_sigma = 1.3;
      cfg.blobs_spread = 2.0;
      cfg.labeled = budget;
      cfg.test_fraction = 0.25;
      cfg.backend = Backend::none;
      cfg.use_adversarial_alignment = false;
      cfg.epochs = 60;
      cfg.eval_every = 60;
      ExperimentResult result = run_experiment(cfg, seed, 0);
      errors.push_back(result.log.back().test_error);
      mmd2s.push_back(result.log.back().mmd2);
    }
  }
  double r = pearson(errors, mmd2s);
  check.note("pearson r = " + fmt(r) + " over 15 runs");
  check.expect(r > 0.0, "correlation not positive");
  check.finish();
  return out;
}

// ---------------------------------------------------------------------------
// 7. mechanism checks
// ---------------------------------------------------------------------------

Outcome criterion_mechanisms() {
  Outcome out;
  Check check(&out);
  Rng rng(3);

  // VAT perturbation norm
  Mlp f = init_mlp({{2, 16, 8}, OutputAct::none}, rng);
  Mlp g = init_mlp({{8, 2}, OutputAct::none}, rng);
  Tensor x = gaussian_cloud(rng, 10, 2);
  PerturbationSpec spec;
  spec.kind = PerturbationKind::vat;
  spec.epsilon = 0.8;
  Tensor r_adv = vat_perturbation(f, g, x, spec, rng);
  for (std::size_t row = 0; row < r_adv.rows(); ++row) {
    double norm = std::hypot(r_adv.at(row, 0), r_adv.at(row, 1));
    check.expect(std::fabs(norm - spec.epsilon) <= 1e-10, "vat norm off at row " +
                                                              std::to_string(row));
  }

  // VAT divergence vs an exhaustive direction grid on a 2-D logistic model
  Mlp ident = init_mlp({{2, 2}, OutputAct::none}, rng);
  for (double& v : ident.weights[0].data()) v = 0.0;
  ident.weights[0].at(0, 0) = 1.0;
  ident.weights[0].at(1, 1) = 1.0;
  for (double& v : ident.biases[0].data()) v = 0.0;
  Mlp logistic = init_mlp({{2, 2}, OutputAct::none}, rng);
  Tensor x0 = Tensor::matrix(1, 2, {0.3, -0.4});
  PerturbationSpec vspec;
  vspec.kind = PerturbationKind::vat;
  vspec.epsilon = 0.5;
  Tensor r1 = vat_perturbation(ident, logistic, x0, vspec, rng);

  auto model_kl = [&](double dx, double dy) {
    Tensor moved = Tensor::matrix(1, 2, {x0.at(0, 0) + dx, x0.at(0, 1) + dy});
    Tensor p = softmax_rows(mlp_eval_logits(logistic, x0));
    Tensor q = softmax_rows(mlp_eval_logits(logistic, moved));
    double kl = 0.0;
    for (std::size_t k = 0; k < 2; ++k)
      if (p[k] > 0.0) kl += p[k] * std::log(p[k] / q[k]);
    return kl;
  };
  double got = model_kl(r1.at(0, 0), r1.at(0, 1));
  double best = 0.0;
  for (int i = 0; i < 3600; ++i) {
    double a = 2.0 * std::numbers::pi * i / 3600.0;
    best = std::max(best, model_kl(vspec.epsilon * std::cos(a), vspec.epsilon * std::sin(a)));
  }
  check.expect(got >= 0.95 * best,
               "vat kl " + fmt(got, 6) + " below 0.95 x grid max " + fmt(best, 6));

  // EMA geometric recursion
  Mlp sf = init_mlp({{1, 1}, OutputAct::none}, rng);
  Mlp sg = init_mlp({{1, 1}, OutputAct::none}, rng);
  sf.weights[0][0] = 1.7;
  sg.weights[0][0] = 1.7;
  TeacherState teacher = make_teacher(sf, sg, 0.999);
  teacher.f.weights[0][0] = 0.0;
  teacher.g.weights[0][0] = 0.0;
  teacher.f.biases[0][0] = 0.0;
  teacher.g.biases[0][0] = 0.0;
  const int k_steps = 400;
  for (int i = 0; i < k_steps; ++i) ema_update(teacher, sf, sg);
  double expect = 1.7 * (1.0 - std::pow(0.999, k_steps));
  check.expect(std::fabs(teacher.f.weights[0][0] - expect) <= 1e-12,
               "ema recursion deviates by " + fmt(teacher.f.weights[0][0] - expect));

  // frozen-batch sign contracts at gamma = 1e-4
  ExperimentConfig cfg;
  cfg.moons_count = 200;
  cfg.labeled = 6;
  cfg.backend = Backend::none;
  cfg.use_adversarial_alignment = true;
  cfg.learning_rate = 1e-4;
  cfg.epochs = 10;
  cfg.batch_labeled = 6;
  cfg.batch_unlabeled = 64;
  Trainer trainer(cfg, 1, 1);
  Batch l, ul;
  l.x = trainer.data().x_labeled();
  l.y = trainer.data().y_labeled();
  ul.x = trainer.data().x_unlabeled();
  Mlp f0 = trainer.params().f, g0 = trainer.params().g, d0 = trainer.params().d;
  ScheduleState sched = ScheduleState::at(5, cfg.epochs, cfg.lambda, cfg.eta_ramp_epochs,
                                          cfg.eta_max, cfg.backend, cfg.learning_rate);
  double objective_before = eval_supervised_value(f0, g0, l.x, l.y) +
                            sched.mu * eval_adversarial_value(f0, d0, l.x, ul.x);
  trainer.train_step(l, ul, sched);
  const Mlp& f1 = trainer.params().f;
  double objective_after = eval_supervised_value(f1, g0, l.x, l.y) +
                           sched.mu * eval_adversarial_value(f1, d0, l.x, ul.x);
  check.expect(objective_after <= objective_before + 1e-9,
               "theta_f step increased the combined objective");
  double adv_pre = eval_adversarial_value(f1, d0, l.x, ul.x);
  double adv_post = eval_adversarial_value(f1, trainer.params().d, l.x, ul.x);
  check.expect(adv_post >= adv_pre - 1e-9, "theta_d ascent decreased the adversarial loss");
  check.finish();
  return out;
}

// ---------------------------------------------------------------------------
// 8. determinism and persistence
// ---------------------------------------------------------------------------

std::string log_bytes(const std::vector<EpochRecord>& log) {
  std::string bytes;
  for (const EpochRecord& rec : log) {
    MetricsRecord m;
    m.run_id = "det";
    m.method = "vat";
    m.alignment = true;
    m.label_budget = 6;
    m.epoch = rec;
    bytes += metrics_to_json(m);
    bytes += '\n';
  }
  return bytes;
}

Outcome criterion_determinism() {
  Outcome out;
  Check check(&out);

  ExperimentConfig cfg;
  cfg.moons_count = 160;
  cfg.labeled = 6;
  cfg.backend = Backend::vat;
  cfg.epochs = 5;
  cfg.eval_every = 2;
  cfg.feature_dim = 8;
  cfg.f_hidden = {16};
  cfg.d_hidden = {16};
  cfg.batch_labeled = 6;
  cfg.batch_unlabeled = 40;

  ExperimentResult a = run_experiment(cfg, 4, 4);
  ExperimentResult b = run_experiment(cfg, 4, 4);
  check.expect(log_bytes(a.log) == log_bytes(b.log), "reruns differ");

  // checkpoint round trip: 2 epochs + resume 3 == straight 5
  Trainer half(cfg, 4, 4);
  std::vector<EpochRecord> stitched;
  for (int i = 0; i < 2; ++i) stitched.push_back(half.run_epoch());
  std::stringstream buffer;
  half.save_checkpoint(buffer);
  auto restored = Trainer::load_checkpoint(buffer);
  while (!restored->done()) stitched.push_back(restored->run_epoch());
  check.expect(log_bytes(stitched) == log_bytes(a.log), "resumed log differs");

  bool params_match = true;
  for (std::size_t layer = 0; layer < a.trainer->params().f.weights.size(); ++layer)
    params_match = params_match && restored->params().f.weights[layer].equals(
                                       a.trainer->params().f.weights[layer]);
  for (std::size_t layer = 0; layer < a.trainer->params().d.weights.size(); ++layer)
    params_match = params_match && restored->params().d.weights[layer].equals(
                                       a.trainer->params().d.weights[layer]);
  check.expect(params_match, "resumed parameters differ");
  check.finish();
  return out;
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
  double time_limit_s;
};

}  // namespace

int main() {
  std::vector<Criterion> criteria = {
      {1, "gradient suite", criterion_gradients, 30.0},
      {2, "mmd suite", criterion_mmd, 20.0},
      {3, "schedule laws", criterion_schedules, 10.0},
      {4, "bound verification", criterion_bound, 60.0},
      {5, "toy ablation trend", criterion_trend, 600.0},
      {6, "error-mmd correlation", criterion_correlation, 300.0},
      {7, "mechanism checks", criterion_mechanisms, 60.0},
      {8, "determinism and persistence", criterion_determinism, 120.0},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (seconds > c.time_limit_s) {
      outcome.pass = false;
      outcome.detail += (outcome.detail.empty() ? "" : "; ");
      outcome.detail += "exceeded " + fmt(c.time_limit_s, 3) + " s budget";
    }
    std::printf("[%s] criterion %d: %s (%.1f s)%s%s\n", outcome.pass ? "PASS" : "FAIL", c.id,
                c.name, seconds, outcome.detail.empty() ? "" : " -- ",
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  return failures;
}
