#include "afda/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "afda/rng.hpp"

namespace afda {

namespace {

double sq_dist_rows(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.cols(); ++c) {
    double d = a.at(i, c) - b.at(j, c);
    s += d * d;
  }
  return s;
}

Tensor subsample_rows(const Tensor& x, std::size_t cap) {
  if (x.rows() <= cap) return x;
  std::vector<std::size_t> idx(x.rows());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(0xafda);
  rng.shuffle(idx);
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());
  Tensor out({cap, x.cols()});
  for (std::size_t r = 0; r < cap; ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out.at(r, c) = x.at(idx[r], c);
  return out;
}

}  // namespace

double rbf_kernel(const std::vector<double>& p, const std::vector<double>& q,
                  double bandwidth) {
  if (bandwidth <= 0.0) throw std::invalid_argument("rbf_kernel: bandwidth must be > 0");
  if (p.size() != q.size()) throw std::invalid_argument("rbf_kernel: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    double d = p[i] - q[i];
    s += d * d;
  }
  return std::exp(-s / bandwidth);
}

double median_bandwidth(const Tensor& pooled, bool* degenerate) {
  if (degenerate) *degenerate = false;
  std::size_t n = pooled.rows();
  if (n < 2) throw std::invalid_argument("median_bandwidth: need at least 2 samples");

  std::vector<double> dists;
  dists.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) dists.push_back(sq_dist_rows(pooled, i, pooled, j));

  std::size_t mid = (dists.size() - 1) / 2;
  std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(mid), dists.end());
  double med = dists[mid];
  if (med > 0.0) return med;

  double smallest = 0.0;
  for (double d : dists)
    if (d > 0.0 && (smallest == 0.0 || d < smallest)) smallest = d;
  if (smallest > 0.0) return smallest;
  if (degenerate) *degenerate = true;
  return 1.0;
}

MmdReport mmd2_unbiased(const Tensor& p_in, const Tensor& q_in, const KernelSpec& kernel,
                        std::size_t max_samples) {
  Tensor p = subsample_rows(p_in, max_samples);
  Tensor q = subsample_rows(q_in, max_samples);
  std::size_t np = p.rows(), nq = q.rows();
  if (np < 2 || nq < 2)
    throw std::invalid_argument("mmd2_unbiased: both sets need at least 2 samples");
  if (p.cols() != q.cols())
    throw std::invalid_argument("mmd2_unbiased: dimension mismatch");

  MmdReport report;
  report.n_p = np;
  report.n_q = nq;
  if (kernel.bandwidth_rule == BandwidthRule::fixed) {
    if (kernel.fixed_bandwidth <= 0.0)
      throw std::invalid_argument("mmd2_unbiased: fixed bandwidth must be > 0");
    report.bandwidth = kernel.fixed_bandwidth;
  } else {
    Tensor pooled({np + nq, p.cols()});
    for (std::size_t r = 0; r < np; ++r)
      for (std::size_t c = 0; c < p.cols(); ++c) pooled.at(r, c) = p.at(r, c);
    for (std::size_t r = 0; r < nq; ++r)
      for (std::size_t c = 0; c < q.cols(); ++c) pooled.at(np + r, c) = q.at(r, c);
    report.bandwidth = median_bandwidth(pooled, &report.degenerate_bandwidth);
  }
  double gamma = report.bandwidth;

  double pp = 0.0;
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = i + 1; j < np; ++j) pp += std::exp(-sq_dist_rows(p, i, p, j) / gamma);
  double qq = 0.0;
  for (std::size_t i = 0; i < nq; ++i)
    for (std::size_t j = i + 1; j < nq; ++j) qq += std::exp(-sq_dist_rows(q, i, q, j) / gamma);
  double pq = 0.0;
  for (std::size_t i = 0; i < np; ++i)
    for (std::size_t j = 0; j < nq; ++j) pq += std::exp(-sq_dist_rows(p, i, q, j) / gamma);

  double dnp = static_cast<double>(np), dnq = static_cast<double>(nq);
  report.mmd2 = 2.0 * pp / (dnp * (dnp - 1.0)) + 2.0 * qq / (dnq * (dnq - 1.0)) -
                2.0 * pq / (dnp * dnq);
  return report;
}

std::vector<int> predict_classes(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits.at(r, c) > logits.at(r, best)) best = c;
    out[r] = static_cast<int>(best);
  }
  return out;
}

double test_error(const Mlp& f, const Mlp& g, const Tensor& x, const std::vector<int>& y) {
  if (y.empty()) throw std::invalid_argument("test_error: empty test set");
  Tensor z = mlp_eval_logits(g, mlp_eval(f, x));
  std::vector<int> pred = predict_classes(z);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < y.size(); ++i)
    if (pred[i] != y[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

double mean_cross_entropy(const Tensor& logits, const std::vector<int>& y) {
  if (y.empty()) throw std::invalid_argument("mean_cross_entropy: empty set");
  if (logits.rows() != y.size())
    throw std::invalid_argument("mean_cross_entropy: size mismatch");
  Tensor lse = eval_op(Op::lse_row, &logits, nullptr, 0.0);
  double total = 0.0;
  for (std::size_t r = 0; r < y.size(); ++r) {
    int label = y[r];
    if (label < 0 || static_cast<std::size_t>(label) >= logits.cols())
      throw std::out_of_range("mean_cross_entropy: label out of range");
    total += lse.at(r, 0) - logits.at(r, static_cast<std::size_t>(label));
  }
  return total / static_cast<double>(y.size());
}

double risk_gap(const Mlp& f, const Mlp& g, const Tensor& x_l, const std::vector<int>& y_l,
                const Tensor& x_ul, const std::vector<int>& y_ul) {
  Tensor z_l = mlp_eval_logits(g, mlp_eval(f, x_l));
  Tensor z_ul = mlp_eval_logits(g, mlp_eval(f, x_ul));
  return std::fabs(mean_cross_entropy(z_ul, y_ul) - mean_cross_entropy(z_l, y_l));
}

namespace {

struct ClassStats {
  std::vector<double> mean_feats;  // (K * F), delta-weighted sums / set size
  std::vector<double> freq;        // (K)
};

ClassStats per_class_stats(const Tensor& feats, const std::vector<int>& labels,
                           std::size_t k) {
  std::size_t f = feats.cols();
  ClassStats st;
  st.mean_feats.assign(k * f, 0.0);
  st.freq.assign(k, 0.0);
  double inv_n = 1.0 / static_cast<double>(feats.rows());
  for (std::size_t i = 0; i < feats.rows(); ++i) {
    auto cls = static_cast<std::size_t>(labels[i]);
    if (cls >= k) throw std::out_of_range("bound_terms: label out of range");
    st.freq[cls] += inv_n;
    for (std::size_t c = 0; c < f; ++c) st.mean_feats[cls * f + c] += feats.at(i, c) * inv_n;
  }
  return st;
}

// sum_k |W_k| . |feat gap_k| + |b_k| |freq gap_k|, the per-class pair of
// weighted distribution gaps.
void accumulate_terms(const Tensor& w, const Tensor& b, const ClassStats& l,
                      const ClassStats& ul, double* feat_term, double* label_term) {
  std::size_t f = w.rows(), k = w.cols();
  double feats = 0.0, labels = 0.0;
  for (std::size_t cls = 0; cls < k; ++cls) {
    for (std::size_t c = 0; c < f; ++c) {
      double gap = l.mean_feats[cls * f + c] - ul.mean_feats[cls * f + c];
      feats += std::fabs(w.at(c, cls)) * std::fabs(gap);
    }
    labels += std::fabs(b[cls]) * std::fabs(l.freq[cls] - ul.freq[cls]);
  }
  *feat_term = feats;
  *label_term = labels;
}

Tensor logits_from_features(const Tensor& w, const Tensor& b, const Tensor& feats) {
  Tensor z = eval_op(Op::matmul, &feats, &w, 0.0);
  return eval_op(Op::add, &z, &b, 0.0);
}

}  // namespace

BoundReport bound_terms(const Tensor& w, const Tensor& b,
                        const Tensor& features_l, const std::vector<int>& y_l,
                        const Tensor& features_ul, const std::vector<int>& y_ul,
                        const std::vector<int>& pred_l, const std::vector<int>& pred_ul) {
  if (w.rank() != 2 || b.size() != w.cols())
    throw std::invalid_argument("bound_terms: classifier must be one dense layer");
  if (features_l.cols() != w.rows() || features_ul.cols() != w.rows())
    throw std::invalid_argument("bound_terms: feature dimension mismatch");
  if (features_l.rows() == 0 || features_ul.rows() == 0)
    throw std::invalid_argument("bound_terms: empty set");
  std::size_t k = w.cols();

  BoundReport report;
  ClassStats true_l = per_class_stats(features_l, y_l, k);
  ClassStats true_ul = per_class_stats(features_ul, y_ul, k);
  accumulate_terms(w, b, true_l, true_ul, &report.feats_true, &report.label_true);

  ClassStats pred_l_stats = per_class_stats(features_l, pred_l, k);
  ClassStats pred_ul_stats = per_class_stats(features_ul, pred_ul, k);
  accumulate_terms(w, b, pred_l_stats, pred_ul_stats, &report.feats_pred, &report.label_pred);

  report.rhs = report.term_sum();

  Tensor z_l = logits_from_features(w, b, features_l);
  Tensor z_ul = logits_from_features(w, b, features_ul);
  report.lhs = std::fabs(mean_cross_entropy(z_ul, y_ul) - mean_cross_entropy(z_l, y_l));
  report.lse_residual = std::max(lse_residual(z_l), lse_residual(z_ul));
  return report;
}

BoundReport bound_report(const Mlp& f, const Mlp& g,
                         const Tensor& x_l, const std::vector<int>& y_l,
                         const Tensor& x_ul, const std::vector<int>& y_ul) {
  if (g.weights.size() != 1)
    throw std::invalid_argument("bound_report: classifier g must be a single dense layer");
  Tensor feats_l = mlp_eval(f, x_l);
  Tensor feats_ul = mlp_eval(f, x_ul);
  Tensor z_l = logits_from_features(g.weights[0], g.biases[0], feats_l);
  Tensor z_ul = logits_from_features(g.weights[0], g.biases[0], feats_ul);
  return bound_terms(g.weights[0], g.biases[0], feats_l, y_l, feats_ul, y_ul,
                     predict_classes(z_l), predict_classes(z_ul));
}

double lse_residual(const Tensor& logits) {
  if (logits.rows() == 0) throw std::invalid_argument("lse_residual: empty batch");
  Tensor lse = eval_op(Op::lse_row, &logits, nullptr, 0.0);
  double worst = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    double m = logits.at(r, 0);
    for (std::size_t c = 1; c < logits.cols(); ++c) m = std::max(m, logits.at(r, c));
    worst = std::max(worst, lse.at(r, 0) - m);
  }
  return worst;
}

}  // namespace afda
