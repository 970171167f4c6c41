#pragma once

#include <vector>

#include "afda/models.hpp"
#include "afda/tensor.hpp"

namespace afda {

enum class BandwidthRule { median_heuristic, fixed };

struct KernelSpec {
  BandwidthRule bandwidth_rule = BandwidthRule::median_heuristic;
  double fixed_bandwidth = 1.0;  // used when rule == fixed; squared-distance units
};

struct MmdReport {
  double mmd2 = 0.0;  // unbiased estimate; may legitimately be negative
  double bandwidth = 0.0;
  std::size_t n_p = 0, n_q = 0;
  bool degenerate_bandwidth = false;
};

struct BoundReport {
  double lhs = 0.0;  // |R^(X_ul) - R^(X_l)|
  double feats_true = 0.0;
  double label_true = 0.0;
  double feats_pred = 0.0;
  double label_pred = 0.0;
  double rhs = 0.0;  // sum of the four terms
  double lse_residual = 0.0;

  double term_sum() const { return feats_true + label_true + feats_pred + label_pred; }
};

/// RBF kernel k(p, q) = exp(-||p - q||^2 / bandwidth).
double rbf_kernel(const std::vector<double>& p, const std::vector<double>& q,
                  double bandwidth);

/// Median of pairwise squared Euclidean distances over the pooled rows,
/// self-pairs excluded. Zero median falls back to the smallest nonzero
/// squared distance, or 1.0 when all points coincide (flag set when given).
double median_bandwidth(const Tensor& pooled, bool* degenerate = nullptr);

/// Unbiased squared MMD between the rows of P and Q. Sets of more than
/// max_samples rows are reduced to a fixed-seed subsample first.
MmdReport mmd2_unbiased(const Tensor& p, const Tensor& q, const KernelSpec& kernel,
                        std::size_t max_samples = 5000);

/// Fraction of argmax-misclassified rows; ties break toward the lowest
/// class index.
double test_error(const Mlp& f, const Mlp& g, const Tensor& x, const std::vector<int>& y);

std::vector<int> predict_classes(const Tensor& logits);

/// Mean cross-entropy of logits z against labels, LSE(z) - z_y per row.
double mean_cross_entropy(const Tensor& logits, const std::vector<int>& y);

/// |mean cross-entropy on (x_ul, y_ul) - mean cross-entropy on (x_l, y_l)|.
/// y_ul comes from the evaluation-only oracle accessor.
double risk_gap(const Mlp& f, const Mlp& g, const Tensor& x_l, const std::vector<int>& y_l,
                const Tensor& x_ul, const std::vector<int>& y_ul);

/// The four per-class distribution-gap terms that bound the risk gap for a
/// single dense classifier layer (weights w: (F, K), bias b: (K)), plus the
/// exact lhs and the max log-sum-exp residual of the logits.
BoundReport bound_terms(const Tensor& w, const Tensor& b,
                        const Tensor& features_l, const std::vector<int>& y_l,
                        const Tensor& features_ul, const std::vector<int>& y_ul,
                        const std::vector<int>& pred_l, const std::vector<int>& pred_ul);

/// Convenience wrapper deriving logits and predictions from (f, g).
BoundReport bound_report(const Mlp& f, const Mlp& g,
                         const Tensor& x_l, const std::vector<int>& y_l,
                         const Tensor& x_ul, const std::vector<int>& y_ul);

/// max over rows of LSE(z) - max_k z_k; small iff predictions are confident.
double lse_residual(const Tensor& logits);

}  // namespace afda
