#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "afda/rng.hpp"
#include "afda/tensor.hpp"

namespace afda {

/// A flat labeled/unlabeled sample collection straight from a generator or
/// CSV file. labels[i] == -1 marks a row without a label.
struct RawDataset {
  Tensor x;                 // (n, dim)
  std::vector<int> labels;  // 0-based class ids, -1 = unlabeled
  int n_classes = 0;
  std::string generator;
  std::uint64_t seed = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return x.cols(); }
};

/// Isotropic Gaussian clusters, one per center; class k gets per_class
/// samples around centers[k].
RawDataset make_blobs(int n_classes, int per_class,
                      const std::vector<std::vector<double>>& centers, double sigma,
                      std::uint64_t seed);

/// Two interleaved half-circles of radius 1 with Gaussian noise; balanced
/// binary classes. count must be even.
RawDataset make_moons(int count, double noise, std::uint64_t seed);

/// Labeled / unlabeled / test split of one i.i.d. pool. Unlabeled ground
/// truth is retained for evaluation only, behind an accessor that throws
/// while training holds the quarantine lock.
class SplitDataset {
 public:
  SplitDataset(const RawDataset& raw, std::size_t n_labeled, double test_fraction,
               std::uint64_t seed);

  const Tensor& x_labeled() const { return x_l_; }
  const std::vector<int>& y_labeled() const { return y_l_; }
  const Tensor& x_unlabeled() const { return x_ul_; }
  const Tensor& x_test() const { return x_test_; }
  const std::vector<int>& y_test() const { return y_test_; }
  int n_classes() const { return n_classes_; }
  std::size_t dim() const { return x_l_.cols(); }

  /// Ground-truth labels of the unlabeled set. Evaluation-only: calling
  /// this while the training quarantine is locked is a contract violation.
  const std::vector<int>& unlabeled_oracle_labels() const;

  void lock_oracle() const { oracle_locked_ = true; }
  void unlock_oracle() const { oracle_locked_ = false; }

  /// Standardizes all splits to zero mean / unit variance per feature,
  /// using labeled + unlabeled pool statistics.
  void standardize();

 private:
  Tensor x_l_, x_ul_, x_test_;
  std::vector<int> y_l_, y_test_;
  std::vector<int> y_ul_oracle_;
  int n_classes_ = 0;
  mutable bool oracle_locked_ = false;
};

struct Batch {
  Tensor x;
  std::vector<int> y;  // empty for unlabeled batches
};

/// Draws (labeled, unlabeled) batch pairs. Every epoch covers each unlabeled
/// sample exactly once; the smaller labeled set is an endless reshuffled
/// cycle. next() returns nullopt at the epoch boundary.
class BatchSampler {
 public:
  BatchSampler(const SplitDataset& data, std::size_t n_labeled_per_batch,
               std::size_t n_unlabeled_per_batch, std::uint64_t seed);

  std::optional<std::pair<Batch, Batch>> next();

  /// Starts a new epoch: reshuffles the unlabeled visit order.
  void start_epoch();

  std::size_t batches_per_epoch() const;

  std::string serialize_state() const;
  void restore_state(const std::string& text);

 private:
  const SplitDataset* data_;
  std::size_t n_l_, n_ul_;
  Rng rng_;
  std::vector<std::size_t> ul_order_;
  std::vector<std::size_t> l_order_;
  std::size_t ul_pos_ = 0;
  std::size_t l_pos_ = 0;
};

/// CSV schema: header `label,f0,...,fD-1`; the label cell may be empty per
/// row (unlabeled). Rejects ragged rows and malformed floats, naming the
/// offending line.
RawDataset load_csv(const std::string& path);
void save_csv(const RawDataset& data, const std::string& path);

/// Feature columns of either CSV schema: `label,f0,...` data files or
/// `set,class,pred,f0,...` feature dumps.
Tensor load_feature_matrix(const std::string& path);

}  // namespace afda
