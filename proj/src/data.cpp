#include "afda/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace afda {

RawDataset make_blobs(int n_classes, int per_class,
                      const std::vector<std::vector<double>>& centers, double sigma,
                      std::uint64_t seed) {
  if (n_classes < 2) throw std::invalid_argument("make_blobs: need at least 2 classes");
  if (sigma <= 0.0) throw std::invalid_argument("make_blobs: sigma must be > 0");
  if (centers.size() != static_cast<std::size_t>(n_classes))
    throw std::invalid_argument("make_blobs: one center per class required");
  std::size_t dim = centers[0].size();
  for (const auto& c : centers)
    if (c.size() != dim) throw std::invalid_argument("make_blobs: center dims differ");

  Rng rng(seed);
  std::size_t n = static_cast<std::size_t>(n_classes) * static_cast<std::size_t>(per_class);
  RawDataset out;
  out.x = Tensor({n, dim});
  out.labels.resize(n);
  out.n_classes = n_classes;
  out.generator = "blobs";
  out.seed = seed;
  std::size_t row = 0;
  for (int k = 0; k < n_classes; ++k)
    for (int i = 0; i < per_class; ++i, ++row) {
      for (std::size_t d = 0; d < dim; ++d)
        out.x.at(row, d) = centers[static_cast<std::size_t>(k)][d] + sigma * rng.normal();
      out.labels[row] = k;
    }
  return out;
}

RawDataset make_moons(int count, double noise, std::uint64_t seed) {
  if (count <= 0 || count % 2 != 0)
    throw std::invalid_argument("make_moons: count must be positive and even");
  if (noise < 0.0) throw std::invalid_argument("make_moons: noise must be >= 0");

  Rng rng(seed);
  std::size_t half = static_cast<std::size_t>(count) / 2;
  RawDataset out;
  out.x = Tensor({static_cast<std::size_t>(count), 2});
  out.labels.resize(static_cast<std::size_t>(count));
  out.n_classes = 2;
  out.generator = "moons";
  out.seed = seed;

  for (std::size_t i = 0; i < half; ++i) {
    double t = std::numbers::pi * static_cast<double>(i) / static_cast<double>(half - 1);
    out.x.at(i, 0) = std::cos(t) + noise * rng.normal();
    out.x.at(i, 1) = std::sin(t) + noise * rng.normal();
    out.labels[i] = 0;
    std::size_t j = half + i;
    out.x.at(j, 0) = 1.0 - std::cos(t) + noise * rng.normal();
    out.x.at(j, 1) = 0.5 - std::sin(t) + noise * rng.normal();
    out.labels[j] = 1;
  }
  return out;
}

namespace {

Tensor gather_rows(const Tensor& x, const std::vector<std::size_t>& idx) {
  Tensor out({idx.size(), x.cols()});
  for (std::size_t r = 0; r < idx.size(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out.at(r, c) = x.at(idx[r], c);
  return out;
}

}  // namespace

SplitDataset::SplitDataset(const RawDataset& raw, std::size_t n_labeled,
                           double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw std::invalid_argument("split: test fraction must be in [0, 1)");
  for (int y : raw.labels)
    if (y < 0) throw std::invalid_argument("split: raw dataset has unlabeled rows");

  std::size_t n = raw.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x5417));
  rng.shuffle(order);

  std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::size_t n_train = n - n_test;
  if (n_labeled > n_train)
    throw std::invalid_argument("split: labeled budget exceeds training pool");

  std::vector<std::size_t> train_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test_idx(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());

  // Uniform choice of labeled indices without replacement from the training
  // pool: the pool is already a uniform shuffle, so take a second shuffle to
  // decouple the labeled pick from the train/test boundary.
  std::vector<std::size_t> pick(train_idx);
  Rng rng2(mix_seed(seed, 0x1abe1ed));
  rng2.shuffle(pick);
  std::vector<std::size_t> labeled_idx(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n_labeled));
  std::vector<std::size_t> unlabeled_idx(pick.begin() + static_cast<std::ptrdiff_t>(n_labeled), pick.end());

  x_l_ = gather_rows(raw.x, labeled_idx);
  x_ul_ = gather_rows(raw.x, unlabeled_idx);
  x_test_ = gather_rows(raw.x, test_idx);
  for (std::size_t i : labeled_idx) y_l_.push_back(raw.labels[i]);
  for (std::size_t i : unlabeled_idx) y_ul_oracle_.push_back(raw.labels[i]);
  for (std::size_t i : test_idx) y_test_.push_back(raw.labels[i]);
  n_classes_ = raw.n_classes;
}

const std::vector<int>& SplitDataset::unlabeled_oracle_labels() const {
  if (oracle_locked_)
    throw std::logic_error(
        "unlabeled_oracle_labels: quarantined during training (evaluation-only accessor)");
  return y_ul_oracle_;
}

void SplitDataset::standardize() {
  std::size_t d = dim();
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  std::size_t pool = x_l_.rows() + x_ul_.rows();
  if (pool == 0) return;
  auto accumulate = [&](const Tensor& x) {
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < d; ++c) mean[c] += x.at(r, c);
  };
  accumulate(x_l_);
  accumulate(x_ul_);
  for (double& m : mean) m /= static_cast<double>(pool);
  auto accumulate_var = [&](const Tensor& x) {
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < d; ++c) {
        double dv = x.at(r, c) - mean[c];
        var[c] += dv * dv;
      }
  };
  accumulate_var(x_l_);
  accumulate_var(x_ul_);
  for (double& v : var) v = std::sqrt(v / static_cast<double>(pool));
  auto apply = [&](Tensor& x) {
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t c = 0; c < d; ++c) {
        double s = var[c] > 0.0 ? var[c] : 1.0;
        x.at(r, c) = (x.at(r, c) - mean[c]) / s;
      }
  };
  apply(x_l_);
  apply(x_ul_);
  apply(x_test_);
}

BatchSampler::BatchSampler(const SplitDataset& data, std::size_t n_labeled_per_batch,
                           std::size_t n_unlabeled_per_batch, std::uint64_t seed)
    : data_(&data), n_l_(n_labeled_per_batch), n_ul_(n_unlabeled_per_batch),
      rng_(mix_seed(seed, 0xba7c4)) {
  if (n_l_ < 1 || n_ul_ < 1)
    throw std::invalid_argument("BatchSampler: batch sizes must be >= 1");
  if (data.x_labeled().rows() == 0 || data.x_unlabeled().rows() == 0)
    throw std::invalid_argument("BatchSampler: dataset smaller than batch");
  l_order_.resize(data.x_labeled().rows());
  for (std::size_t i = 0; i < l_order_.size(); ++i) l_order_[i] = i;
  rng_.shuffle(l_order_);
}

void BatchSampler::start_epoch() {
  ul_order_.resize(data_->x_unlabeled().rows());
  for (std::size_t i = 0; i < ul_order_.size(); ++i) ul_order_[i] = i;
  rng_.shuffle(ul_order_);
  ul_pos_ = 0;
}

std::size_t BatchSampler::batches_per_epoch() const {
  std::size_t m = data_->x_unlabeled().rows();
  return (m + n_ul_ - 1) / n_ul_;
}

std::optional<std::pair<Batch, Batch>> BatchSampler::next() {
  if (ul_order_.empty())
    throw std::logic_error("BatchSampler: start_epoch() not called");
  if (ul_pos_ >= ul_order_.size()) return std::nullopt;

  std::size_t take = std::min(n_ul_, ul_order_.size() - ul_pos_);
  Batch ul;
  ul.x = Tensor({take, data_->dim()});
  for (std::size_t i = 0; i < take; ++i)
    for (std::size_t c = 0; c < data_->dim(); ++c)
      ul.x.at(i, c) = data_->x_unlabeled().at(ul_order_[ul_pos_ + i], c);
  ul_pos_ += take;

  Batch l;
  l.x = Tensor({n_l_, data_->dim()});
  l.y.resize(n_l_);
  for (std::size_t i = 0; i < n_l_; ++i) {
    if (l_pos_ >= l_order_.size()) {
      rng_.shuffle(l_order_);
      l_pos_ = 0;
    }
    std::size_t src = l_order_[l_pos_++];
    for (std::size_t c = 0; c < data_->dim(); ++c)
      l.x.at(i, c) = data_->x_labeled().at(src, c);
    l.y[i] = data_->y_labeled()[src];
  }
  return std::make_pair(std::move(l), std::move(ul));
}

std::string BatchSampler::serialize_state() const {
  std::ostringstream os;
  os << rng_.serialize() << '\n' << l_pos_;
  for (std::size_t i : l_order_) os << ' ' << i;
  return os.str();
}

void BatchSampler::restore_state(const std::string& text) {
  std::istringstream is(text);
  std::string rng_state;
  std::getline(is, rng_state);
  rng_ = Rng::deserialize(rng_state);
  is >> l_pos_;
  for (std::size_t& i : l_order_) is >> i;
  if (is.fail()) throw std::runtime_error("BatchSampler: malformed sampler state");
}

namespace {

[[noreturn]] void csv_error(const std::string& path, std::size_t line, const std::string& what) {
  std::ostringstream os;
  os << path << ":" << line << ": " << what;
  throw std::runtime_error(os.str());
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

RawDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    csv_error(path, 1, "missing header");
  std::vector<std::string> header = split_fields(line);
  if (header.empty() || header[0] != "label")
    csv_error(path, 1, "header must start with 'label'");
  std::size_t dim = header.size() - 1;

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t line_no = 1;
  int max_label = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size())
      csv_error(path, line_no, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(fields.size()));
    if (fields[0].empty()) {
      labels.push_back(-1);
    } else {
      try {
        std::size_t used = 0;
        int y = std::stoi(fields[0], &used);
        if (used != fields[0].size() || y < 0) throw std::invalid_argument("label");
        labels.push_back(y);
        max_label = std::max(max_label, y);
      } catch (const std::exception&) {
        csv_error(path, line_no, "malformed label '" + fields[0] + "'");
      }
    }
    for (std::size_t c = 1; c < fields.size(); ++c) {
      try {
        std::size_t used = 0;
        double v = std::stod(fields[c], &used);
        if (used != fields[c].size()) throw std::invalid_argument("float");
        values.push_back(v);
      } catch (const std::exception&) {
        csv_error(path, line_no, "malformed float '" + fields[c] + "'");
      }
    }
  }

  RawDataset out;
  out.x = Tensor({labels.size(), dim}, std::move(values));
  out.labels = std::move(labels);
  out.n_classes = max_label + 1;
  out.generator = "csv:" + path;
  return out;
}

Tensor load_feature_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_feature_matrix: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) csv_error(path, 1, "missing header");
  std::vector<std::string> header = split_fields(line);

  std::size_t skip;
  if (!header.empty() && header[0] == "label") {
    skip = 1;
  } else if (header.size() >= 3 && header[0] == "set" && header[1] == "class" &&
             header[2] == "pred") {
    skip = 3;
  } else {
    csv_error(path, 1, "expected a 'label,...' or 'set,class,pred,...' header");
  }
  std::size_t dim = header.size() - skip;

  std::vector<double> values;
  std::size_t rows = 0, line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (fields.size() != header.size())
      csv_error(path, line_no, "inconsistent column count");
    for (std::size_t c = skip; c < fields.size(); ++c) {
      try {
        values.push_back(std::stod(fields[c]));
      } catch (const std::exception&) {
        csv_error(path, line_no, "malformed float '" + fields[c] + "'");
      }
    }
    ++rows;
  }
  return Tensor({rows, dim}, std::move(values));
}

void save_csv(const RawDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path);
  out << "label";
  for (std::size_t c = 0; c < data.dim(); ++c) out << ",f" << c;
  out << '\n';
  out.precision(17);
  for (std::size_t r = 0; r < data.size(); ++r) {
    if (data.labels[r] >= 0) out << data.labels[r];
    for (std::size_t c = 0; c < data.dim(); ++c) out << ',' << data.x.at(r, c);
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path);
}

}  // namespace afda
