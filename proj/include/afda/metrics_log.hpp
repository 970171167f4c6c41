#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afda/trainer.hpp"

namespace afda {

/// One JSONL line of the metrics stream. Self-describing: the summarizer
/// consumes only these lines. NaN-valued metrics serialize as null.
struct MetricsRecord {
  std::string run_id;
  std::string method;  // backend name
  bool alignment = false;
  int label_budget = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t train_seed = 0;
  EpochRecord epoch;
};

std::string metrics_to_json(const MetricsRecord& rec);
MetricsRecord metrics_from_json(const std::string& line);

/// Stable run identifier for files and grouping.
std::string make_run_id(const std::string& method, bool alignment, int label_budget,
                        std::uint64_t split_seed, std::uint64_t train_seed);

/// Table-style aggregation of a set of finished runs: per (method,
/// alignment, label budget) cell the mean and standard deviation of the
/// final test error and final MMD^2, plus per-method error-reduction rows
/// (mean without alignment minus mean with alignment).
std::string summarize_csv(const std::vector<MetricsRecord>& final_records);

/// Reads every "*.jsonl" file under dir and returns the highest-epoch record
/// of each run.
std::vector<MetricsRecord> collect_final_records(const std::string& dir);

}  // namespace afda
