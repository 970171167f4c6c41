#include "afda/metrics_log.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <json.hpp>

namespace afda {

namespace {

using nlohmann::ordered_json;

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double json_to_double(const ordered_json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_null()) return kNan;
  return v.get<double>();
}

}  // namespace

std::string make_run_id(const std::string& method, bool alignment, int label_budget,
                        std::uint64_t split_seed, std::uint64_t train_seed) {
  std::ostringstream os;
  os << method << (alignment ? "_align" : "_noalign") << "_n" << label_budget << "_s"
     << split_seed << "_t" << train_seed;
  return os.str();
}

std::string metrics_to_json(const MetricsRecord& rec) {
  ordered_json j;
  j["run_id"] = rec.run_id;
  j["method"] = rec.method;
  j["alignment"] = rec.alignment;
  j["label_budget"] = rec.label_budget;
  j["split_seed"] = rec.split_seed;
  j["train_seed"] = rec.train_seed;
  j["epoch"] = rec.epoch.epoch;
  j["loss_sup"] = rec.epoch.losses.sup;
  j["loss_adv"] = rec.epoch.losses.adv;
  j["loss_cons"] = rec.epoch.losses.cons;
  j["loss_ent"] = rec.epoch.losses.ent;
  j["test_error"] = rec.epoch.test_error;
  j["mmd2"] = rec.epoch.mmd2;
  j["bandwidth"] = rec.epoch.bandwidth;
  j["bound_feats_true"] = rec.epoch.feats_true;
  j["bound_label_true"] = rec.epoch.label_true;
  j["bound_feats_pred"] = rec.epoch.feats_pred;
  j["bound_label_pred"] = rec.epoch.label_pred;
  j["risk_gap"] = rec.epoch.lhs;
  j["mu"] = rec.epoch.mu;
  j["eta"] = rec.epoch.eta;
  j["gamma"] = rec.epoch.gamma;
  j["wall_ms"] = rec.epoch.wall_ms;
  return j.dump();
}

MetricsRecord metrics_from_json(const std::string& line) {
  ordered_json j = ordered_json::parse(line);
  MetricsRecord rec;
  rec.run_id = j.at("run_id").get<std::string>();
  rec.method = j.at("method").get<std::string>();
  rec.alignment = j.at("alignment").get<bool>();
  rec.label_budget = j.at("label_budget").get<int>();
  rec.split_seed = j.at("split_seed").get<std::uint64_t>();
  rec.train_seed = j.at("train_seed").get<std::uint64_t>();
  rec.epoch.epoch = j.at("epoch").get<int>();
  rec.epoch.losses.sup = json_to_double(j, "loss_sup");
  rec.epoch.losses.adv = json_to_double(j, "loss_adv");
  rec.epoch.losses.cons = json_to_double(j, "loss_cons");
  rec.epoch.losses.ent = json_to_double(j, "loss_ent");
  rec.epoch.test_error = json_to_double(j, "test_error");
  rec.epoch.mmd2 = json_to_double(j, "mmd2");
  rec.epoch.bandwidth = json_to_double(j, "bandwidth");
  rec.epoch.feats_true = json_to_double(j, "bound_feats_true");
  rec.epoch.label_true = json_to_double(j, "bound_label_true");
  rec.epoch.feats_pred = json_to_double(j, "bound_feats_pred");
  rec.epoch.label_pred = json_to_double(j, "bound_label_pred");
  rec.epoch.lhs = json_to_double(j, "risk_gap");
  rec.epoch.mu = json_to_double(j, "mu");
  rec.epoch.eta = json_to_double(j, "eta");
  rec.epoch.gamma = json_to_double(j, "gamma");
  rec.epoch.wall_ms = json_to_double(j, "wall_ms");
  return rec;
}

std::vector<MetricsRecord> collect_final_records(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".jsonl") files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());

  std::map<std::string, MetricsRecord> latest;
  for (const std::string& file : files) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("summarize: cannot open " + file);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      MetricsRecord rec = metrics_from_json(line);
      auto it = latest.find(rec.run_id);
      if (it == latest.end() || rec.epoch.epoch > it->second.epoch.epoch)
        latest[rec.run_id] = rec;
    }
  }
  std::vector<MetricsRecord> out;
  for (auto& [id, rec] : latest) out.push_back(std::move(rec));
  return out;
}

namespace {

struct CellStats {
  std::vector<double> errors;
  std::vector<double> mmd2s;
};

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return kNan;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Population standard deviation; a single run reports 0.
double std_of(const std::vector<double>& v) {
  if (v.empty()) return kNan;
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

std::string summarize_csv(const std::vector<MetricsRecord>& final_records) {
  // cell key: (method, label budget, alignment)
  std::map<std::pair<std::string, int>, std::map<bool, CellStats>> cells;
  for (const MetricsRecord& rec : final_records) {
    CellStats& cell = cells[{rec.method, rec.label_budget}][rec.alignment];
    cell.errors.push_back(rec.epoch.test_error);
    if (!std::isnan(rec.epoch.mmd2)) cell.mmd2s.push_back(rec.epoch.mmd2);
  }

  std::ostringstream os;
  os << "method,alignment,labels,runs,test_error_mean,test_error_std,mmd2_mean,mmd2_std\n";
  for (const auto& [key, by_alignment] : cells) {
    for (const auto& [alignment, cell] : by_alignment) {
      os << key.first << ',' << (alignment ? "with" : "without") << ',' << key.second << ','
         << cell.errors.size() << ',' << fmt(mean_of(cell.errors)) << ','
         << fmt(std_of(cell.errors)) << ',' << fmt(mean_of(cell.mmd2s)) << ','
         << fmt(std_of(cell.mmd2s)) << '\n';
    }
    auto without = by_alignment.find(false);
    auto with = by_alignment.find(true);
    if (without != by_alignment.end() && with != by_alignment.end()) {
      double reduction = mean_of(without->second.errors) - mean_of(with->second.errors);
      os << key.first << ",error-reduction," << key.second << ",," << fmt(reduction)
         << ",,,\n";
    }
  }
  return os.str();
}

}  // namespace afda
