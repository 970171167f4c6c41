#include "afda/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace afda {

namespace {

[[noreturn]] void config_error(const std::string& what) {
  throw std::invalid_argument("config: " + what);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    config_error("key '" + key + "': malformed number '" + v + "'");
  }
}

long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    long d = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    config_error("key '" + key + "': malformed integer '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  config_error("key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<std::uint64_t> parse_seed_list(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  for (const std::string& item : split_list(v))
    out.push_back(static_cast<std::uint64_t>(parse_int(key, item)));
  if (out.empty()) config_error("key '" + key + "': empty list");
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const std::string& item : split_list(v))
    out.push_back(static_cast<int>(parse_int(key, item)));
  return out;
}

}  // namespace

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::none: return "none";
    case Backend::pi: return "pi";
    case Backend::mean_teacher: return "mean-teacher";
    case Backend::vat: return "vat";
  }
  return "?";
}

Backend backend_from_name(const std::string& name) {
  if (name == "none") return Backend::none;
  if (name == "pi") return Backend::pi;
  if (name == "mean-teacher") return Backend::mean_teacher;
  if (name == "vat") return Backend::vat;
  config_error("unknown backend '" + name + "'");
}

const char* divergence_name(DivergenceKind d) {
  return d == DivergenceKind::kl ? "kl" : "squared-euclidean";
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      config_error("line " + std::to_string(line_no) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));

    if (key == "data.kind") {
      if (value == "moons") cfg.data_kind = DatasetKind::moons;
      else if (value == "blobs") cfg.data_kind = DatasetKind::blobs;
      else if (value == "csv") cfg.data_kind = DatasetKind::csv;
      else config_error("data.kind: unknown dataset '" + value + "'");
    } else if (key == "data.csv_path") {
      cfg.csv_path = value;
    } else if (key == "data.moons_count") {
      cfg.moons_count = static_cast<int>(parse_int(key, value));
    } else if (key == "data.moons_noise") {
      cfg.moons_noise = parse_double(key, value);
    } else if (key == "data.blobs_classes") {
      cfg.blobs_classes = static_cast<int>(parse_int(key, value));
    } else if (key == "data.blobs_per_class") {
      cfg.blobs_per_class = static_cast<int>(parse_int(key, value));
    } else if (key == "data.blobs_sigma") {
      cfg.blobs_sigma = parse_double(key, value);
    } else if (key == "data.blobs_spread") {
      cfg.blobs_spread = parse_double(key, value);
    } else if (key == "data.seed") {
      cfg.data_seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "data.labeled") {
      cfg.labeled = static_cast<int>(parse_int(key, value));
    } else if (key == "data.test_fraction") {
      cfg.test_fraction = parse_double(key, value);
    } else if (key == "data.standardize") {
      cfg.standardize = parse_bool(key, value);
    } else if (key == "model.feature_dim") {
      cfg.feature_dim = static_cast<int>(parse_int(key, value));
    } else if (key == "model.f_hidden") {
      cfg.f_hidden = parse_int_list(key, value);
    } else if (key == "model.d_hidden") {
      cfg.d_hidden = parse_int_list(key, value);
    } else if (key == "loss.backend") {
      cfg.backend = backend_from_name(value);
    } else if (key == "loss.use_adversarial_alignment") {
      cfg.use_adversarial_alignment = parse_bool(key, value);
    } else if (key == "loss.use_entropy") {
      if (value == "auto") cfg.use_entropy.reset();
      else cfg.use_entropy = parse_bool(key, value);
    } else if (key == "loss.divergence") {
      if (value == "kl") cfg.divergence = DivergenceKind::kl;
      else if (value == "squared-euclidean") cfg.divergence = DivergenceKind::squared_euclidean;
      else config_error("loss.divergence: unknown divergence '" + value + "'");
    } else if (key == "loss.epsilon") {
      cfg.epsilon = parse_double(key, value);
    } else if (key == "loss.vat_xi") {
      cfg.vat_xi = parse_double(key, value);
    } else if (key == "loss.vat_power_iters") {
      cfg.vat_power_iters = static_cast<int>(parse_int(key, value));
    } else if (key == "loss.ema_alpha") {
      cfg.ema_alpha = parse_double(key, value);
    } else if (key == "train.epochs") {
      cfg.epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "train.lambda") {
      cfg.lambda = parse_double(key, value);
    } else if (key == "train.eta_max") {
      cfg.eta_max = parse_double(key, value);
    } else if (key == "train.eta_ramp_epochs") {
      cfg.eta_ramp_epochs = static_cast<int>(parse_int(key, value));
    } else if (key == "train.learning_rate") {
      cfg.learning_rate = parse_double(key, value);
    } else if (key == "train.batch_labeled") {
      cfg.batch_labeled = static_cast<int>(parse_int(key, value));
    } else if (key == "train.batch_unlabeled") {
      cfg.batch_unlabeled = static_cast<int>(parse_int(key, value));
    } else if (key == "train.eval_every") {
      cfg.eval_every = static_cast<int>(parse_int(key, value));
    } else if (key == "train.split_seeds") {
      cfg.split_seeds = parse_seed_list(key, value);
    } else if (key == "train.train_seeds") {
      cfg.train_seeds = parse_seed_list(key, value);
    } else if (key == "train.log_wall_clock") {
      cfg.log_wall_clock = parse_bool(key, value);
    } else if (key == "grid.backends") {
      cfg.grid_backends.clear();
      for (const std::string& item : split_list(value))
        cfg.grid_backends.push_back(backend_from_name(item));
    } else if (key == "grid.alignment") {
      cfg.grid_alignment.clear();
      for (const std::string& item : split_list(value))
        cfg.grid_alignment.push_back(parse_bool(key, item) ? 1 : 0);
    } else if (key == "grid.label_budgets") {
      cfg.grid_label_budgets = parse_int_list(key, value);
    } else {
      config_error("unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void ExperimentConfig::validate() const {
  if (data_kind == DatasetKind::csv && csv_path.empty())
    config_error("data.kind = csv requires data.csv_path");
  if (moons_count <= 0 || moons_count % 2 != 0)
    config_error("data.moons_count must be positive and even");
  if (moons_noise < 0.0) config_error("data.moons_noise must be >= 0");
  if (blobs_classes < 2) config_error("data.blobs_classes must be >= 2");
  if (blobs_per_class < 1) config_error("data.blobs_per_class must be >= 1");
  if (blobs_sigma <= 0.0) config_error("data.blobs_sigma must be > 0");
  if (labeled < 1) config_error("data.labeled must be >= 1");
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    config_error("data.test_fraction must be in [0, 1)");
  if (feature_dim < 1) config_error("model.feature_dim must be >= 1");
  for (int w : f_hidden)
    if (w < 1) config_error("model.f_hidden widths must be >= 1");
  for (int w : d_hidden)
    if (w < 1) config_error("model.d_hidden widths must be >= 1");
  if (epsilon <= 0.0) config_error("loss.epsilon must be > 0");
  if (vat_xi <= 0.0) config_error("loss.vat_xi must be > 0");
  if (vat_power_iters < 1) config_error("loss.vat_power_iters must be >= 1");
  if (ema_alpha <= 0.0 || ema_alpha > 1.0) config_error("loss.ema_alpha must be in (0, 1]");
  if (epochs < 0) config_error("train.epochs must be >= 0");
  if (lambda <= 0.0)
    config_error("train.lambda must be > 0 (the ramp tanh(lambda t / 2T) needs a positive shape)");
  if (eta_max < 0.0) config_error("train.eta_max must be >= 0");
  if (eta_ramp_epochs < 0) config_error("train.eta_ramp_epochs must be >= 0");
  if (learning_rate <= 0.0) config_error("train.learning_rate must be > 0");
  if (batch_labeled < 1 || batch_unlabeled < 1)
    config_error("train batch sizes must be >= 1");
  if (eval_every < 1) config_error("train.eval_every must be >= 1");
  if (split_seeds.empty() || train_seeds.empty())
    config_error("train seed lists must be nonempty");
  for (int budget : grid_label_budgets)
    if (budget < 1) config_error("grid.label_budgets entries must be >= 1");
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os.precision(17);
  const char* kind = data_kind == DatasetKind::moons ? "moons"
                     : data_kind == DatasetKind::blobs ? "blobs" : "csv";
  os << "data.kind = " << kind << '\n';
  if (!csv_path.empty()) os << "data.csv_path = " << csv_path << '\n';
  os << "data.moons_count = " << moons_count << '\n'
     << "data.moons_noise = " << moons_noise << '\n'
     << "data.blobs_classes = " << blobs_classes << '\n'
     << "data.blobs_per_class = " << blobs_per_class << '\n'
     << "data.blobs_sigma = " << blobs_sigma << '\n'
     << "data.blobs_spread = " << blobs_spread << '\n'
     << "data.seed = " << data_seed << '\n'
     << "data.labeled = " << labeled << '\n'
     << "data.test_fraction = " << test_fraction << '\n'
     << "data.standardize = " << (standardize ? "true" : "false") << '\n'
     << "model.feature_dim = " << feature_dim << '\n';
  os << "model.f_hidden = ";
  for (std::size_t i = 0; i < f_hidden.size(); ++i) os << (i ? "," : "") << f_hidden[i];
  os << '\n' << "model.d_hidden = ";
  for (std::size_t i = 0; i < d_hidden.size(); ++i) os << (i ? "," : "") << d_hidden[i];
  os << '\n';
  os << "loss.backend = " << backend_name(backend) << '\n'
     << "loss.use_adversarial_alignment = " << (use_adversarial_alignment ? "true" : "false")
     << '\n';
  if (use_entropy.has_value())
    os << "loss.use_entropy = " << (*use_entropy ? "true" : "false") << '\n';
  os << "loss.divergence = " << divergence_name(divergence) << '\n'
     << "loss.epsilon = " << epsilon << '\n'
     << "loss.vat_xi = " << vat_xi << '\n'
     << "loss.vat_power_iters = " << vat_power_iters << '\n'
     << "loss.ema_alpha = " << ema_alpha << '\n'
     << "train.epochs = " << epochs << '\n'
     << "train.lambda = " << lambda << '\n'
     << "train.eta_max = " << eta_max << '\n'
     << "train.eta_ramp_epochs = " << eta_ramp_epochs << '\n'
     << "train.learning_rate = " << learning_rate << '\n'
     << "train.batch_labeled = " << batch_labeled << '\n'
     << "train.batch_unlabeled = " << batch_unlabeled << '\n'
     << "train.eval_every = " << eval_every << '\n'
     << "train.log_wall_clock = " << (log_wall_clock ? "true" : "false") << '\n';
  os << "train.split_seeds = ";
  for (std::size_t i = 0; i < split_seeds.size(); ++i) os << (i ? "," : "") << split_seeds[i];
  os << '\n' << "train.train_seeds = ";
  for (std::size_t i = 0; i < train_seeds.size(); ++i) os << (i ? "," : "") << train_seeds[i];
  os << '\n';
  return os.str();
}

}  // namespace afda
