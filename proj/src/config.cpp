#include "wudalab/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace wudalab {

namespace {

std::string trim(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r");
  if (from == std::string::npos) return "";
  const auto to = s.find_last_not_of(" \t\r");
  return s.substr(from, to - from + 1);
}

class KeyValueReader {
 public:
  explicit KeyValueReader(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      require(eq != std::string::npos,
              "config: line " + std::to_string(line_no) + " is not 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      require(!key.empty(), "config: empty key at line " + std::to_string(line_no));
      require(!entries_.count(key), "config: duplicate key '" + key + "'");
      entries_[key] = value;
    }
  }

  bool has(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return false;
    consumed_.insert(key);
    return true;
  }

  std::string raw(const std::string& key) { return entries_.at(key); }

  void fetch(const std::string& key, std::string& out) {
    if (has(key)) out = raw(key);
  }
  void fetch(const std::string& key, double& out) {
    if (has(key)) out = parse_double(key);
  }
  void fetch(const std::string& key, int& out) {
    if (has(key)) out = static_cast<int>(parse_long(key));
  }
  void fetch(const std::string& key, long& out) {
    if (has(key)) out = parse_long(key);
  }
  void fetch(const std::string& key, bool& out) {
    if (!has(key)) return;
    const std::string v = raw(key);
    if (v == "true" || v == "1") out = true;
    else if (v == "false" || v == "0") out = false;
    else throw std::invalid_argument("config: key '" + key + "' expects true/false, got '" + v + "'");
  }
  void fetch(const std::string& key, std::uint64_t& out) {
    if (has(key)) out = static_cast<std::uint64_t>(parse_long(key));
  }
  void fetch(const std::string& key, std::optional<std::uint64_t>& out) {
    if (has(key)) out = static_cast<std::uint64_t>(parse_long(key));
  }
  void fetch(const std::string& key, std::optional<long>& out) {
    if (has(key)) out = parse_long(key);
  }
  void fetch(const std::string& key, Vector& out) {
    if (!has(key)) return;
    std::vector<double> vals;
    std::stringstream ss(raw(key));
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(trim(cell)));
    out.resize(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) out[static_cast<Eigen::Index>(i)] = vals[i];
  }

  void reject_unknown() const {
    for (const auto& [key, value] : entries_) {
      if (!consumed_.count(key)) {
        throw std::invalid_argument("config: unknown key '" + key + "'");
      }
    }
  }

 private:
  double parse_double(const std::string& key) {
    try {
      return std::stod(raw(key));
    } catch (const std::exception&) {
      throw std::invalid_argument("config: key '" + key + "' expects a number, got '" +
                                  raw(key) + "'");
    }
  }
  long parse_long(const std::string& key) {
    try {
      std::size_t used = 0;
      const long v = std::stol(raw(key), &used);
      if (used != raw(key).size()) throw std::invalid_argument(raw(key));
      return v;
    } catch (const std::exception&) {
      throw std::invalid_argument("config: key '" + key + "' expects an integer, got '" +
                                  raw(key) + "'");
    }
  }

  std::map<std::string, std::string> entries_;
  std::set<std::string> consumed_;
};

}  // namespace

ExperimentSpec parse_spec_text(const std::string& text) {
  KeyValueReader reader(text);
  ExperimentSpec spec;

  reader.fetch("seed", spec.seed);
  reader.fetch("out.dir", spec.out_dir);

  reader.fetch("data.kind", spec.data.kind);
  reader.fetch("data.classes", spec.data.classes);
  reader.fetch("data.dim", spec.data.dim);
  reader.fetch("data.n_source", spec.data.n_source);
  reader.fetch("data.n_target", spec.data.n_target);
  reader.fetch("data.rotation", spec.data.rotation);
  reader.fetch("data.translation", spec.data.translation);
  reader.fetch("data.seed", spec.data.seed);
  reader.fetch("data.images", spec.data.images);
  reader.fetch("data.labels", spec.data.labels);
  reader.fetch("data.target_images", spec.data.target_images);
  reader.fetch("data.target_labels", spec.data.target_labels);
  reader.fetch("data.image_rotation_deg", spec.data.image_rotation_deg);
  reader.fetch("data.max_source", spec.data.max_source);
  reader.fetch("data.max_target", spec.data.max_target);
  reader.fetch("data.path", spec.data.path);
  reader.fetch("data.target_path", spec.data.target_path);
  reader.fetch("data.label_column", spec.data.label_column);
  reader.fetch("data.header", spec.data.header);

  reader.fetch("noise.kind", spec.noise.kind);
  reader.fetch("noise.rho", spec.noise.rho);
  reader.fetch("noise.seed", spec.noise.seed);

  reader.fetch("model.hidden", spec.model.hidden);
  reader.fetch("model.extractor_layers", spec.model.extractor_layers);
  reader.fetch("model.head_layers", spec.model.head_layers);
  reader.fetch("model.dropout", spec.model.dropout);
  reader.fetch("model.batchnorm", spec.model.batchnorm);
  reader.fetch("model.freeze_extractor_branch2", spec.model.freeze_extractor_branch2);

  reader.fetch("butterfly.tau", spec.schedule.tau);
  reader.fetch("butterfly.tau_t", spec.schedule.tau_t);
  reader.fetch("butterfly.t_k", spec.schedule.warmup_epochs);
  reader.fetch("butterfly.t_max", spec.schedule.total_epochs);
  reader.fetch("butterfly.n_max", spec.steps_per_epoch);
  reader.fetch("butterfly.penalty", spec.penalty);
  reader.fetch("butterfly.confidence", spec.confidence);
  reader.fetch("butterfly.n_t_max", spec.n_t_max);
  reader.fetch("butterfly.n_init", spec.n_init);
  reader.fetch("butterfly.batch", spec.batch_size);
  reader.fetch("butterfly.variant", spec.variant);
  if (reader.has("butterfly.regularizer")) {
    const std::string v = reader.raw("butterfly.regularizer");
    if (v == "abs_sum") spec.reg_norm = RegularizerNorm::kAbsSum;
    else if (v == "frobenius") spec.reg_norm = RegularizerNorm::kFrobenius;
    else throw std::invalid_argument("config: butterfly.regularizer must be abs_sum or frobenius");
  }

  if (reader.has("optim.kind")) {
    const std::string v = reader.raw("optim.kind");
    if (v == "momentum_sgd") spec.optim.kind = Optimizer::Kind::kMomentumSgd;
    else if (v == "adagrad") spec.optim.kind = Optimizer::Kind::kAdagrad;
    else throw std::invalid_argument("config: optim.kind must be momentum_sgd or adagrad");
  }
  reader.fetch("optim.lr", spec.optim.learning_rate);
  reader.fetch("optim.momentum", spec.optim.momentum);

  if (reader.has("metrics.head_combine")) {
    const std::string v = reader.raw("metrics.head_combine");
    if (v == "average") spec.metrics.combine = HeadCombine::kAverage;
    else if (v == "head1") spec.metrics.combine = HeadCombine::kHead1;
    else throw std::invalid_argument("config: metrics.head_combine must be average or head1");
  }
  reader.fetch("metrics.bound_diagnostic", spec.metrics.bound_diagnostic);

  reader.reject_unknown();

  spec.variants = {spec.variant};
  validate_spec(spec);
  return spec;
}

ExperimentSpec parse_spec_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_spec_text(buf.str());
}

void validate_spec(const ExperimentSpec& spec) {
  require(spec.data.kind == "blobs" || spec.data.kind == "idx" || spec.data.kind == "csv",
          "config: data.kind must be blobs, idx or csv");
  require(spec.noise.kind == "symmetry" || spec.noise.kind == "pair" || spec.noise.kind == "mixture",
          "config: noise.kind must be symmetry, pair or mixture");
  require(spec.noise.rho >= 0.0 && spec.noise.rho < 1.0, "config: noise.rho must lie in [0,1)");
  if (spec.noise.kind == "pair") {
    require(spec.noise.rho < 0.5, "config: pair noise requires noise.rho < 0.5");
  }
  require(spec.schedule.tau >= 0.0 && spec.schedule.tau < 1.0,
          "config: butterfly.tau must lie in [0,1)");
  require(spec.schedule.tau_t >= 0.0 && spec.schedule.tau_t < 1.0,
          "config: butterfly.tau_t must lie in [0,1)");
  require(spec.schedule.warmup_epochs >= 1, "config: butterfly.t_k must be >= 1");
  require(spec.schedule.total_epochs >= spec.schedule.warmup_epochs,
          "config: butterfly.t_max must be >= butterfly.t_k");
  require(spec.steps_per_epoch >= 1, "config: butterfly.n_max must be >= 1");
  require(spec.batch_size >= 2, "config: butterfly.batch must be >= 2");
  require(spec.confidence > 0.5 && spec.confidence <= 1.0,
          "config: butterfly.confidence must lie in (0.5, 1]");
  require(spec.penalty >= 0.0, "config: butterfly.penalty must be non-negative");
  require(spec.n_t_max >= 0, "config: butterfly.n_t_max must be non-negative");
  require(!spec.n_init || *spec.n_init >= 0, "config: butterfly.n_init must be non-negative");
  require(spec.model.hidden >= 1 && spec.model.extractor_layers >= 1 && spec.model.head_layers >= 1,
          "config: model sizes must be >= 1");
  require(spec.model.dropout >= 0.0 && spec.model.dropout < 1.0,
          "config: model.dropout must lie in [0,1)");
  require(spec.optim.learning_rate >= 0.0, "config: optim.lr must be non-negative");
  require(spec.optim.momentum >= 0.0 && spec.optim.momentum < 1.0,
          "config: optim.momentum must lie in [0,1)");
  require(spec.num_seeds >= 1, "config: seed count must be >= 1");
  for (const auto& v : spec.variants) {
    if (v != "two-step") ButterflyVariant::preset(v);  // throws on unknown names
  }
  if (spec.data.kind == "blobs") {
    require(spec.data.classes >= 2 && spec.data.dim >= 2, "config: blobs need K>=2 and dim>=2");
    require(spec.data.n_source > 0 && spec.data.n_target > 0,
            "config: blobs need positive sample counts");
  } else if (spec.data.kind == "idx") {
    require(!spec.data.images.empty() && !spec.data.labels.empty(),
            "config: idx data needs data.images and data.labels");
  } else if (spec.data.kind == "csv") {
    require(!spec.data.path.empty(), "config: csv data needs data.path");
    require(!spec.data.target_path.empty(), "config: csv data needs data.target_path");
  }
}

}  // namespace wudalab
