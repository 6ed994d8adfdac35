#include "wudalab/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace wudalab {

namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Dataset take_prefix(Dataset d, int limit) {
  if (limit <= 0 || limit >= d.size()) return d;
  Dataset out = std::move(d);
  out.features.conservativeResize(limit, Eigen::NoChange);
  out.labels.resize(static_cast<std::size_t>(limit));
  return out;
}

TransitionMatrix make_kernel(const NoiseConfig& noise, int classes) {
  if (noise.kind == "symmetry") return symmetry_matrix(classes, noise.rho);
  if (noise.kind == "pair") return pair_matrix(classes, noise.rho);
  throw std::invalid_argument("unknown noise kind " + noise.kind);
}

}  // namespace

std::uint64_t cell_seed(const ExperimentSpec& spec, const std::string& variant, int seed_index) {
  return derive_seed(derive_seed(spec.seed, variant), "cell", static_cast<std::uint64_t>(seed_index));
}

BuiltTask build_task(const ExperimentSpec& spec, int seed_index) {
  const std::uint64_t data_seed =
      spec.data.seed ? *spec.data.seed
                     : derive_seed(spec.seed, "data", static_cast<std::uint64_t>(seed_index));
  const std::uint64_t noise_seed =
      spec.noise.seed ? *spec.noise.seed
                      : derive_seed(spec.seed, "noise", static_cast<std::uint64_t>(seed_index));

  BuiltTask task;
  Dataset clean_source;
  if (spec.data.kind == "blobs") {
    DomainPair pair = make_blob_pair(spec.data.classes, spec.data.dim, spec.data.n_source,
                                     spec.data.n_target, spec.data.rotation,
                                     spec.data.translation, data_seed);
    clean_source = std::move(pair.source);
    task.target_features = std::move(pair.target_features);
    task.target_truth = std::move(pair.target_truth);
  } else if (spec.data.kind == "idx") {
    clean_source = take_prefix(load_idx(spec.data.images, spec.data.labels), spec.data.max_source);
    Dataset target;
    if (!spec.data.target_images.empty()) {
      target = take_prefix(load_idx(spec.data.target_images, spec.data.target_labels),
                           spec.data.max_target);
    } else {
      // Same domain pushed through an image-space rotation.
      target = take_prefix(clean_source, spec.data.max_target);
      target.features = rotate_image_features(target.features, target.image_rows,
                                              target.image_cols,
                                              spec.data.image_rotation_deg * std::numbers::pi / 180.0);
    }
    require(target.dim() == clean_source.dim(), "idx: source/target dimension mismatch");
    task.target_features = std::move(target.features);
    task.target_truth.labels = std::move(target.labels);
    clean_source.num_classes = std::max(clean_source.num_classes, target.num_classes);
  } else if (spec.data.kind == "csv") {
    clean_source = load_feature_csv(spec.data.path, spec.data.label_column, spec.data.header);
    Dataset target = load_feature_csv(spec.data.target_path, spec.data.label_column,
                                      spec.data.header);
    require(target.dim() == clean_source.dim(), "csv: source/target dimension mismatch");
    task.target_features = std::move(target.features);
    task.target_truth.labels = std::move(target.labels);
    clean_source.num_classes = std::max(clean_source.num_classes, target.num_classes);
  } else {
    throw std::invalid_argument("unknown data kind " + spec.data.kind);
  }

  task.dim = clean_source.dim();
  task.classes = clean_source.num_classes;

  Rng noise_rng(noise_seed);
  if (spec.noise.kind == "mixture") {
    // Built-in incorrect labeler: shift to the next class.
    const int k = clean_source.num_classes;
    task.noisy = corrupt_by_mixture(
        clean_source, spec.noise.rho,
        [k](const VectorRef&, int y) { return (y + 1) % k; }, noise_rng);
  } else {
    task.noisy = corrupt(clean_source, make_kernel(spec.noise, clean_source.num_classes), noise_rng);
  }
  return task;
}

RunLog run_cell(const ExperimentSpec& spec, const std::string& variant, int seed_index,
                ModelBundle* trained) {
  const BuiltTask task = build_task(spec, seed_index);
  const std::uint64_t seed = cell_seed(spec, variant, seed_index);

  ArchConfig arch;
  arch.input_dim = task.dim;
  arch.num_classes = task.classes;
  arch.hidden = spec.model.hidden;
  arch.extractor_layers = spec.model.extractor_layers;
  arch.head_layers = spec.model.head_layers;
  arch.dropout = spec.model.dropout;
  arch.batchnorm = spec.model.batchnorm;

  TrainConfig cfg;
  cfg.schedule = spec.schedule;
  cfg.policy.confidence_threshold = spec.confidence;
  cfg.policy.n_t_max = spec.n_t_max;
  cfg.policy.n_init = spec.n_init ? *spec.n_init
                                  : pseudo_quota(1, task.target_features.rows(), spec.n_t_max);
  cfg.penalty = spec.penalty;
  cfg.reg_norm = spec.reg_norm;
  cfg.steps_per_epoch = spec.steps_per_epoch;
  cfg.batch_size = spec.batch_size;
  cfg.extractor_from_branch2 = !spec.model.freeze_extractor_branch2;

  ModelBundle bundle = ModelBundle::create(arch, spec.optim, seed);
  RunLogCollector collector(task.noisy.truth, task.noisy.data, task.target_features,
                            task.target_truth, spec.metrics.combine,
                            spec.metrics.bound_diagnostic);

  if (variant == "two-step") {
    const auto outputs = train_two_step(task.noisy.data, task.target_features, bundle, arch,
                                        spec.optim, cfg, seed, collector.callback());
    long hits = 0;
    for (std::size_t i = 0; i < outputs.relabeled_source.size(); ++i) {
      if (outputs.relabeled_source[i] == task.noisy.truth.clean_labels[i]) ++hits;
    }
    collector.log().relabel_accuracy =
        static_cast<double>(hits) / static_cast<double>(outputs.relabeled_source.size());
  } else {
    cfg.variant = ButterflyVariant::preset(variant);
    train_butterfly(task.noisy.data, task.target_features, bundle, cfg, seed,
                    collector.callback());
  }

  if (trained) *trained = std::move(bundle);
  return collector.log();
}

GridResult run_grid(const ExperimentSpec& spec, std::ostream& progress) {
  fs::create_directories(spec.out_dir);
  GridResult result;

  for (const auto& variant : spec.variants) {
    for (int s = 0; s < spec.num_seeds; ++s) {
      CellOutcome cell;
      cell.variant = variant;
      cell.seed_index = s;
      const std::string tag = variant + "_seed" + std::to_string(s);
      progress << "[cell] " << tag << " ..." << std::flush;
      try {
        ModelBundle bundle;
        const RunLog log = run_cell(spec, variant, s, &bundle);

        std::ofstream os(fs::path(spec.out_dir) / ("runlog_" + tag + ".csv"),
                         std::ios::trunc | std::ios::binary);
        os << run_log_to_csv(log);
        os.close();
        save_bundle_checkpoint((fs::path(spec.out_dir) / ("checkpoint_" + tag + ".ckpt")).string(),
                               bundle);

        cell.ok = true;
        cell.final_accuracy = log.final_accuracy();
        cell.best_accuracy = log.best_accuracy();
        cell.mean_last5 = log.mean_last(5);
        cell.relabel_accuracy = log.relabel_accuracy;
        progress << " final_acc=" << cell.final_accuracy << "\n";
      } catch (const std::exception& err) {
        cell.ok = false;
        cell.error = err.what();
        ++result.failures;
        progress << " FAILED: " << cell.error << "\n";
      }
      result.cells.push_back(std::move(cell));
    }
  }

  // Per-cell summary rows.
  {
    std::ofstream os(fs::path(spec.out_dir) / "summary.csv", std::ios::trunc | std::ios::binary);
    os << "variant,seed,final_accuracy,best_accuracy,mean_last5,relabel_accuracy\n";
    for (const auto& c : result.cells) {
      if (!c.ok) continue;
      os << c.variant << ',' << c.seed_index << ',' << fmt_double(c.final_accuracy) << ','
         << fmt_double(c.best_accuracy) << ',' << fmt_double(c.mean_last5) << ','
         << (c.relabel_accuracy ? fmt_double(*c.relabel_accuracy) : std::string()) << "\n";
    }
  }

  // Mean/std across seeds, one row per variant.
  {
    std::ofstream os(fs::path(spec.out_dir) / "grid_summary.csv",
                     std::ios::trunc | std::ios::binary);
    os << "variant,seeds,mean_final_accuracy,std_final_accuracy,mean_best_accuracy,mean_last5\n";
    for (const auto& variant : spec.variants) {
      std::vector<double> finals, bests, last5;
      for (const auto& c : result.cells) {
        if (c.variant != variant || !c.ok) continue;
        finals.push_back(c.final_accuracy);
        bests.push_back(c.best_accuracy);
        last5.push_back(c.mean_last5);
      }
      if (finals.empty()) continue;
      const auto mean = [](const std::vector<double>& v) {
        double s = 0.0;
        for (const double x : v) s += x;
        return s / static_cast<double>(v.size());
      };
      const double m = mean(finals);
      double var = 0.0;
      for (const double x : finals) var += (x - m) * (x - m);
      const double sd = finals.size() > 1 ? std::sqrt(var / static_cast<double>(finals.size() - 1))
                                          : 0.0;
      os << variant << ',' << finals.size() << ',' << fmt_double(m) << ',' << fmt_double(sd) << ','
         << fmt_double(mean(bests)) << ',' << fmt_double(mean(last5)) << "\n";
    }
  }

  if (result.failures > 0) {
    std::ofstream os(fs::path(spec.out_dir) / "failures.csv", std::ios::trunc | std::ios::binary);
    os << "variant,seed,error\n";
    for (const auto& c : result.cells) {
      if (c.ok) continue;
      std::string msg = c.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      os << c.variant << ',' << c.seed_index << ',' << msg << "\n";
    }
  }
  return result;
}

void emit_figure_series(const std::string& dir, const std::string& quantity, std::ostream& warn) {
  require(quantity == "accuracy" || quantity == "rho01_s" || quantity == "rho01_t",
          "figure: quantity must be accuracy, rho01_s or rho01_t");

  struct Entry {
    std::string variant;
    int seed = 0;
    RunLog log;
  };
  std::vector<Entry> entries;
  for (const auto& item : fs::directory_iterator(dir)) {
    const std::string name = item.path().filename().string();
    if (name.rfind("runlog_", 0) != 0 || item.path().extension() != ".csv") continue;
    const auto seed_pos = name.rfind("_seed");
    if (seed_pos == std::string::npos) continue;
    Entry e;
    e.variant = name.substr(7, seed_pos - 7);
    e.seed = std::stoi(name.substr(seed_pos + 5, name.size() - seed_pos - 5 - 4));
    std::ifstream is(item.path());
    std::ostringstream buf;
    buf << is.rdbuf();
    e.log = run_log_from_csv(buf.str());
    entries.push_back(std::move(e));
  }
  require(!entries.empty(), "figure: no runlog_*.csv files in " + dir);
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.variant != b.variant ? a.variant < b.variant : a.seed < b.seed;
  });

  std::size_t common = entries.front().log.epochs.size();
  for (const auto& e : entries) common = std::min(common, e.log.epochs.size());
  for (const auto& e : entries) {
    if (e.log.epochs.size() != common) {
      warn << "figure: truncating " << e.variant << " seed " << e.seed << " from "
           << e.log.epochs.size() << " to " << common << " epochs\n";
    }
  }

  std::ofstream os(fs::path(dir) / ("figure_" + quantity + ".csv"),
                   std::ios::trunc | std::ios::binary);
  os << "variant,seed,epoch,value\n";
  for (const auto& e : entries) {
    for (std::size_t i = 0; i < common; ++i) {
      const auto& rec = e.log.epochs[i];
      std::optional<double> value;
      if (quantity == "accuracy") value = rec.target_acc;
      else if (quantity == "rho01_s") value = rec.rho01_s;
      else value = rec.rho01_t;
      if (!value) continue;  // e.g. rho01_t has no epoch-1 row
      os << e.variant << ',' << e.seed << ',' << rec.epoch << ',' << fmt_double(*value) << "\n";
    }
  }
}

}  // namespace wudalab
