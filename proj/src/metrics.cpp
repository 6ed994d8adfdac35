#include "wudalab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace wudalab {

double target_accuracy(const Network& extractor, const Network& ft1, const Network& ft2,
                       const MatrixRef& target_features, const std::vector<int>& oracle_labels,
                       HeadCombine combine) {
  require(static_cast<Eigen::Index>(oracle_labels.size()) == target_features.rows(),
          "target_accuracy: label/feature count mismatch");
  require(!oracle_labels.empty(), "target_accuracy: empty target set");
  const Matrix feat = extractor.evaluate(target_features);
  Matrix probs = softmax(ft1.evaluate(feat));
  if (combine == HeadCombine::kAverage) {
    probs = 0.5 * (probs + softmax(ft2.evaluate(feat)));
  }
  long correct = 0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index arg = 0;
    probs.row(i).maxCoeff(&arg);
    if (static_cast<int>(arg) == oracle_labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(probs.rows());
}

std::optional<double> rho01(const std::vector<int>& selected_indices,
                            const std::vector<bool>& oracle_correct) {
  if (selected_indices.empty()) return std::nullopt;
  long incorrect = 0;
  for (const int idx : selected_indices) {
    require(idx >= 0 && static_cast<std::size_t>(idx) < oracle_correct.size(),
            "rho01: selected index out of range");
    if (!oracle_correct[static_cast<std::size_t>(idx)]) ++incorrect;
  }
  return static_cast<double>(incorrect) / static_cast<double>(selected_indices.size());
}

EnvelopeFit envelope_fit(const std::vector<std::pair<int, double>>& series, long n) {
  require(!series.empty(), "envelope_fit: empty series");
  require(n > 0, "envelope_fit: sample count must be positive");
  EnvelopeFit fit;
  fit.n = n;
  fit.series = series;
  for (const auto& [epoch, rho] : series) {
    require(epoch >= 1, "envelope_fit: epochs must be >= 1");
    fit.c = std::max(fit.c, rho * std::sqrt(static_cast<double>(n) * epoch));
  }
  fit.decreasing = series.back().second < series.front().second;
  return fit;
}

namespace {

std::optional<double> masked_ce(const Matrix& logits, const std::vector<int>& labels,
                                const SelectionMask& mask) {
  if (mask.k == 0) return std::nullopt;
  const auto ce = cross_entropy(logits, labels);
  return selection_loss(ce.per_sample, mask);
}

}  // namespace

BoundDiagnostic bound_diagnostic(const ModelBundle& bundle, const SelectionMask& source_mask,
                                 const SelectionMask& pseudo_mask, const Dataset& source,
                                 const std::vector<std::pair<int, int>>& pseudo_set,
                                 const MatrixRef& target_features) {
  BoundDiagnostic out;

  const Matrix source_feat = bundle.extractor.evaluate(source.features);
  const Matrix logits_f1 = bundle.f1.evaluate(source_feat);
  out.source_observed = masked_ce(logits_f1, source.labels, source_mask);

  // Pseudo-labeling-function output on source points: agreed argmax of the
  // two mixture heads.
  const Matrix probs_avg = 0.5 * (softmax(logits_f1) + softmax(bundle.f2.evaluate(source_feat)));
  std::vector<int> fn_labels(static_cast<std::size_t>(probs_avg.rows()));
  for (Eigen::Index i = 0; i < probs_avg.rows(); ++i) {
    Eigen::Index arg = 0;
    probs_avg.row(i).maxCoeff(&arg);
    fn_labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  out.source_pseudo_fn = masked_ce(logits_f1, fn_labels, source_mask);

  if (!pseudo_set.empty()) {
    Matrix sub(static_cast<Eigen::Index>(pseudo_set.size()), target_features.cols());
    std::vector<int> labels(pseudo_set.size());
    for (std::size_t i = 0; i < pseudo_set.size(); ++i) {
      sub.row(static_cast<Eigen::Index>(i)) = target_features.row(pseudo_set[i].first);
      labels[i] = pseudo_set[i].second;
    }
    const Matrix logits_t = bundle.f1.evaluate(bundle.extractor.evaluate(sub));
    out.target_pseudo = masked_ce(logits_t, labels, pseudo_mask);
  }

  if (out.source_observed && out.source_pseudo_fn && out.target_pseudo) {
    out.composite = 2.0 * (*out.source_observed + *out.source_pseudo_fn) + *out.target_pseudo;
  }
  return out;
}

BoundDiagnostic bound_diagnostic_at_rates(const ModelBundle& bundle, const Dataset& source,
                                          const std::vector<std::pair<int, int>>& pseudo_set,
                                          const MatrixRef& target_features, double rate_mixture,
                                          double rate_target) {
  const Matrix source_feat = bundle.extractor.evaluate(source.features);
  const auto ce_source = cross_entropy(bundle.f1.evaluate(source_feat), source.labels);
  const SelectionMask source_mask = small_loss_select(ce_source.per_sample, rate_mixture);

  SelectionMask pseudo_mask;
  if (!pseudo_set.empty()) {
    Matrix sub(static_cast<Eigen::Index>(pseudo_set.size()), target_features.cols());
    std::vector<int> labels(pseudo_set.size());
    for (std::size_t i = 0; i < pseudo_set.size(); ++i) {
      sub.row(static_cast<Eigen::Index>(i)) = target_features.row(pseudo_set[i].first);
      labels[i] = pseudo_set[i].second;
    }
    const auto ce_t = cross_entropy(bundle.f1.evaluate(bundle.extractor.evaluate(sub)), labels);
    pseudo_mask = small_loss_select(ce_t.per_sample, rate_target);
  }
  return bound_diagnostic(bundle, source_mask, pseudo_mask, source, pseudo_set, target_features);
}

double RunLog::final_accuracy() const {
  require(!epochs.empty(), "RunLog: no epochs");
  return epochs.back().target_acc;
}

double RunLog::best_accuracy() const {
  require(!epochs.empty(), "RunLog: no epochs");
  double best = 0.0;
  for (const auto& e : epochs) best = std::max(best, e.target_acc);
  return best;
}

double RunLog::mean_last(int count) const {
  require(!epochs.empty(), "RunLog: no epochs");
  const int take = std::min<int>(count, static_cast<int>(epochs.size()));
  double sum = 0.0;
  for (int i = 0; i < take; ++i) sum += epochs[epochs.size() - 1 - static_cast<std::size_t>(i)].target_acc;
  return sum / take;
}

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); }

std::optional<double> parse_opt(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return std::stod(cell);
}

void validate_fraction(const std::optional<double>& v, const char* name) {
  if (v) require(*v >= 0.0 && *v <= 1.0, std::string("RunLog: ") + name + " outside [0,1]");
}

}  // namespace

std::string run_log_to_csv(const RunLog& log) {
  std::ostringstream os;
  if (log.relabel_accuracy) {
    os << "# relabel_accuracy=" << fmt_double(*log.relabel_accuracy) << "\n";
  }
  os << "epoch,target_accuracy,rho01_s,rho01_t,n_pseudo,pseudo_label_accuracy,"
        "mean_selected_loss_branch1,mean_selected_loss_branch2,bound_composite\n";
  for (const auto& e : log.epochs) {
    os << e.epoch << ',' << fmt_double(e.target_acc) << ',' << fmt_opt(e.rho01_s) << ','
       << fmt_opt(e.rho01_t) << ',' << e.n_pseudo << ',' << fmt_opt(e.pseudo_label_accuracy)
       << ',' << fmt_opt(e.mean_selected_loss_branch1) << ','
       << fmt_opt(e.mean_selected_loss_branch2) << ',' << fmt_opt(e.bound_composite) << "\n";
  }
  if (!log.epochs.empty()) {
    os << "# summary final=" << fmt_double(log.final_accuracy())
       << " best=" << fmt_double(log.best_accuracy())
       << " mean_last5=" << fmt_double(log.mean_last(5)) << "\n";
  }
  return os.str();
}

RunLog run_log_from_csv(const std::string& csv) {
  RunLog log;
  std::istringstream is(csv);
  std::string line;
  bool saw_header = false;
  int last_epoch = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# relabel_accuracy=", 0) == 0) {
      log.relabel_accuracy = std::stod(line.substr(std::string("# relabel_accuracy=").size()));
      continue;
    }
    if (line[0] == '#') continue;
    if (!saw_header) {
      require(line.rfind("epoch,", 0) == 0, "RunLog CSV: missing header");
      saw_header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    while (cells.size() < 9) cells.emplace_back();
    require(cells.size() == 9, "RunLog CSV: wrong column count");
    EpochRecord rec;
    rec.epoch = std::stoi(cells[0]);
    require(rec.epoch > last_epoch, "RunLog CSV: epochs must be strictly increasing");
    last_epoch = rec.epoch;
    rec.target_acc = std::stod(cells[1]);
    rec.rho01_s = parse_opt(cells[2]);
    rec.rho01_t = parse_opt(cells[3]);
    rec.n_pseudo = std::stol(cells[4]);
    rec.pseudo_label_accuracy = parse_opt(cells[5]);
    rec.mean_selected_loss_branch1 = parse_opt(cells[6]);
    rec.mean_selected_loss_branch2 = parse_opt(cells[7]);
    rec.bound_composite = parse_opt(cells[8]);
    require(rec.target_acc >= 0.0 && rec.target_acc <= 1.0,
            "RunLog CSV: target accuracy outside [0,1]");
    validate_fraction(rec.rho01_s, "rho01_s");
    validate_fraction(rec.rho01_t, "rho01_t");
    validate_fraction(rec.pseudo_label_accuracy, "pseudo_label_accuracy");
    log.epochs.push_back(rec);
  }
  return log;
}

RunLogCollector::RunLogCollector(const oracle::SourceTruth& source_truth,
                                 const Dataset& noisy_source, const MatrixRef& target_features,
                                 const oracle::TargetTruth& target_truth, HeadCombine combine,
                                 bool compute_bound)
    : source_truth_(&source_truth),
      noisy_source_(&noisy_source),
      target_features_(target_features),
      target_truth_(&target_truth),
      combine_(combine),
      compute_bound_(compute_bound) {
  require(source_truth.clean_labels.size() == static_cast<std::size_t>(noisy_source.size()),
          "RunLogCollector: oracle/source size mismatch");
  require(target_truth.labels.size() == static_cast<std::size_t>(target_features_.rows()),
          "RunLogCollector: oracle/target size mismatch");
}

void RunLogCollector::on_epoch(const EpochTrace& trace, const ModelBundle& bundle) {
  EpochRecord rec;
  rec.epoch = trace.epoch;
  rec.target_acc = target_accuracy(bundle.extractor, bundle.ft1, bundle.ft2, target_features_,
                                   target_truth_->labels, combine_);

  // A selected source sample is "correct" when its observed label is clean.
  std::vector<bool> source_correct(source_truth_->corrupted.size());
  for (std::size_t i = 0; i < source_correct.size(); ++i) {
    source_correct[i] = !source_truth_->corrupted[i];
  }
  rec.rho01_s = rho01(trace.selected_source, source_correct);

  // A selected pseudo-target sample is "correct" when its pseudo label
  // matches the oracle target label.
  if (!trace.selected_pseudo.empty()) {
    long incorrect = 0;
    for (const auto& [idx, label] : trace.selected_pseudo) {
      if (label != target_truth_->labels[static_cast<std::size_t>(idx)]) ++incorrect;
    }
    rec.rho01_t = static_cast<double>(incorrect) / static_cast<double>(trace.selected_pseudo.size());
  }

  rec.n_pseudo = static_cast<long>(trace.harvest.size());
  if (!trace.harvest.empty()) {
    long hit = 0;
    for (const auto& [idx, label] : trace.harvest) {
      if (label == target_truth_->labels[static_cast<std::size_t>(idx)]) ++hit;
    }
    rec.pseudo_label_accuracy = static_cast<double>(hit) / static_cast<double>(trace.harvest.size());
  }

  rec.mean_selected_loss_branch1 = trace.mean_selected_loss_b1;
  rec.mean_selected_loss_branch2 = trace.mean_selected_loss_b2;

  if (compute_bound_) {
    const auto diag = bound_diagnostic_at_rates(bundle, *noisy_source_, trace.harvest,
                                                target_features_, trace.rate_mixture,
                                                trace.rate_target);
    rec.bound_composite = diag.composite;
  }

  require(log_.epochs.empty() || rec.epoch > log_.epochs.back().epoch,
          "RunLogCollector: epochs must increase");
  log_.epochs.push_back(std::move(rec));
}

}  // namespace wudalab
