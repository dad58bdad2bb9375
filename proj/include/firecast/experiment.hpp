#pragma once

// Evaluation protocol: seeded 70/30 split, k-fold cross-validated model
// selection, macro-averaged metrics, repeat averaging over l_w in {2..8},
// and Table/plot-data emission.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "firecast/training.hpp"

namespace firecast::exp {

using nn::Dataset;
using nn::Matrix;
using nn::Model;
using nn::ModelKind;
using nn::ModelSpec;

// Stable seed derivation: splitmix64 over a running hash.
inline std::uint64_t mix_seed(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  std::uint64_t z = h + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct SplitSpec {
  double test_fraction = 0.30;
  std::uint64_t seed = 0;
};

struct CvSpec {
  int folds = 10;
};

struct Split {
  Dataset train, test;
};

inline Dataset take_columns(const Dataset& d, const std::vector<Eigen::Index>& idx) {
  Dataset out;
  out.inputs.resize(d.inputs.rows(), static_cast<Eigen::Index>(idx.size()));
  out.labels.resize(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.inputs.col(static_cast<Eigen::Index>(i)) = d.inputs.col(idx[i]);
    out.labels[i] = d.labels[static_cast<std::size_t>(idx[i])];
  }
  return out;
}

// Seeded shuffle, first 70% train / last 30% test.
inline Split train_test_split(const Dataset& samples, const SplitSpec& spec) {
  if (samples.size() < 10) throw std::invalid_argument("train_test_split: need >= 10 samples");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(samples.size()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_test = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(samples.size()) *
                                             spec.test_fraction)));
  std::size_t n_train = order.size() - n_test;
  std::vector<Eigen::Index> train_idx(order.begin(), order.begin() + static_cast<long>(n_train));
  std::vector<Eigen::Index> test_idx(order.begin() + static_cast<long>(n_train), order.end());
  return {take_columns(samples, train_idx), take_columns(samples, test_idx)};
}

struct CvOutcome {
  Model model;
  double validation_accuracy;
  int fold;
};

// Trains one model per held-out fold and keeps the one with the best
// validation accuracy (ties: lowest fold index). Folds are contiguous
// slices of a seeded shuffle of the training set.
inline CvOutcome kfold_select(const Dataset& train, const CvSpec& cv,
                              const std::function<ModelSpec()>& make_spec,
                              std::uint64_t seed) {
  if (train.size() < cv.folds)
    throw std::invalid_argument("kfold_select: training set smaller than fold count");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(train.size()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(mix_seed(seed, 0x666f6c64));
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t n = order.size();
  std::optional<CvOutcome> best;
  for (int fold = 0; fold < cv.folds; ++fold) {
    std::size_t lo = n * static_cast<std::size_t>(fold) / static_cast<std::size_t>(cv.folds);
    std::size_t hi = n * (static_cast<std::size_t>(fold) + 1) / static_cast<std::size_t>(cv.folds);
    std::vector<Eigen::Index> val_idx(order.begin() + static_cast<long>(lo),
                                      order.begin() + static_cast<long>(hi));
    std::vector<Eigen::Index> fit_idx;
    fit_idx.reserve(n - (hi - lo));
    fit_idx.insert(fit_idx.end(), order.begin(), order.begin() + static_cast<long>(lo));
    fit_idx.insert(fit_idx.end(), order.begin() + static_cast<long>(hi), order.end());

    Dataset fit = take_columns(train, fit_idx);
    Dataset val = take_columns(train, val_idx);
    Model model(make_spec());
    nn::train(model, fit, mix_seed(seed, static_cast<std::uint64_t>(fold) + 1));
    double acc = nn::accuracy(model, val);
    if (!best || acc > best->validation_accuracy)
      best = CvOutcome{std::move(model), acc, fold};
  }
  return std::move(*best);
}

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;  // macro over classes with support
  double recall = 0.0;
  std::vector<double> per_class_precision, per_class_recall;
  std::vector<std::size_t> support;
};

inline Metrics compute_metrics(const std::vector<int>& predictions,
                               const std::vector<int>& labels, int n_classes) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("compute_metrics: length mismatch");
  std::vector<std::size_t> tp(static_cast<std::size_t>(n_classes)),
      fp(static_cast<std::size_t>(n_classes)), fn(static_cast<std::size_t>(n_classes)),
      support(static_cast<std::size_t>(n_classes));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int y = labels[i], p = predictions[i];
    if (y < 0 || y >= n_classes || p < 0 || p >= n_classes)
      throw std::invalid_argument("compute_metrics: class out of range");
    ++support[static_cast<std::size_t>(y)];
    if (p == y) {
      ++correct;
      ++tp[static_cast<std::size_t>(y)];
    } else {
      ++fp[static_cast<std::size_t>(p)];
      ++fn[static_cast<std::size_t>(y)];
    }
  }
  Metrics m;
  m.accuracy = labels.empty() ? 0.0
                              : static_cast<double>(correct) / static_cast<double>(labels.size());
  m.support = support;
  m.per_class_precision.resize(static_cast<std::size_t>(n_classes), 0.0);
  m.per_class_recall.resize(static_cast<std::size_t>(n_classes), 0.0);
  double psum = 0.0, rsum = 0.0;
  std::size_t present = 0;
  for (std::size_t c = 0; c < static_cast<std::size_t>(n_classes); ++c) {
    std::size_t predicted = tp[c] + fp[c];
    m.per_class_precision[c] =
        predicted ? static_cast<double>(tp[c]) / static_cast<double>(predicted) : 0.0;
    std::size_t actual = tp[c] + fn[c];
    m.per_class_recall[c] =
        actual ? static_cast<double>(tp[c]) / static_cast<double>(actual) : 0.0;
    if (support[c]) {
      psum += m.per_class_precision[c];
      rsum += m.per_class_recall[c];
      ++present;
    }
  }
  if (present) {
    m.precision = psum / static_cast<double>(present);
    m.recall = rsum / static_cast<double>(present);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Full experiment

enum class Task { binary, multiclass };

inline std::string to_string(Task t) { return t == Task::binary ? "binary" : "multiclass"; }

struct MetricSummary {
  double mean = 0.0;
  double std_dev = 0.0;  // population std over repeats
};

struct Cell {
  bool present = false;
  std::string absent_reason;
  MetricSummary accuracy, precision, recall;
  std::size_t n_samples = 0;
};

struct RunReport {
  Task task;
  std::vector<int> lw_values;
  std::vector<ModelKind> models;
  int repeats = 10;
  std::uint64_t master_seed = 0;
  // cells[lw][kind]
  std::map<int, std::map<ModelKind, Cell>> cells;
};

struct ExperimentConfig {
  Task task = Task::multiclass;
  std::vector<ModelKind> models{ModelKind::LR, ModelKind::LSTM, ModelKind::GRU};
  int lw_min = 2;
  int lw_max = 8;
  int repeats = 10;
  int folds = 10;
  double test_fraction = 0.30;
  std::uint64_t master_seed = 0;
  // Hyperparameter overrides applied to every model spec.
  double dropout_rate = 0.2;
  double learning_rate = 0.001;
  int batch_size = 32;
  int epochs_lr = 300;
  int epochs_rnn = 20;
};

inline MetricSummary summarize(const std::vector<double>& xs) {
  MetricSummary s;
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std_dev = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

// dataset_for(lw) supplies the flat samples for one sequence length.
inline RunReport run_experiment(const ExperimentConfig& cfg,
                                const std::function<Dataset(int)>& dataset_for) {
  RunReport report;
  report.task = cfg.task;
  report.models = cfg.models;
  report.repeats = cfg.repeats;
  report.master_seed = cfg.master_seed;
  const int n_classes = cfg.task == Task::binary ? 2 : 8;

  for (int lw = cfg.lw_min; lw <= cfg.lw_max; ++lw) {
    report.lw_values.push_back(lw);
    Dataset samples = dataset_for(lw);
    for (ModelKind kind : cfg.models) {
      Cell cell;
      cell.n_samples = static_cast<std::size_t>(samples.size());
      if (samples.size() < 10 || samples.size() < cfg.folds * 2) {
        cell.absent_reason = "too few samples (" + std::to_string(samples.size()) + ")";
        report.cells[lw][kind] = cell;
        continue;
      }
      std::vector<double> accs, precs, recs;
      for (int rep = 0; rep < cfg.repeats; ++rep) {
        std::uint64_t seed = mix_seed(
            mix_seed(mix_seed(mix_seed(cfg.master_seed, static_cast<std::uint64_t>(lw)),
                              static_cast<std::uint64_t>(kind)),
                     cfg.task == Task::binary ? 1 : 2),
            static_cast<std::uint64_t>(rep));
        Split split = train_test_split(samples, {cfg.test_fraction, mix_seed(seed, 1)});
        auto make_spec = [&]() {
          ModelSpec s = nn::default_spec(kind, lw - 1,
                                         cfg.task == Task::binary ? 80 : 81, n_classes);
          s.dropout_rate = cfg.dropout_rate;
          s.learning_rate = cfg.learning_rate;
          s.batch_size = cfg.batch_size;
          s.epochs = kind == ModelKind::LR ? cfg.epochs_lr : cfg.epochs_rnn;
          return s;
        };
        CvOutcome best = kfold_select(split.train, {cfg.folds}, make_spec, mix_seed(seed, 2));
        auto preds = nn::predict(best.model, split.test.inputs);
        Metrics m = compute_metrics(preds, split.test.labels, n_classes);
        accs.push_back(m.accuracy);
        precs.push_back(m.precision);
        recs.push_back(m.recall);
      }
      cell.present = true;
      cell.accuracy = summarize(accs);
      cell.precision = summarize(precs);
      cell.recall = summarize(recs);
      report.cells[lw][kind] = cell;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report emission: one table per task plus per-metric plot data with
// mean and std columns, all to 4 decimal places.

inline std::string fmt4(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(4) << v;
  return ss.str();
}

inline void emit_report(const RunReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::string task = to_string(report.task);

  auto metric_of = [](const Cell& c, const std::string& name) -> const MetricSummary& {
    if (name == "accuracy") return c.accuracy;
    if (name == "precision") return c.precision;
    return c.recall;
  };
  const std::vector<std::string> metric_names{"accuracy", "precision", "recall"};

  {
    std::ofstream out(out_dir / (task + "_table.csv"));
    if (!out) throw std::runtime_error("cannot write report table in " + out_dir.string());
    out << "lw";
    for (const auto& metric : metric_names)
      for (ModelKind kind : report.models) out << "," << metric << "_" << nn::to_string(kind);
    out << "\n";
    for (int lw : report.lw_values) {
      out << lw;
      for (const auto& metric : metric_names)
        for (ModelKind kind : report.models) {
          const Cell& c = report.cells.at(lw).at(kind);
          out << "," << (c.present ? fmt4(metric_of(c, metric).mean) : std::string("NA"));
        }
      out << "\n";
    }
  }

  for (const auto& metric : metric_names) {
    std::ofstream out(out_dir / (task + "_" + metric + "_plot.csv"));
    out << "lw";
    for (ModelKind kind : report.models)
      out << "," << nn::to_string(kind) << "_mean," << nn::to_string(kind) << "_std";
    out << "\n";
    for (int lw : report.lw_values) {
      out << lw;
      for (ModelKind kind : report.models) {
        const Cell& c = report.cells.at(lw).at(kind);
        if (c.present)
          out << "," << fmt4(metric_of(c, metric).mean) << ","
              << fmt4(metric_of(c, metric).std_dev);
        else
          out << ",NA,NA";
      }
      out << "\n";
    }
  }
}

}  // namespace firecast::exp
