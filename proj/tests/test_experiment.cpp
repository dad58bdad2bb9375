#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "firecast/experiment.hpp"

using namespace firecast;
using namespace firecast::exp;

namespace {

// Toy dataset: label recoverable from the first input entry.
Dataset toy_dim(int n, int n_classes, int dim, std::uint64_t seed, double noise = 0.0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cls(0, n_classes - 1);
  std::uniform_real_distribution<double> eps(-noise, noise);
  Dataset d;
  d.inputs.resize(dim, n);
  for (int j = 0; j < n; ++j) {
    int label = cls(rng);
    d.labels.push_back(label);
    d.inputs(0, j) = static_cast<double>(label) + eps(rng);
    for (int i = 1; i < dim; ++i) d.inputs(i, j) = eps(rng);
  }
  return d;
}

Dataset toy(int n, int n_classes, std::uint64_t seed, double noise = 0.0) {
  return toy_dim(n, n_classes, 4, seed, noise);
}

}  // namespace

TEST_CASE("train_test_split") {
  Dataset d = toy(10, 2, 1);
  SUBCASE("10 samples split 7/3") {
    auto s = train_test_split(d, {0.30, 5});
    CHECK(s.train.size() == 7);
    CHECK(s.test.size() == 3);
  }
  SUBCASE("partition: disjoint and exhaustive") {
    Dataset big = toy(57, 2, 2);
    // Tag each sample uniquely through input row 1.
    for (int j = 0; j < 57; ++j) big.inputs(1, j) = j;
    auto s = train_test_split(big, {0.30, 9});
    std::multiset<double> seen;
    for (Eigen::Index j = 0; j < s.train.size(); ++j) seen.insert(s.train.inputs(1, j));
    for (Eigen::Index j = 0; j < s.test.size(); ++j) seen.insert(s.test.inputs(1, j));
    CHECK(seen.size() == 57);
    CHECK(std::set<double>(seen.begin(), seen.end()).size() == 57);
  }
  SUBCASE("same seed, same split") {
    auto a = train_test_split(d, {0.30, 17});
    auto b = train_test_split(d, {0.30, 17});
    CHECK(a.train.inputs == b.train.inputs);
    CHECK(a.test.labels == b.test.labels);
  }
  SUBCASE("too few samples rejected") {
    CHECK_THROWS_AS(train_test_split(toy(9, 2, 3), {0.30, 0}), std::invalid_argument);
  }
}

TEST_CASE("kfold_select") {
  Dataset train = toy(50, 2, 7, 0.2);
  auto make_spec = [] {
    ModelSpec s = nn::default_spec(ModelKind::LR, 1, 4, 2);
    s.epochs = 50;
    return s;
  };
  SUBCASE("selection returns the best-validation model") {
    auto best = kfold_select(train, {10}, make_spec, 3);
    CHECK(best.fold >= 0);
    CHECK(best.fold < 10);
    CHECK(best.validation_accuracy >= 0.0);
    CHECK(best.validation_accuracy <= 1.0);
  }
  SUBCASE("train set smaller than fold count rejected") {
    CHECK_THROWS_AS(kfold_select(toy(5, 2, 1), {10}, make_spec, 0), std::invalid_argument);
  }
  SUBCASE("ties resolve to the lowest fold index") {
    // Noise-free separable data: every fold validates at 1.0, so the
    // tie-break rule must hand back fold 0.
    Dataset clean = toy(40, 2, 21, 0.0);
    auto best = kfold_select(clean, {4}, make_spec, 5);
    CHECK(best.validation_accuracy == doctest::Approx(1.0));
    CHECK(best.fold == 0);
  }
  SUBCASE("same seed, same selection") {
    auto a = kfold_select(train, {5}, make_spec, 42);
    auto b = kfold_select(train, {5}, make_spec, 42);
    CHECK(a.fold == b.fold);
    CHECK(a.validation_accuracy == b.validation_accuracy);
  }
}

TEST_CASE("compute_metrics") {
  SUBCASE("worked example") {
    Metrics m = compute_metrics({1, 1, 0, 0}, {1, 0, 0, 0}, 2);
    CHECK(m.accuracy == doctest::Approx(0.75));
    CHECK(m.precision == doctest::Approx(0.75));
    CHECK(m.recall == doctest::Approx(0.8333).epsilon(1e-3));
    CHECK(m.per_class_precision[1] == doctest::Approx(0.5));
    CHECK(m.per_class_recall[1] == doctest::Approx(1.0));
    CHECK(m.per_class_precision[0] == doctest::Approx(1.0));
    CHECK(m.per_class_recall[0] == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("perfect predictions") {
    Metrics m = compute_metrics({0, 1, 2}, {0, 1, 2}, 3);
    CHECK(m.accuracy == 1.0);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
  }
  SUBCASE("constant predictor on balanced labels") {
    Metrics m = compute_metrics({0, 0, 0, 0}, {0, 1, 0, 1}, 2);
    CHECK(m.accuracy == 0.5);
  }
  SUBCASE("length mismatch rejected") {
    CHECK_THROWS_AS(compute_metrics({0}, {0, 1}, 2), std::invalid_argument);
  }
  SUBCASE("matches brute-force confusion counting on random pairs") {
    std::mt19937_64 rng(31);
    for (int inst = 0; inst < 30; ++inst) {
      int n_classes = 2 + static_cast<int>(rng() % 7);
      int n = 50 + static_cast<int>(rng() % 200);
      std::vector<int> preds, labels;
      std::uniform_int_distribution<int> cls(0, n_classes - 1);
      for (int i = 0; i < n; ++i) {
        preds.push_back(cls(rng));
        labels.push_back(cls(rng));
      }
      Metrics m = compute_metrics(preds, labels, n_classes);

      // Naive recount.
      double correct = 0;
      double psum = 0, rsum = 0;
      int present = 0;
      for (int c = 0; c < n_classes; ++c) {
        int tp = 0, fp = 0, fn = 0, sup = 0;
        for (int i = 0; i < n; ++i) {
          if (labels[static_cast<std::size_t>(i)] == c) ++sup;
          if (preds[static_cast<std::size_t>(i)] == c &&
              labels[static_cast<std::size_t>(i)] == c)
            ++tp;
          if (preds[static_cast<std::size_t>(i)] == c &&
              labels[static_cast<std::size_t>(i)] != c)
            ++fp;
          if (preds[static_cast<std::size_t>(i)] != c &&
              labels[static_cast<std::size_t>(i)] == c)
            ++fn;
        }
        if (sup) {
          psum += tp + fp ? double(tp) / (tp + fp) : 0.0;
          rsum += tp + fn ? double(tp) / (tp + fn) : 0.0;
          ++present;
        }
      }
      for (int i = 0; i < n; ++i)
        if (preds[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(i)])
          ++correct;
      CHECK(m.accuracy == doctest::Approx(correct / n).epsilon(1e-12));
      CHECK(m.precision == doctest::Approx(psum / present).epsilon(1e-12));
      CHECK(m.recall == doctest::Approx(rsum / present).epsilon(1e-12));
    }
  }
  SUBCASE("random predictor on balanced classes scores near 0.5") {
    std::mt19937_64 rng(12345);
    std::uniform_int_distribution<int> coin(0, 1);
    std::vector<int> preds, labels;
    for (int i = 0; i < 10000; ++i) {
      preds.push_back(coin(rng));
      labels.push_back(i % 2);
    }
    Metrics m = compute_metrics(preds, labels, 2);
    CHECK(m.accuracy > 0.48);
    CHECK(m.accuracy < 0.52);
  }
}

TEST_CASE("run_experiment structure and emit_report shapes") {
  // Cheap LR-only run over lw 2..8 using synthetic toy datasets.
  ExperimentConfig cfg;
  cfg.task = Task::binary;
  cfg.models = {ModelKind::LR};
  cfg.repeats = 2;
  cfg.folds = 3;
  cfg.epochs_lr = 20;
  cfg.master_seed = 5;
  auto dataset_for = [](int lw) {
    return toy_dim(40 + lw, 2, 80 * (lw - 1), static_cast<std::uint64_t>(lw));
  };
  RunReport report = run_experiment(cfg, dataset_for);

  CHECK(report.lw_values.size() == 7);
  for (int lw : report.lw_values) {
    const Cell& c = report.cells.at(lw).at(ModelKind::LR);
    CHECK(c.present);
    CHECK(c.accuracy.std_dev >= 0.0);
  }

  SUBCASE("absent cells carry a reason and the run continues") {
    auto sparse = [](int lw) { return toy_dim(lw == 3 ? 4 : 40, 2, 80 * (lw - 1), 1); };
    RunReport r2 = run_experiment(cfg, sparse);
    CHECK_FALSE(r2.cells.at(3).at(ModelKind::LR).present);
    CHECK(!r2.cells.at(3).at(ModelKind::LR).absent_reason.empty());
    CHECK(r2.cells.at(4).at(ModelKind::LR).present);
  }

  SUBCASE("emit_report writes table and plot files with expected shapes") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "firecast_report_test";
    fs::remove_all(dir);
    // Use all three model columns for the 10-column table shape.
    RunReport full = report;
    full.models = {ModelKind::LR, ModelKind::LSTM, ModelKind::GRU};
    for (int lw : full.lw_values) {
      full.cells[lw][ModelKind::LSTM] = full.cells[lw][ModelKind::LR];
      full.cells[lw][ModelKind::GRU] = full.cells[lw][ModelKind::LR];
    }
    emit_report(full, dir);

    std::ifstream table(dir / "binary_table.csv");
    REQUIRE(table.good());
    std::string line;
    std::getline(table, line);
    CHECK(std::count(line.begin(), line.end(), ',') == 9);  // lw + 9 metric columns
    int rows = 0;
    std::string first_data;
    while (std::getline(table, line))
      if (!line.empty()) {
        if (rows == 0) first_data = line;
        ++rows;
      }
    CHECK(rows == 7);
    // 4-decimal formatting.
    auto second_field = first_data.substr(first_data.find(',') + 1);
    second_field = second_field.substr(0, second_field.find(','));
    CHECK(second_field.size() == 6);
    CHECK(second_field[1] == '.');

    for (const char* metric : {"accuracy", "precision", "recall"}) {
      std::ifstream plot(dir / ("binary_" + std::string(metric) + "_plot.csv"));
      REQUIRE(plot.good());
      std::getline(plot, line);
      CHECK(std::count(line.begin(), line.end(), ',') == 6);  // lw + 3 * (mean, std)
    }
    fs::remove_all(dir);
  }
}

TEST_CASE("experiment determinism: same config, identical report") {
  ExperimentConfig cfg;
  cfg.task = Task::binary;
  cfg.models = {ModelKind::LR};
  cfg.repeats = 2;
  cfg.folds = 3;
  cfg.epochs_lr = 10;
  cfg.lw_min = 2;
  cfg.lw_max = 3;
  cfg.master_seed = 77;
  auto dataset_for = [](int lw) {
    return toy_dim(30, 2, 80 * (lw - 1), static_cast<std::uint64_t>(lw));
  };
  RunReport a = run_experiment(cfg, dataset_for);
  RunReport b = run_experiment(cfg, dataset_for);
  for (int lw : a.lw_values) {
    CHECK(a.cells.at(lw).at(ModelKind::LR).accuracy.mean ==
          b.cells.at(lw).at(ModelKind::LR).accuracy.mean);
    CHECK(a.cells.at(lw).at(ModelKind::LR).precision.std_dev ==
          b.cells.at(lw).at(ModelKind::LR).precision.std_dev);
  }
}

TEST_CASE("no test-set leakage into CV folds") {
  Dataset d = toy(60, 2, 91);
  for (int j = 0; j < 60; ++j) d.inputs(2, j) = j;  // unique tag
  auto s = train_test_split(d, {0.30, 13});
  std::set<double> test_tags;
  for (Eigen::Index j = 0; j < s.test.size(); ++j) test_tags.insert(s.test.inputs(2, j));
  for (Eigen::Index j = 0; j < s.train.size(); ++j)
    CHECK(test_tags.count(s.train.inputs(2, j)) == 0);
}
