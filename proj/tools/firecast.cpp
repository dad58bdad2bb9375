// firecast: detection ingest -> fire clustering -> sequence datasets ->
// model training and evaluation, plus a synthetic detection generator.
//
// Stages communicate through files in the formats declared in io.hpp, so
// subcommands can be chained or re-run independently.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "firecast/io.hpp"
#include "firecast/synth.hpp"
#include "firecast/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace firecast;

namespace {

struct RunConfig {
  // shared
  std::uint64_t seed = 0;
  bool verbose = false;
  std::string out;

  // ingest
  std::string input;
  double lat_min = default_bbox().lat_min, lat_max = default_bbox().lat_max;
  double lon_min = default_bbox().lon_min, lon_max = default_bbox().lon_max;
  bool skip_bad_rows = false;

  // clustering
  std::string points_path, fires_path;
  double s_r = kSpatialRadiusM;
  std::int64_t t_r = kTemporalRadiusS;
  int k = kNeighborK;

  // datasets / evaluation
  std::string task = "multiclass";
  std::string models = "lr,lstm,gru";
  int lw = 3;
  int lw_min = 2, lw_max = 8;
  int repeats = 10, folds = 10;
  double test_fraction = 0.30;
  double dropout = 0.2, learning_rate = 0.001;
  int batch_size = 32, epochs_lr = 300, epochs_rnn = 20;

  // train
  std::string dataset_path, model_name = "lr", loss_out;

  // report
  std::string results_path;

  // synth-gen
  SynthSpec synth;
};

std::vector<EncodedPoint> load_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read points file: " + path);
  return io::read_encoded_points(in);
}

std::vector<Wildfire> load_fires(const RunConfig& cfg) {
  auto points = load_points(cfg.points_path);
  std::ifstream in(cfg.fires_path);
  if (!in) throw std::runtime_error("cannot read fires file: " + cfg.fires_path);
  return io::read_fires(in, points);
}

exp::Task parse_task(const std::string& s) {
  if (s == "binary") return exp::Task::binary;
  if (s == "multiclass") return exp::Task::multiclass;
  throw std::runtime_error("unknown task: " + s + " (expected binary or multiclass)");
}

std::vector<nn::ModelKind> parse_models(const std::string& csv) {
  std::vector<nn::ModelKind> out;
  std::istringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::transform(tok.begin(), tok.end(), tok.begin(), ::toupper);
    out.push_back(nn::model_kind_from(tok));
  }
  if (out.empty()) throw std::runtime_error("no models given");
  return out;
}

nn::Dataset dataset_for_lw(const std::vector<Wildfire>& fires, exp::Task task, int lw,
                           std::size_t* skipped = nullptr) {
  if (task == exp::Task::binary) {
    if (skipped) *skipped = 0;
    return io::to_dataset(make_binary(fires, lw));
  }
  auto res = make_multiclass(fires, lw);
  if (skipped) *skipped = res.skipped;
  return io::to_dataset(res.samples);
}

exp::ExperimentConfig experiment_config(const RunConfig& cfg) {
  exp::ExperimentConfig ec;
  ec.task = parse_task(cfg.task);
  ec.models = parse_models(cfg.models);
  ec.lw_min = cfg.lw_min;
  ec.lw_max = cfg.lw_max;
  ec.repeats = cfg.repeats;
  ec.folds = cfg.folds;
  ec.test_fraction = cfg.test_fraction;
  ec.master_seed = cfg.seed;
  ec.dropout_rate = cfg.dropout;
  ec.learning_rate = cfg.learning_rate;
  ec.batch_size = cfg.batch_size;
  ec.epochs_lr = cfg.epochs_lr;
  ec.epochs_rnn = cfg.epochs_rnn;
  if (ec.lw_min < 2 || ec.lw_max > 8 || ec.lw_min > ec.lw_max)
    throw std::runtime_error("lw range must lie within [2, 8]");
  return ec;
}

json manifest_json(const exp::ExperimentConfig& ec) {
  json m;
  m["task"] = exp::to_string(ec.task);
  json models = json::array();
  for (auto k : ec.models) models.push_back(nn::to_string(k));
  m["models"] = models;
  m["lw_min"] = ec.lw_min;
  m["lw_max"] = ec.lw_max;
  m["repeats"] = ec.repeats;
  m["folds"] = ec.folds;
  m["test_fraction"] = ec.test_fraction;
  m["master_seed"] = ec.master_seed;
  m["dropout_rate"] = ec.dropout_rate;
  m["learning_rate"] = ec.learning_rate;
  m["batch_size"] = ec.batch_size;
  m["epochs_lr"] = ec.epochs_lr;
  m["epochs_rnn"] = ec.epochs_rnn;
  return m;
}

json report_json(const exp::RunReport& r) {
  json out;
  out["task"] = exp::to_string(r.task);
  out["repeats"] = r.repeats;
  out["master_seed"] = r.master_seed;
  json models = json::array();
  for (auto k : r.models) models.push_back(nn::to_string(k));
  out["models"] = models;
  json cells = json::array();
  for (int lw : r.lw_values)
    for (auto kind : r.models) {
      const exp::Cell& c = r.cells.at(lw).at(kind);
      json jc;
      jc["lw"] = lw;
      jc["model"] = nn::to_string(kind);
      jc["present"] = c.present;
      jc["n_samples"] = c.n_samples;
      if (c.present) {
        jc["accuracy"] = {{"mean", c.accuracy.mean}, {"std", c.accuracy.std_dev}};
        jc["precision"] = {{"mean", c.precision.mean}, {"std", c.precision.std_dev}};
        jc["recall"] = {{"mean", c.recall.mean}, {"std", c.recall.std_dev}};
      } else {
        jc["absent_reason"] = c.absent_reason;
      }
      cells.push_back(jc);
    }
  out["cells"] = cells;
  return out;
}

exp::RunReport report_from_json(const json& j) {
  exp::RunReport r;
  r.task = parse_task(j.at("task").get<std::string>());
  r.repeats = j.at("repeats").get<int>();
  r.master_seed = j.at("master_seed").get<std::uint64_t>();
  for (const auto& m : j.at("models"))
    r.models.push_back(nn::model_kind_from(m.get<std::string>()));
  for (const auto& jc : j.at("cells")) {
    int lw = jc.at("lw").get<int>();
    if (r.lw_values.empty() || r.lw_values.back() != lw) r.lw_values.push_back(lw);
    exp::Cell c;
    c.present = jc.at("present").get<bool>();
    c.n_samples = jc.at("n_samples").get<std::size_t>();
    if (c.present) {
      c.accuracy = {jc.at("accuracy").at("mean"), jc.at("accuracy").at("std")};
      c.precision = {jc.at("precision").at("mean"), jc.at("precision").at("std")};
      c.recall = {jc.at("recall").at("mean"), jc.at("recall").at("std")};
    } else {
      c.absent_reason = jc.value("absent_reason", "");
    }
    r.cells[lw][nn::model_kind_from(jc.at("model").get<std::string>())] = c;
  }
  return r;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const RunConfig& cfg) {
  std::ifstream in(cfg.input);
  if (!in) throw std::runtime_error("cannot read input file: " + cfg.input);
  std::vector<RowError> errors;
  auto raw = parse_detections(in, {}, cfg.skip_bad_rows ? ParseMode::skip : ParseMode::strict,
                              &errors);
  BoundingBox box{cfg.lat_min, cfg.lat_max, cfg.lon_min, cfg.lon_max};
  auto inside = filter_bbox(raw, box);
  if (inside.empty()) throw std::runtime_error("no detections inside the bounding box");
  auto stats = fit_normalizer(inside);
  std::vector<EncodedPoint> points;
  points.reserve(inside.size());
  for (std::size_t i = 0; i < inside.size(); ++i)
    points.push_back(assemble_features(inside[i], stats, static_cast<std::int64_t>(i)));
  std::ofstream out(cfg.out);
  if (!out) throw std::runtime_error("cannot write points file: " + cfg.out);
  io::write_encoded_points(points, out);
  std::cout << "ingest: " << raw.size() << " rows parsed, " << errors.size()
            << " skipped, " << points.size() << " in box -> " << cfg.out << "\n";
  if (cfg.verbose)
    for (const auto& e : errors)
      std::cerr << "  line " << e.line << ": " << e.message << "\n";
  return 0;
}

int cmd_build_fires(const RunConfig& cfg) {
  auto points = load_points(cfg.points_path);
  auto fires = cluster_fires(points, cfg.k, cfg.s_r, cfg.t_r);
  std::ofstream out(cfg.out);
  if (!out) throw std::runtime_error("cannot write fires file: " + cfg.out);
  io::write_fires(fires, out);
  auto stats = compute_stats(fires);
  io::write_stats(stats, std::cout);
  std::ofstream sf(cfg.out + ".stats.csv");
  io::write_stats(stats, sf);
  std::cout << "build-fires: " << fires.size() << " fires from " << points.size()
            << " points -> " << cfg.out << "\n";
  return 0;
}

int cmd_stats(const RunConfig& cfg) {
  auto fires = load_fires(cfg);
  auto stats = compute_stats(fires);
  io::write_stats(stats, std::cout);
  if (!cfg.out.empty()) {
    std::ofstream out(cfg.out);
    if (!out) throw std::runtime_error("cannot write stats file: " + cfg.out);
    io::write_stats(stats, out);
  }
  return 0;
}

int cmd_make_dataset(const RunConfig& cfg) {
  auto fires = load_fires(cfg);
  exp::Task task = parse_task(cfg.task);
  if (cfg.lw < 2 || cfg.lw > 8) throw std::runtime_error("lw must lie within [2, 8]");
  std::size_t skipped = 0;
  nn::Dataset data = dataset_for_lw(fires, task, cfg.lw, &skipped);

  json manifest;
  manifest["task"] = cfg.task;
  manifest["lw"] = cfg.lw;
  manifest["dimension"] = data.size() ? static_cast<int>(data.inputs.rows()) : 0;
  manifest["n_samples"] = static_cast<std::size_t>(data.size());
  manifest["skipped_fires"] = skipped;
  std::map<int, std::size_t> counts;
  for (int label : data.labels) ++counts[label];
  json jc;
  for (const auto& [label, n] : counts) jc[std::to_string(label)] = n;
  manifest["class_counts"] = jc;

  io::write_dataset(data, manifest, cfg.out);
  std::cout << "make-dataset: " << data.size() << " samples (dim "
            << manifest["dimension"] << ", " << skipped << " fires skipped) -> "
            << cfg.out << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  nn::Dataset data = io::read_dataset(cfg.dataset_path);
  if (data.size() == 0) throw std::runtime_error("empty dataset: " + cfg.dataset_path);
  exp::Task task = parse_task(cfg.task);
  const int per_step = task == exp::Task::binary ? 80 : 81;
  const int n_classes = task == exp::Task::binary ? 2 : 8;
  if (data.inputs.rows() % per_step != 0)
    throw std::runtime_error("dataset dimension " + std::to_string(data.inputs.rows()) +
                             " is not a multiple of the per-step width " +
                             std::to_string(per_step));
  const int steps = static_cast<int>(data.inputs.rows()) / per_step;

  std::string name = cfg.model_name;
  std::transform(name.begin(), name.end(), name.begin(), ::toupper);
  nn::ModelSpec spec = nn::default_spec(nn::model_kind_from(name), steps, per_step, n_classes);
  spec.dropout_rate = cfg.dropout;
  spec.learning_rate = cfg.learning_rate;
  spec.batch_size = cfg.batch_size;
  spec.epochs = spec.kind == nn::ModelKind::LR ? cfg.epochs_lr : cfg.epochs_rnn;

  nn::Model model(spec);
  auto result = nn::train(model, data, cfg.seed);
  nn::save_checkpoint(model, cfg.out);
  if (!cfg.loss_out.empty()) {
    std::ofstream lf(cfg.loss_out);
    lf << std::setprecision(17);
    for (double loss : result.loss_history) lf << loss << "\n";
  }
  std::cout << "train: " << nn::to_string(spec.kind) << " over " << data.size()
            << " samples, final loss " << result.loss_history.back()
            << ", train accuracy " << nn::accuracy(model, data) << " -> " << cfg.out << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg) {
  auto fires = load_fires(cfg);
  exp::ExperimentConfig ec = experiment_config(cfg);
  auto dataset_for = [&](int lw) { return dataset_for_lw(fires, ec.task, lw); };
  exp::RunReport report = exp::run_experiment(ec, dataset_for);

  fs::path out_dir = cfg.out.empty() ? fs::path(".") : fs::path(cfg.out);
  exp::emit_report(report, out_dir);
  std::ofstream rf(out_dir / (exp::to_string(ec.task) + "_results.json"));
  rf << report_json(report).dump(2) << "\n";
  std::ofstream mf(out_dir / "run_manifest.json");
  mf << manifest_json(ec).dump(2) << "\n";
  std::cout << "evaluate: " << exp::to_string(ec.task) << " task, lw " << ec.lw_min << ".."
            << ec.lw_max << ", " << ec.repeats << " repeats -> " << out_dir.string() << "\n";
  return 0;
}

int cmd_report(const RunConfig& cfg) {
  std::ifstream in(cfg.results_path);
  if (!in) throw std::runtime_error("cannot read results file: " + cfg.results_path);
  json j;
  in >> j;
  exp::RunReport report = report_from_json(j);
  fs::path out_dir = cfg.out.empty() ? fs::path(".") : fs::path(cfg.out);
  exp::emit_report(report, out_dir);
  std::cout << "report: " << exp::to_string(report.task) << " tables and plot data -> "
            << out_dir.string() << "\n";
  return 0;
}

int cmd_synth_gen(RunConfig& cfg) {
  cfg.synth.seed = cfg.seed;
  SynthData data = synth_generate(cfg.synth);
  std::ofstream out(cfg.out);
  if (!out) throw std::runtime_error("cannot write detections file: " + cfg.out);
  write_detections_csv(data, out);
  std::cout << "synth-gen: " << cfg.synth.n_fires << " fires, "
            << data.detections.size() << " detections -> " << cfg.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"wildfire detection sequence modelling pipeline"};
  app.require_subcommand(1);
  app.set_config("--config")->description("flat key = value config file");
  app.allow_config_extras(false);

  RunConfig cfg;
  app.add_option("--seed", cfg.seed, "master random seed")->capture_default_str();
  app.add_flag("--verbose", cfg.verbose, "report per-row parse errors and extra detail");

  auto* ingest = app.add_subcommand("ingest", "parse detections and write encoded points");
  ingest->add_option("--input", cfg.input, "detections file (csv with header)")->required();
  ingest->add_option("--out", cfg.out, "encoded points output file")->required();
  ingest->add_option("--lat-min", cfg.lat_min)->capture_default_str();
  ingest->add_option("--lat-max", cfg.lat_max)->capture_default_str();
  ingest->add_option("--lon-min", cfg.lon_min)->capture_default_str();
  ingest->add_option("--lon-max", cfg.lon_max)->capture_default_str();
  ingest->add_flag("--skip-bad-rows", cfg.skip_bad_rows,
                   "drop malformed rows instead of aborting");

  auto* build = app.add_subcommand("build-fires", "cluster points into wildfires");
  build->add_option("--points", cfg.points_path, "encoded points file")->required();
  build->add_option("--out", cfg.out, "wildfire output file")->required();
  build->add_option("--spatial-radius", cfg.s_r, "meters")->capture_default_str();
  build->add_option("--temporal-radius", cfg.t_r, "seconds")->capture_default_str();
  build->add_option("--neighbors", cfg.k, "KNN size")->capture_default_str();

  auto* stats = app.add_subcommand("stats", "summary statistics of a wildfire file");
  stats->add_option("--points", cfg.points_path)->required();
  stats->add_option("--fires", cfg.fires_path)->required();
  stats->add_option("--out", cfg.out, "also write the rows to this file");

  auto* mkds = app.add_subcommand("make-dataset", "emit model-ready samples for one lw");
  mkds->add_option("--points", cfg.points_path)->required();
  mkds->add_option("--fires", cfg.fires_path)->required();
  mkds->add_option("--task", cfg.task, "binary or multiclass")->capture_default_str();
  mkds->add_option("--lw", cfg.lw, "sequence length in [2, 8]")->capture_default_str();
  mkds->add_option("--out", cfg.out, "dataset output file")->required();

  auto* train = app.add_subcommand("train", "train one model on a dataset file");
  train->add_option("--dataset", cfg.dataset_path)->required();
  train->add_option("--model", cfg.model_name, "lr, lstm or gru")->capture_default_str();
  train->add_option("--task", cfg.task)->capture_default_str();
  train->add_option("--out", cfg.out, "checkpoint output file")->required();
  train->add_option("--loss-out", cfg.loss_out, "per-epoch loss history file");
  train->add_option("--dropout", cfg.dropout)->capture_default_str();
  train->add_option("--learning-rate", cfg.learning_rate)->capture_default_str();
  train->add_option("--batch-size", cfg.batch_size)->capture_default_str();
  train->add_option("--epochs-lr", cfg.epochs_lr)->capture_default_str();
  train->add_option("--epochs-rnn", cfg.epochs_rnn)->capture_default_str();

  auto* eval = app.add_subcommand("evaluate", "full split / CV / repeat protocol");
  eval->add_option("--points", cfg.points_path)->required();
  eval->add_option("--fires", cfg.fires_path)->required();
  eval->add_option("--task", cfg.task)->capture_default_str();
  eval->add_option("--models", cfg.models, "comma-separated subset of lr,lstm,gru")
      ->capture_default_str();
  eval->add_option("--lw-min", cfg.lw_min)->capture_default_str();
  eval->add_option("--lw-max", cfg.lw_max)->capture_default_str();
  eval->add_option("--repeats", cfg.repeats)->capture_default_str();
  eval->add_option("--folds", cfg.folds)->capture_default_str();
  eval->add_option("--test-fraction", cfg.test_fraction)->capture_default_str();
  eval->add_option("--dropout", cfg.dropout)->capture_default_str();
  eval->add_option("--learning-rate", cfg.learning_rate)->capture_default_str();
  eval->add_option("--batch-size", cfg.batch_size)->capture_default_str();
  eval->add_option("--epochs-lr", cfg.epochs_lr)->capture_default_str();
  eval->add_option("--epochs-rnn", cfg.epochs_rnn)->capture_default_str();
  eval->add_option("--out", cfg.out, "output directory")->required();

  auto* report = app.add_subcommand("report", "re-emit tables from saved results");
  report->add_option("--results", cfg.results_path, "results json from evaluate")->required();
  report->add_option("--out", cfg.out, "output directory")->required();

  auto* synth = app.add_subcommand("synth-gen", "generate synthetic detections");
  synth->add_option("--n-fires", cfg.synth.n_fires)->capture_default_str();
  synth->add_option("--len-min", cfg.synth.len_min)->capture_default_str();
  synth->add_option("--len-max", cfg.synth.len_max)->capture_default_str();
  synth->add_option("--step-min", cfg.synth.step_min_m, "meters")->capture_default_str();
  synth->add_option("--step-max", cfg.synth.step_max_m, "meters")->capture_default_str();
  synth->add_option("--p-stay", cfg.synth.p_stay, "direction persistence probability")
      ->capture_default_str();
  synth->add_option("--cadence-min", cfg.synth.cadence_min_min, "minutes")
      ->capture_default_str();
  synth->add_option("--cadence-max", cfg.synth.cadence_max_min, "minutes")
      ->capture_default_str();
  synth->add_option("--out", cfg.out, "detections output file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) return cmd_ingest(cfg);
    if (build->parsed()) return cmd_build_fires(cfg);
    if (stats->parsed()) return cmd_stats(cfg);
    if (mkds->parsed()) return cmd_make_dataset(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (eval->parsed()) return cmd_evaluate(cfg);
    if (report->parsed()) return cmd_report(cfg);
    if (synth->parsed()) return cmd_synth_gen(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error in " << app.get_subcommands().front()->get_name() << ": "
              << e.what() << "\n";
    return 1;
  }
  return 0;
}
