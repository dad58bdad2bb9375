#pragma once

// File formats shared between the CLI stages.
//
//   encoded points: point_id, timestamp, raw_lat, raw_lon, f0..f79  (csv)
//   wildfires:      fire_id, length, point_id...                    (csv)
//   stats:          name,value rows mirroring the dataset table     (csv)
//   datasets:       label, input values; JSON sidecar manifest      (csv + json)
//   run config:     flat "key = value" text, '#' comments

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "firecast/experiment.hpp"
#include "firecast/firegraph.hpp"
#include "firecast/sequence.hpp"

namespace firecast::io {

inline void write_encoded_points(const std::vector<EncodedPoint>& points, std::ostream& out) {
  out << std::setprecision(17);
  for (const auto& p : points) {
    out << p.point_id << ',' << p.timestamp << ',' << p.raw_lat << ',' << p.raw_lon;
    for (double f : p.features) out << ',' << f;
    out << '\n';
  }
}

inline std::vector<EncodedPoint> read_encoded_points(std::istream& in) {
  std::vector<EncodedPoint> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    EncodedPoint p;
    char comma;
    ss >> p.point_id >> comma >> p.timestamp >> comma >> p.raw_lat >> comma >> p.raw_lon;
    for (double& f : p.features) ss >> comma >> f;
    if (!ss) throw std::runtime_error("bad encoded-point record at line " +
                                      std::to_string(lineno));
    out.push_back(p);
  }
  return out;
}

inline void write_fires(const std::vector<Wildfire>& fires, std::ostream& out) {
  for (std::size_t i = 0; i < fires.size(); ++i) {
    out << i << ',' << fires[i].length();
    for (const auto& p : fires[i].points) out << ',' << p.point_id;
    out << '\n';
  }
}

// Rebuilds the fire list from the id file plus the encoded points.
inline std::vector<Wildfire> read_fires(std::istream& in,
                                        const std::vector<EncodedPoint>& points) {
  std::unordered_map<std::int64_t, const EncodedPoint*> by_id;
  for (const auto& p : points) by_id[p.point_id] = &p;
  std::vector<Wildfire> fires;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    long fire_id;
    std::size_t length;
    char comma;
    ss >> fire_id >> comma >> length;
    Wildfire f;
    f.points.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
      std::int64_t pid;
      ss >> comma >> pid;
      auto it = by_id.find(pid);
      if (it == by_id.end())
        throw std::runtime_error("fire references unknown point id " + std::to_string(pid));
      f.points.push_back(*it->second);
    }
    if (!ss) throw std::runtime_error("bad wildfire record: " + line);
    fires.push_back(std::move(f));
  }
  return fires;
}

inline void write_stats(const DatasetStats& s, std::ostream& out) {
  out << std::setprecision(12);
  out << "n_fires," << s.n_fires << '\n';
  out << "mean_length," << s.mean_len << '\n';
  out << "std_length," << s.std_len << '\n';
  out << "min_length," << s.min_len << '\n';
  out << "max_length," << s.max_len << '\n';
}

struct DatasetFile {
  nn::Dataset data;
  nlohmann::json manifest;
};

// One record per line: label, then input values. The model-facing label
// is 0-based (multiclass direction codes are stored as code - 1).
inline void write_dataset(const nn::Dataset& data, const nlohmann::json& manifest,
                          const std::filesystem::path& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw std::runtime_error("cannot write dataset: " + csv_path.string());
  out << std::setprecision(17);
  for (Eigen::Index j = 0; j < data.size(); ++j) {
    out << data.labels[static_cast<std::size_t>(j)];
    for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) out << ',' << data.inputs(i, j);
    out << '\n';
  }
  std::ofstream mf(csv_path.string() + ".manifest.json");
  mf << manifest.dump(2) << '\n';
}

inline nn::Dataset read_dataset(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot read dataset: " + csv_path.string());
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    int label;
    char comma;
    ss >> label;
    std::vector<double> vals;
    double v;
    while (ss >> comma >> v) vals.push_back(v);
    labels.push_back(label);
    rows.push_back(std::move(vals));
  }
  nn::Dataset d;
  if (rows.empty()) return d;
  d.inputs.resize(static_cast<Eigen::Index>(rows.front().size()),
                  static_cast<Eigen::Index>(rows.size()));
  for (std::size_t j = 0; j < rows.size(); ++j) {
    if (rows[j].size() != rows.front().size())
      throw std::runtime_error("ragged dataset rows in " + csv_path.string());
    for (std::size_t i = 0; i < rows[j].size(); ++i)
      d.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j][i];
  }
  d.labels = std::move(labels);
  return d;
}

// Flat key/value run config. Later keys override earlier ones.
inline std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config: " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) kv[key] = value;
  }
  return kv;
}

// Converts sample lists to the model-facing matrix form.
inline nn::Dataset to_dataset(const std::vector<BinarySample>& samples) {
  nn::Dataset d;
  if (samples.empty()) return d;
  d.inputs.resize(static_cast<Eigen::Index>(samples.front().input.size()),
                  static_cast<Eigen::Index>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    for (std::size_t i = 0; i < samples[j].input.size(); ++i)
      d.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          samples[j].input[i];
    d.labels.push_back(samples[j].label);
  }
  return d;
}

inline nn::Dataset to_dataset(const std::vector<MulticlassSample>& samples) {
  nn::Dataset d;
  if (samples.empty()) return d;
  d.inputs.resize(static_cast<Eigen::Index>(samples.front().input.size()),
                  static_cast<Eigen::Index>(samples.size()));
  for (std::size_t j = 0; j < samples.size(); ++j) {
    for (std::size_t i = 0; i < samples[j].input.size(); ++i)
      d.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          samples[j].input[i];
    d.labels.push_back(samples[j].label - 1);  // direction code -> 0-based class
  }
  return d;
}

}  // namespace firecast::io
