#pragma once

// Detection parsing, bounding-box filtering and feature encoding.
//
// Each retained detection becomes an 80-dimensional feature vector:
//   [ hour-of-day one-hot (24) | week-of-year one-hot (52) |
//     normalized lat, lon, frp, elevation (4) ]
// Geometry and time are kept alongside the features for the graphing stage.

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace firecast {

constexpr int kHourSlots = 24;
constexpr int kWeekSlots = 52;
constexpr int kFeatureDim = kHourSlots + kWeekSlots + 4;  // 80

struct RawDetection {
  double latitude = 0.0;   // degrees, [-90, 90]
  double longitude = 0.0;  // degrees, [-180, 180]
  std::chrono::year_month_day acq_date{};
  int acq_time = 0;  // minutes of day, [0, 1439]
  double frp = 0.0;  // megawatts, >= 0
  std::optional<double> elevation;  // meters
};

struct BoundingBox {
  double lat_min, lat_max, lon_min, lon_max;

  bool contains(double lat, double lon) const {
    return lat >= lat_min && lat <= lat_max && lon >= lon_min && lon <= lon_max;
  }
};

// Default study region (configurable).
inline BoundingBox default_bbox() { return {-35.0, -22.0, 16.0, 33.0}; }

struct EncodedPoint {
  std::array<double, kFeatureDim> features{};
  double raw_lat = 0.0;
  double raw_lon = 0.0;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  std::int64_t point_id = 0;
};

struct ColumnMap {
  std::string latitude = "latitude";
  std::string longitude = "longitude";
  std::string acq_date = "acq_date";
  std::string acq_time = "acq_time";
  std::string frp = "frp";
  std::string elevation = "elevation";
};

enum class ParseMode { strict, skip };

struct RowError {
  std::size_t line;  // 1-based, counting the header
  std::string message;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::vector<std::string> split_row(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    out.push_back(field);
  }
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const char* what) {
  double v;
  auto first = s.data();
  auto last = s.data() + s.size();
  while (first != last && *first == ' ') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw std::invalid_argument(std::string("non-numeric ") + what + ": '" + s + "'");
  return v;
}

inline long parse_long(const std::string& s, const char* what) {
  long v;
  auto first = s.data();
  auto last = s.data() + s.size();
  while (first != last && *first == ' ') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw std::invalid_argument(std::string("non-integer ") + what + ": '" + s + "'");
  return v;
}

// ISO-8601 calendar date, e.g. "2013-07-15".
inline std::chrono::year_month_day parse_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-')
    throw std::invalid_argument("bad date: '" + s + "'");
  int y = static_cast<int>(parse_long(s.substr(0, 4), "year"));
  unsigned m = static_cast<unsigned>(parse_long(s.substr(5, 2), "month"));
  unsigned d = static_cast<unsigned>(parse_long(s.substr(8, 2), "day"));
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                  std::chrono::day{d}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date: '" + s + "'");
  return ymd;
}

}  // namespace detail

// Minutes of day from an HHMM integer field (e.g. 1345 -> 825).
inline int minutes_from_hhmm(long hhmm) {
  long h = hhmm / 100;
  long m = hhmm % 100;
  if (hhmm < 0 || h > 23 || m > 59)
    throw std::invalid_argument("acq_time out of range: " + std::to_string(hhmm));
  return static_cast<int>(h * 60 + m);
}

inline std::int64_t detection_timestamp(const std::chrono::year_month_day& date, int minutes) {
  auto days = std::chrono::sys_days(date).time_since_epoch();
  return std::chrono::duration_cast<std::chrono::seconds>(days).count() +
         static_cast<std::int64_t>(minutes) * 60;
}

// Parses delimiter-separated detections with a header row. In skip mode
// malformed rows are reported through `errors` and dropped; in strict
// mode the first bad row aborts with a ParseError naming the line.
inline std::vector<RawDetection> parse_detections(std::istream& in,
                                                  const ColumnMap& cols = {},
                                                  ParseMode mode = ParseMode::strict,
                                                  std::vector<RowError>* errors = nullptr,
                                                  char delim = ',') {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty input: missing header row");
  auto header = detail::split_row(line, delim);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index[header[i]] = i;

  auto require = [&](const std::string& name) -> std::size_t {
    auto it = index.find(name);
    if (it == index.end()) throw std::runtime_error("missing required column: " + name);
    return it->second;
  };
  std::size_t c_lat = require(cols.latitude);
  std::size_t c_lon = require(cols.longitude);
  std::size_t c_date = require(cols.acq_date);
  std::size_t c_time = require(cols.acq_time);
  std::size_t c_frp = require(cols.frp);
  std::optional<std::size_t> c_elev;
  if (auto it = index.find(cols.elevation); it != index.end()) c_elev = it->second;

  std::vector<RawDetection> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = detail::split_row(line, delim);
    try {
      if (fields.size() < header.size()) throw std::invalid_argument("too few fields");
      RawDetection d;
      d.latitude = detail::parse_double(fields[c_lat], "latitude");
      d.longitude = detail::parse_double(fields[c_lon], "longitude");
      if (d.latitude < -90.0 || d.latitude > 90.0)
        throw std::invalid_argument("latitude out of range: " + fields[c_lat]);
      if (d.longitude < -180.0 || d.longitude > 180.0)
        throw std::invalid_argument("longitude out of range: " + fields[c_lon]);
      d.acq_date = detail::parse_date(fields[c_date]);
      d.acq_time = minutes_from_hhmm(detail::parse_long(fields[c_time], "acq_time"));
      d.frp = detail::parse_double(fields[c_frp], "frp");
      if (d.frp < 0.0) throw std::invalid_argument("negative frp: " + fields[c_frp]);
      if (c_elev && !fields[*c_elev].empty())
        d.elevation = detail::parse_double(fields[*c_elev], "elevation");
      out.push_back(d);
    } catch (const std::invalid_argument& e) {
      if (mode == ParseMode::strict) throw ParseError(lineno, e.what());
      if (errors) errors->push_back({lineno, e.what()});
    }
  }
  return out;
}

// Closed-interval box filter, input order preserved.
inline std::vector<RawDetection> filter_bbox(const std::vector<RawDetection>& points,
                                             const BoundingBox& box) {
  std::vector<RawDetection> out;
  out.reserve(points.size());
  for (const auto& p : points)
    if (box.contains(p.latitude, p.longitude)) out.push_back(p);
  return out;
}

inline std::array<double, kHourSlots> encode_hour(int acq_time) {
  if (acq_time < 0 || acq_time >= 1440)
    throw std::invalid_argument("acq_time out of range: " + std::to_string(acq_time));
  std::array<double, kHourSlots> v{};
  v[acq_time / 60] = 1.0;
  return v;
}

inline int day_of_year(const std::chrono::year_month_day& date) {
  auto jan1 = std::chrono::year_month_day{date.year(), std::chrono::January, std::chrono::day{1}};
  return static_cast<int>(
             (std::chrono::sys_days(date) - std::chrono::sys_days(jan1)).count()) +
         1;
}

// Week index = floor((doy - 1) / 7), clamped to 51 for the tail days of the year.
inline std::array<double, kWeekSlots> encode_week(const std::chrono::year_month_day& date) {
  if (!date.ok()) throw std::invalid_argument("invalid calendar date");
  std::array<double, kWeekSlots> v{};
  int idx = std::min((day_of_year(date) - 1) / 7, kWeekSlots - 1);
  v[idx] = 1.0;
  return v;
}

struct MinMax {
  double min = 0.0;
  double max = 0.0;

  // min-max scaling; degenerate ranges map to 0.
  double normalize(double x) const { return max > min ? (x - min) / (max - min) : 0.0; }
};

struct NormalizationStats {
  MinMax latitude, longitude, frp, elevation;
};

// Per-feature min/max over the whole input list. Absent elevations count as 0 m.
inline NormalizationStats fit_normalizer(const std::vector<RawDetection>& points) {
  if (points.empty()) throw std::invalid_argument("fit_normalizer: empty input");
  auto fit = [&](auto get) {
    MinMax mm{get(points.front()), get(points.front())};
    for (const auto& p : points) {
      double v = get(p);
      mm.min = std::min(mm.min, v);
      mm.max = std::max(mm.max, v);
    }
    return mm;
  };
  NormalizationStats s;
  s.latitude = fit([](const RawDetection& p) { return p.latitude; });
  s.longitude = fit([](const RawDetection& p) { return p.longitude; });
  s.frp = fit([](const RawDetection& p) { return p.frp; });
  s.elevation = fit([](const RawDetection& p) { return p.elevation.value_or(0.0); });
  return s;
}

inline EncodedPoint assemble_features(const RawDetection& p, const NormalizationStats& stats,
                                      std::int64_t id) {
  EncodedPoint e;
  auto hour = encode_hour(p.acq_time);
  auto week = encode_week(p.acq_date);
  std::copy(hour.begin(), hour.end(), e.features.begin());
  std::copy(week.begin(), week.end(), e.features.begin() + kHourSlots);
  e.features[76] = stats.latitude.normalize(p.latitude);
  e.features[77] = stats.longitude.normalize(p.longitude);
  e.features[78] = stats.frp.normalize(p.frp);
  e.features[79] = stats.elevation.normalize(p.elevation.value_or(0.0));
  e.raw_lat = p.latitude;
  e.raw_lon = p.longitude;
  e.timestamp = detection_timestamp(p.acq_date, p.acq_time);
  e.point_id = id;
  return e;
}

// Optional elevation source keyed by (lat, lon) rounded to 3 decimal places.
class ElevationLookup {
 public:
  void add(double lat, double lon, double elev_m) { table_[key(lat, lon)] = elev_m; }

  std::optional<double> find(double lat, double lon) const {
    auto it = table_.find(key(lat, lon));
    if (it == table_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t size() const { return table_.size(); }

 private:
  static std::pair<long, long> key(double lat, double lon) {
    return {std::lround(lat * 1000.0), std::lround(lon * 1000.0)};
  }
  std::map<std::pair<long, long>, double> table_;
};

}  // namespace firecast
