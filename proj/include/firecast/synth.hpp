#pragma once

// Seeded synthetic detection generator. Fires are direction-persistent
// random walks placed on a jittered grid with >= 10 km spacing, so the
// clustering stage must recover each walk as exactly one wildfire.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <stdexcept>
#include <vector>

#include "firecast/firegraph.hpp"
#include "firecast/ingest.hpp"
#include "firecast/sequence.hpp"

namespace firecast {

struct SynthSpec {
  int n_fires = 100;
  int len_min = 1;
  int len_max = 6;
  double step_min_m = 150.0;
  double step_max_m = 350.0;   // must stay <= s_r
  double p_stay = 0.8;         // probability of repeating the previous direction
  int cadence_min_min = 30;    // minutes between detections
  int cadence_max_min = 300;   // must stay <= t_r
  BoundingBox region = default_bbox();
  std::uint64_t seed = 0;
};

struct SynthData {
  std::vector<RawDetection> detections;  // fire by fire, chronological within a fire
  std::vector<int> fire_of;              // ground-truth fire index per detection
  std::vector<std::size_t> fire_lengths;
};

namespace detail {

// Grid pitch chosen so that two fires' points can never come within the
// spatial radius of each other, even after jitter and a full-length walk.
constexpr double kGridLatDeg = 0.20;
constexpr double kGridLonDeg = 0.25;
constexpr double kJitterDeg = 0.02;

}  // namespace detail

inline void validate(const SynthSpec& spec) {
  if (spec.n_fires <= 0) throw std::invalid_argument("synth: n_fires must be positive");
  if (spec.len_min < 1 || spec.len_max < spec.len_min)
    throw std::invalid_argument("synth: bad length range");
  if (spec.len_max > kNeighborK + 1)
    throw std::invalid_argument("synth: len_max > 9 cannot guarantee single-component fires");
  if (spec.step_min_m <= 0.0 || spec.step_max_m < spec.step_min_m)
    throw std::invalid_argument("synth: bad step distance range");
  if (spec.step_max_m > kSpatialRadiusM)
    throw std::invalid_argument("synth: step distance exceeds the spatial radius");
  if (spec.cadence_min_min < 1 || spec.cadence_max_min < spec.cadence_min_min)
    throw std::invalid_argument("synth: bad cadence range");
  if (static_cast<std::int64_t>(spec.cadence_max_min) * 60 > kTemporalRadiusS)
    throw std::invalid_argument("synth: cadence exceeds the temporal radius");
  if (spec.p_stay < 0.0 || spec.p_stay > 1.0)
    throw std::invalid_argument("synth: p_stay outside [0, 1]");
}

inline SynthData synth_generate(const SynthSpec& spec) {
  validate(spec);
  const double margin = 0.05;  // keep walks inside the box
  int rows = static_cast<int>((spec.region.lat_max - spec.region.lat_min - 2 * margin) /
                              detail::kGridLatDeg);
  int cols = static_cast<int>((spec.region.lon_max - spec.region.lon_min - 2 * margin) /
                              detail::kGridLonDeg);
  if (rows * cols < spec.n_fires)
    throw std::invalid_argument("synth: region too small for n_fires at 10 km spacing");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> jitter(-detail::kJitterDeg, detail::kJitterDeg);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_real_distribution<double> step_dist(spec.step_min_m, spec.step_max_m);
  std::uniform_real_distribution<double> frp_dist(1.0, 100.0);
  std::uniform_real_distribution<double> elev_dist(0.0, 2000.0);
  std::uniform_int_distribution<int> len_dist(spec.len_min, spec.len_max);
  std::uniform_int_distribution<int> cadence(spec.cadence_min_min, spec.cadence_max_min);
  std::uniform_int_distribution<int> day_dist(0, 364);
  std::uniform_int_distribution<int> minute_dist(0, 1439);
  // Initial spread direction follows a prevailing-wind style rose (N and
  // NW favored 3:1); subsequent changes are uniform over the other seven.
  std::discrete_distribution<int> dir_dist{3, 1, 1, 1, 1, 1, 1, 3};
  std::uniform_int_distribution<int> other_dist(0, 6);

  constexpr double deg = std::numbers::pi / 180.0;
  const auto year_start =
      std::chrono::sys_days(std::chrono::year{2013} / std::chrono::January / 1);

  SynthData out;
  for (int f = 0; f < spec.n_fires; ++f) {
    int r = f / cols;
    int c = f % cols;
    double lat = spec.region.lat_min + margin + r * detail::kGridLatDeg + jitter(rng);
    double lon = spec.region.lon_min + margin + c * detail::kGridLonDeg + jitter(rng);
    int length = len_dist(rng);
    out.fire_lengths.push_back(static_cast<std::size_t>(length));

    // Minutes since year start; cadence keeps consecutive gaps within t_r.
    std::int64_t t_min = static_cast<std::int64_t>(day_dist(rng)) * 1440 + minute_dist(rng);
    int dir = dir_dist(rng);  // 0..7 -> bearing 0, 45, ..., 315

    for (int i = 0; i < length; ++i) {
      RawDetection d;
      d.latitude = lat;
      d.longitude = lon;
      auto date = std::chrono::year_month_day(
          year_start + std::chrono::days(t_min / 1440));
      d.acq_date = date;
      d.acq_time = static_cast<int>(t_min % 1440);
      d.frp = frp_dist(rng);
      d.elevation = elev_dist(rng);
      out.detections.push_back(d);
      out.fire_of.push_back(f);

      if (i + 1 == length) break;
      if (u01(rng) >= spec.p_stay) {
        int other = other_dist(rng);  // uniform over the 7 other directions
        dir = other >= dir ? other + 1 : other;
      }
      double bearing = dir * 45.0;
      double dist = step_dist(rng);
      lat += dist / kEarthRadiusM * std::cos(bearing * deg) / deg;
      lon += dist / (kEarthRadiusM * std::cos(lat * deg)) * std::sin(bearing * deg) / deg;
      t_min += cadence(rng);
    }
  }
  return out;
}

// Writes detections in the standard ingest input format.
inline void write_detections_csv(const SynthData& data, std::ostream& out) {
  out << "latitude,longitude,acq_date,acq_time,frp,elevation\n";
  out << std::setprecision(12);
  for (const auto& d : data.detections) {
    int hhmm = (d.acq_time / 60) * 100 + d.acq_time % 60;
    out << d.latitude << ',' << d.longitude << ','
        << static_cast<int>(d.acq_date.year()) << '-' << std::setw(2) << std::setfill('0')
        << static_cast<unsigned>(d.acq_date.month()) << '-' << std::setw(2)
        << static_cast<unsigned>(d.acq_date.day()) << std::setfill(' ') << ',' << hhmm << ','
        << d.frp << ',' << d.elevation.value_or(0.0) << '\n';
  }
}

}  // namespace firecast
