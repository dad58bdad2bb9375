#pragma once

// Supervised sample construction from ordered wildfires.
//
// Binary task: did the fire keep burning (length l_w vs l_w - 1)?
// Multiclass task: which of 8 cardinal directions did it move in next?
//
// Flat layouts, per fire of effective length l_w - 1 points:
//   binary:     [80-vectors of the points, concatenated]          dim 80(l_w-1)
//   multiclass: [80-vectors] ++ [d_0 .. d_{l_w-2}] as raw reals   dim 81(l_w-1)
// Recurrent models view the multiclass vector as l_w - 1 steps of 81 values
// (80 features + that step's incoming direction).

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "firecast/firegraph.hpp"

namespace firecast {

constexpr int kNumDirections = 8;  // N, NE, E, SE, S, SW, W, NW clockwise

// Initial great-circle bearing from `from` to `to`, clockwise from true
// north, in [0, 360).
inline double bearing_deg(double lat1, double lon1, double lat2, double lon2) {
  if (lat1 == lat2 && lon1 == lon2)
    throw std::invalid_argument("bearing_deg: coincident points");
  constexpr double rad = std::numbers::pi / 180.0;
  double dlon = (lon2 - lon1) * rad;
  double y = std::sin(dlon) * std::cos(lat2 * rad);
  double x = std::cos(lat1 * rad) * std::sin(lat2 * rad) -
             std::sin(lat1 * rad) * std::cos(lat2 * rad) * std::cos(dlon);
  double b = std::atan2(y, x) / rad;
  b = std::fmod(b + 360.0, 360.0);
  return b == 360.0 ? 0.0 : b;
}

// 45-degree half-open sectors; code 1 = N centered on 0, codes run
// clockwise to 8 = NW. A boundary angle belongs to the clockwise-later
// sector (22.5 -> NE).
inline int direction_of(double bearing) {
  if (bearing < 0.0 || bearing >= 360.0)
    throw std::invalid_argument("direction_of: bearing out of [0, 360)");
  double shifted = std::fmod(bearing + 22.5, 360.0);
  return static_cast<int>(shifted / 45.0) + 1;
}

struct BinarySample {
  std::vector<double> input;  // dim 80 * (l_w - 1)
  int label;                  // 1 = burning, 0 = not burning
  int lw;
};

struct MulticlassSample {
  std::vector<double> input;  // dim 81 * (l_w - 1)
  int label;                  // direction code in [1, 8]
  int lw;
};

// Fires of exact length l_w lose their last point and get label 1; fires
// of exact length l_w - 1 are taken whole with label 0. Everything else
// is ignored.
inline std::vector<BinarySample> make_binary(const std::vector<Wildfire>& fires, int lw) {
  if (lw < 2) throw std::invalid_argument("make_binary: l_w must be >= 2");
  std::vector<BinarySample> out;
  const std::size_t keep = static_cast<std::size_t>(lw) - 1;
  for (const auto& f : fires) {
    int label;
    if (f.length() == static_cast<std::size_t>(lw))
      label = 1;
    else if (f.length() == keep)
      label = 0;
    else
      continue;
    BinarySample s;
    s.label = label;
    s.lw = lw;
    s.input.reserve(keep * kFeatureDim);
    for (std::size_t i = 0; i < keep; ++i)
      s.input.insert(s.input.end(), f.points[i].features.begin(), f.points[i].features.end());
    out.push_back(std::move(s));
  }
  return out;
}

struct MulticlassResult {
  std::vector<MulticlassSample> samples;
  std::size_t skipped = 0;  // fires with a coincident consecutive pair
};

// Fires of exact length l_w only. The input holds the first l_w - 1
// points plus their incoming directions (d_0 = 0); the label is the
// direction of the final step.
inline MulticlassResult make_multiclass(const std::vector<Wildfire>& fires, int lw) {
  if (lw < 2) throw std::invalid_argument("make_multiclass: l_w must be >= 2");
  MulticlassResult res;
  const std::size_t keep = static_cast<std::size_t>(lw) - 1;
  for (const auto& f : fires) {
    if (f.length() != static_cast<std::size_t>(lw)) continue;
    bool coincident = false;
    std::vector<double> dirs(lw, 0.0);  // dirs[0] = d_0 = 0
    for (int i = 0; i + 1 < lw; ++i) {
      const auto& a = f.points[static_cast<std::size_t>(i)];
      const auto& b = f.points[static_cast<std::size_t>(i) + 1];
      if (a.raw_lat == b.raw_lat && a.raw_lon == b.raw_lon) {
        coincident = true;
        break;
      }
      dirs[static_cast<std::size_t>(i) + 1] =
          direction_of(bearing_deg(a.raw_lat, a.raw_lon, b.raw_lat, b.raw_lon));
    }
    if (coincident) {
      ++res.skipped;
      continue;
    }
    MulticlassSample s;
    s.lw = lw;
    s.label = static_cast<int>(dirs[static_cast<std::size_t>(lw) - 1]);
    s.input.reserve(keep * (kFeatureDim + 1));
    for (std::size_t i = 0; i < keep; ++i)
      s.input.insert(s.input.end(), f.points[i].features.begin(), f.points[i].features.end());
    s.input.insert(s.input.end(), dirs.begin(), dirs.begin() + static_cast<long>(keep));
    res.samples.push_back(std::move(s));
  }
  return res;
}

}  // namespace firecast
