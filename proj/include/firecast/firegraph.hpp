#pragma once

// Groups encoded detections into wildfires: K-nearest-neighbour search on
// great-circle distance, spatiotemporal radius filtering, undirected graph
// construction and connected-component extraction.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "firecast/ingest.hpp"

namespace firecast {

constexpr double kEarthRadiusM = 6'371'000.0;
constexpr double kSpatialRadiusM = 375.0;    // VIIRS pixel resolution
constexpr std::int64_t kTemporalRadiusS = 21'600;  // 6 h
constexpr int kNeighborK = 8;

inline double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  constexpr double rad = std::numbers::pi / 180.0;
  double dlat = (lat2 - lat1) * rad;
  double dlon = (lon2 - lon1) * rad;
  double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
             std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) *
                 std::sin(dlon / 2);
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

struct Neighbor {
  std::int64_t id;
  double distance_m;
  std::int64_t dt_s;  // absolute time gap
};

struct NeighborSet {
  std::int64_t center;
  std::vector<Neighbor> neighbors;
};

// Exact k-nearest by great-circle distance on the raw coordinates, ties
// broken by smaller point_id. Exhaustive search; the caller's instance
// sizes keep this affordable and the result matches a brute-force oracle
// by construction.
inline std::vector<NeighborSet> knn(const std::vector<EncodedPoint>& points, int k = kNeighborK) {
  if (points.size() < 2) throw std::invalid_argument("knn: need at least 2 points");
  std::vector<NeighborSet> out(points.size());
  std::vector<Neighbor> cand;
  for (std::size_t i = 0; i < points.size(); ++i) {
    cand.clear();
    cand.reserve(points.size() - 1);
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      double d = haversine_m(points[i].raw_lat, points[i].raw_lon, points[j].raw_lat,
                             points[j].raw_lon);
      cand.push_back({points[j].point_id, d,
                      std::abs(points[i].timestamp - points[j].timestamp)});
    }
    auto by_dist = [](const Neighbor& a, const Neighbor& b) {
      return a.distance_m != b.distance_m ? a.distance_m < b.distance_m : a.id < b.id;
    };
    std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(k), cand.size());
    std::partial_sort(cand.begin(), cand.begin() + keep, cand.end(), by_dist);
    cand.resize(keep);
    out[i] = {points[i].point_id, cand};
  }
  return out;
}

// Keeps neighbours within both radii; bounds are closed.
inline std::vector<NeighborSet> filter_neighbors(std::vector<NeighborSet> sets,
                                                 double s_r = kSpatialRadiusM,
                                                 std::int64_t t_r = kTemporalRadiusS) {
  for (auto& s : sets) {
    std::erase_if(s.neighbors, [&](const Neighbor& n) {
      return n.distance_m > s_r || n.dt_s > t_r;
    });
  }
  return sets;
}

struct FireGraph {
  std::vector<std::int64_t> nodes;
  std::vector<std::pair<std::int64_t, std::int64_t>> edges;  // normalized (a < b), unique
};

// Undirected union of the directed neighbour lists: an edge exists iff
// either endpoint lists the other.
inline FireGraph build_graph(const std::vector<NeighborSet>& sets) {
  FireGraph g;
  g.nodes.reserve(sets.size());
  for (const auto& s : sets) g.nodes.push_back(s.center);
  for (const auto& s : sets)
    for (const auto& n : s.neighbors) {
      if (n.id == s.center) continue;
      g.edges.emplace_back(std::min(s.center, n.id), std::max(s.center, n.id));
    }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  return g;
}

struct Wildfire {
  std::vector<EncodedPoint> points;  // ordered by (timestamp, raw_lat, raw_lon, point_id)

  std::size_t length() const { return points.size(); }
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    for (std::size_t i = 0; i < n; ++i) parent_[i] = i;
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

// One Wildfire per connected component, each chronologically ordered;
// the fire list itself is ordered by (first timestamp, smallest point_id).
inline std::vector<Wildfire> extract_components(
    const FireGraph& g, const std::unordered_map<std::int64_t, EncodedPoint>& points) {
  std::unordered_map<std::int64_t, std::size_t> index;
  index.reserve(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!points.count(g.nodes[i]))
      throw std::invalid_argument("extract_components: unresolvable node id " +
                                  std::to_string(g.nodes[i]));
    index[g.nodes[i]] = i;
  }
  detail::UnionFind uf(g.nodes.size());
  for (const auto& [a, b] : g.edges) uf.unite(index.at(a), index.at(b));

  std::unordered_map<std::size_t, std::vector<EncodedPoint>> groups;
  for (std::size_t i = 0; i < g.nodes.size(); ++i)
    groups[uf.find(i)].push_back(points.at(g.nodes[i]));

  auto point_order = [](const EncodedPoint& a, const EncodedPoint& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.raw_lat != b.raw_lat) return a.raw_lat < b.raw_lat;
    if (a.raw_lon != b.raw_lon) return a.raw_lon < b.raw_lon;
    return a.point_id < b.point_id;
  };

  std::vector<Wildfire> fires;
  fires.reserve(groups.size());
  for (auto& [root, pts] : groups) {
    std::sort(pts.begin(), pts.end(), point_order);
    fires.push_back({std::move(pts)});
  }
  std::sort(fires.begin(), fires.end(), [](const Wildfire& a, const Wildfire& b) {
    auto ka = std::pair{a.points.front().timestamp,
                        std::min_element(a.points.begin(), a.points.end(),
                                         [](auto& x, auto& y) { return x.point_id < y.point_id; })
                            ->point_id};
    auto kb = std::pair{b.points.front().timestamp,
                        std::min_element(b.points.begin(), b.points.end(),
                                         [](auto& x, auto& y) { return x.point_id < y.point_id; })
                            ->point_id};
    return ka < kb;
  });
  return fires;
}

// Convenience pipeline: knn -> radius filter -> graph -> components.
inline std::vector<Wildfire> cluster_fires(const std::vector<EncodedPoint>& points,
                                           int k = kNeighborK, double s_r = kSpatialRadiusM,
                                           std::int64_t t_r = kTemporalRadiusS) {
  if (points.empty()) return {};
  if (points.size() == 1) return {Wildfire{{points.front()}}};
  auto sets = filter_neighbors(knn(points, k), s_r, t_r);
  auto graph = build_graph(sets);
  std::unordered_map<std::int64_t, EncodedPoint> by_id;
  by_id.reserve(points.size());
  for (const auto& p : points) by_id.emplace(p.point_id, p);
  return extract_components(graph, by_id);
}

struct DatasetStats {
  std::size_t n_fires = 0;
  double mean_len = 0.0;
  double std_len = 0.0;  // population
  std::size_t min_len = 0;
  std::size_t max_len = 0;
};

inline DatasetStats compute_stats(const std::vector<Wildfire>& fires) {
  if (fires.empty()) throw std::invalid_argument("compute_stats: empty fire list");
  DatasetStats s;
  s.n_fires = fires.size();
  s.min_len = fires.front().length();
  s.max_len = fires.front().length();
  double sum = 0.0;
  for (const auto& f : fires) {
    sum += static_cast<double>(f.length());
    s.min_len = std::min(s.min_len, f.length());
    s.max_len = std::max(s.max_len, f.length());
  }
  s.mean_len = sum / static_cast<double>(fires.size());
  double var = 0.0;
  for (const auto& f : fires) {
    double d = static_cast<double>(f.length()) - s.mean_len;
    var += d * d;
  }
  s.std_len = std::sqrt(var / static_cast<double>(fires.size()));
  return s;
}

}  // namespace firecast
