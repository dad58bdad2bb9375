#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "firecast/firegraph.hpp"

using namespace firecast;

namespace {

EncodedPoint pt(std::int64_t id, double lat, double lon, std::int64_t ts) {
  EncodedPoint p;
  p.point_id = id;
  p.raw_lat = lat;
  p.raw_lon = lon;
  p.timestamp = ts;
  return p;
}

std::vector<EncodedPoint> random_points(std::mt19937_64& rng, std::size_t n) {
  // Tight region so that the radii actually bite.
  std::uniform_real_distribution<double> lat(-29.0, -28.98);
  std::uniform_real_distribution<double> lon(24.0, 24.02);
  std::uniform_int_distribution<std::int64_t> ts(0, 3 * kTemporalRadiusS);
  std::vector<EncodedPoint> pts;
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back(pt(static_cast<std::int64_t>(i), lat(rng), lon(rng), ts(rng)));
  return pts;
}

// Brute-force partition oracle: union every pair (i, j) within both radii
// where j is among i's 8 nearest (or vice versa).
std::vector<std::vector<std::int64_t>> oracle_partition(const std::vector<EncodedPoint>& pts) {
  const std::size_t n = pts.size();
  std::vector<std::vector<std::size_t>> nearest(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      double da = haversine_m(pts[i].raw_lat, pts[i].raw_lon, pts[a].raw_lat, pts[a].raw_lon);
      double db = haversine_m(pts[i].raw_lat, pts[i].raw_lon, pts[b].raw_lat, pts[b].raw_lon);
      if (da != db) return da < db;
      return pts[a].point_id < pts[b].point_id;
    });
    order.resize(std::min<std::size_t>(order.size(), kNeighborK));
    nearest[i] = order;
  }
  std::vector<std::size_t> parent(n);
  for (std::size_t i = 0; i < n; ++i) parent[i] = i;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      bool knn_rel = std::count(nearest[i].begin(), nearest[i].end(), j) ||
                     std::count(nearest[j].begin(), nearest[j].end(), i);
      if (!knn_rel) continue;
      double d = haversine_m(pts[i].raw_lat, pts[i].raw_lon, pts[j].raw_lat, pts[j].raw_lon);
      if (d > kSpatialRadiusM) continue;
      if (std::abs(pts[i].timestamp - pts[j].timestamp) > kTemporalRadiusS) continue;
      parent[find(i)] = find(j);
    }
  std::map<std::size_t, std::vector<std::int64_t>> groups;
  for (std::size_t i = 0; i < n; ++i) groups[find(i)].push_back(pts[i].point_id);
  std::vector<std::vector<std::int64_t>> out;
  for (auto& [root, ids] : groups) {
    std::sort(ids.begin(), ids.end());
    out.push_back(ids);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<std::int64_t>> as_partition(const std::vector<Wildfire>& fires) {
  std::vector<std::vector<std::int64_t>> out;
  for (const auto& f : fires) {
    std::vector<std::int64_t> ids;
    for (const auto& p : f.points) ids.push_back(p.point_id);
    std::sort(ids.begin(), ids.end());
    out.push_back(ids);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("haversine_m basics") {
  CHECK(haversine_m(-28.0, 24.0, -28.0, 24.0) == 0.0);
  // 0.00337 degrees of longitude on the equator: arc length
  // 0.00337 * pi/180 * 6371000 = 374.727 m.
  double d = haversine_m(0.0, 0.0, 0.0, 0.0033700);
  CHECK(d == doctest::Approx(374.727).epsilon(0.001));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lat(-60.0, 60.0), lon(-180.0, 180.0);
  for (int i = 0; i < 50; ++i) {
    double a1 = lat(rng), o1 = lon(rng), a2 = lat(rng), o2 = lon(rng);
    CHECK(haversine_m(a1, o1, a2, o2) == doctest::Approx(haversine_m(a2, o2, a1, o1)));
    CHECK(haversine_m(a1, o1, a2, o2) >= 0.0);
  }
}

TEST_CASE("knn: fewer candidates than k, and self-exclusion") {
  std::vector<EncodedPoint> pts{pt(0, 0.0, 0.0, 0), pt(1, 0.0, 0.001, 0),
                                pt(2, 0.0, 0.002, 0)};
  auto sets = knn(pts, 8);
  REQUIRE(sets.size() == 3);
  for (const auto& s : sets) {
    CHECK(s.neighbors.size() == 2);
    for (const auto& n : s.neighbors) CHECK(n.id != s.center);
  }
  CHECK_THROWS_AS(knn({pt(0, 0, 0, 0)}, 8), std::invalid_argument);
}

TEST_CASE("knn matches exhaustive pairwise sort on 200 random points") {
  std::mt19937_64 rng(42);
  auto pts = random_points(rng, 200);
  auto sets = knn(pts, 8);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::vector<std::int64_t> expect;
    {
      std::vector<std::size_t> order;
      for (std::size_t j = 0; j < pts.size(); ++j)
        if (j != i) order.push_back(j);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        double da =
            haversine_m(pts[i].raw_lat, pts[i].raw_lon, pts[a].raw_lat, pts[a].raw_lon);
        double db =
            haversine_m(pts[i].raw_lat, pts[i].raw_lon, pts[b].raw_lat, pts[b].raw_lon);
        if (da != db) return da < db;
        return pts[a].point_id < pts[b].point_id;
      });
      for (std::size_t r = 0; r < 8; ++r) expect.push_back(pts[order[r]].point_id);
    }
    std::vector<std::int64_t> got;
    for (const auto& n : sets[i].neighbors) got.push_back(n.id);
    CHECK(got == expect);
  }
}

TEST_CASE("filter_neighbors radius bounds are closed") {
  NeighborSet s;
  s.center = 0;
  s.neighbors = {{1, 375.0, 21600}, {2, 100.0, 25200}, {3, 400.0, 3600}};
  auto filtered = filter_neighbors({s});
  REQUIRE(filtered.size() == 1);
  REQUIRE(filtered[0].neighbors.size() == 1);
  CHECK(filtered[0].neighbors[0].id == 1);
}

TEST_CASE("build_graph: isolated nodes and asymmetric listings") {
  NeighborSet a{0, {{1, 100.0, 10}}};
  NeighborSet b{1, {}};
  NeighborSet c{2, {}};
  auto g = build_graph({a, b, c});
  CHECK(g.nodes.size() == 3);
  REQUIRE(g.edges.size() == 1);
  CHECK(g.edges[0] == std::pair<std::int64_t, std::int64_t>{0, 1});
}

TEST_CASE("extract_components: path, isolated points, tie-break order") {
  auto p0 = pt(0, 0.0, 0.0, 0);
  auto p1 = pt(1, 0.0, 0.001, 100);
  auto p2 = pt(2, 0.0, 0.002, 200);
  auto fires = cluster_fires({p0, p1, p2});
  REQUIRE(fires.size() == 1);
  CHECK(fires[0].length() == 3);

  // Two isolated points: 20 km apart.
  auto q0 = pt(0, 0.0, 0.0, 0);
  auto q1 = pt(1, 0.2, 0.0, 0);
  auto fires2 = cluster_fires({q0, q1});
  REQUIRE(fires2.size() == 2);
  CHECK(fires2[0].length() == 1);

  // Shared timestamp: order decided by raw_lat.
  auto r0 = pt(5, 0.001, 0.0, 50);
  auto r1 = pt(6, 0.0, 0.0, 50);
  auto fires3 = cluster_fires({r0, r1});
  REQUIRE(fires3.size() == 1);
  CHECK(fires3[0].points[0].point_id == 6);
  CHECK(fires3[0].points[1].point_id == 5);
}

TEST_CASE("extract_components rejects unresolvable node ids") {
  FireGraph g;
  g.nodes = {7};
  CHECK_THROWS_AS(extract_components(g, {}), std::invalid_argument);
}

TEST_CASE("component extraction matches brute-force oracle on random instances") {
  std::mt19937_64 rng(2024);
  for (int inst = 0; inst < 20; ++inst) {
    std::uniform_int_distribution<std::size_t> size(2, 120);
    auto pts = random_points(rng, size(rng));
    auto got = as_partition(cluster_fires(pts));
    auto expect = oracle_partition(pts);
    REQUIRE(got == expect);

    // Partition property: sizes sum to the point count.
    std::size_t total = 0;
    for (const auto& grp : got) total += grp.size();
    CHECK(total == pts.size());
  }
}

TEST_CASE("graph edges respect both radii") {
  std::mt19937_64 rng(9);
  auto pts = random_points(rng, 150);
  auto sets = filter_neighbors(knn(pts));
  auto g = build_graph(sets);
  for (const auto& [a, b] : g.edges) {
    const auto& pa = pts[static_cast<std::size_t>(a)];
    const auto& pb = pts[static_cast<std::size_t>(b)];
    CHECK(haversine_m(pa.raw_lat, pa.raw_lon, pb.raw_lat, pb.raw_lon) <= kSpatialRadiusM);
    CHECK(std::abs(pa.timestamp - pb.timestamp) <= kTemporalRadiusS);
  }
}

TEST_CASE("clustering is deterministic") {
  std::mt19937_64 rng(5);
  auto pts = random_points(rng, 100);
  auto a = cluster_fires(pts);
  auto b = cluster_fires(pts);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].length() == b[i].length());
    for (std::size_t j = 0; j < a[i].length(); ++j)
      CHECK(a[i].points[j].point_id == b[i].points[j].point_id);
  }
}

TEST_CASE("compute_stats") {
  auto mk = [](std::size_t len) {
    Wildfire f;
    for (std::size_t i = 0; i < len; ++i) {
      EncodedPoint p;
      p.point_id = static_cast<std::int64_t>(i);
      f.points.push_back(p);
    }
    return f;
  };
  SUBCASE("population variance, hand-computed") {
    auto s = compute_stats({mk(1), mk(1), mk(4)});
    CHECK(s.n_fires == 3);
    CHECK(s.mean_len == doctest::Approx(2.0));
    CHECK(s.std_len == doctest::Approx(std::sqrt(2.0)));
    CHECK(s.min_len == 1);
    CHECK(s.max_len == 4);
  }
  SUBCASE("singleton") {
    auto s = compute_stats({mk(5)});
    CHECK(s.mean_len == 5.0);
    CHECK(s.std_len == 0.0);
  }
  SUBCASE("empty list rejected") {
    CHECK_THROWS_AS(compute_stats({}), std::invalid_argument);
  }
}
