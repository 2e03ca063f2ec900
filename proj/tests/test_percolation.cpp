#include <doctest.h>

#include <array>
#include <cmath>
#include <map>
#include <set>

#include "qperc/error.hpp"
#include "qperc/percolation.hpp"
#include "test_support.hpp"

using namespace qperc;
using qperc::testing::v1;
using qperc::testing::v2;

namespace {

Configuration explicit_config(const PeriodicGraph& g, const std::vector<Vertex>& active) {
  SiteOverrides o;
  for (const auto& v : active) o[v] = true;
  return Configuration(g, PercolationLaw::uniform(g.orbit_count(), 0.0, 0)).with_overrides(o);
}

// Components by repeated relaxation over all active pairs.
std::vector<std::set<Vertex>> closure_components(const PeriodicGraph& g, const Configuration& cfg,
                                                 const BoxRegion& box) {
  const auto verts = active_vertices(g, cfg, box);
  const std::size_t n = verts.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t i = 0; i < n; ++i) {
    reach[i][i] = true;
    const auto nb = g.neighbors(verts[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (std::find(nb.begin(), nb.end(), verts[j]) != nb.end()) reach[i][j] = true;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
      }
    }
  }
  std::set<std::set<Vertex>> comps;
  for (std::size_t i = 0; i < n; ++i) {
    std::set<Vertex> c;
    for (std::size_t j = 0; j < n; ++j) {
      if (reach[i][j]) c.insert(verts[j]);
    }
    comps.insert(c);
  }
  return {comps.begin(), comps.end()};
}

double active_fraction(const PeriodicGraph& g, const Configuration& cfg, const BoxRegion& box) {
  const auto mask = cfg.box_mask(box);
  double a = 0;
  for (auto m : mask) a += m;
  return a / static_cast<double>(mask.size());
}

}  // namespace

TEST_SUITE("percolation") {
  TEST_CASE("published hash vectors") {
    const std::array<std::int64_t, 1> c0{0};
    CHECK(site_hash(0, 0, 0, c0) == 0x2130748aaac80268ULL);
    const std::array<std::int64_t, 2> c1{5, -3};
    CHECK(site_hash(42, 0, 0, c1) == 0xd79d20bffa4b2990ULL);
    const std::array<std::int64_t, 2> c2{-1, 0};
    CHECK(site_hash(42, 7, 1, c2) == 0x777c32bb700757deULL);
    const std::array<std::int64_t, 3> c3{1000000, -1000000, 17};
    CHECK(site_hash(0xdeadbeefcafef00dULL, 123456, 0, c3) == 0xd6bbf87dd547579cULL);
    const std::array<std::int64_t, 2> c4{INT64_C(-2147483648), INT64_C(2147483647)};
    CHECK(site_hash(~0ULL, 1ULL << 63, 3, c4) == 0x82b60e0fe8920e19ULL);
  }

  TEST_CASE("activation threshold") {
    CHECK(ActivationThreshold(0.6).threshold == 0x9999999999999800ULL);
    CHECK(ActivationThreshold(0.0).threshold == 0);
    CHECK_FALSE(ActivationThreshold(0.0).accepts(0));
    CHECK(ActivationThreshold(1.0).accepts(~0ULL));
    CHECK(ActivationThreshold(0.5).accepts(0x7fffffffffffffffULL));
    CHECK_FALSE(ActivationThreshold(0.5).accepts(0x8000000000000000ULL));
  }

  TEST_CASE("law validation names p") {
    const auto g = build_preset("square");
    try {
      PercolationLaw::uniform(1, 1.5, 0).validate(g);
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find('p') != std::string::npos);
    }
    CHECK_THROWS_AS(PercolationLaw::uniform(1, -0.1, 0).validate(g), ConfigError);
    CHECK_THROWS_AS(PercolationLaw::uniform(2, 0.5, 0).validate(g), ConfigError);
  }

  TEST_CASE("trivial laws") {
    const auto g = build_preset("square");
    const auto box = BoxRegion::cube(2, 20, Cell{-10, -10});
    const Configuration all(g, PercolationLaw::uniform(1, 1.0, 3));
    const Configuration none(g, PercolationLaw::uniform(1, 0.0, 3));
    for (const auto& v : box_vertices(g, box)) {
      CHECK(all.is_active(v));
      CHECK_FALSE(none.is_active(v));
    }
  }

  TEST_CASE("active fraction concentrates at p") {
    const auto g = build_preset("square");
    const auto box = BoxRegion::cube(2, 100);
    int inside = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
      const double f = active_fraction(g, Configuration(g, PercolationLaw::uniform(1, 0.6, 2024, r)), box);
      inside += (f >= 0.57 && f <= 0.63);
    }
    CHECK(inside >= 95);
  }

  TEST_CASE("nearest-neighbor pairs are uncorrelated") {
    const auto g = build_preset("square");
    const double p = 0.4;
    const Configuration cfg(g, PercolationLaw::uniform(1, p, 99));
    double both = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const Vertex v = v2(3 * (i % 100), 3 * (i / 100));
      both += cfg.is_active(v) && cfg.is_active(v.translated(Cell{1, 0}));
    }
    const double sigma = std::sqrt(p * p * (1 - p * p) / n);
    CHECK(std::abs(both / n - p * p) < 4 * sigma);
  }

  TEST_CASE("translation stationarity") {
    const auto g = build_preset("square");
    const double p = 0.3;
    const Configuration cfg(g, PercolationLaw::uniform(1, p, 5));
    const auto box = BoxRegion::cube(2, 100);
    const double a = active_fraction(g, cfg, box);
    const double b = active_fraction(g, cfg, box.translated(Cell{1000, -5000}));
    const double sigma = std::sqrt(2 * p * (1 - p) / 10000.0);
    CHECK(std::abs(a - b) < 4 * sigma);
  }

  TEST_CASE("nested boxes see the same configuration") {
    for (const auto& name : {"chain", "square", "honeycomb", "cubic"}) {
      const auto g = build_preset(name);
      const Configuration cfg(g, PercolationLaw::uniform(g.orbit_count(), 0.55, 11, 2));
      const int side = g.dimension() == 3 ? 6 : 17;
      const auto small = BoxRegion::cube(g.dimension(), side, Cell{-3, -3, -3, 0});
      const auto large = small.enlarged(side);
      const auto ms = cfg.box_mask(small);
      const auto ml = cfg.box_mask(large);
      const BoxIndexer is(g, small), il(g, large);
      for (const auto& v : box_vertices(g, small)) {
        CHECK(ms[is.index(v)] == ml[il.index(v)]);
        CHECK(static_cast<bool>(ms[is.index(v)]) == cfg.is_active(v));
      }
    }
  }

  TEST_CASE("active subgraph edges") {
    const auto chain = build_preset("chain");
    CHECK(active_subgraph_edges(chain, Configuration(chain, PercolationLaw::uniform(1, 1.0, 0)),
                                BoxRegion::cube(1, 3))
              .size() == 2);
    CHECK(active_subgraph_edges(chain, Configuration(chain, PercolationLaw::uniform(1, 0.0, 0)),
                                BoxRegion::cube(1, 3))
              .empty());

    const auto g = build_preset("square");
    const std::vector<Vertex> act{v2(0, 0), v2(1, 0), v2(1, 1), v2(2, 2), v2(0, 2)};
    const auto cfg = explicit_config(g, act);
    const auto edges = active_subgraph_edges(g, cfg, BoxRegion::cube(2, 3));
    std::set<std::pair<Vertex, Vertex>> expected;
    for (const auto& a : act) {
      for (const auto& b : act) {
        const auto nb = g.neighbors(a);
        if (a < b && std::find(nb.begin(), nb.end(), b) != nb.end()) expected.insert({a, b});
      }
    }
    CHECK(std::set<std::pair<Vertex, Vertex>>(edges.begin(), edges.end()) == expected);
    CHECK(edges.size() == 2);
  }

  TEST_CASE("cluster examples") {
    const auto g = build_preset("square");
    const auto box = BoxRegion::cube(2, 4);
    const auto full = clusters(g, Configuration(g, PercolationLaw::uniform(1, 1.0, 0)), box);
    REQUIRE(full.clusters.size() == 1);
    CHECK(full.clusters[0].size() == 16);
    CHECK(clusters(g, Configuration(g, PercolationLaw::uniform(1, 0.0, 0)), box).clusters.empty());

    const auto dominoes = clusters(g, explicit_config(g, {v2(0, 0), v2(0, 1), v2(2, 2), v2(3, 2)}), box);
    REQUIRE(dominoes.clusters.size() == 2);
    CHECK(dominoes.clusters[0].size() == 2);
    CHECK(dominoes.clusters[1].size() == 2);
    CHECK(dominoes.clusters[0].members.front() == v2(0, 0));
  }

  TEST_CASE("clusters agree with a transitive-closure oracle") {
    for (const auto& name : {"square", "triangular", "honeycomb"}) {
      const auto g = build_preset(name);
      const auto box = BoxRegion::cube(2, 5);
      for (std::uint64_t r = 0; r < 40; ++r) {
        const Configuration cfg(g, PercolationLaw::uniform(g.orbit_count(), 0.55, 77, r));
        const auto got = clusters(g, cfg, box);
        std::set<std::set<Vertex>> mine;
        std::size_t total = 0;
        for (const auto& c : got.clusters) {
          mine.insert(std::set<Vertex>(c.members.begin(), c.members.end()));
          total += c.size();
          CHECK(std::is_sorted(c.members.begin(), c.members.end()));
        }
        for (std::size_t i = 1; i < got.clusters.size(); ++i) {
          CHECK(got.clusters[i - 1].members.front() < got.clusters[i].members.front());
        }
        const auto oracle = closure_components(g, cfg, box);
        CHECK(mine == std::set<std::set<Vertex>>(oracle.begin(), oracle.end()));
        CHECK(total == got.active_count());
        CHECK(total == active_vertices(g, cfg, box).size());
      }
    }
  }

  TEST_CASE("boundary-touching proxy") {
    const auto g = build_preset("square");
    const auto box = BoxRegion::cube(2, 9);
    const Configuration all(g, PercolationLaw::uniform(1, 1.0, 0));
    CHECK(boundary_touching(g, all, box).size() == 81);
    CHECK(boundary_touching(g, explicit_config(g, {v2(4, 4)}), box).empty());

    int good = 0;
    const auto big = BoxRegion::cube(2, 32);
    for (std::uint64_t r = 0; r < 100; ++r) {
      const Configuration cfg(g, PercolationLaw::uniform(1, 0.7, 8, r));
      const double frac = static_cast<double>(boundary_touching(g, cfg, big).size()) /
                          static_cast<double>(active_vertices(g, cfg, big).size());
      good += frac > 0.8;
    }
    CHECK(good >= 90);
  }

  TEST_CASE("explicit site files") {
    const auto g = build_preset("honeycomb");
    const auto o = parse_site_overrides("# comment\n1 2 -3 1\n0 0 0 0\n", g);
    REQUIRE(o.size() == 2);
    CHECK(o.at(v2(2, -3, 1)));
    CHECK_FALSE(o.at(v2(0, 0, 0)));
    CHECK(parse_site_overrides(format_site_overrides(o, 2), g) == o);
    CHECK_THROWS_AS(parse_site_overrides("0 0 0 2\n", g), ConfigError);
    CHECK_THROWS_AS(parse_site_overrides("2 0 0 1\n", g), ConfigError);
    CHECK_THROWS_AS(parse_site_overrides("0 0 1\n", g), ConfigError);

    const Configuration cfg = Configuration(g, PercolationLaw::uniform(2, 1.0, 0)).with_overrides(o);
    CHECK_FALSE(cfg.is_active(v2(0, 0, 0)));
    CHECK(cfg.is_active(v2(0, 0, 1)));
    const auto mask = cfg.box_mask(BoxRegion::cube(2, 2));
    CHECK(mask[0] == 0);
    CHECK(mask[1] == 1);
  }
}
