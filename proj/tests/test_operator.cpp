#include <doctest.h>

#include <cmath>
#include <map>

#include "qperc/error.hpp"
#include "qperc/operator.hpp"
#include "test_support.hpp"

using namespace qperc;
using qperc::testing::v1;
using qperc::testing::v2;

namespace {

const std::vector<std::string> kPresets = {"chain", "square", "cubic", "triangular", "honeycomb"};

std::map<std::pair<Vertex, Vertex>, double> entry_map(const CompressedOperator& op) {
  std::map<std::pair<Vertex, Vertex>, double> m;
  for (const auto& e : op.matrix.entries()) {
    m[{op.vertices[e.row], op.vertices[e.col]}] = e.value;
    m[{op.vertices[e.col], op.vertices[e.row]}] = e.value;
  }
  return m;
}

}  // namespace

TEST_SUITE("operator") {
  TEST_CASE("kernel presets") {
    const auto chain = build_preset("chain");
    const auto adj = kernel_preset(chain, KernelPreset::adjacency);
    CHECK(adj.entries().size() == 2);
    CHECK(adj.entry(0, 0, Cell{1}) == 1.0);
    CHECK(adj.entry(0, 0, Cell{-1}) == 1.0);
    CHECK(adj.entry(0, 0, Cell{2}) == 0.0);
    CHECK(adj.range() == 2);
    CHECK(adj.bound() == 1.0);

    const auto square = build_preset("square");
    const auto lap = kernel_preset(square, "laplacian");
    CHECK(lap.entry(0, 0, Cell{}) == -4.0);
    CHECK(lap.entry(0, 0, Cell{0, 1}) == 1.0);
    CHECK(lap.has_diagonal());

    const auto nnn = kernel_preset(chain, KernelPreset::nnn, KernelParams{1.0, 0.5});
    CHECK(nnn.entry(0, 0, Cell{1}) == 1.0);
    CHECK(nnn.entry(0, 0, Cell{-2}) == 0.5);
    CHECK(nnn.entries().size() == 4);
    CHECK(nnn.range() == 3);

    const auto sq_nnn = kernel_preset(square, KernelPreset::nnn, KernelParams{1.0, 0.25});
    CHECK(sq_nnn.entry(0, 0, Cell{1, 1}) == 0.25);
    CHECK(sq_nnn.entry(0, 0, Cell{2, 0}) == 0.25);
    CHECK(sq_nnn.entries().size() == 4 + 8);

    CHECK_FALSE(parse_kernel_preset("hubbard").has_value());
    CHECK_THROWS_AS(kernel_preset(square, "hubbard"), ConfigError);
  }

  TEST_CASE("operator norm bound") {
    CHECK(operator_norm_bound(kernel_preset(build_preset("chain"), "adjacency"), build_preset("chain")) == 8.0);
    CHECK(operator_norm_bound(kernel_preset(build_preset("square"), "adjacency"), build_preset("square")) == 32.0);
    const auto g = build_preset("square");
    const HoppingKernel zero(g, {{0, 0, Cell{1, 0}, 0.0}});
    CHECK(operator_norm_bound(zero, g) == 0.0);
  }

  TEST_CASE("kernel files") {
    const auto g = build_preset("honeycomb");
    const auto k = parse_kernel("# hopping\n0 1 0 0 1.5\n0 1 -1 0 1.5\n0 1 0 -1 1.5\n0 0 0 0 0.25\n", g, "h");
    CHECK(k.entry(1, 0, Cell{1, 0}) == 1.5);
    CHECK(k.entry(0, 0, Cell{}) == 0.25);
    CHECK(k.range() == 2);
    CHECK(k.bound() == 1.5);
    auto message = [&](const char* text) {
      try {
        parse_kernel(text, g);
      } catch (const ConfigError& e) {
        return std::string(e.what());
      }
      return std::string();
    };
    CHECK(message("0 1 0 0 1\n0 1 0 0 1\n").find("line 2") != std::string::npos);
    CHECK(message("0 1 0 0 1\n1 0 0 0 2\n").find("symmetry") != std::string::npos);
    CHECK(message("0 1 0 1\n").find("line 1") != std::string::npos);
    CHECK(message("0 5 0 0 1\n").find("line 1") != std::string::npos);
    CHECK(message("0 1 0 x 1\n").find("line 1") != std::string::npos);
    CHECK(message("0 1 0 0 nan\n").find("line 1") != std::string::npos);
  }

  TEST_CASE("compress examples") {
    const auto chain = build_preset("chain");
    const auto adj = kernel_preset(chain, "adjacency");
    const std::vector<Vertex> one{v1(7)};
    const auto single = compress(chain, adj, one);
    CHECK(single.matrix.dim() == 1);
    CHECK(single.matrix.at(0, 0) == 0.0);

    const std::vector<Vertex> two{v1(3), v1(4)};
    const auto dimer = compress(chain, adj, two);
    CHECK(dimer.matrix.at(0, 1) == 1.0);
    CHECK(dimer.matrix.at(1, 0) == 1.0);
    CHECK(dimer.matrix.at(0, 0) == 0.0);

    const auto square = build_preset("square");
    const std::vector<Vertex> path{v2(0, 0), v2(1, 0), v2(1, 1)};
    const auto p3 = compress(square, kernel_preset(square, "adjacency"), path);
    const std::vector<double> expected{0, 1, 0, 1, 0, 1, 0, 1, 0};
    CHECK(p3.matrix.to_dense() == expected);

    const std::vector<Vertex> dup{v1(1), v1(1)};
    CHECK_THROWS_AS(compress(chain, adj, dup), ConfigError);
  }

  TEST_CASE("symmetric matrix storage") {
    const SymMatrix m(3, {{0, 1, 2.0}, {2, 1, -1.0}, {2, 2, 3.0}});
    CHECK(m.at(1, 2) == -1.0);
    CHECK(m.at(2, 1) == -1.0);
    CHECK(m.trace() == 3.0);
    CHECK(m.frobenius_squared() == 2 * 4.0 + 2 * 1.0 + 9.0);
    CHECK(m.bandwidth() == 1);
    CHECK_THROWS_AS(SymMatrix(2, {{0, 1, 1.0}, {1, 0, 1.0}}), InvariantViolation);
    const auto csr = m.to_csr();
    CHECK(csr.row_ptr.back() == 5);
    const auto sum = m + SymMatrix(3, {{0, 1, -2.0}, {0, 0, 1.0}});
    CHECK(sum.at(0, 0) == 1.0);
    CHECK(sum.at(0, 1) == 0.0);
  }

  TEST_CASE("translation equivariance at matrix level") {
    for (const auto& name : kPresets) {
      const auto g = build_preset(name);
      for (const char* kname : {"adjacency", "laplacian", "nnn"}) {
        const auto k = kernel_preset(g, kname, KernelParams{1.0, -0.5});
        const Configuration cfg(g, PercolationLaw::uniform(g.orbit_count(), 0.7, 4));
        const auto verts = active_vertices(g, cfg, BoxRegion::cube(g.dimension(), g.dimension() == 3 ? 4 : 7));
        const Cell shift{5, -3, 2, 0};
        Cell s{};
        for (int d = 0; d < g.dimension(); ++d) s[static_cast<std::size_t>(d)] = shift[static_cast<std::size_t>(d)];
        std::vector<Vertex> moved;
        for (const auto& v : verts) moved.push_back(v.translated(s));
        const auto a = compress(g, k, verts);
        const auto b = compress(g, k, moved);
        CHECK(a.matrix.entries().size() == b.matrix.entries().size());
        for (std::size_t i = 0; i < a.matrix.entries().size(); ++i) {
          const auto& x = a.matrix.entries()[i];
          const auto& y = b.matrix.entries()[i];
          CHECK(x.row == y.row);
          CHECK(x.col == y.col);
          CHECK(x.value == y.value);
        }
      }
    }
  }

  TEST_CASE("compression is a principal submatrix") {
    const auto g = build_preset("triangular");
    const auto k = kernel_preset(g, "nnn", KernelParams{1.0, 0.3});
    const Configuration cfg(g, PercolationLaw::uniform(1, 0.8, 2));
    const auto big = compress_active(g, k, cfg, BoxRegion::cube(2, 10));
    const auto small = compress_active(g, k, cfg, BoxRegion::cube(2, 6, Cell{2, 2}));
    const auto mb = entry_map(big);
    for (const auto& [key, value] : entry_map(small)) CHECK(mb.at(key) == value);
    for (const auto& [key, value] : mb) {
      const BoxRegion inner = BoxRegion::cube(2, 6, Cell{2, 2});
      if (inner.contains(key.first) && inner.contains(key.second)) CHECK(entry_map(small).count(key) == 1);
    }
  }

  TEST_CASE("perturbation examples") {
    const auto chain = build_preset("chain");
    const auto adj = kernel_preset(chain, "adjacency");
    const Configuration full(chain, PercolationLaw::uniform(1, 1.0, 0));
    const auto box = BoxRegion::cube(1, 10);
    const auto wrap = realize_perturbation(chain, adj, full, box, {BoundaryPerturbation::Kind::periodic_wrap, 0, 0, 0});
    REQUIRE(wrap.entries().size() == 1);
    CHECK(wrap.entries()[0].row == 0);
    CHECK(wrap.entries()[0].col == 9);
    CHECK(wrap.entries()[0].value == 1.0);

    const auto zero =
        realize_perturbation(chain, adj, full, box, {BoundaryPerturbation::Kind::diagonal_potential, 0.0, 1, 0});
    CHECK(zero.max_abs() == 0.0);

    const auto pot =
        realize_perturbation(chain, adj, full, box, {BoundaryPerturbation::Kind::diagonal_potential, 1.0, 2, 0});
    CHECK(pot.trace() == 4.0);

    CHECK_THROWS_AS(realize_perturbation(chain, adj, full, BoxRegion::cube(1, 2),
                                         {BoundaryPerturbation::Kind::periodic_wrap, 0, 0, 0}),
                    ConfigError);
  }

  TEST_CASE("random symmetric perturbation stays in the shell") {
    const auto g = build_preset("square");
    const auto k = kernel_preset(g, "adjacency");
    const Configuration cfg(g, PercolationLaw::uniform(1, 1.0, 0));
    const auto box = BoxRegion::cube(2, 4);
    for (int width : {1, 2}) {
      const BoundaryPerturbation pert{BoundaryPerturbation::Kind::random_symmetric, 0.5, width, 1234};
      const auto b = realize_perturbation(g, k, cfg, box, pert);
      const auto dist = boundary_distances(g, box, 10);
      const auto verts = active_vertices(g, cfg, box);
      const BoxIndexer idx(g, box);
      std::size_t nonzero = 0;
      for (std::size_t i = 0; i < verts.size(); ++i) {
        for (std::size_t j = 0; j < verts.size(); ++j) {
          const double x = b.at(i, j);
          CHECK(x == b.at(j, i));
          CHECK(std::abs(x) <= 0.5);
          if (x != 0.0) {
            ++nonzero;
            CHECK(dist[idx.index(verts[i])] <= width);
            CHECK(dist[idx.index(verts[j])] <= width);
            CHECK(dist[idx.index(verts[i])] + dist[idx.index(verts[j])] <= 2 * width);
          }
        }
      }
      CHECK(nonzero > 0);
      const auto again = realize_perturbation(g, k, cfg, box, pert);
      CHECK(again.entries().size() == b.entries().size());
      for (std::size_t e = 0; e < b.entries().size(); ++e) CHECK(again.entries()[e].value == b.entries()[e].value);
    }
  }

  TEST_CASE("periodic wrap closes the torus") {
    const auto g = build_preset("square");
    const auto k = kernel_preset(g, "adjacency");
    const Configuration cfg(g, PercolationLaw::uniform(1, 1.0, 0));
    const auto box = BoxRegion::cube(2, 5);
    const auto op = add(compress_active(g, k, cfg, box),
                        realize_perturbation(g, k, cfg, box, {BoundaryPerturbation::Kind::periodic_wrap, 0, 0, 0}),
                        "periodic_wrap");
    for (std::size_t i = 0; i < op.dim(); ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < op.dim(); ++j) row += op.matrix.at(i, j);
      CHECK(row == 4.0);
    }
    CHECK(op.provenance.perturbation == "periodic_wrap");
  }
}
