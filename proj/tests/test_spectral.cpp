#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "qperc/eigensolver.hpp"
#include "qperc/error.hpp"
#include "qperc/spectral.hpp"
#include "test_support.hpp"

using namespace qperc;
using qperc::testing::eigen_oracle;
using qperc::testing::max_abs_diff;
using qperc::testing::v1;
using qperc::testing::v2;

namespace {

struct Instance {
  std::string graph;
  std::string kernel;
  double p;
  std::int64_t side;
};

const std::vector<Instance> kInstances = {
    {"chain", "adjacency", 1.0, 150},     {"chain", "nnn", 0.8, 180},        {"square", "adjacency", 0.7, 12},
    {"square", "laplacian", 0.55, 14},    {"square", "nnn", 0.9, 10},        {"cubic", "adjacency", 0.6, 5},
    {"triangular", "adjacency", 0.5, 13}, {"honeycomb", "adjacency", 0.8, 9}, {"honeycomb", "nnn", 0.65, 8},
    {"square", "adjacency", 1.0, 14},
};

// Dense power trace through Eigen, a route independent of the walk expansion.
double dense_power_trace(const SymMatrix& m, int power) {
  const auto n = static_cast<Eigen::Index>(m.dim());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& e : m.entries()) a(e.row, e.col) = a(e.col, e.row) = e.value;
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < power; ++i) p = p * a;
  return p.trace();
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("eigenvalue examples") {
    CHECK(eigenvalues(SymMatrix(1)).values == std::vector<double>{0.0});
    const auto dimer = eigenvalues(SymMatrix(2, {{0, 1, 1.0}}));
    CHECK(dimer.values[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(dimer.values[1] == doctest::Approx(1.0).epsilon(1e-14));
    const auto path = eigenvalues(SymMatrix(3, {{0, 1, 1.0}, {1, 2, 1.0}}));
    CHECK(path.values[0] == doctest::Approx(-std::sqrt(2.0)).epsilon(1e-14));
    CHECK(std::abs(path.values[1]) < 1e-14);
    CHECK(path.values[2] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(eigenvalues(SymMatrix(2, {{0, 1, std::nan("")}})), ConfigError);
  }

  TEST_CASE("counting examples") {
    const Spectrum dimer{{-1.0, 1.0}, ""};
    CHECK(counting(dimer, 0.0, 2, 1e-8) == 0.5);
    CHECK(counting(dimer, -1.0, 2, 1e-8) == 0.0);
    CHECK(counting(dimer, 1.0 + 1e-6, 2, 1e-8) == 1.0);
    const Spectrum path{{-std::sqrt(2.0), 0.0, std::sqrt(2.0)}, ""};
    CHECK(counting(path, 0.1, 3, 1e-8) == doctest::Approx(2.0 / 3.0));
  }

  TEST_CASE("degeneracy clustering") {
    const Spectrum s{{-1.0, -1.0 + 1e-12, 0.0, 0.5, 0.5, 0.5 + 5e-9, 2.0}, ""};
    const auto levels = degeneracy_cluster(s, 1e-8);
    REQUIRE(levels.size() == 4);
    CHECK(levels[0].multiplicity == 2);
    CHECK(levels[2].multiplicity == 3);
    std::size_t total = 0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      total += levels[i].multiplicity;
      if (i > 0) CHECK(levels[i].energy - levels[i - 1].energy > 1e-8);
    }
    CHECK(total == s.values.size());
  }

  TEST_CASE("blockwise solver matches a dense oracle") {
    for (const auto& inst : kInstances) {
      const auto g = build_preset(inst.graph);
      const auto k = kernel_preset(g, inst.kernel, KernelParams{1.0, 0.4});
      for (std::uint64_t r = 0; r < 3; ++r) {
        const Configuration cfg(g, PercolationLaw::uniform(g.orbit_count(), inst.p, 31, r));
        auto box = BoxRegion::cube(g.dimension(), inst.side);
        auto op = compress_active(g, k, cfg, box);
        while (op.dim() > 200) {
          box.sides[0] -= 1;
          op = compress_active(g, k, cfg, box);
        }
        const auto spec = eigenvalues(op);
        CHECK(max_abs_diff(spec.values, eigen_oracle(op.matrix)) <= 1e-9);
        CHECK(max_abs_diff(spec.values, dense_eigenvalues(op.matrix)) <= 1e-9);
      }
    }
  }

  TEST_CASE("banded path on large lattice blocks matches the dense oracle") {
    const auto g = build_preset("square");
    const auto k = kernel_preset(g, "adjacency");
    const Configuration cfg(g, PercolationLaw::uniform(1, 1.0, 0));
    const auto op = compress_active(g, k, cfg, BoxRegion::cube(2, 30));
    REQUIRE(op.matrix.bandwidth() * 8 < op.dim());
    std::vector<double> exact;
    for (int a = 1; a <= 30; ++a) {
      for (int b = 1; b <= 30; ++b) {
        exact.push_back(2 * std::cos(std::numbers::pi * a / 31) + 2 * std::cos(std::numbers::pi * b / 31));
      }
    }
    std::sort(exact.begin(), exact.end());
    CHECK(max_abs_diff(eigenvalues(op).values, exact) <= 1e-10);
    CHECK(max_abs_diff(eigenvalues(op).values, eigen_oracle(op.matrix)) <= 1e-10);
  }

  TEST_CASE("eigenvectors of blocks") {
    const auto g = build_preset("honeycomb");
    const auto k = kernel_preset(g, "nnn", KernelParams{1.0, 0.3});
    const Configuration cfg(g, PercolationLaw::uniform(2, 0.7, 3));
    const auto op = compress_active(g, k, cfg, BoxRegion::cube(2, 7));
    const auto dense = op.matrix.to_dense();
    const std::size_t n = op.dim();
    for (const auto& b : eigen_decompose(op.matrix, {true, kMaxBlockDimension, 1})) {
      const std::size_t m = b.indices.size();
      for (std::size_t c = 0; c < b.values.size(); ++c) {
        double res = 0.0, norm = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          double hv = 0.0;
          for (std::size_t j = 0; j < m; ++j) hv += dense[b.indices[j] * n + b.indices[i]] * b.vectors[c * m + j];
          res = std::max(res, std::abs(hv - b.values[c] * b.vectors[c * m + i]));
          norm += b.vectors[c * m + i] * b.vectors[c * m + i];
        }
        CHECK(res < 1e-12);
        CHECK(norm == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("block size cap") {
    const auto g = build_preset("chain");
    const auto op = compress_active(g, kernel_preset(g, "adjacency"), Configuration(g, PercolationLaw::uniform(1, 1.0, 0)),
                                    BoxRegion::cube(1, 100));
    CHECK_THROWS_AS(eigen_decompose(op.matrix, {false, 50, 1}), ResourceCapError);
    CHECK_NOTHROW(eigen_decompose(op.matrix, {false, 100, 1}));
  }

  TEST_CASE("trace identities, norm bound and bipartite symmetry") {
    for (const auto& inst : kInstances) {
      const auto g = build_preset(inst.graph);
      const auto k = kernel_preset(g, inst.kernel, KernelParams{1.0, 0.4});
      const double bound = operator_norm_bound(k, g);
      const Configuration cfg(g, PercolationLaw::uniform(g.orbit_count(), inst.p, 8));
      const auto op = compress_active(g, k, cfg, BoxRegion::cube(g.dimension(), std::min<std::int64_t>(inst.side, 40)));
      const auto spec = eigenvalues(op);
      const double n = static_cast<double>(op.dim());
      double s1 = 0.0, s2 = 0.0;
      for (double x : spec.values) {
        s1 += x;
        s2 += x * x;
        CHECK(std::abs(x) <= bound);
      }
      CHECK(std::abs(s1 - op.matrix.trace()) <= 1e-9 * n * bound);
      CHECK(std::abs(s2 - op.matrix.frobenius_squared()) <= 1e-9 * n * bound * bound);
      if (inst.kernel == "adjacency") {
        CHECK(op.matrix.frobenius_squared() == 2.0 * active_subgraph_edges(g, cfg, BoxRegion::cube(g.dimension(), std::min<std::int64_t>(inst.side, 40))).size());
      }
      const bool bipartite = inst.kernel == "adjacency" && inst.graph != "triangular";
      if (bipartite) {
        for (std::size_t i = 0; i < spec.dim(); ++i) {
          CHECK(std::abs(spec.values[i] + spec.values[spec.dim() - 1 - i]) <= 1e-9);
        }
      }
    }
  }

  TEST_CASE("closed walks agree with dense matrix powers") {
    const auto g = build_preset("triangular");
    const auto k = kernel_preset(g, "nnn", KernelParams{0.7, -0.3});
    const Configuration cfg(g, PercolationLaw::uniform(1, 0.75, 12));
    const auto op = compress_active(g, k, cfg, BoxRegion::cube(2, 9));
    for (int m = 0; m <= 6; ++m) {
      const double walks = closed_walk_trace(op.matrix, m);
      const double dense = dense_power_trace(op.matrix, m);
      CHECK(std::abs(walks - dense) <= 1e-9 * std::max(1.0, std::abs(dense)));
    }
    std::vector<std::size_t> rows{0, 3, 17};
    const auto diag = closed_walk_diagonal(op.matrix, 2, rows);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      double expect = 0.0;
      for (std::size_t j = 0; j < op.dim(); ++j) expect += op.matrix.at(rows[i], j) * op.matrix.at(rows[i], j);
      CHECK(diag[i] == doctest::Approx(expect).epsilon(1e-13));
    }
  }

  TEST_CASE("moment identity: eigenvalues versus closed walks") {
    for (const auto& inst : kInstances) {
      const auto g = build_preset(inst.graph);
      const auto k = kernel_preset(g, inst.kernel, KernelParams{1.0, 0.4});
      const double bound = operator_norm_bound(k, g);
      const auto box = BoxRegion::cube(g.dimension(), std::min<std::int64_t>(inst.side, 40));
      const double norm = static_cast<double>(box.vertex_count(g));
      for (std::uint64_t r = 0; r < 2; ++r) {
        const Configuration cfg(g, PercolationLaw::uniform(g.orbit_count(), inst.p, 17, r));
        const auto spec = eigenvalues(compress_active(g, k, cfg, box));
        for (int m = 0; m <= 6; ++m) {
          const double a = moment_spectral(spec, m, norm);
          const double b = moment_walks(g, k, cfg, box, m, nullptr, norm);
          CHECK(std::abs(a - b) <= 1e-8 * std::pow(bound, m));
        }
      }
    }
  }

  TEST_CASE("moment identity with boundary perturbations") {
    const auto g = build_preset("square");
    const auto k = kernel_preset(g, "adjacency");
    const Configuration cfg(g, PercolationLaw::uniform(1, 0.7, 6));
    const auto box = BoxRegion::cube(2, 16);
    const double norm = static_cast<double>(box.vertex_count(g));
    for (const BoundaryPerturbation pert : {BoundaryPerturbation{BoundaryPerturbation::Kind::periodic_wrap, 0, 0, 0},
                                            BoundaryPerturbation{BoundaryPerturbation::Kind::diagonal_potential, 1.0, 1, 0},
                                            BoundaryPerturbation{BoundaryPerturbation::Kind::random_symmetric, 0.8, 2, 5}}) {
      const auto base = compress_active(g, k, cfg, box);
      const auto spec = eigenvalues(add(base, realize_perturbation(g, k, cfg, box, pert), pert.describe()));
      for (int m = 0; m <= 6; ++m) {
        CHECK(std::abs(moment_spectral(spec, m, norm) - moment_walks(g, k, cfg, box, m, &pert, norm)) <=
              1e-8 * std::pow(32.0, m));
      }
    }
  }

  TEST_CASE("moment walk examples") {
    const auto chain = build_preset("chain");
    const auto adj = kernel_preset(chain, "adjacency");
    const Configuration full(chain, PercolationLaw::uniform(1, 1.0, 0));
    const Configuration half(chain, PercolationLaw::uniform(1, 0.5, 0));
    const auto box = BoxRegion::cube(1, 50);
    CHECK(moment_walks(chain, adj, half, box, 0, nullptr, 50) == active_vertices(chain, half, box).size() / 50.0);
    CHECK(moment_walks(chain, adj, half, box, 1, nullptr, 50) == 0.0);
    CHECK(moment_walks(chain, adj, full, box, 2, nullptr, 50) == doctest::Approx((2.0 * 50 - 2) / 50));
    CHECK_THROWS_AS(moment_walks(chain, adj, full, box, kDefaultMaxWalkLength + 1, nullptr, 50), ConfigError);
  }

  TEST_CASE("boundary trace gap") {
    const auto chain = build_preset("chain");
    const auto adj = kernel_preset(chain, "adjacency");
    const Configuration full(chain, PercolationLaw::uniform(1, 1.0, 0));
    for (std::int64_t L : {10, 40, 100}) {
      const auto box = BoxRegion::cube(1, L);
      CHECK(boundary_trace_gap(chain, adj, full, box, 1) == 0.0);
      CHECK(boundary_trace_gap(chain, adj, full, box, 2) == doctest::Approx(2.0 / static_cast<double>(L)));
    }

    const auto g = build_preset("square");
    const auto k = kernel_preset(g, "adjacency");
    SiteOverrides island;
    for (const auto& v : {v2(5, 5), v2(5, 6), v2(6, 6)}) island[v] = true;
    const auto lonely = Configuration(g, PercolationLaw::uniform(1, 0.0, 0)).with_overrides(island);
    for (int m = 0; m <= 6; ++m) CHECK(boundary_trace_gap(g, k, lonely, BoxRegion::cube(2, 12), m) == 0.0);

    const Configuration cfg(g, PercolationLaw::uniform(1, 0.7, 1));
    for (std::int64_t L : {8, 16}) {
      const auto box = BoxRegion::cube(2, L);
      for (int m = 1; m <= 4; ++m) {
        CHECK(boundary_trace_gap(g, k, cfg, box, m) <= boundary_trace_gap_bound(g, k, box, m));
      }
    }
  }

  TEST_CASE("spectrum dump") {
    const auto g = build_preset("chain");
    const auto op = compress_active(g, kernel_preset(g, "adjacency"), Configuration(g, PercolationLaw::uniform(1, 1.0, 9, 2)),
                                    BoxRegion::cube(1, 2));
    std::ostringstream out;
    write_spectrum(out, eigenvalues(op));
    const auto text = out.str();
    CHECK(text.rfind("# kernel=adjacency seed=9 realization=2 box=", 0) == 0);
    CHECK(text.find("pert=free\n-1\n1\n") != std::string::npos);
    CHECK(format_double(0.1) == "0.10000000000000001");
  }
}
