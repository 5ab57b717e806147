#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cflow/constraint.hpp"
#include "cflow/study.hpp"
#include "test_support.hpp"

using namespace cflow;

TEST_CASE("violation field values") {
  const FeSpace space = make_space(build_uniform_mesh(3), 3);
  SUBCASE("nodally unit field vanishes") {
    const auto u = nodal_interpolate(space, [](double, double, std::span<double> o) {
      o[0] = 0.6;
      o[1] = 0.8;
      o[2] = 0.0;
    });
    for (double b : violation_field(space, u)) CHECK(std::abs(b) <= 1e-15);
  }
  SUBCASE("(2,0,0) gives 3") {
    const auto u = nodal_interpolate(space, [](double, double, std::span<double> o) {
      o[0] = 2.0;
      o[1] = o[2] = 0.0;
    });
    for (double b : violation_field(space, u)) CHECK(b == doctest::Approx(3.0).epsilon(1e-15));
  }
  SUBCASE("benchmark initial state is feasible at every vertex") {
    const BenchmarkSetup setup = run_benchmark_setup(16);
    for (double b : violation_field(setup.space, setup.u0)) CHECK(std::abs(b) <= 1e-14);
  }
  SUBCASE("invariant under component permutation") {
    auto rng = testing::make_rng();
    const auto u = testing::uniform_vector(rng, static_cast<std::size_t>(space.dof_count()));
    auto permuted = u;
    for (int v = 0; v < space.mesh.vertex_count(); ++v) {
      permuted[3 * v + 0] = u[3 * v + 2];
      permuted[3 * v + 1] = u[3 * v + 0];
      permuted[3 * v + 2] = u[3 * v + 1];
    }
    const auto ba = violation_field(space, u);
    const auto bb = violation_field(space, permuted);
    for (std::size_t i = 0; i < ba.size(); ++i)
      CHECK(ba[i] == doctest::Approx(bb[i]).epsilon(1e-15));
  }
}

TEST_CASE("constraint row construction") {
  const FeSpace space = make_space(build_uniform_mesh(4), 3);
  const int free_vertices = space.free_dof_count() / 3;

  SUBCASE("nodally unit anchor: one row per free vertex, none degenerate") {
    const auto anchor = nodal_interpolate(space, [](double, double, std::span<double> o) {
      o[0] = 1.0;
      o[1] = o[2] = 0.0;
    });
    const NodalConstraint nc = build_constraint_rows(space, anchor);
    CHECK(static_cast<int>(nc.rows.size()) == free_vertices);
    CHECK(nc.degenerate_vertices.empty());
    // a row applied to the anchor itself gives |anchor(z)|^2 > 0
    for (std::size_t i = 0; i < nc.rows.size(); ++i) {
      double s = 0.0;
      for (std::size_t p = 0; p < nc.rows[i].cols.size(); ++p)
        s += nc.rows[i].vals[p] * anchor[nc.rows[i].cols[p]];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
    }
  }

  SUBCASE("a vanishing anchor node is excluded as degenerate") {
    auto anchor = nodal_interpolate(space, [](double, double, std::span<double> o) {
      o[0] = 1.0;
      o[1] = o[2] = 0.0;
    });
    const auto& fm = space.free_dof_map();
    const int vertex = fm[0] / 3;
    for (int c = 0; c < 3; ++c) anchor[3 * vertex + c] = 0.0;
    const NodalConstraint nc = build_constraint_rows(space, anchor);
    CHECK(static_cast<int>(nc.rows.size()) == free_vertices - 1);
    REQUIRE(nc.degenerate_vertices.size() == 1);
    CHECK(nc.degenerate_vertices[0] == vertex);
  }

  SUBCASE("boundary vertices never carry rows") {
    const auto anchor = nodal_interpolate(space, [](double, double, std::span<double> o) {
      o[0] = o[1] = o[2] = 1.0;
    });
    const NodalConstraint nc = build_constraint_rows(space, anchor);
    for (int v : nc.active_vertices) CHECK(space.vertex_is_free(v));
  }
}
