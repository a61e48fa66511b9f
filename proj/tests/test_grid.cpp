#include <doctest.h>

#include <cmath>
#include <cstdio>

#include "cellmig/grid.hpp"
#include "cellmig/models.hpp"
#include "oracles.hpp"

using namespace cellmig;

TEST_CASE("grid spacing invariants") {
    Grid2D g(1.0, 51, 51);
    CHECK(g.dx == doctest::Approx(0.02).epsilon(1e-14));
    CHECK(g.dy == doctest::Approx(0.02).epsilon(1e-14));
    CHECK_THROWS_AS(Grid2D(0.0, 51, 51), std::invalid_argument);
    CHECK_THROWS_AS(Grid2D(1.0, 1, 51), std::invalid_argument);
}

TEST_CASE("total_mass on constant and zero fields") {
    for (int n : {11, 51, 64}) {
        Grid2D g(1.0, n, n);
        ScalarField one(g, 1.0);
        CHECK(total_mass(one) == doctest::Approx(1.0).epsilon(1e-13));
        ScalarField zero(g, 0.0);
        CHECK(total_mass(zero) == 0.0);
    }
}

TEST_CASE("total_mass of normalized bump initial data") {
    Grid2D g(1.0, 51, 51);
    ScalarField rho = init_density_bumps(200, 0.015, 7, g);
    CHECK(std::abs(total_mass(rho) - 1.0) < 1e-12);
}

TEST_CASE("total_mass is linear") {
    Grid2D g(1.0, 17, 17);
    ScalarField f = oracles::random_field(g, 1), h = oracles::random_field(g, 2);
    double a = 2.25, b = -0.75;
    ScalarField combo(g);
    for (std::size_t k = 0; k < combo.values.size(); ++k)
        combo.values[k] = a * f.values[k] + b * h.values[k];
    CHECK(total_mass(combo) ==
          doctest::Approx(a * total_mass(f) + b * total_mass(h)).epsilon(1e-12));
}

TEST_CASE("gradient_neumann annihilates constants and is exact on linears") {
    Grid2D g(1.0, 51, 51);
    ScalarField c(g, 3.7);
    VectorField gc = gradient_neumann(c);
    for (double v : gc.comp1) CHECK(v == 0.0);
    for (double v : gc.comp2) CHECK(v == 0.0);

    ScalarField fx(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) fx(i, j) = g.x(i);
    VectorField gfx = gradient_neumann(fx);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx - 1; ++i) {
            CHECK(gfx.comp1[g.idx(i, j)] == doctest::Approx(1.0).epsilon(1e-13));
            CHECK(gfx.comp2[g.idx(i, j)] == 0.0);
        }
    // mirror ghosts force a vanishing normal component on the boundary
    for (int j = 0; j < g.ny; ++j) {
        CHECK(gfx.comp1[g.idx(0, j)] == 0.0);
        CHECK(gfx.comp1[g.idx(g.nx - 1, j)] == 0.0);
    }
}

TEST_CASE("gradient_neumann centered difference exact on quadratic at symmetric node") {
    Grid2D g(1.0, 51, 51);
    ScalarField f(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f(i, j) = g.x(i) * g.x(i) + g.y(j) * g.y(j);
    VectorField grad = gradient_neumann(f);
    int i = 25, j = 25;  // node (0.5, 0.5)
    CHECK(std::abs(grad.comp1[g.idx(i, j)] - 1.0) < 1e-12);
    CHECK(std::abs(grad.comp2[g.idx(i, j)] - 1.0) < 1e-12);
}

TEST_CASE("laplacian_5pt exact on quadratics, zero on constants") {
    Grid2D g(1.0, 41, 41);
    ScalarField c(g, -2.0);
    ScalarField lc = laplacian_5pt(c);
    for (double v : lc.values) CHECK(v == 0.0);

    ScalarField f(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f(i, j) = g.x(i) * g.x(i) + g.y(j) * g.y(j);
    ScalarField lf = laplacian_5pt(f);
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 1; i < g.nx - 1; ++i)
            CHECK(lf(i, j) == doctest::Approx(4.0).epsilon(1e-11));
}

TEST_CASE("discrete divergence theorem under Neumann mirroring") {
    Grid2D g(1.0, 33, 33);
    ScalarField f = oracles::random_field(g, 42, -1.0, 1.0);
    ScalarField lap = laplacian_5pt(f);
    CHECK(std::abs(total_mass(lap)) < 1e-10);
}

TEST_CASE("small-grid errors") {
    Grid2D g(1.0, 2, 2);
    ScalarField f(g, 1.0);
    CHECK_THROWS_AS(gradient_neumann(f), std::invalid_argument);
    CHECK_THROWS_AS(laplacian_5pt(f), std::invalid_argument);
}

TEST_CASE("velocity recovery uses the density floor") {
    Grid2D g(1.0, 5, 5);
    ConservedState w(g);
    w.rho(2, 2) = 2.0;
    w.m1(2, 2) = 1.0;
    w.m1(0, 0) = 1e-14;  // vacuum node
    VectorField u = velocity(w);
    CHECK(u.comp1[g.idx(2, 2)] == doctest::Approx(0.5));
    CHECK(std::isfinite(u.comp1[g.idx(0, 0)]));
    CHECK(u.comp1[g.idx(0, 0)] == doctest::Approx(1e-14 / 1e-10));
}

TEST_CASE("snapshot CSV round trip preserves values and metadata") {
    Grid2D g(1.0, 9, 7);
    ScalarField f = oracles::random_field(Grid2D(1.0, 9, 9), 3);
    ScalarField src(g);
    for (std::size_t k = 0; k < src.values.size(); ++k) src.values[k] = f.values[k] * 1e-3 + 0.1;
    std::string path = "test_grid_roundtrip.csv";
    write_field_csv(path, src, 0.25);
    double t = 0.0;
    ScalarField back = read_field_csv(path, &t);
    CHECK(t == 0.25);
    CHECK(back.grid.nx == g.nx);
    CHECK(back.grid.ny == g.ny);
    REQUIRE(back.values.size() == src.values.size());
    for (std::size_t k = 0; k < src.values.size(); ++k) CHECK(back.values[k] == src.values[k]);
    std::remove(path.c_str());
}

TEST_CASE("bilinear interpolation reproduces linear fields") {
    Grid2D g(1.0, 11, 11);
    VectorField v(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            v.comp1[g.idx(i, j)] = 2.0 * g.x(i) - g.y(j);
            v.comp2[g.idx(i, j)] = 0.5 + g.y(j);
        }
    Vec2 p{0.333, 0.71};
    Vec2 out = interpolate_bilinear(v, p);
    CHECK(out.x == doctest::Approx(2.0 * p.x - p.y).epsilon(1e-12));
    CHECK(out.y == doctest::Approx(0.5 + p.y).epsilon(1e-12));
}
