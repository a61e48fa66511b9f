#include <doctest.h>

#include <cmath>

#include "cellmig/parabolic.hpp"
#include "oracles.hpp"

using namespace cellmig;

TEST_CASE("g_production modes") {
    Grid2D g(1.0, 5, 5);
    ChemoParams cp;
    cp.source_mode = ChemoParams::SourceMode::saturating;
    cp.alpha1 = 30.0;
    cp.alpha2 = 0.2;

    ScalarField zero(g, 0.0);
    ScalarField gz = g_production(zero, cp);
    for (double v : gz.values) CHECK(v == 0.0);

    ScalarField one(g, 1.0);
    ScalarField g1 = g_production(one, cp);
    for (double v : g1.values) CHECK(v == doctest::Approx(25.0));

    ScalarField big(g, 100.0);
    ScalarField gb = g_production(big, cp);
    for (double v : gb.values) CHECK(v == doctest::Approx(3000.0 / 2001.0));
    // saturating: beyond the maximum the production decreases with density
    ScalarField bigger(g, 200.0);
    CHECK(g_production(bigger, cp).values[0] < gb.values[0]);

    cp.source_mode = ChemoParams::SourceMode::linear;
    cp.a_lin = 2.5;
    ScalarField gl = g_production(one, cp);
    for (double v : gl.values) CHECK(v == doctest::Approx(2.5));
}

TEST_CASE("theta_step trivial and scalar-decay cases") {
    Grid2D g(1.0, 9, 9);
    ScalarField zero(g, 0.0);

    SUBCASE("D = 0, kappa = 0, s = 0 leaves phi unchanged") {
        ChemoParams cp;
        cp.diffusion = 0.0;
        cp.kappa = 0.0;
        ScalarField phi = oracles::random_field(g, 4);
        ScalarField next = theta_step(phi, zero, 0.1, cp);
        CHECK(oracles::max_abs_diff(next.values, phi.values) < 1e-13);
    }
    SUBCASE("Crank-Nicolson scalar decay factor") {
        ChemoParams cp;
        cp.diffusion = 0.0;
        cp.kappa = 1.0;
        cp.theta = 0.5;
        ScalarField phi(g, 1.0);
        ScalarField next = theta_step(phi, zero, 0.1, cp);
        for (double v : next.values) CHECK(v == doctest::Approx(0.95 / 1.05).epsilon(1e-12));
    }
    SUBCASE("implicit and explicit limits match hand-computed factors") {
        ChemoParams cp;
        cp.diffusion = 0.0;
        cp.kappa = 2.0;
        double dt = 0.05;
        ScalarField phi(g, 3.0);
        ScalarField s(g, 1.0);

        cp.theta = 1.0;  // (1 + dt kappa) phi1 = phi0 + dt s
        ScalarField implicit = theta_step(phi, s, dt, cp, &s);
        for (double v : implicit.values)
            CHECK(v == doctest::Approx((3.0 + dt) / (1.0 + dt * 2.0)).epsilon(1e-12));

        cp.theta = 0.0;  // phi1 = phi0 (1 - dt kappa) + dt s
        ScalarField expl = theta_step(phi, s, dt, cp, &s);
        for (double v : expl.values)
            CHECK(v == doctest::Approx(3.0 * (1.0 - dt * 2.0) + dt).epsilon(1e-12));
    }
}

TEST_CASE("theta_step conserves mass with kappa = 0, s = 0") {
    Grid2D g(1.0, 21, 21);
    ChemoParams cp;
    cp.diffusion = 0.3;
    cp.kappa = 0.0;
    ScalarField phi = oracles::random_field(g, 8, 0.0, 2.0);
    ScalarField zero(g, 0.0);
    double m0 = total_mass(phi);
    for (int s = 0; s < 5; ++s) phi = theta_step(phi, zero, 0.02, cp);
    CHECK(std::abs(total_mass(phi) - m0) < 1e-10 * std::abs(m0));
}

TEST_CASE("near-positivity under the explicit-half step restriction") {
    Grid2D g(1.0, 21, 21);
    ChemoParams cp;
    cp.diffusion = 0.1;
    cp.kappa = 1.0;
    cp.theta = 0.5;
    double dt = g.dx * g.dx / (2.0 * cp.diffusion);
    ScalarField phi = oracles::random_field(g, 13, 0.0, 1.0);
    ScalarField s = oracles::random_field(g, 14, 0.0, 5.0);
    for (int k = 0; k < 20; ++k) phi = theta_step(phi, s, dt, cp);
    CHECK(phi.min_value() >= -1e-10);
}

TEST_CASE("implicit solve matches the operator to machine residual") {
    // contract: relative residual below 1e-10
    Grid2D g(1.0, 17, 17);
    ChemoParams cp;
    cp.diffusion = 45.0;  // stiff case
    cp.kappa = 0.2;
    cp.theta = 0.5;
    double dt = 0.018;
    ScalarField phi = oracles::random_field(g, 21, 0.0, 3.0);
    ScalarField s = oracles::random_field(g, 22, 0.0, 10.0);
    ScalarField next = theta_step(phi, s, dt, cp, &s);

    // residual of (I - th dt (D L - kappa)) next - rhs
    ScalarField lap_next = laplacian_5pt(next);
    ScalarField lap_phi = laplacian_5pt(phi);
    double th = cp.theta;
    double rnorm = 0.0, bnorm = 0.0;
    for (std::size_t k = 0; k < phi.values.size(); ++k) {
        double lhs = next.values[k] - th * dt * (cp.diffusion * lap_next.values[k] - cp.kappa * next.values[k]);
        double rhs = phi.values[k] +
                     (1.0 - th) * dt * (cp.diffusion * lap_phi.values[k] - cp.kappa * phi.values[k]) +
                     dt * s.values[k];
        rnorm += (lhs - rhs) * (lhs - rhs);
        bnorm += rhs * rhs;
    }
    CHECK(std::sqrt(rnorm) < 1e-10 * std::sqrt(bnorm));
}

TEST_CASE("manufactured solution converges at second order") {
    auto heat_error = [](int n) {
        Grid2D g(1.0, n, n);
        ChemoParams cp;  // D = 0.1, kappa = 1, theta = 1/2
        const double pi = M_PI;
        auto exact = [&](double x, double y, double t) {
            return std::cos(pi * x) * std::cos(pi * y) * std::exp(-t);
        };
        double coef = -1.0 + 2.0 * cp.diffusion * pi * pi + cp.kappa;
        ScalarField phi(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) phi(i, j) = exact(g.x(i), g.y(j), 0.0);
        const double T = 0.5;
        long steps = std::lround(T / g.dx);
        double dt = T / steps;
        ParabolicSolver solver(g);
        double t = 0.0;
        for (long s = 0; s < steps; ++s) {
            ScalarField sn(g), snp(g);
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) {
                    sn(i, j) = coef * exact(g.x(i), g.y(j), t);
                    snp(i, j) = coef * exact(g.x(i), g.y(j), t + dt);
                }
            phi = solver.step(phi, sn, dt, cp, &snp);
            t += dt;
        }
        double err = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double d = phi(i, j) - exact(g.x(i), g.y(j), T);
                err += d * d * g.dx * g.dy;
            }
        return std::sqrt(err);
    };
    double e1 = heat_error(11), e2 = heat_error(21), e3 = heat_error(41);
    double order12 = std::log2(e1 / e2), order23 = std::log2(e2 / e3);
    CHECK(order12 >= 1.9);
    CHECK(order23 >= 1.9);
}
