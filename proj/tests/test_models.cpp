#include <doctest.h>

#include <cmath>

#include "cellmig/models.hpp"
#include "oracles.hpp"

using namespace cellmig;

TEST_CASE("init_density_bumps normalization and shape") {
    Grid2D g(1.0, 51, 51);
    for (std::uint64_t seed : {0ULL, 5ULL}) {
        ScalarField rho = init_density_bumps(200, 0.015, seed, g);
        CHECK(std::abs(total_mass(rho) - 1.0) < 1e-10);
        CHECK(rho.min_value() >= 0.0);
    }

    // single bump: maximal at the node nearest its center, decreasing along rows
    ScalarField one = init_density_bumps(1, 0.05, 3, g);
    int bi = 0, bj = 0;
    double best = -1.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (one(i, j) > best) { best = one(i, j); bi = i; bj = j; }
    for (int i = bi + 1; i < std::min(bi + 8, g.nx - 1); ++i) CHECK(one(i, bj) < one(i - 1, bj));
    for (int i = bi - 1; i > std::max(bi - 8, 0); --i) CHECK(one(i, bj) < one(i + 1, bj));
    for (int j = bj + 1; j < std::min(bj + 8, g.ny - 1); ++j) CHECK(one(bi, j) < one(bi, j - 1));

    CHECK_THROWS_AS(init_density_bumps(0, 0.015, 0, g), std::invalid_argument);
    CHECK_THROWS_AS(init_density_bumps(10, 0.0, 0, g), std::invalid_argument);
}

TEST_CASE("chi_source bump profile") {
    TumorLayout layout;
    layout.xi = 1000.0;
    layout.radius = 0.05;
    CHECK(chi_source({0.05, 0.0}, layout) == 0.0);
    CHECK(chi_source({0.08, 0.02}, layout) == 0.0);
    CHECK(chi_source({0.0, 0.0}, layout) == doctest::Approx(1000.0));
    double r = 0.05 / std::sqrt(2.0);
    CHECK(chi_source({r, 0.0}, layout) == doctest::Approx(250.0).epsilon(1e-12));
    // C1 at the support edge
    double eps = 1e-7;
    CHECK(chi_source({0.05 - eps, 0.0}, layout) < 1e-9 * layout.xi);
}

TEST_CASE("chi_convolution matches a direct sum") {
    Grid2D g(1.0, 21, 21);
    TumorLayout layout;
    ScalarField zeta = oracles::random_field(g, 31);
    ScalarField fast = chi_convolution(zeta, layout);
    // direct evaluation
    for (int j : {0, 7, 15, 20}) {
        for (int i : {0, 3, 10, 20}) {
            double sum = 0.0;
            for (int jj = 0; jj < g.ny; ++jj)
                for (int ii = 0; ii < g.nx; ++ii)
                    sum += chi_source({g.x(i) - g.x(ii), g.y(j) - g.y(jj)}, layout) * zeta(ii, jj);
            sum *= g.dx * g.dy;
            CHECK(fast(i, j) == doctest::Approx(sum).epsilon(1e-12));
        }
    }
}

TEST_CASE("tumor density KDE integrates to one") {
    Grid2D g(1.0, 51, 51);
    TumorLayout layout;  // three interior centers, bandwidth 1.2 * 0.05
    ScalarField zeta = tumor_density_kde(g, layout);
    CHECK(total_mass(zeta) == doctest::Approx(1.0).epsilon(2e-2));
    CHECK(zeta.min_value() > 0.0);
}

TEST_CASE("blow-up threshold combines the relative factor and the grid cap") {
    Grid2D g(1.0, 51, 51);
    CHECK(blowup_threshold_for(7.0, g, 4.0) == doctest::Approx(28.0));
    // the factor is capped by the representable density 0.1/(dx dy)
    CHECK(blowup_threshold_for(7.0, g, 1e3) == doctest::Approx(250.0));
    CHECK(blowup_threshold_for(0.0, g, 4.0) == doctest::Approx(250.0));
}

TEST_CASE("uniform rest state stays frozen without forcing") {
    MacroConfig cfg;
    cfg.grid = Grid2D(1.0, 31, 31);
    cfg.use_i1 = cfg.use_i2 = cfg.use_i3 = false;
    cfg.eta = 0.0;
    cfg.alpha = 0.0;
    cfg.t_final = 0.3;
    cfg.snapshot_times = {0.3};
    ScalarField rho0(cfg.grid, 1.7);
    ScalarField phi0(cfg.grid, 0.0);
    SnapshotSeries s = run_macro_from(cfg, rho0, phi0);
    REQUIRE(s.states.size() == 1);
    for (double v : s.states[0].rho.values) CHECK(std::abs(v - 1.7) < 1e-12);
    for (double v : s.states[0].m1.values) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("mass is conserved along a default interacting run") {
    MacroConfig cfg;
    cfg.t_final = 0.2;
    cfg.snapshot_times = {0.2};
    SnapshotSeries s = run_macro(cfg);
    CHECK(std::abs(s.diag.mass_final - s.diag.mass_initial) < 1e-10 * s.diag.mass_initial);
    CHECK(s.diag.clipped_mass_total == 0.0);
}

TEST_CASE("snapshot series is deterministic under a fixed seed") {
    MacroConfig cfg;
    cfg.t_final = 0.1;
    cfg.snapshot_times = {0.05, 0.1};
    cfg.seed = 9;
    SnapshotSeries a = run_macro(cfg);
    SnapshotSeries b = run_macro(cfg);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        CHECK(a.times[k] == b.times[k]);
        CHECK(a.states[k].rho.values == b.states[k].rho.values);
        CHECK(a.states[k].m1.values == b.states[k].m1.values);
        CHECK(a.phis[k].values == b.phis[k].values);
    }
}

TEST_CASE("blow-up run reports a time and stops early") {
    MacroConfig cfg;
    cfg.use_i1 = cfg.use_i2 = cfg.use_i3 = false;
    cfg.eta = 0.5;
    cfg.t_final = 3.0;
    cfg.snapshot_times = {};
    SnapshotSeries s = run_macro(cfg);
    CHECK(s.diag.blowup);
    CHECK(s.diag.blowup_time > 0.0);
    CHECK(s.diag.blowup_time < 3.0);
}

TEST_CASE("two-population run with zero zeta degenerates to the tumor-free dynamics") {
    MacroConfig cfg = []() {
        MacroConfig c;
        c.t_final = 0.1;
        c.snapshot_times = {0.1};
        c.eta = 2.0;
        c.alpha = 10.0;
        c.chemo.source_mode = ChemoParams::SourceMode::tumor_convolution;
        c.kernels.w_rep_tum = 500.0;
        return c;
    }();
    TumorLayout layout;
    ScalarField zeta(cfg.grid, 0.0);
    ScalarField rho0 = init_density_bumps(cfg.bump_count, cfg.bump_sigma, cfg.seed, cfg.grid);
    ScalarField phi0 = chi_convolution(zeta, layout);  // identically zero
    SnapshotSeries with_i3 = run_macro_twopop_from(cfg, layout, zeta, rho0, phi0);
    MacroConfig no_i3 = cfg;
    no_i3.use_i3 = false;
    SnapshotSeries without_i3 = run_macro_twopop_from(no_i3, layout, zeta, rho0, phi0);
    REQUIRE(with_i3.states.size() == without_i3.states.size());
    for (std::size_t k = 0; k < with_i3.states.size(); ++k) {
        CHECK(with_i3.states[k].rho.values == without_i3.states[k].rho.values);
        CHECK(with_i3.states[k].m1.values == without_i3.states[k].m1.values);
    }
}

TEST_CASE("tumor repulsion lowers the density sitting on tumor disks") {
    TumorLayout layout;
    MacroConfig cfg;
    cfg.eta = 6.0;
    cfg.alpha = 100.0;
    cfg.chemo.diffusion = 45.0;
    cfg.chemo.kappa = 0.2;
    cfg.chemo.source_mode = ChemoParams::SourceMode::tumor_convolution;
    cfg.kernels.w_rep_tum = 0.0;
    cfg.t_final = 0.6;
    cfg.snapshot_times = {0.6};
    cfg.seed = 2;
    ScalarField zeta = tumor_density_kde(cfg.grid, layout);

    SnapshotSeries attract = run_macro_twopop(cfg, layout, zeta);
    MacroConfig repel_cfg = cfg;
    repel_cfg.kernels.w_rep_tum = 850.0;
    SnapshotSeries repel = run_macro_twopop(repel_cfg, layout, zeta);
    REQUIRE(attract.states.size() == 1);
    REQUIRE(repel.states.size() == 1);

    auto max_on_disks = [&](const ScalarField& rho) {
        double m = 0.0;
        const Grid2D& g = rho.grid;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                for (const Vec2& c : layout.centers)
                    if (std::hypot(g.x(i) - c.x, g.y(j) - c.y) <= layout.radius)
                        m = std::max(m, rho(i, j));
        return m;
    };
    double m_attract = max_on_disks(attract.states[0].rho);
    double m_repel = max_on_disks(repel.states[0].rho);
    CHECK(m_repel < m_attract);
}

TEST_CASE("configuration validation rejects bad values") {
    MacroConfig cfg;
    cfg.t_final = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = MacroConfig{};
    cfg.snapshot_times = {2.0};  // beyond T
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = MacroConfig{};
    cfg.law.epsilon = 0.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    TumorLayout layout;
    layout.centers = {{1.5, 0.5}};
    CHECK_THROWS_AS(layout.validate(Grid2D(1.0, 11, 11)), std::invalid_argument);
}
