#include <doctest.h>

#include <cmath>

#include "cellmig/kernels.hpp"
#include "oracles.hpp"

using namespace cellmig;

namespace {
KernelParams table_params() {
    KernelParams p;
    p.beta = 2000.0;
    p.varsigma = 1.0;
    p.w_rep = 500.0;
    p.w_adh = 4.0;
    p.r_rep = 0.04;
    p.r_adh = 0.06;
    p.w_rep_tum = 850.0;
    p.r_rep_tum = 0.07;
    return p;
}
}  // namespace

TEST_CASE("gamma_d communication rate") {
    KernelParams p = table_params();
    CHECK(gamma_d(0.0, p) == doctest::Approx(2000.0));
    CHECK(gamma_d(1.0, p) == doctest::Approx(1000.0));
    KernelParams q = p;
    q.beta = 1.0;
    q.varsigma = 2.0;
    CHECK(gamma_d(3.0, q) == doctest::Approx(0.01).epsilon(1e-13));

    // optional cutoff, off by default
    CHECK(gamma_d(0.5, p) > 0.0);
    p.align_cutoff = true;
    p.r_align = 0.06;
    CHECK(gamma_d(0.07, p) == 0.0);
    CHECK(gamma_d(0.05, p) == doctest::Approx(2000.0 / 1.0025));
}

TEST_CASE("gamma1 alignment force") {
    KernelParams p = table_params();
    Vec2 zero = gamma1({0.0, 0.0}, {0.3, -0.2}, p);
    CHECK(zero.x == 0.0);
    CHECK(zero.y == 0.0);

    KernelParams q = p;
    q.beta = 2.0;
    Vec2 at0 = gamma1({1.0, 0.0}, {0.0, 0.0}, q);
    CHECK(at0.x == doctest::Approx(2.0));
    CHECK(at0.y == 0.0);

    Vec2 far = gamma1({0.0, -1.0}, {1.0, 0.0}, p);
    CHECK(far.x == 0.0);
    CHECK(far.y == doctest::Approx(-1000.0));
}

TEST_CASE("gamma2 attraction-repulsion branches") {
    KernelParams p = table_params();
    Vec2 at_rrep = gamma2({0.04, 0.0}, p);
    CHECK(at_rrep.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(at_rrep.y == 0.0);

    Vec2 beyond = gamma2({0.1, 0.0}, p);
    CHECK(beyond.x == 0.0);
    CHECK(beyond.y == 0.0);

    Vec2 rep = gamma2({0.02, 0.0}, p);
    CHECK(rep.x == doctest::Approx(12500.0).epsilon(1e-12));
    CHECK(rep.y == 0.0);

    Vec2 self = gamma2({0.0, 0.0}, p);
    CHECK(self.x == 0.0);
    CHECK(self.y == 0.0);
}

TEST_CASE("gamma2 continuity at r_rep and antisymmetry") {
    KernelParams p = table_params();
    double eps = 1e-12;
    Vec2 below = gamma2({p.r_rep - eps, 0.0}, p);
    Vec2 above = gamma2({p.r_rep + eps, 0.0}, p);
    CHECK(std::abs(below.x - above.x) < 1e-6 * p.w_rep);

    Rng rng(11);
    for (int k = 0; k < 200; ++k) {
        Vec2 dx{rng.uniform(-0.08, 0.08), rng.uniform(-0.08, 0.08)};
        Vec2 a = gamma2(dx, p);
        Vec2 b = gamma2({-dx.x, -dx.y}, p);
        CHECK(a.x == doctest::Approx(-b.x).epsilon(1e-12));
        CHECK(a.y == doctest::Approx(-b.y).epsilon(1e-12));
    }
}

TEST_CASE("gamma3 tumor repulsion") {
    KernelParams p = table_params();
    Vec2 at_r = gamma3({0.07, 0.0}, p);
    CHECK(at_r.x == doctest::Approx(0.0).epsilon(1e-10));
    Vec2 beyond = gamma3({0.08, 0.0}, p);
    CHECK(beyond.x == 0.0);
    CHECK(beyond.y == 0.0);

    Vec2 inside = gamma3({0.035, 0.0}, p);
    CHECK(inside.x == doctest::Approx(850.0 * (1.0 / 0.035 - 1.0 / 0.07)).epsilon(1e-12));
    CHECK(inside.y == 0.0);

    double eps = 1e-12;
    Vec2 below = gamma3({p.r_rep_tum - eps, 0.0}, p);
    Vec2 above = gamma3({p.r_rep_tum + eps, 0.0}, p);
    CHECK(std::abs(below.x - above.x) < 1e-6 * p.w_rep_tum);
}

TEST_CASE("kernel parameter validation names the violated invariant") {
    KernelParams p = table_params();
    p.r_adh = 0.03;  // < r_rep
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("R_adh > R_rep"), std::invalid_argument);
}

TEST_CASE("I1 vanishes for constant velocity and zero density") {
    Grid2D g(1.0, 11, 11);
    KernelParams p = table_params();
    ScalarField rho = oracles::random_field(g, 5);
    VectorField u(g);
    for (auto& v : u.comp1) v = 0.7;
    for (auto& v : u.comp2) v = -0.3;
    VectorField i1 = nonlocal_alignment(rho, u, p);
    for (double v : i1.comp1) CHECK(std::abs(v) < 1e-10);
    for (double v : i1.comp2) CHECK(std::abs(v) < 1e-10);

    ScalarField zero(g, 0.0);
    VectorField uu(g);
    for (auto& v : uu.comp1) v = 0.2;
    VectorField i1z = nonlocal_alignment(zero, uu, p);
    for (double v : i1z.comp1) CHECK(std::abs(v) < 1e-14);
}

TEST_CASE("I1 fast path equals the direct double sum") {
    KernelParams p = table_params();
    for (int n : {11, 21}) {
        Grid2D g(1.0, n, n);
        ScalarField rho = oracles::random_field(g, 10 + n);
        VectorField u(g);
        Rng rng(20 + n);
        for (std::size_t k = 0; k < u.comp1.size(); ++k) {
            u.comp1[k] = rng.uniform(-1.0, 1.0);
            u.comp2[k] = rng.uniform(-1.0, 1.0);
        }
        VectorField fast = nonlocal_alignment(rho, u, p);
        VectorField slow = oracles::alignment_double_sum(rho, u, p);
        CHECK(oracles::max_abs_diff(fast.comp1, slow.comp1) < 1e-10);
        CHECK(oracles::max_abs_diff(fast.comp2, slow.comp2) < 1e-10);
    }
}

TEST_CASE("I2 stencil path equals the direct double sum") {
    KernelParams p = table_params();
    for (int n : {11, 21}) {
        Grid2D g(1.0, n, n);
        ScalarField rho = oracles::random_field(g, 30 + n);
        VectorField fast = nonlocal_attr_rep(rho, p);
        VectorField slow = oracles::kernel_double_sum(rho, [&](Vec2 d) { return gamma2(d, p); });
        CHECK(oracles::max_abs_diff(fast.comp1, slow.comp1) < 1e-12);
        CHECK(oracles::max_abs_diff(fast.comp2, slow.comp2) < 1e-12);
    }
}

TEST_CASE("I2 vanishes on radially symmetric density about the evaluation node") {
    Grid2D g(1.0, 21, 21);
    KernelParams p = table_params();
    p.r_adh = 0.2;  // widen the support so several rings contribute
    p.r_rep = 0.1;
    ScalarField rho(g);
    int ci = 10, cj = 10;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double dx = g.x(i) - g.x(ci), dy = g.y(j) - g.y(cj);
            rho(i, j) = std::exp(-(dx * dx + dy * dy) / 0.01);
        }
    VectorField i2 = nonlocal_attr_rep(rho, p);
    CHECK(std::abs(i2.comp1[g.idx(ci, cj)]) < 1e-12);
    CHECK(std::abs(i2.comp2[g.idx(ci, cj)]) < 1e-12);
}

TEST_CASE("I2 compact support: far-away density changes do not matter") {
    Grid2D g(1.0, 21, 21);
    KernelParams p = table_params();
    ScalarField rho = oracles::random_field(g, 77);
    VectorField base = nonlocal_attr_rep(rho, p);
    int ti = 5, tj = 5;
    ScalarField modified = rho;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double dist = std::hypot(g.x(i) - g.x(ti), g.y(j) - g.y(tj));
            if (dist > p.r_adh + g.dx) modified(i, j) += 10.0;
        }
    VectorField mod = nonlocal_attr_rep(modified, p);
    CHECK(mod.comp1[g.idx(ti, tj)] == doctest::Approx(base.comp1[g.idx(ti, tj)]).epsilon(1e-12));
    CHECK(mod.comp2[g.idx(ti, tj)] == doctest::Approx(base.comp2[g.idx(ti, tj)]).epsilon(1e-12));
}

TEST_CASE("I3 oracle equivalence, zero cases and outward direction") {
    KernelParams p = table_params();
    Grid2D g(1.0, 21, 21);

    ScalarField zero(g, 0.0);
    VectorField i3z = nonlocal_tumor(zero, p);
    for (double v : i3z.comp1) CHECK(v == 0.0);

    KernelParams off = p;
    off.w_rep_tum = 0.0;
    ScalarField zeta(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double dx = g.x(i) - 0.5, dy = g.y(j) - 0.5;
            zeta(i, j) = std::exp(-(dx * dx + dy * dy) / 0.005);
        }
    VectorField i3off = nonlocal_tumor(zeta, off);
    for (double v : i3off.comp1) CHECK(v == 0.0);
    for (double v : i3off.comp2) CHECK(v == 0.0);

    VectorField fast = nonlocal_tumor(zeta, p);
    VectorField slow = oracles::kernel_double_sum(zeta, [&](Vec2 d) { return gamma3(d, p); });
    CHECK(oracles::max_abs_diff(fast.comp1, slow.comp1) < 1e-10);
    CHECK(oracles::max_abs_diff(fast.comp2, slow.comp2) < 1e-10);

    // repulsion points away from the zeta bump along the x axis
    CHECK(fast.comp1[g.idx(11, 10)] > 0.0);
    CHECK(fast.comp1[g.idx(9, 10)] < 0.0);
    CHECK(fast.comp2[g.idx(10, 11)] > 0.0);
    CHECK(fast.comp2[g.idx(10, 9)] < 0.0);
}
