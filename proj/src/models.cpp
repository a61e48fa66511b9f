#include "cellmig/models.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "cellmig/errors.hpp"

namespace cellmig {

// ---------------------------------------------------------------------------
// Rng: xoshiro256++ seeded through splitmix64.

namespace {
inline std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}
inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& s : s_) s = splitmix64(sm);
}

std::uint64_t Rng::next_u64() {
    std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

// ---------------------------------------------------------------------------
// Configuration validation

void MacroConfig::validate() const {
    if (grid.nx < 3 || grid.ny < 3) throw std::invalid_argument("MacroConfig: grid needs nx, ny >= 3");
    if (!(t_final > 0.0)) throw std::invalid_argument("MacroConfig: T > 0 required");
    if (eta < 0.0) throw std::invalid_argument("MacroConfig: eta >= 0 required");
    if (alpha < 0.0) throw std::invalid_argument("MacroConfig: alpha >= 0 required");
    if (law.epsilon != 0.0 && law.epsilon != 1.0)
        throw std::invalid_argument("MacroConfig: epsilon must be 0 or 1");
    for (double t : snapshot_times)
        if (t < 0.0 || t > t_final)
            throw std::invalid_argument("MacroConfig: snapshot times must lie in [0, T]");
    if (!(hyp.a_weight > 0.0 && hyp.a_weight < 0.25))
        throw std::invalid_argument("MacroConfig: Maxwellian weight a in (0, 1/4) required");
    if (!(hyp.c_safe > 0.0) || !(hyp.lambda_min > 0.0))
        throw std::invalid_argument("MacroConfig: c_safe, lambda_min > 0 required");
    if (bump_count < 1) throw std::invalid_argument("MacroConfig: bump count N >= 1 required");
    if (!(bump_sigma > 0.0)) throw std::invalid_argument("MacroConfig: bump sigma > 0 required");
    if (!(blowup_factor > 0.0)) throw std::invalid_argument("MacroConfig: blowup_factor > 0 required");
    kernels.validate();
    chemo.validate();
}

void TumorLayout::validate(const Grid2D& g) const {
    if (centers.empty()) throw std::invalid_argument("TumorLayout: at least one center required");
    for (const Vec2& c : centers)
        if (c.x < 0.0 || c.x > g.length || c.y < 0.0 || c.y > g.length)
            throw std::invalid_argument("TumorLayout: centers must lie inside the domain");
    if (!(radius > 0.0)) throw std::invalid_argument("TumorLayout: R_tum > 0 required");
    if (xi < 0.0) throw std::invalid_argument("TumorLayout: xi >= 0 required");
    if (!(h_tum > 0.0)) throw std::invalid_argument("TumorLayout: h_tum > 0 required");
}

// ---------------------------------------------------------------------------
// Initial and tumor data

ScalarField init_density_bumps(int n_bumps, double sigma, std::uint64_t seed, const Grid2D& grid) {
    if (n_bumps < 1) throw std::invalid_argument("init_density_bumps: N >= 1 required");
    if (!(sigma > 0.0)) throw std::invalid_argument("init_density_bumps: sigma > 0 required");
    Rng rng(seed);
    std::vector<Vec2> centers(static_cast<std::size_t>(n_bumps));
    for (auto& c : centers) {
        c.x = rng.uniform(0.0, grid.length);
        c.y = rng.uniform(0.0, grid.length);
    }
    ScalarField rho(grid);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int j = 0; j < grid.ny; ++j) {
        for (int i = 0; i < grid.nx; ++i) {
            double x = grid.x(i), y = grid.y(j);
            double sum = 0.0;
            for (const Vec2& c : centers) {
                double dx = x - c.x, dy = y - c.y;
                sum += std::exp(-(dx * dx + dy * dy) * inv2s2);
            }
            rho(i, j) = sum;
        }
    }
    double mass = total_mass(rho);
    for (double& v : rho.values) v /= mass;  // tau-normalization: total mass 1
    return rho;
}

double chi_source(Vec2 z, const TumorLayout& layout) {
    double r2 = z.dot(z);
    double rt2 = layout.radius * layout.radius;
    if (r2 >= rt2) return 0.0;
    double q = 1.0 - r2 / rt2;
    return layout.xi * q * q;
}

ScalarField chi_field(const Grid2D& g, const TumorLayout& layout) {
    ScalarField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double sum = 0.0;
            for (const Vec2& c : layout.centers) sum += chi_source({g.x(i) - c.x, g.y(j) - c.y}, layout);
            out(i, j) = sum;
        }
    return out;
}

ScalarField tumor_density_kde(const Grid2D& g, const TumorLayout& layout) {
    const double hs = layout.h_tum * layout.radius;
    const double norm = 1.0 / (2.0 * M_PI * hs * hs * static_cast<double>(layout.centers.size()));
    ScalarField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double sum = 0.0;
            for (const Vec2& c : layout.centers) {
                double dx = g.x(i) - c.x, dy = g.y(j) - c.y;
                sum += std::exp(-(dx * dx + dy * dy) / (2.0 * hs * hs));
            }
            out(i, j) = norm * sum;
        }
    return out;
}

ScalarField chi_convolution(const ScalarField& zeta, const TumorLayout& layout) {
    const Grid2D& g = zeta.grid;
    ScalarField out(g);
    int ri = static_cast<int>(std::ceil(layout.radius / g.dx)) + 1;
    int rj = static_cast<int>(std::ceil(layout.radius / g.dy)) + 1;
    const double w = g.dx * g.dy;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double sum = 0.0;
            int jlo = std::max(0, j - rj), jhi = std::min(g.ny - 1, j + rj);
            int ilo = std::max(0, i - ri), ihi = std::min(g.nx - 1, i + ri);
            for (int jj = jlo; jj <= jhi; ++jj)
                for (int ii = ilo; ii <= ihi; ++ii) {
                    double chi = chi_source({(i - ii) * g.dx, (j - jj) * g.dy}, layout);
                    if (chi != 0.0) sum += chi * zeta(ii, jj);
                }
            out(i, j) = sum * w;
        }
    }
    return out;
}

double blowup_threshold_for(double max_rho0, const Grid2D& g, double factor) {
    double cap = 0.1 / (g.dx * g.dy);
    if (!(max_rho0 > 0.0)) return cap;
    return std::min(factor * max_rho0, cap);
}

// ---------------------------------------------------------------------------
// Time loop shared by the single- and two-population models

namespace {

SnapshotSeries run_loop(const MacroConfig& cfg, const ScalarField& rho0, const ScalarField& phi0,
                        const ScalarField* tumor_source, const VectorField* i3_cached) {
    cfg.validate();
    const Grid2D& g = cfg.grid;
    if (!(rho0.grid == g) || !(phi0.grid == g))
        throw std::invalid_argument("run_macro: initial data must live on the configured grid");

    ConservedState w(g);
    w.rho = rho0;
    ScalarField phi = phi0;

    HyperbolicOptions opt = cfg.hyp;
    opt.blowup_threshold = blowup_threshold_for(rho0.max_value(), g, cfg.blowup_factor);

    const bool pressureless = cfg.law.epsilon == 0.0;
    const bool want_i1 = pressureless && cfg.use_i1;
    const bool want_i2 = pressureless && cfg.use_i2;
    const bool want_i3 = pressureless && cfg.use_i3 && i3_cached != nullptr;
    std::optional<NonlocalOperators> ops;
    if (want_i1 || want_i2) ops.emplace(g, cfg.kernels);
    ParabolicSolver chemo_solver(g);

    std::vector<double> requested = cfg.snapshot_times;
    std::sort(requested.begin(), requested.end());

    SnapshotSeries out;
    out.diag.mass_initial = total_mass(w.rho);

    double t = 0.0;
    std::size_t next = 0;
    ConservedState w_prev = w;
    ScalarField phi_prev = phi;
    double t_prev = 0.0;
    auto blend = [](const std::vector<double>& a, const std::vector<double>& b, double f,
                    std::vector<double>& out_v) {
        out_v.resize(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) out_v[k] = a[k] + f * (b[k] - a[k]);
    };
    auto record = [&](double treq) {
        if (cfg.interpolate_snapshots && t > t_prev && treq < t) {
            double f = (treq - t_prev) / (t - t_prev);
            ConservedState wi(g);
            ScalarField phii(g);
            blend(w_prev.rho.values, w.rho.values, f, wi.rho.values);
            blend(w_prev.m1.values, w.m1.values, f, wi.m1.values);
            blend(w_prev.m2.values, w.m2.values, f, wi.m2.values);
            blend(phi_prev.values, phi.values, f, phii.values);
            out.times.push_back(treq);
            out.requested.push_back(treq);
            out.states.push_back(std::move(wi));
            out.phis.push_back(std::move(phii));
            return;
        }
        out.times.push_back(t);
        out.requested.push_back(treq);
        out.states.push_back(w);
        out.phis.push_back(phi);
    };
    while (next < requested.size() && requested[next] <= 0.0) record(requested[next++]);

    const double dx_min = std::min(g.dx, g.dy);
    bool first = true;
    while (t < cfg.t_final * (1.0 - 1e-12)) {
        double lambda;
        if (cfg.lambda_fixed > 0.0) {
            lambda = cfg.lambda_fixed;
            if (select_lambda(w, cfg.law, opt) > lambda)
                throw NumericalError("run_macro: state outgrew the frozen kinetic speed");
        } else {
            lambda = select_lambda(w, cfg.law, opt);
        }
        double dt = cfl_dt(lambda, dx_min);

        VectorField interaction(g);
        AlignmentOperator align;
        if (want_i1) ops->alignment_convolutions(w.rho, w.m1, w.m2, align.conv_rho, align.conv_momentum);
        if (want_i2) {
            VectorField i2 = ops->attraction_repulsion(w.rho);
            for (std::size_t k = 0; k < interaction.comp1.size(); ++k) {
                interaction.comp1[k] += i2.comp1[k];
                interaction.comp2[k] += i2.comp2[k];
            }
        }
        if (want_i3) {
            for (std::size_t k = 0; k < interaction.comp1.size(); ++k) {
                interaction.comp1[k] += i3_cached->comp1[k];
                interaction.comp2[k] += i3_cached->comp2[k];
            }
        }

        // production from the pre-step density (source lag)
        ScalarField s = tumor_source ? *tumor_source : g_production(w.rho, cfg.chemo);

        if (cfg.interpolate_snapshots) {
            w_prev = w;
            phi_prev = phi;
            t_prev = t;
        }
        StepReport rep = hyperbolic_step(w, phi, interaction, cfg.law, dt, lambda, cfg.eta, cfg.alpha, opt,
                                         want_i1 ? &align : nullptr);
        phi = tumor_source ? chemo_solver.step(phi, s, dt, cfg.chemo, &s)
                           : chemo_solver.step(phi, s, dt, cfg.chemo);
        t += dt;

        out.diag.steps += 1;
        out.diag.clipped_mass_total += rep.clipped_mass;
        out.diag.lambda_min = first ? lambda : std::min(out.diag.lambda_min, lambda);
        out.diag.lambda_max = first ? lambda : std::max(out.diag.lambda_max, lambda);
        out.diag.dt_min = first ? dt : std::min(out.diag.dt_min, dt);
        out.diag.dt_max = first ? dt : std::max(out.diag.dt_max, dt);
        first = false;

        while (next < requested.size() && requested[next] <= t + 1e-14) record(requested[next++]);

        if (rep.blowup) {
            out.diag.blowup = true;
            out.diag.blowup_time = t;
            break;
        }
    }
    if (!out.diag.blowup) {
        // final-time snapshots that the last variable step may have skipped
        while (next < requested.size()) record(requested[next++]);
    }
    out.diag.mass_final = total_mass(w.rho);
    return out;
}

}  // namespace

SnapshotSeries run_macro(const MacroConfig& cfg) {
    cfg.validate();
    ScalarField rho0 = init_density_bumps(cfg.bump_count, cfg.bump_sigma, cfg.seed, cfg.grid);
    ScalarField phi0(cfg.grid, 0.0);
    return run_loop(cfg, rho0, phi0, nullptr, nullptr);
}

SnapshotSeries run_macro_from(const MacroConfig& cfg, const ScalarField& rho0, const ScalarField& phi0) {
    return run_loop(cfg, rho0, phi0, nullptr, nullptr);
}

SnapshotSeries run_macro_twopop(const MacroConfig& cfg, const TumorLayout& layout, const ScalarField& zeta) {
    cfg.validate();
    ScalarField rho0 = init_density_bumps(cfg.bump_count, cfg.bump_sigma, cfg.seed, cfg.grid);
    ScalarField src = chi_convolution(zeta, layout);
    return run_macro_twopop_from(cfg, layout, zeta, rho0, src);
}

SnapshotSeries run_macro_twopop_from(const MacroConfig& cfg, const TumorLayout& layout,
                                     const ScalarField& zeta, const ScalarField& rho0,
                                     const ScalarField& phi0) {
    cfg.validate();
    layout.validate(cfg.grid);
    if (!(zeta.grid == cfg.grid)) throw std::invalid_argument("run_macro_twopop: zeta grid mismatch");
    for (double z : zeta.values)
        if (z < 0.0) throw std::invalid_argument("run_macro_twopop: zeta must be nonnegative");

    ScalarField src = chi_convolution(zeta, layout);
    VectorField i3 = nonlocal_tumor(zeta, cfg.kernels);
    return run_loop(cfg, rho0, phi0, &src, &i3);
}

}  // namespace cellmig
