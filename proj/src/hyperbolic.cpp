#include "cellmig/hyperbolic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cellmig/errors.hpp"

namespace cellmig {

void flux_A(const State3& w, const PressureLaw& law, State3& a1, State3& a2) {
    double r = std::max(w.rho, kRhoFloor);
    double u1 = w.m1 / r;
    double u2 = w.m2 / r;
    double p = law.epsilon != 0.0 ? law.epsilon * law.value(w.rho) : 0.0;
    a1.rho = w.m1;
    a1.m1 = w.m1 * u1 + p;
    a1.m2 = w.m1 * u2;
    a2.rho = w.m2;
    a2.m1 = w.m2 * u1;
    a2.m2 = w.m2 * u2 + p;
}

std::array<State3, 5> maxwellians(const State3& w, const PressureLaw& law, double lambda, double a) {
    State3 a1, a2;
    flux_A(w, law, a1, a2);
    const double b = 1.0 / (2.0 * lambda);
    std::array<State3, 5> m;
    m[0] = {a * w.rho + b * a1.rho, a * w.m1 + b * a1.m1, a * w.m2 + b * a1.m2};
    m[1] = {a * w.rho + b * a2.rho, a * w.m1 + b * a2.m1, a * w.m2 + b * a2.m2};
    m[2] = {a * w.rho - b * a1.rho, a * w.m1 - b * a1.m1, a * w.m2 - b * a1.m2};
    m[3] = {a * w.rho - b * a2.rho, a * w.m1 - b * a2.m1, a * w.m2 - b * a2.m2};
    double a5 = 1.0 - 4.0 * a;
    m[4] = {a5 * w.rho, a5 * w.m1, a5 * w.m2};
    return m;
}

double cfl_dt(double lambda, double dx) {
    if (!(lambda > 0.0) || !(dx > 0.0)) throw std::invalid_argument("cfl_dt: lambda, dx > 0 required");
    return 0.9 * dx / lambda;
}

double minmod_phi(double r) {
    if (!(r > 0.0)) return 0.0;  // covers r <= 0 and NaN
    return std::min(r, 1.0);
}

KineticEnsemble project_to_maxwellians(const ConservedState& w, const PressureLaw& law,
                                       double lambda, double a_weight) {
    if (!(lambda > 0.0)) throw std::invalid_argument("project_to_maxwellians: lambda > 0 required");
    if (!(a_weight > 0.0 && a_weight < 0.25))
        throw std::invalid_argument("project_to_maxwellians: a in (0, 1/4) required");
    KineticEnsemble ens;
    ens.grid = w.rho.grid;
    ens.lambda = lambda;
    ens.a_weight = a_weight;
    const std::size_t n = w.rho.values.size();
    for (auto& field : ens.f)
        for (auto& comp : field) comp.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        State3 wk{w.rho.values[k], w.m1.values[k], w.m2.values[k]};
        auto m = maxwellians(wk, law, lambda, a_weight);
        for (int i = 0; i < 5; ++i) {
            ens.f[i][0][k] = m[i].rho;
            ens.f[i][1][k] = m[i].m1;
            ens.f[i][2][k] = m[i].m2;
        }
    }
    return ens;
}

namespace {

// One flux-limited upwind sweep of a 1D line. `e` holds n + 4 entries with
// two ghost values on each side (physical index i lives at e[i + 2]).
// a = signed velocity, c = |a| dt / dx.
void sweep_line(const double* e, double* out, int n, double a, double c, double inv_dx, double dt,
                bool limited) {
    const double ad = 0.5 * std::abs(a) * (1.0 - c);
    // fluxes at edges k+1/2 for k = -1 .. n-1
    double prev_flux = 0.0;
    for (int k = -1; k < n; ++k) {
        const double* q = e + 2 + k;  // q[0] = e_k
        double flux;
        if (a > 0.0) {
            flux = a * q[0];
            if (limited) {
                double d = q[1] - q[0];
                double r = (q[0] - q[-1]) / d;
                flux += ad * minmod_phi(r) * d;
            }
        } else {
            flux = a * q[1];
            if (limited) {
                double d = q[1] - q[0];
                double r = (q[2] - q[1]) / d;
                flux += ad * minmod_phi(r) * d;
            }
        }
        if (k >= 0) out[k] = e[k + 2] - dt * inv_dx * (flux - prev_flux);
        prev_flux = flux;
    }
}

}  // namespace

void transport_step(KineticEnsemble& ens, double dt, Limiter limiter) {
    const Grid2D& g = ens.grid;
    const double lambda = ens.lambda;
    if (!(dt > 0.0)) throw std::invalid_argument("transport_step: dt > 0 required");
    double cx = lambda * dt / g.dx;
    double cy = lambda * dt / g.dy;
    if (cx > 0.9 * (1.0 + 1e-12) || cy > 0.9 * (1.0 + 1e-12))
        throw std::invalid_argument("transport_step: CFL violation, dt exceeds 0.9 dx / lambda");
    const bool limited = (limiter == Limiter::minmod);

    // x-direction pair f1 (+lambda) / f3 (-lambda); specular ghosts mirror
    // the partner field about the wall node with parity (+, -, +).
    {
        const int n = g.nx;
        std::vector<double> ep(n + 4), em(n + 4), outp(n), outm(n);
        static constexpr double parity_x[3] = {1.0, -1.0, 1.0};
        for (int comp = 0; comp < 3; ++comp) {
            const double par = parity_x[comp];
            std::vector<double>& f1 = ens.f[0][comp];
            std::vector<double>& f3 = ens.f[2][comp];
            for (int j = 0; j < g.ny; ++j) {
                const std::size_t row = static_cast<std::size_t>(g.idx(0, j));
                for (int i = 0; i < n; ++i) {
                    ep[i + 2] = f1[row + i];
                    em[i + 2] = f3[row + i];
                }
                ep[1] = par * em[3];
                ep[0] = par * em[4];
                ep[n + 2] = par * em[n];
                ep[n + 3] = par * em[n - 1];
                em[1] = par * ep[3];
                em[0] = par * ep[4];
                em[n + 2] = par * ep[n];
                em[n + 3] = par * ep[n - 1];
                sweep_line(ep.data(), outp.data(), n, lambda, cx, 1.0 / g.dx, dt, limited);
                sweep_line(em.data(), outm.data(), n, -lambda, cx, 1.0 / g.dx, dt, limited);
                for (int i = 0; i < n; ++i) {
                    f1[row + i] = outp[i];
                    f3[row + i] = outm[i];
                }
            }
        }
    }

    // y-direction pair f2 (+lambda) / f4 (-lambda); parity (+, +, -).
    {
        const int n = g.ny;
        std::vector<double> ep(n + 4), em(n + 4), outp(n), outm(n);
        static constexpr double parity_y[3] = {1.0, 1.0, -1.0};
        for (int comp = 0; comp < 3; ++comp) {
            const double par = parity_y[comp];
            std::vector<double>& f2 = ens.f[1][comp];
            std::vector<double>& f4 = ens.f[3][comp];
            for (int i = 0; i < g.nx; ++i) {
                for (int j = 0; j < n; ++j) {
                    std::size_t k = static_cast<std::size_t>(g.idx(i, j));
                    ep[j + 2] = f2[k];
                    em[j + 2] = f4[k];
                }
                ep[1] = par * em[3];
                ep[0] = par * em[4];
                ep[n + 2] = par * em[n];
                ep[n + 3] = par * em[n - 1];
                em[1] = par * ep[3];
                em[0] = par * ep[4];
                em[n + 2] = par * ep[n];
                em[n + 3] = par * ep[n - 1];
                sweep_line(ep.data(), outp.data(), n, lambda, cy, 1.0 / g.dy, dt, limited);
                sweep_line(em.data(), outm.data(), n, -lambda, cy, 1.0 / g.dy, dt, limited);
                for (int j = 0; j < n; ++j) {
                    std::size_t k = static_cast<std::size_t>(g.idx(i, j));
                    f2[k] = outp[j];
                    f4[k] = outm[j];
                }
            }
        }
    }
    // f5 has zero velocity and is untouched.
}

ConservedState collapse(const KineticEnsemble& ens) {
    ConservedState w(ens.grid);
    const std::size_t n = w.rho.values.size();
    for (std::size_t k = 0; k < n; ++k) {
        double r = 0.0, m1 = 0.0, m2 = 0.0;
        for (int i = 0; i < 5; ++i) {
            r += ens.f[i][0][k];
            m1 += ens.f[i][1][k];
            m2 += ens.f[i][2][k];
        }
        w.rho.values[k] = r;
        w.m1.values[k] = m1;
        w.m2.values[k] = m2;
    }
    return w;
}

VectorField source_eval(const ConservedState& w, const ScalarField& phi, const VectorField& interaction,
                        double eta, double alpha, double epsilon) {
    const Grid2D& g = w.rho.grid;
    if (!(phi.grid == g) || !(interaction.grid == g))
        throw std::invalid_argument("source_eval: fields must share one grid");
    VectorField grad = gradient_neumann(phi);
    VectorField out(g);
    const double ifac = 1.0 - epsilon;
    const std::size_t n = w.rho.values.size();
    for (std::size_t k = 0; k < n; ++k) {
        double rho = w.rho.values[k];
        double r = std::max(rho, kRhoFloor);
        double u1 = w.m1.values[k] / r;
        double u2 = w.m2.values[k] / r;
        out.comp1[k] = ifac * rho * interaction.comp1[k] + eta * rho * grad.comp1[k] - alpha * rho * u1;
        out.comp2[k] = ifac * rho * interaction.comp2[k] + eta * rho * grad.comp2[k] - alpha * rho * u2;
    }
    return out;
}

double select_lambda(const ConservedState& w, const PressureLaw& law, const HyperbolicOptions& opt) {
    double speed = 0.0;
    const std::size_t n = w.rho.values.size();
    for (std::size_t k = 0; k < n; ++k) {
        double r = std::max(w.rho.values[k], kRhoFloor);
        double s = std::abs(w.m1.values[k]) / r + std::abs(w.m2.values[k]) / r;
        if (law.epsilon != 0.0) s += std::sqrt(law.epsilon * std::max(law.dvalue(w.rho.values[k]), 0.0));
        speed = std::max(speed, s);
    }
    double lambda = std::max(opt.lambda_min, opt.c_safe * speed);
    if (!std::isfinite(lambda) || lambda > 1e8)
        throw NumericalError("select_lambda: kinetic speed adaptation failed (state blew up)");
    return lambda;
}

void enforce_wall_normal_momentum(ConservedState& w) {
    const Grid2D& g = w.rho.grid;
    for (int j = 0; j < g.ny; ++j) {
        w.m1(0, j) = 0.0;
        w.m1(g.nx - 1, j) = 0.0;
    }
    for (int i = 0; i < g.nx; ++i) {
        w.m2(i, 0) = 0.0;
        w.m2(i, g.ny - 1) = 0.0;
    }
}

StepReport hyperbolic_step(ConservedState& w, const ScalarField& phi, const VectorField& interaction,
                           const PressureLaw& law, double dt, double lambda, double eta, double alpha,
                           const HyperbolicOptions& opt, const AlignmentOperator* align) {
    const Grid2D& g = w.rho.grid;
    if (!(phi.grid == g) || !(interaction.grid == g))
        throw std::invalid_argument("hyperbolic_step: fields must share one grid");
    VectorField grad_phi = gradient_neumann(phi);
    const double ifac = 1.0 - law.epsilon;

    KineticEnsemble ens = project_to_maxwellians(w, law, lambda, opt.a_weight);
    transport_step(ens, dt, opt.limiter);
    ConservedState next = collapse(ens);

    // momentum source from the pre-step state, stiff diagonal rate implicit
    const std::size_t n = next.rho.values.size();
    for (std::size_t k = 0; k < n; ++k) {
        double rho = w.rho.values[k];
        double rate = alpha;
        double ex1 = ifac * rho * interaction.comp1[k] + eta * rho * grad_phi.comp1[k];
        double ex2 = ifac * rho * interaction.comp2[k] + eta * rho * grad_phi.comp2[k];
        if (align) {
            rate += ifac * align->conv_rho.values[k];
            ex1 += ifac * rho * align->conv_momentum.comp1[k];
            ex2 += ifac * rho * align->conv_momentum.comp2[k];
        }
        double denom = 1.0 + dt * rate;
        next.m1.values[k] = (next.m1.values[k] + dt * ex1) / denom;
        next.m2.values[k] = (next.m2.values[k] + dt * ex2) / denom;
    }
    enforce_wall_normal_momentum(next);

    StepReport report;
    double total = 0.0;
    // Nodes carrying a vanishing density fraction are treated as vacuum:
    // residual momentum there is dropped, otherwise u = m/rho at KDE-tail
    // nodes drives the kinetic speed (and the CFL step count) arbitrarily up.
    const double vacuum_rho = std::max(kRhoFloor, 1e-7 * w.rho.max_value());
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double& rho = next.rho(i, j);
            if (rho < 0.0) {
                report.clipped_mass += -rho * quad_weight(g, i, j);
                rho = 0.0;
            }
            if (rho <= vacuum_rho) {
                next.m1(i, j) = 0.0;
                next.m2(i, j) = 0.0;
            }
            total += rho * quad_weight(g, i, j);
            report.max_rho = std::max(report.max_rho, rho);
        }
    }
    if (!std::isfinite(report.max_rho) || !next.rho.all_finite() || !next.m1.all_finite() ||
        !next.m2.all_finite())
        throw NumericalError("hyperbolic_step: non-finite state detected");
    if (total > 0.0 && report.clipped_mass > opt.clip_abort_fraction * total)
        throw NumericalError("hyperbolic_step: clipped mass exceeds tolerated fraction of total mass");
    if (opt.blowup_threshold > 0.0 && report.max_rho >= opt.blowup_threshold) report.blowup = true;

    w = std::move(next);
    return report;
}

}  // namespace cellmig
