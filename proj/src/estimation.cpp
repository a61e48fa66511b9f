#include "cellmig/estimation.hpp"
#include <cstdlib>
#include <cstdio>

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>
#include <thread>

#include "cellmig/errors.hpp"

namespace cellmig {

void BandwidthMatrix::validate() const {
    if (!(h > 0.0) || !(sigma > 0.0)) throw std::invalid_argument("BandwidthMatrix: h, sigma > 0 required");
}

ScalarField kde(const std::vector<Vec2>& samples, const BandwidthMatrix& bw, const Grid2D& grid,
                bool truncate) {
    bw.validate();
    if (samples.empty()) throw std::invalid_argument("kde: at least one sample required");
    const double hs = bw.scale();
    const double inv2h2 = 1.0 / (2.0 * hs * hs);
    const double norm = 1.0 / (2.0 * M_PI * hs * hs * static_cast<double>(samples.size()));
    const double cutoff2 = truncate ? 36.0 * hs * hs : std::numeric_limits<double>::infinity();
    ScalarField out(grid);
    for (const Vec2& s : samples) {
        int ilo = 0, ihi = grid.nx - 1, jlo = 0, jhi = grid.ny - 1;
        if (truncate) {
            ilo = std::max(0, static_cast<int>(std::floor((s.x - 6.0 * hs) / grid.dx)));
            ihi = std::min(grid.nx - 1, static_cast<int>(std::ceil((s.x + 6.0 * hs) / grid.dx)));
            jlo = std::max(0, static_cast<int>(std::floor((s.y - 6.0 * hs) / grid.dy)));
            jhi = std::min(grid.ny - 1, static_cast<int>(std::ceil((s.y + 6.0 * hs) / grid.dy)));
        }
        for (int j = jlo; j <= jhi; ++j) {
            double dy = grid.y(j) - s.y;
            for (int i = ilo; i <= ihi; ++i) {
                double dx = grid.x(i) - s.x;
                double r2 = dx * dx + dy * dy;
                if (r2 > cutoff2) continue;
                out(i, j) += std::exp(-r2 * inv2h2);
            }
        }
    }
    for (double& v : out.values) v *= norm;
    return out;
}

void ForwardScenario::validate() const {
    base.validate();
    layout.validate(base.grid);
    if (data_times.empty()) throw std::invalid_argument("ForwardScenario: N_t >= 1 data times required");
    for (double t : data_times)
        if (!(t > 0.0) || t > base.t_final)
            throw std::invalid_argument("ForwardScenario: data times must lie in (0, T]");
    if (!(zeta.grid == base.grid)) throw std::invalid_argument("ForwardScenario: zeta grid mismatch");
    if (trajectory_mode) {
        if (initial_positions.empty())
            throw std::invalid_argument("ForwardScenario: initial positions required in trajectory mode");
        if (data_positions.size() != data_times.size())
            throw std::invalid_argument("ForwardScenario: one position set per data time required");
        if (!(cell_radius > 0.0)) throw std::invalid_argument("ForwardScenario: cell radius > 0 required");
    } else {
        if (density_data.size() != data_times.size())
            throw std::invalid_argument("ForwardScenario: one density snapshot per data time required");
        if (!(rho0.grid == base.grid) || !(phi0.grid == base.grid))
            throw std::invalid_argument("ForwardScenario: rho0/phi0 grid mismatch");
    }
}

void EstimationProblem::validate() const {
    scenario.validate();
    for (double v : theta0)
        if (v < 0.0) throw std::invalid_argument("EstimationProblem: theta0 components must be nonnegative");
    if (!(bound_factor > 1.0)) throw std::invalid_argument("EstimationProblem: bound factor > 1 required");
    if (lambda2 < 0.0) throw std::invalid_argument("EstimationProblem: lambda^2 >= 0 required");
    if (max_iterations < 1) throw std::invalid_argument("EstimationProblem: max iterations >= 1 required");
}

namespace {

MacroConfig config_with_theta(const ThetaVector& theta, const ForwardScenario& sc) {
    MacroConfig cfg = sc.base;
    cfg.eta = theta[kThetaEta];
    cfg.kernels.w_rep = theta[kThetaWrep];
    cfg.kernels.w_adh = theta[kThetaWadh];
    cfg.kernels.beta = theta[kThetaBeta];
    cfg.kernels.w_rep_tum = theta[kThetaWrepTum];
    cfg.snapshot_times = sc.data_times;
    cfg.interpolate_snapshots = true;  // keeps the objective smooth in theta
    return cfg;
}

}  // namespace

void freeze_forward_speed(ForwardScenario& scenario, const ThetaVector& reference_theta) {
    ForwardScenario probe = scenario;
    probe.base.lambda_fixed = 0.0;
    MacroConfig cfg = [&] {
        MacroConfig c = probe.base;
        c.eta = reference_theta[kThetaEta];
        c.kernels.w_rep = reference_theta[kThetaWrep];
        c.kernels.w_adh = reference_theta[kThetaWadh];
        c.kernels.beta = reference_theta[kThetaBeta];
        c.kernels.w_rep_tum = reference_theta[kThetaWrepTum];
        c.snapshot_times = probe.data_times;
        c.interpolate_snapshots = true;
        return c;
    }();
    ScalarField rho0, phi0;
    if (scenario.trajectory_mode) {
        BandwidthMatrix bw{reference_theta[kThetaBandwidth], scenario.cell_radius};
        rho0 = kde(scenario.initial_positions, bw, scenario.base.grid);
        phi0 = chi_convolution(scenario.zeta, scenario.layout);
    } else {
        rho0 = scenario.rho0;
        phi0 = scenario.phi0;
    }
    SnapshotSeries ref = run_macro_twopop_from(cfg, scenario.layout, scenario.zeta, rho0, phi0);
    double lam = std::max(ref.diag.lambda_max, cfg.hyp.lambda_min);
    scenario.base.lambda_fixed = 1.5 * lam;
}

ForwardOutput forward_model(const ThetaVector& theta, const ForwardScenario& sc) {
    ForwardOutput out;
    try {
        MacroConfig cfg = config_with_theta(theta, sc);
        ScalarField rho0, phi0;
        if (sc.trajectory_mode) {
            BandwidthMatrix bw{theta[kThetaBandwidth], sc.cell_radius};
            rho0 = kde(sc.initial_positions, bw, sc.base.grid);
            phi0 = chi_convolution(sc.zeta, sc.layout);
        } else {
            rho0 = sc.rho0;
            phi0 = sc.phi0;
        }
        SnapshotSeries series = run_macro_twopop_from(cfg, sc.layout, sc.zeta, rho0, phi0);
        if (series.diag.blowup) {
            out.failure = "forward run terminated by blow-up";
            return out;
        }
        if (series.states.size() != sc.data_times.size()) {
            out.failure = "forward run produced an incomplete snapshot series";
            return out;
        }
        out.densities.reserve(series.states.size());
        for (auto& st : series.states) out.densities.push_back(std::move(st.rho));
        out.max_final_density = out.densities.back().max_value();
        out.ok = true;
    } catch (const std::exception& e) {
        out.failure = e.what();
    }
    return out;
}

double objective_J(const ThetaVector& theta, const EstimationProblem& problem,
                   std::vector<double>* residuals) {
    const ForwardScenario& sc = problem.scenario;
    ForwardOutput fwd = forward_model(theta, sc);
    if (!fwd.ok) return problem.forward_penalty;

    const std::size_t nt = sc.data_times.size();
    double sum = 0.0;
    if (residuals) residuals->clear();
    for (std::size_t k = 0; k < nt; ++k) {
        ScalarField data = sc.trajectory_mode
                               ? kde(sc.data_positions[k], {theta[kThetaBandwidth], sc.cell_radius},
                                     sc.base.grid)
                               : sc.density_data[k];
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < data.values.size(); ++i) {
            double d = fwd.densities[k].values[i] - data.values[i];
            num += d * d;
            den += data.values[i] * data.values[i];
        }
        if (!(den > 0.0)) return problem.forward_penalty;
        double rel = std::sqrt(num / den);
        if (residuals) residuals->push_back(rel);
        sum += rel * rel;
    }
    return sum / static_cast<double>(nt);
}

double regularized_K(const ThetaVector& theta, const EstimationProblem& problem) {
    double j = objective_J(theta, problem);
    double reg = 0.0;
    for (int i = 0; i < 6; ++i) {
        double d = theta[i] - problem.theta0[i];
        reg += d * d;
    }
    return j + problem.lambda2 * reg;
}

// ---------------------------------------------------------------------------
// Trust-region minimizer
//
// Works in scaled coordinates z_i = theta_i / max(theta0_i, 1). Gradients by
// central differences (one-sided against an active bound), curvature by
// damped SR1 updates, and the step from a Steihaug truncated-CG solve of the
// quadratic model followed by projection onto the bound box.

namespace {

struct ScaledProblem {
    const EstimationProblem* problem;
    std::vector<int> free_idx;       // components with positive bound width
    ThetaVector scale{};             // per-component scale
    ThetaVector lo{}, hi{};          // bounds in theta space
    ThetaVector frozen{};            // full theta template (frozen components fixed)

    ThetaVector unscale(const std::vector<double>& z) const {
        ThetaVector th = frozen;
        for (std::size_t k = 0; k < free_idx.size(); ++k)
            th[static_cast<std::size_t>(free_idx[k])] = z[k] * scale[static_cast<std::size_t>(free_idx[k])];
        return th;
    }
    double eval(const std::vector<double>& z) const { return regularized_K(unscale(z), *problem); }

    void clip(std::vector<double>& z) const {
        for (std::size_t k = 0; k < free_idx.size(); ++k) {
            std::size_t i = static_cast<std::size_t>(free_idx[k]);
            z[k] = std::clamp(z[k], lo[i] / scale[i], hi[i] / scale[i]);
        }
    }
};

// Evaluate K at a batch of points; independent forward runs, executed
// concurrently when hardware allows.
std::vector<double> eval_batch(const ScaledProblem& sp, const std::vector<std::vector<double>>& points) {
    std::vector<double> values(points.size());
    unsigned hw = std::thread::hardware_concurrency();
    if (hw > 1 && points.size() > 1) {
        std::vector<std::future<double>> futures;
        futures.reserve(points.size());
        for (const auto& p : points)
            futures.push_back(std::async(std::launch::async, [&sp, &p] { return sp.eval(p); }));
        for (std::size_t k = 0; k < futures.size(); ++k) values[k] = futures[k].get();
    } else {
        for (std::size_t k = 0; k < points.size(); ++k) values[k] = sp.eval(points[k]);
    }
    return values;
}

std::vector<double> fd_gradient(const ScaledProblem& sp, const std::vector<double>& z, double fc,
                                double step) {
    const std::size_t n = z.size();
    std::vector<std::vector<double>> points;
    std::vector<std::pair<int, int>> plan;  // (component, +1/-1/0=center reuse)
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t i = static_cast<std::size_t>(sp.free_idx[k]);
        double zl = sp.lo[i] / sp.scale[i], zh = sp.hi[i] / sp.scale[i];
        std::vector<double> zp = z, zm = z;
        zp[k] = std::min(z[k] + step, zh);
        zm[k] = std::max(z[k] - step, zl);
        points.push_back(zp);
        plan.push_back({static_cast<int>(k), +1});
        points.push_back(zm);
        plan.push_back({static_cast<int>(k), -1});
    }
    std::vector<double> vals = eval_batch(sp, points);
    std::vector<double> grad(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double zp = points[2 * k][k], zm = points[2 * k + 1][k];
        double fp = vals[2 * k], fm = vals[2 * k + 1];
        double width = zp - zm;
        if (width > 0.0) {
            grad[k] = (fp - fm) / width;
        } else {
            grad[k] = 0.0;
        }
        (void)fc;
    }
    return grad;
}

// Steihaug truncated CG for min g.s + 0.5 s^T B s subject to ||s|| <= radius.
std::vector<double> steihaug(const std::vector<double>& grad, const std::vector<std::vector<double>>& B,
                             double radius) {
    const std::size_t n = grad.size();
    std::vector<double> s(n, 0.0), r(n), d(n), bd(n);
    for (std::size_t i = 0; i < n; ++i) {
        r[i] = -grad[i];
        d[i] = r[i];
    }
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
        double t = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) t += a[i] * b[i];
        return t;
    };
    auto boundary_step = [&](const std::vector<double>& base, const std::vector<double>& dir) {
        // tau >= 0 with ||base + tau dir|| = radius
        double dd = dot(dir, dir), bd_ = dot(base, dir), bb = dot(base, base);
        double disc = bd_ * bd_ - dd * (bb - radius * radius);
        double tau = (-bd_ + std::sqrt(std::max(disc, 0.0))) / dd;
        std::vector<double> out = base;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += tau * dir[i];
        return out;
    };
    double rr = dot(r, r);
    if (rr == 0.0) return s;
    for (std::size_t iter = 0; iter < 2 * n + 4; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            bd[i] = 0.0;
            for (std::size_t j = 0; j < n; ++j) bd[i] += B[i][j] * d[j];
        }
        double dbd = dot(d, bd);
        if (dbd <= 0.0) return boundary_step(s, d);
        double alpha = rr / dbd;
        std::vector<double> s_next = s;
        for (std::size_t i = 0; i < n; ++i) s_next[i] += alpha * d[i];
        if (std::sqrt(dot(s_next, s_next)) >= radius) return boundary_step(s, d);
        s = std::move(s_next);
        for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * bd[i];
        double rr_new = dot(r, r);
        if (std::sqrt(rr_new) < 1e-12 * std::sqrt(rr) || rr_new < 1e-30) return s;
        double beta = rr_new / rr;
        rr = rr_new;
        for (std::size_t i = 0; i < n; ++i) d[i] = r[i] + beta * d[i];
    }
    return s;
}

}  // namespace

CalibrationResult estimate(const EstimationProblem& problem_in) {
    problem_in.validate();
    EstimationProblem problem = problem_in;
    if (problem.scenario.base.lambda_fixed <= 0.0)
        freeze_forward_speed(problem.scenario, problem.theta0);

    ScaledProblem sp;
    sp.problem = &problem;
    for (int i = 0; i < 6; ++i) {
        sp.scale[static_cast<std::size_t>(i)] = std::max(std::abs(problem.theta0[static_cast<std::size_t>(i)]), 1.0);
        sp.lo[static_cast<std::size_t>(i)] = 0.0;
        sp.hi[static_cast<std::size_t>(i)] =
            problem.bound_factor * problem.theta0[static_cast<std::size_t>(i)];
        sp.frozen[static_cast<std::size_t>(i)] = problem.theta0[static_cast<std::size_t>(i)];
        if (sp.hi[static_cast<std::size_t>(i)] > sp.lo[static_cast<std::size_t>(i)])
            sp.free_idx.push_back(i);
    }
    const std::size_t n = sp.free_idx.size();

    std::vector<double> z(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t i = static_cast<std::size_t>(sp.free_idx[k]);
        z[k] = problem.theta0[i] / sp.scale[i];
    }

    CalibrationResult result;
    result.theta_opt = problem.theta0;
    double fc = sp.eval(z);
    result.trace.push_back(fc);

    if (n == 0) {
        result.error = objective_J(problem.theta0, problem, &result.residuals);
        result.converged = true;
        return result;
    }

    std::vector<double> grad = fd_gradient(sp, z, fc, problem.fd_step);
    std::vector<std::vector<double>> B(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) B[i][i] = 1.0;

    double radius = 0.25;
    int small_decreases = 0;
    int iter = 0;
    bool converged = false;

    const bool trace_debug = std::getenv("CELLMIG_TR_DEBUG") != nullptr;
    while (iter < problem.max_iterations) {
        ++iter;
        std::vector<double> s = steihaug(grad, B, radius);
        std::vector<double> z_trial = z;
        for (std::size_t k = 0; k < n; ++k) z_trial[k] += s[k];
        sp.clip(z_trial);
        for (std::size_t k = 0; k < n; ++k) s[k] = z_trial[k] - z[k];

        double snorm = 0.0;
        for (double v : s) snorm += v * v;
        snorm = std::sqrt(snorm);
        if (snorm < 1e-300) {
            radius *= 0.5;
            if (radius < problem.radius_tol) { converged = true; break; }
            continue;
        }

        // predicted reduction from the quadratic model, with the clipped step
        double pred = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double bs = 0.0;
            for (std::size_t j = 0; j < n; ++j) bs += B[i][j] * s[j];
            pred -= grad[i] * s[i] + 0.5 * s[i] * bs;
        }

        double f_trial = sp.eval(z_trial);
        double ared = fc - f_trial;
        double ratio = pred > 0.0 ? ared / pred : (ared > 0.0 ? 1.0 : -1.0);
        if (trace_debug) {
            double gn = 0.0;
            for (double v : grad) gn += v * v;
            std::fprintf(stderr, "[tr] it=%d f=%.6e |g|=%.3e radius=%.3e |s|=%.3e pred=%.3e ared=%.3e\n",
                         iter, fc, std::sqrt(gn), radius, snorm, pred, ared);
        }

        if (ared > 0.0) {
            double decrease = ared;
            z = z_trial;
            fc = f_trial;
            result.trace.push_back(fc);
            std::vector<double> grad_new = fd_gradient(sp, z, fc, problem.fd_step);
            // damped SR1 update
            std::vector<double> ymb(n);
            for (std::size_t i = 0; i < n; ++i) {
                double bs = 0.0;
                for (std::size_t j = 0; j < n; ++j) bs += B[i][j] * s[j];
                ymb[i] = (grad_new[i] - grad[i]) - bs;
            }
            double ys = 0.0, ynorm = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                ys += ymb[i] * s[i];
                ynorm += ymb[i] * ymb[i];
            }
            ynorm = std::sqrt(ynorm);
            if (std::abs(ys) > 1e-8 * snorm * ynorm && ynorm > 0.0) {
                for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j) B[i][j] += ymb[i] * ymb[j] / ys;
            }
            grad = std::move(grad_new);
            small_decreases = decrease < problem.decrease_tol ? small_decreases + 1 : 0;
            if (small_decreases >= 3) { converged = true; break; }
        }

        if (ratio < 0.25) {
            radius *= 0.5;
        } else if (ratio > 0.75 && snorm >= 0.8 * radius) {
            radius *= 2.0;
        }
        if (radius < problem.radius_tol) { converged = true; break; }
    }

    result.theta_opt = sp.unscale(z);
    result.iterations = iter;
    result.converged = converged;
    result.error = objective_J(result.theta_opt, problem, &result.residuals);
    return result;
}

std::vector<SensitivityEntry> sensitivity(const ThetaVector& theta_ref, double delta_frac,
                                          const ForwardScenario& scenario_in) {
    scenario_in.validate();
    if (!(delta_frac > 0.0)) throw std::invalid_argument("sensitivity: delta fraction > 0 required");
    ForwardScenario scenario = scenario_in;
    if (scenario.base.lambda_fixed <= 0.0) freeze_forward_speed(scenario, theta_ref);

    ForwardOutput base = forward_model(theta_ref, scenario);
    if (!base.ok) throw NumericalError("sensitivity: reference forward run failed: " + base.failure);
    const double y0 = base.max_final_density;
    if (!(y0 > 0.0)) throw NumericalError("sensitivity: reference output is not positive");

    std::vector<SensitivityEntry> table;
    for (int i = 0; i < 6; ++i) {
        SensitivityEntry e;
        e.component = i;
        double ti = theta_ref[static_cast<std::size_t>(i)];
        if (ti == 0.0) {
            e.skipped = true;  // delta = 0 makes the perturbation undefined
            table.push_back(e);
            continue;
        }
        double delta = delta_frac * ti;
        ThetaVector tp = theta_ref, tm = theta_ref;
        tp[static_cast<std::size_t>(i)] = ti + delta;
        tm[static_cast<std::size_t>(i)] = std::max(ti - delta, 0.0);
        ForwardOutput rp = forward_model(tp, scenario);
        ForwardOutput rm = forward_model(tm, scenario);
        if (!rp.ok || !rm.ok) {
            e.failed = true;
            table.push_back(e);
            continue;
        }
        e.s_plus = std::abs(rp.max_final_density - y0) / y0 * ti / delta;
        e.s_minus = std::abs(rm.max_final_density - y0) / y0 * ti / delta;
        table.push_back(e);
    }
    return table;
}

}  // namespace cellmig
