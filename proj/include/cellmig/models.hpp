#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cellmig/hyperbolic.hpp"
#include "cellmig/kernels.hpp"
#include "cellmig/parabolic.hpp"

namespace cellmig {

/// Deterministic seeded generator; all stochastic draws (bump centers,
/// agent initial positions) flow through it as consecutive (x, y) pairs.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    std::uint64_t next_u64();
    double uniform();  // [0, 1), 53-bit mantissa
    double uniform(double lo, double hi);

private:
    std::uint64_t s_[4];
};

struct MacroConfig {
    Grid2D grid{1.0, 51, 51};
    double t_final = 1.0;
    PressureLaw law;          // epsilon = 0 pressureless by default
    KernelParams kernels;
    ChemoParams chemo;
    double eta = 0.5;
    double alpha = 0.0;
    bool use_i1 = true;
    bool use_i2 = true;
    bool use_i3 = true;       // only meaningful for two-population runs
    std::uint64_t seed = 0;
    std::vector<double> snapshot_times{0.2, 0.4, 0.6, 0.8, 1.0};
    HyperbolicOptions hyp;
    int bump_count = 200;
    double bump_sigma = 0.015;

    /// Blow-up threshold factor relative to max rho0, capped by the
    /// grid-representable density 0.1/(dx dy) (see blowup_threshold_for).
    double blowup_factor = 4.0;

    /// Snapshot convention: off records the state at the first step with
    /// t >= requested (the file-output convention); on interpolates the two
    /// bracketing steps linearly to the requested instant. The estimation
    /// pipeline switches this on so the objective varies smoothly with the
    /// parameters despite the adaptive step size.
    bool interpolate_snapshots = false;

    /// Positive value freezes the kinetic speed (and with it the whole dt
    /// schedule) instead of re-selecting lambda each step. Used by the
    /// estimation pipeline: with an adaptive schedule the objective picks up
    /// O(1e-3) non-smoothness because every parameter change reshuffles the
    /// step sizes. A step whose sub-characteristic requirement exceeds the
    /// frozen value raises NumericalError (mapped to the objective penalty).
    double lambda_fixed = 0.0;

    void validate() const;
};

/// Fixed cancer-cell layout for the two-population model.
struct TumorLayout {
    std::vector<Vec2> centers{{0.5, 0.7}, {0.3, 0.3}, {0.8, 0.5}};
    double radius = 0.05;   // R_tum
    double xi = 1000.0;     // production rate of phi
    double h_tum = 1.2;     // KDE bandwidth factor for zeta

    void validate(const Grid2D& g) const;
};

struct RunDiagnostics {
    bool blowup = false;
    double blowup_time = 0.0;
    double clipped_mass_total = 0.0;
    double lambda_min = 0.0, lambda_max = 0.0;
    double dt_min = 0.0, dt_max = 0.0;
    long steps = 0;
    double mass_initial = 0.0, mass_final = 0.0;
};

struct SnapshotSeries {
    std::vector<double> times;      // actual step times (>= requested)
    std::vector<double> requested;
    std::vector<ConservedState> states;
    std::vector<ScalarField> phis;
    RunDiagnostics diag;
};

/// Sum of N Gaussian bumps with centers drawn uniformly in the domain,
/// normalized so that total_mass = 1.
ScalarField init_density_bumps(int n_bumps, double sigma, std::uint64_t seed, const Grid2D& grid);

/// C^1 compactly supported regularization of the tumor indicator:
/// chi(z) = xi (1 - (|z|/R_tum)^2)^2 inside the tumor disk, 0 outside.
double chi_source(Vec2 z, const TumorLayout& layout);

/// Sum of chi bumps centered at the tumor positions, sampled on the grid.
ScalarField chi_field(const Grid2D& g, const TumorLayout& layout);

/// Cancer-cell density zeta: Gaussian KDE of the tumor centers with
/// bandwidth h_tum * R_tum (unit total kernel mass).
ScalarField tumor_density_kde(const Grid2D& g, const TumorLayout& layout);

/// Discrete convolution chi * zeta (chemoattractant source of the
/// two-population model; zeta is constant in time so this is computed once).
ScalarField chi_convolution(const ScalarField& zeta, const TumorLayout& layout);

/// Blow-up detection threshold: a run is declared blown up when max rho
/// reaches min(factor * max_rho0, 0.1 / (dx dy)). The cap keeps the detector
/// attainable on a fixed grid, where unit mass bounds the density by
/// ~1/(dx dy).
double blowup_threshold_for(double max_rho0, const Grid2D& g, double factor);

/// Single-population macroscopic run (epsilon selects pressureless/pressure).
SnapshotSeries run_macro(const MacroConfig& cfg);

/// Single-population run from explicit initial data.
SnapshotSeries run_macro_from(const MacroConfig& cfg, const ScalarField& rho0, const ScalarField& phi0);

/// Two-population run: interactions I1 + I2 + I3 (subset per config), chemo
/// source chi * zeta precomputed, initial phi = chi * zeta.
SnapshotSeries run_macro_twopop(const MacroConfig& cfg, const TumorLayout& layout, const ScalarField& zeta);

/// Two-population run from explicit initial data (used by the estimation
/// pipeline, where rho0 comes from a KDE of microscopic positions).
SnapshotSeries run_macro_twopop_from(const MacroConfig& cfg, const TumorLayout& layout,
                                     const ScalarField& zeta, const ScalarField& rho0,
                                     const ScalarField& phi0);

}  // namespace cellmig
