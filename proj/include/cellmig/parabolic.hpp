#pragma once

#include <memory>

#include "cellmig/grid.hpp"

namespace cellmig {

/// Reaction-diffusion parameters for the chemoattractant equation
/// d_t phi = D Lap phi - kappa phi + g.
struct ChemoParams {
    enum class SourceMode { linear, saturating, tumor_convolution };

    double diffusion = 0.1;  // D
    double kappa = 1.0;      // degradation rate
    double theta = 0.5;      // theta-method parameter (1/2 = Crank-Nicolson)
    SourceMode source_mode = SourceMode::saturating;
    double a_lin = 1.0;      // linear production g = a rho
    double alpha1 = 30.0;    // saturating production g = a1 rho / (1 + a2 rho^2)
    double alpha2 = 0.2;

    void validate() const;
};

/// Chemoattractant production from the cell density (linear or saturating
/// mode; the tumor_convolution source is a precomputed field, not a
/// function of rho).
ScalarField g_production(const ScalarField& rho, const ChemoParams& cp);

/// Theta-method stepper for one grid. The implicit system
///   (I - theta dt (D L - kappa I)) phi^{n+1}
///     = (I + (1-theta) dt (D L - kappa I)) phi^n
///       + dt (theta s^{n+1} + (1-theta) s^n)
/// is solved directly in the cosine eigenbasis of the Neumann-mirrored
/// 5-point Laplacian (residual at machine precision, far below the 1e-10
/// relative contract). Plans are cached, so one instance per run loop.
class ParabolicSolver {
public:
    explicit ParabolicSolver(const Grid2D& grid);
    ~ParabolicSolver();
    ParabolicSolver(const ParabolicSolver&) = delete;
    ParabolicSolver& operator=(const ParabolicSolver&) = delete;

    /// When s_np1 is null the source is lagged (s^{n+1} ~ s^n).
    ScalarField step(const ScalarField& phi, const ScalarField& s_n, double dt, const ChemoParams& cp,
                     const ScalarField* s_np1 = nullptr) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-shot wrapper around ParabolicSolver::step.
ScalarField theta_step(const ScalarField& phi, const ScalarField& s_n, double dt, const ChemoParams& cp,
                       const ScalarField* s_np1 = nullptr);

}  // namespace cellmig
