#pragma once

#include <array>

#include "cellmig/grid.hpp"

namespace cellmig {

/// Isentropic-type pressure with an activation threshold: P(rho) =
/// (rho - rho0)^3 above rho0 and zero below; the epsilon switch selects the
/// pressureless (0) or pressure (1) flux.
struct PressureLaw {
    double epsilon = 0.0;
    double rho0 = 4.0;

    double value(double rho) const {
        double d = rho - rho0;
        return d > 0.0 ? d * d * d : 0.0;
    }
    double dvalue(double rho) const {
        double d = rho - rho0;
        return d > 0.0 ? 3.0 * d * d : 0.0;
    }
};

/// Conserved triple at one node.
struct State3 {
    double rho = 0.0;
    double m1 = 0.0;
    double m2 = 0.0;
};

/// Exact algebraic fluxes A1, A2 with u = m / max(rho, kRhoFloor).
void flux_A(const State3& w, const PressureLaw& law, State3& a1, State3& a2);

/// Maxwellians of the 5-velocity relaxation system:
/// M_i = a_i w + b_i1 A1 + b_i2 A2 with a_1..4 = a, a_5 = 1 - 4a and
/// b_11 = b_22 = -b_31 = -b_42 = 1/(2 lambda).
std::array<State3, 5> maxwellians(const State3& w, const PressureLaw& law, double lambda, double a);

/// CFL time step 0.9 dx / lambda.
double cfl_dt(double lambda, double dx);

/// minmod limiter max{0, min{r, 1}}; NaN maps to 0, +inf to 1.
double minmod_phi(double r);

enum class Limiter { upwind, minmod };

/// The five kinetic fields f_1..f_5, each carrying the 3 conserved
/// components; velocities are lambda*(1,0), (0,1), (-1,0), (0,-1), (0,0).
struct KineticEnsemble {
    Grid2D grid;
    double lambda = 1.0;
    double a_weight = 0.2;
    std::array<std::array<std::vector<double>, 3>, 5> f;
};

/// Projection f_i = M_i(w) at every node.
KineticEnsemble project_to_maxwellians(const ConservedState& w, const PressureLaw& law,
                                       double lambda, double a_weight);

/// Advect each kinetic field along its velocity: first-order upwind, plus
/// the second-order minmod flux-limiter correction when enabled. Wall
/// ghosts are specular: the incoming field is the reflection of its
/// opposite-velocity partner with density mirrored and the normal momentum
/// component negated, realizing u.n = 0 and a zero normal density gradient.
void transport_step(KineticEnsemble& ens, double dt, Limiter limiter);

/// Summation w = sum_i f_i.
ConservedState collapse(const KineticEnsemble& ens);

/// Explicit source F(w) = (0, (1-eps) rho I1 + eta rho dphi/dx1 - alpha rho u1,
/// (1-eps) rho I2 + eta rho dphi/dx2 - alpha rho u2); the caller multiplies
/// by dt. Returned as a vector field holding the two momentum rows.
VectorField source_eval(const ConservedState& w, const ScalarField& phi, const VectorField& interaction,
                        double eta, double alpha, double epsilon);

struct HyperbolicOptions {
    Limiter limiter = Limiter::minmod;
    double a_weight = 0.2;
    double c_safe = 1.2;
    double lambda_min = 1.0;
    double blowup_threshold = 0.0;  // <= 0 disables detection
    double clip_abort_fraction = 1e-3;
};

struct StepReport {
    double clipped_mass = 0.0;
    double max_rho = 0.0;
    bool blowup = false;
};

/// Kinetic speed lambda = max(lambda_min, c_safe * max_nodes(|u1| + |u2| +
/// sqrt(eps * max(P'(rho), 0)))), enforcing the sub-characteristic condition.
double select_lambda(const ConservedState& w, const PressureLaw& law, const HyperbolicOptions& opt);

/// Precomputed alignment convolutions conv(gamma_D, rho) and
/// conv(gamma_D, m) of the pre-step state. The alignment term rho I1 =
/// rho conv(gamma_D, m) - m conv(gamma_D, rho) carries the stiff relaxation
/// rate conv(gamma_D, rho) (of order beta times the total mass), which the
/// step treats implicitly; at CFL-sized steps an explicit update is unstable
/// for the tabulated beta values.
struct AlignmentOperator {
    ScalarField conv_rho;
    VectorField conv_momentum;
};

/// One splitting step: project to Maxwellians, transport, collapse, then the
/// momentum source update
///   m^{n+1} = (m* + dt [(1-eps) rho (conv(gamma_D, m) + I_23) + eta rho
///             grad phi]) / (1 + dt (alpha + (1-eps) conv(gamma_D, rho))),
/// i.e. F(w^n) with the diagonal damping/alignment rate implicit, followed
/// by u.n = 0 on wall nodes and negative-density clipping. `interaction`
/// holds the non-stiff integral terms I2 + I3; `align` may be null.
StepReport hyperbolic_step(ConservedState& w, const ScalarField& phi, const VectorField& interaction,
                           const PressureLaw& law, double dt, double lambda, double eta, double alpha,
                           const HyperbolicOptions& opt, const AlignmentOperator* align = nullptr);

/// Zero the wall-normal momentum components (m1 on x-walls, m2 on y-walls).
void enforce_wall_normal_momentum(ConservedState& w);

}  // namespace cellmig
