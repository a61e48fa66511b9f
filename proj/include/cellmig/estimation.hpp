#pragma once

#include <array>
#include <string>
#include <vector>

#include "cellmig/micro.hpp"
#include "cellmig/models.hpp"

namespace cellmig {

/// Diagonal bandwidth diag(h sigma, h sigma); sigma is the cell radius.
struct BandwidthMatrix {
    double h = 1.2;
    double sigma = 0.02;

    double scale() const { return h * sigma; }
    void validate() const;
};

/// Gaussian kernel density estimate on the grid:
/// f(x) = 1/(m det H) sum_i K(H^-1 (x - x_i)), K(z) = exp(-z.z/2)/(2 pi).
/// With `truncate` set, kernels are cut off at 6 h sigma (error below 1e-8
/// of the kernel mass), otherwise every sample contributes at every node.
ScalarField kde(const std::vector<Vec2>& samples, const BandwidthMatrix& bw, const Grid2D& grid,
                bool truncate = false);

/// Theta components: [eta, w_rep, w_adh, beta, w_rep_tum, h].
using ThetaVector = std::array<double, 6>;

constexpr int kThetaEta = 0;
constexpr int kThetaWrep = 1;
constexpr int kThetaWadh = 2;
constexpr int kThetaBeta = 3;
constexpr int kThetaWrepTum = 4;
constexpr int kThetaBandwidth = 5;

/// Everything a forward two-population run needs except the estimated
/// parameters. In trajectory mode the reference densities (and the initial
/// density) are rebuilt from the microscopic positions with the candidate
/// bandwidth at every objective evaluation; in density mode the data and the
/// initial fields are fixed.
struct ForwardScenario {
    MacroConfig base;          // grid, T, chemo, alpha, epsilon, interactions
    TumorLayout layout;
    ScalarField zeta;
    std::vector<double> data_times;  // N_t comparison times, excluding t = 0

    bool trajectory_mode = true;
    double cell_radius = 0.02;                     // sigma of the immune-cell KDE
    std::vector<Vec2> initial_positions;           // micro positions at t = 0
    std::vector<std::vector<Vec2>> data_positions; // per data time

    std::vector<ScalarField> density_data;  // density mode: per data time
    ScalarField rho0;                       // density mode initial condition
    ScalarField phi0;                       // density mode initial chemoattractant

    void validate() const;
};

struct EstimationProblem {
    ThetaVector theta0{6.0, 500.0, 4.0, 2000.0, 0.0, 1.2};
    double bound_factor = 50.0;  // admissible set [0, bound_factor * theta0]
    double lambda2 = 1e-6;       // Tikhonov weight
    ForwardScenario scenario;

    int max_iterations = 200;
    double fd_step = 1e-2;           // relative finite-difference step
    double radius_tol = 1e-8;        // stop when trust radius drops below this
    double decrease_tol = 1e-8;      // stop after 3 accepted steps below this decrease
    double forward_penalty = 1e6;    // objective value for failed forward runs

    void validate() const;
};

struct CalibrationResult {
    ThetaVector theta_opt;
    double error = 0.0;  // E = J(theta_opt)
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace;       // regularized objective per accepted iterate
    std::vector<double> residuals;   // per-snapshot relative errors at theta_opt
};

struct ForwardOutput {
    bool ok = false;
    std::string failure;
    std::vector<ScalarField> densities;  // at the data times
    double max_final_density = 0.0;
};

/// Run the two-population model with the candidate parameters.
ForwardOutput forward_model(const ThetaVector& theta, const ForwardScenario& scenario);

/// Freeze the forward kinetic speed from an adaptive reference run at the
/// given parameters (1.5x the observed maximum). A frozen speed makes the
/// whole dt schedule, and hence the objective, smooth in theta; estimate()
/// and sensitivity() apply this automatically when it is still unset.
void freeze_forward_speed(ForwardScenario& scenario, const ThetaVector& reference_theta);

/// J(theta) = 1/N_t sum_i (||rho(t_i) - rho_data(t_i)||_2 / ||rho_data||_2)^2;
/// failed forward runs map to the penalty value.
double objective_J(const ThetaVector& theta, const EstimationProblem& problem,
                   std::vector<double>* residuals = nullptr);

/// K(theta) = J(theta) + lambda^2 ||theta - theta0||^2.
double regularized_K(const ThetaVector& theta, const EstimationProblem& problem);

/// Bound-constrained trust-region minimization of K (quadratic model from
/// central finite-difference gradients with damped SR1 curvature updates).
/// Components with theta0 = 0 have zero-width bounds and stay frozen.
CalibrationResult estimate(const EstimationProblem& problem);

struct SensitivityEntry {
    int component = 0;
    bool skipped = false;      // theta_i = 0 makes delta undefined
    bool failed = false;
    double s_plus = 0.0;
    double s_minus = 0.0;
};

/// Local sensitivity S = |Y(theta +- delta e_i) - Y(theta)| / Y(theta) *
/// theta_i / delta with delta = delta_frac * theta_i and Y the maximum
/// density at final time.
std::vector<SensitivityEntry> sensitivity(const ThetaVector& theta_ref, double delta_frac,
                                          const ForwardScenario& scenario);

}  // namespace cellmig
