#pragma once

#include <cstdint>
#include <vector>

#include "cellmig/kernels.hpp"
#include "cellmig/models.hpp"
#include "cellmig/parabolic.hpp"

namespace cellmig {

struct MicroConfig {
    int n_agents = 80;
    KernelParams kernels;   // gamma parameters
    ChemoParams chemo{45.0, 0.2, 0.5, ChemoParams::SourceMode::tumor_convolution, 1.0, 30.0, 0.2};
    double eta = 6.0;
    double alpha = 100.0;   // damping coefficient
    double dt = 1e-3;
    double t_final = 1.0;
    std::uint64_t seed = 0;
    Grid2D grid{1.0, 51, 51};
    std::vector<double> snapshot_times{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

    void validate() const;
};

/// Immune-cell positions and velocities plus the fixed tumor layout.
struct AgentEnsemble {
    std::vector<Vec2> pos;
    std::vector<Vec2> vel;
};

/// Total force on agent i: mean over j != i of gamma1 + gamma2, plus the sum
/// of gamma3 over tumors, plus eta * grad phi at x_i, plus damping -alpha v_i.
Vec2 micro_force(std::size_t i, const std::vector<Vec2>& pos, const std::vector<Vec2>& vel,
                 Vec2 grad_phi_at_xi, const MicroConfig& cfg, const TumorLayout& tumors);

/// Semi-implicit Euler step: nonlinear forces explicit, damping implicit,
///   v' = (v + dt F_nodamp) / (1 + alpha dt),  x' = x + dt v',
/// followed by elastic wall reflection (position mirrored, normal velocity
/// negated).
void micro_step(AgentEnsemble& ens, const VectorField& grad_phi, const MicroConfig& cfg,
                const TumorLayout& tumors);

struct MicroTrajectory {
    std::vector<double> times;
    std::vector<std::vector<Vec2>> positions;  // one vector of agent positions per saved time
    std::vector<ScalarField> phis;
};

/// Run the hybrid model: agents stepped with micro_step, the chemoattractant
/// co-evolved with the Crank-Nicolson scheme and the tumor chi-sum source;
/// initial phi = sum_j chi(x - y_j). Initial positions are uniform draws in
/// the domain (seeded); initial velocities are zero.
MicroTrajectory run_micro(const MicroConfig& cfg, const TumorLayout& tumors);

/// As run_micro but with explicit initial positions (used by tests).
MicroTrajectory run_micro_from(const MicroConfig& cfg, const TumorLayout& tumors,
                               std::vector<Vec2> initial_positions,
                               std::vector<Vec2> initial_velocities);

/// Trajectory persistence: CSV with columns time,agent_id,x,y.
void write_trajectories_csv(const std::string& path, const MicroTrajectory& tr);
MicroTrajectory read_trajectories_csv(const std::string& path);

/// Tumor layout persistence (centers, radii, production, bandwidth factor).
void write_tumor_layout(const std::string& path, const TumorLayout& layout);
TumorLayout read_tumor_layout(const std::string& path);

}  // namespace cellmig
