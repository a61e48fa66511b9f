#include "cellmig/micro.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "cellmig/errors.hpp"

namespace cellmig {

void MicroConfig::validate() const {
    if (n_agents < 1) throw std::invalid_argument("MicroConfig: N >= 1 required");
    if (!(dt > 0.0)) throw std::invalid_argument("MicroConfig: dt_micro > 0 required");
    if (!(t_final > 0.0)) throw std::invalid_argument("MicroConfig: T > 0 required");
    if (eta < 0.0) throw std::invalid_argument("MicroConfig: eta >= 0 required");
    if (alpha < 0.0) throw std::invalid_argument("MicroConfig: alpha >= 0 required");
    if (grid.nx < 3 || grid.ny < 3) throw std::invalid_argument("MicroConfig: grid needs nx, ny >= 3");
    for (double t : snapshot_times)
        if (t < 0.0 || t > t_final)
            throw std::invalid_argument("MicroConfig: snapshot times must lie in [0, T]");
    kernels.validate();
    chemo.validate();
}

namespace {

Vec2 pair_force_sum(std::size_t i, const std::vector<Vec2>& pos, const std::vector<Vec2>& vel,
                    const MicroConfig& cfg) {
    Vec2 acc{0.0, 0.0};
    const std::size_t n = pos.size();
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        Vec2 dx = pos[i] - pos[j];
        Vec2 dv = vel[j] - vel[i];
        acc += gamma1(dv, dx, cfg.kernels);
        acc += gamma2(dx, cfg.kernels);
    }
    return acc * (1.0 / static_cast<double>(n));
}

Vec2 force_nodamp(std::size_t i, const std::vector<Vec2>& pos, const std::vector<Vec2>& vel,
                  Vec2 grad_phi, const MicroConfig& cfg, const TumorLayout& tumors) {
    Vec2 f = pair_force_sum(i, pos, vel, cfg);
    for (const Vec2& y : tumors.centers) f += gamma3(pos[i] - y, cfg.kernels);
    f += grad_phi * cfg.eta;
    return f;
}

void reflect_into_domain(Vec2& x, Vec2& v, double length) {
    for (int guard = 0; guard < 64; ++guard) {
        bool moved = false;
        if (x.x < 0.0) { x.x = -x.x; v.x = -v.x; moved = true; }
        if (x.x > length) { x.x = 2.0 * length - x.x; v.x = -v.x; moved = true; }
        if (x.y < 0.0) { x.y = -x.y; v.y = -v.y; moved = true; }
        if (x.y > length) { x.y = 2.0 * length - x.y; v.y = -v.y; moved = true; }
        if (!moved) return;
    }
    throw NumericalError("micro_step: agent escaped the domain after reflection");
}

}  // namespace

Vec2 micro_force(std::size_t i, const std::vector<Vec2>& pos, const std::vector<Vec2>& vel,
                 Vec2 grad_phi_at_xi, const MicroConfig& cfg, const TumorLayout& tumors) {
    Vec2 f = force_nodamp(i, pos, vel, grad_phi_at_xi, cfg, tumors);
    return f - vel[i] * cfg.alpha;
}

void micro_step(AgentEnsemble& ens, const VectorField& grad_phi, const MicroConfig& cfg,
                const TumorLayout& tumors) {
    const std::size_t n = ens.pos.size();
    const double dt = cfg.dt;
    const double damp = 1.0 / (1.0 + cfg.alpha * dt);
    std::vector<Vec2> new_vel(n), new_pos(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 gphi = interpolate_bilinear(grad_phi, ens.pos[i]);
        Vec2 f = force_nodamp(i, ens.pos, ens.vel, gphi, cfg, tumors);
        new_vel[i] = (ens.vel[i] + f * dt) * damp;
        new_pos[i] = ens.pos[i] + new_vel[i] * dt;
        reflect_into_domain(new_pos[i], new_vel[i], cfg.grid.length);
    }
    ens.pos = std::move(new_pos);
    ens.vel = std::move(new_vel);
}

MicroTrajectory run_micro(const MicroConfig& cfg, const TumorLayout& tumors) {
    cfg.validate();
    Rng rng(cfg.seed);
    std::vector<Vec2> pos(static_cast<std::size_t>(cfg.n_agents));
    for (auto& p : pos) {
        p.x = rng.uniform(0.0, cfg.grid.length);
        p.y = rng.uniform(0.0, cfg.grid.length);
    }
    std::vector<Vec2> vel(pos.size(), Vec2{0.0, 0.0});
    return run_micro_from(cfg, tumors, std::move(pos), std::move(vel));
}

MicroTrajectory run_micro_from(const MicroConfig& cfg, const TumorLayout& tumors,
                               std::vector<Vec2> initial_positions, std::vector<Vec2> initial_velocities) {
    cfg.validate();
    tumors.validate(cfg.grid);
    if (initial_velocities.size() != initial_positions.size())
        throw std::invalid_argument("run_micro: positions/velocities size mismatch");

    AgentEnsemble ens{std::move(initial_positions), std::move(initial_velocities)};
    ScalarField source = chi_field(cfg.grid, tumors);
    ScalarField phi = source;  // phi(x, 0) = sum_j chi(x - y_j)
    ParabolicSolver chemo_solver(cfg.grid);

    std::vector<double> requested = cfg.snapshot_times;
    std::sort(requested.begin(), requested.end());

    MicroTrajectory out;
    double t = 0.0;
    std::size_t next = 0;
    auto record = [&]() {
        out.times.push_back(t);
        out.positions.push_back(ens.pos);
        out.phis.push_back(phi);
    };
    while (next < requested.size() && requested[next] <= 0.0) { record(); ++next; }

    const long steps = static_cast<long>(std::ceil(cfg.t_final / cfg.dt - 1e-12));
    for (long s = 0; s < steps; ++s) {
        VectorField grad_phi = gradient_neumann(phi);
        micro_step(ens, grad_phi, cfg, tumors);
        // chi-sum source is constant in time, so both theta levels are exact
        phi = chemo_solver.step(phi, source, cfg.dt, cfg.chemo, &source);
        t = (s + 1) * cfg.dt;
        while (next < requested.size() && requested[next] <= t + 1e-12) { record(); ++next; }
    }
    while (next < requested.size()) { record(); ++next; }
    return out;
}

void write_trajectories_csv(const std::string& path, const MicroTrajectory& tr) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_trajectories_csv: cannot open " + path);
    std::fprintf(fp, "time,agent_id,x,y\n");
    for (std::size_t k = 0; k < tr.times.size(); ++k)
        for (std::size_t a = 0; a < tr.positions[k].size(); ++a)
            std::fprintf(fp, "%.17g,%zu,%.17g,%.17g\n", tr.times[k], a, tr.positions[k][a].x,
                         tr.positions[k][a].y);
    if (std::fclose(fp) != 0) throw std::runtime_error("write_trajectories_csv: write failed");
}

MicroTrajectory read_trajectories_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_trajectories_csv: cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("time,agent_id", 0) != 0)
        throw std::runtime_error("read_trajectories_csv: bad header in " + path);
    std::map<double, std::vector<std::pair<std::size_t, Vec2>>> by_time;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        double t, x, y;
        std::size_t id;
        if (!std::getline(ls, cell, ',')) throw std::runtime_error("read_trajectories_csv: short row");
        t = std::stod(cell);
        if (!std::getline(ls, cell, ',')) throw std::runtime_error("read_trajectories_csv: short row");
        id = static_cast<std::size_t>(std::stoul(cell));
        if (!std::getline(ls, cell, ',')) throw std::runtime_error("read_trajectories_csv: short row");
        x = std::stod(cell);
        if (!std::getline(ls, cell, ',')) throw std::runtime_error("read_trajectories_csv: short row");
        y = std::stod(cell);
        by_time[t].push_back({id, Vec2{x, y}});
    }
    MicroTrajectory tr;
    for (auto& [t, rows] : by_time) {
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        tr.times.push_back(t);
        std::vector<Vec2> pos;
        pos.reserve(rows.size());
        for (auto& [id, p] : rows) pos.push_back(p);
        tr.positions.push_back(std::move(pos));
    }
    return tr;
}

void write_tumor_layout(const std::string& path, const TumorLayout& layout) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw std::runtime_error("write_tumor_layout: cannot open " + path);
    std::fprintf(fp, "# tumor layout\n");
    std::fprintf(fp, "radius = %.17g\n", layout.radius);
    std::fprintf(fp, "xi = %.17g\n", layout.xi);
    std::fprintf(fp, "h_tum = %.17g\n", layout.h_tum);
    for (const Vec2& c : layout.centers) std::fprintf(fp, "center = %.17g %.17g\n", c.x, c.y);
    if (std::fclose(fp) != 0) throw std::runtime_error("write_tumor_layout: write failed");
}

TumorLayout read_tumor_layout(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_tumor_layout: cannot open " + path);
    TumorLayout layout;
    layout.centers.clear();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string key, eq;
        ls >> key >> eq;
        if (eq != "=") throw std::runtime_error("read_tumor_layout: expected 'key = value' in " + path);
        if (key == "radius") ls >> layout.radius;
        else if (key == "xi") ls >> layout.xi;
        else if (key == "h_tum") ls >> layout.h_tum;
        else if (key == "center") {
            Vec2 c;
            ls >> c.x >> c.y;
            layout.centers.push_back(c);
        } else throw std::runtime_error("read_tumor_layout: unknown key '" + key + "'");
        if (ls.fail()) throw std::runtime_error("read_tumor_layout: bad value for '" + key + "'");
    }
    if (layout.centers.empty()) throw std::runtime_error("read_tumor_layout: no centers in " + path);
    return layout;
}

}  // namespace cellmig
