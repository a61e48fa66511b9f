#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "cellmig/config_io.hpp"
#include "cellmig/errors.hpp"
#include "cellmig/estimation.hpp"
#include "cellmig/micro.hpp"
#include "cellmig/models.hpp"
#include "cellmig/plot.hpp"

namespace fs = std::filesystem;
using namespace cellmig;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBlowup = 2;
constexpr int kExitValidation = 3;
constexpr int kExitNumerical = 4;

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> snapshots;
    std::optional<std::string> limiter;
    std::optional<int> epsilon;
    std::optional<std::string> interactions;
};

ConfigMap open_config(const std::string& path) {
    if (path.empty()) return ConfigMap::from_string("", "<empty>");
    return ConfigMap::from_file(path);
}

std::vector<double> parse_time_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        if (!cell.empty()) out.push_back(std::stod(cell));
    }
    return out;
}

void apply_macro_overrides(MacroConfig& cfg, const CommonFlags& flags) {
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.snapshots) cfg.snapshot_times = parse_time_list(*flags.snapshots);
    if (flags.limiter) {
        if (*flags.limiter == "upwind") cfg.hyp.limiter = Limiter::upwind;
        else if (*flags.limiter == "minmod") cfg.hyp.limiter = Limiter::minmod;
        else throw std::invalid_argument("--limiter must be upwind or minmod");
    }
    if (flags.epsilon) {
        if (*flags.epsilon != 0 && *flags.epsilon != 1)
            throw std::invalid_argument("--epsilon must be 0 or 1");
        cfg.law.epsilon = *flags.epsilon;
    }
    if (flags.interactions) {
        cfg.use_i1 = cfg.use_i2 = cfg.use_i3 = false;
        std::istringstream in(*flags.interactions);
        std::string tok;
        while (std::getline(in, tok, ',')) {
            if (tok == "i1") cfg.use_i1 = true;
            else if (tok == "i2") cfg.use_i2 = true;
            else if (tok == "i3") cfg.use_i3 = true;
            else if (tok == "none" || tok.empty()) continue;
            else throw std::invalid_argument("--interactions entries must be i1, i2, i3 or none");
        }
    }
    cfg.validate();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

int cmd_simulate_macro(const CommonFlags& flags, bool twopop) {
    ConfigMap m = open_config(flags.config_path);
    MacroSetup setup = load_macro_config(m, twopop);
    apply_macro_overrides(setup.cfg, flags);
    std::string canonical = serialize_macro_config(setup);
    std::string digest = config_digest(canonical);

    std::string started = iso_timestamp_now();
    SnapshotSeries series;
    if (twopop) {
        ScalarField zeta = tumor_density_kde(setup.cfg.grid, setup.tumors);
        series = run_macro_twopop(setup.cfg, setup.tumors, zeta);
    } else {
        series = run_macro(setup.cfg);
    }
    std::string finished = iso_timestamp_now();

    fs::create_directories(flags.out_dir);
    write_text(flags.out_dir + "/config.txt", canonical);
    auto entries = write_series(flags.out_dir, series);
    std::vector<std::string> artifacts{"config.txt"};
    for (const auto& e : entries)
        for (const auto& [name, file] : e.files) artifacts.push_back(file);
    write_manifest(flags.out_dir + "/manifest.json",
                   twopop ? "simulate macro2pop" : "simulate macro", digest, setup.cfg.seed, started,
                   finished, entries, &series.diag, artifacts);
    if (series.diag.blowup) {
        std::fprintf(stderr, "run terminated by blow-up at t = %.6g\n", series.diag.blowup_time);
        return kExitBlowup;
    }
    return kExitOk;
}

int run_micro_command(const CommonFlags& flags, const char* command, bool write_phi_fields) {
    ConfigMap m = open_config(flags.config_path);
    MicroSetup setup = load_micro_config(m);
    if (flags.seed) setup.cfg.seed = *flags.seed;
    if (flags.snapshots) setup.cfg.snapshot_times = parse_time_list(*flags.snapshots);
    setup.cfg.validate();
    std::string canonical = serialize_micro_config(setup);
    std::string digest = config_digest(canonical);

    std::string started = iso_timestamp_now();
    MicroTrajectory tr = run_micro(setup.cfg, setup.tumors);
    std::string finished = iso_timestamp_now();

    fs::create_directories(flags.out_dir);
    write_text(flags.out_dir + "/config.txt", canonical);
    write_trajectories_csv(flags.out_dir + "/trajectories.csv", tr);
    write_tumor_layout(flags.out_dir + "/tumors.txt", setup.tumors);
    std::vector<std::string> artifacts{"config.txt", "trajectories.csv", "tumors.txt"};
    std::vector<SnapshotFileEntry> entries;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        SnapshotFileEntry e;
        e.index = static_cast<int>(k);
        e.requested_time = tr.times[k];
        e.time = tr.times[k];
        if (write_phi_fields) {
            char name[24];
            std::snprintf(name, sizeof name, "phi_%04d.csv", e.index);
            write_field_csv(flags.out_dir + "/" + name, tr.phis[k], tr.times[k]);
            e.files["phi"] = name;
            artifacts.push_back(name);
        }
        entries.push_back(std::move(e));
    }
    write_manifest(flags.out_dir + "/manifest.json", command, digest, setup.cfg.seed, started, finished,
                   entries, nullptr, artifacts);
    return kExitOk;
}

/// Assemble the forward scenario from an estimation config plus a synthetic
/// data directory (trajectories.csv + tumors.txt).
ForwardScenario build_scenario(EstimationSettings& settings, const std::string& data_dir) {
    std::string traj_path = data_dir + "/trajectories.csv";
    if (!fs::exists(traj_path)) throw std::invalid_argument("data file missing: " + traj_path);
    MicroTrajectory tr = read_trajectories_csv(traj_path);
    if (fs::exists(data_dir + "/tumors.txt"))
        settings.tumors = read_tumor_layout(data_dir + "/tumors.txt");

    auto positions_at = [&](double t) -> const std::vector<Vec2>& {
        for (std::size_t k = 0; k < tr.times.size(); ++k)
            if (std::abs(tr.times[k] - t) <= 1e-9 + 1e-9 * std::abs(t)) return tr.positions[k];
        throw std::invalid_argument("trajectory data has no snapshot at t = " + std::to_string(t));
    };

    ForwardScenario sc;
    sc.base = settings.forward;
    sc.layout = settings.tumors;
    sc.zeta = tumor_density_kde(settings.forward.grid, settings.tumors);
    sc.data_times = settings.data_times;
    sc.trajectory_mode = true;
    sc.cell_radius = settings.cell_radius;
    sc.initial_positions = positions_at(0.0);
    for (double t : settings.data_times) sc.data_positions.push_back(positions_at(t));
    sc.validate();
    return sc;
}

nlohmann::ordered_json theta_json(const ThetaVector& th) {
    return {{"eta", th[kThetaEta]},         {"w_rep", th[kThetaWrep]},
            {"w_adh", th[kThetaWadh]},      {"beta", th[kThetaBeta]},
            {"w_rep_tum", th[kThetaWrepTum]}, {"h", th[kThetaBandwidth]}};
}

int cmd_estimate(const CommonFlags& flags, const std::string& data_dir) {
    ConfigMap m = open_config(flags.config_path);
    EstimationSettings settings = load_estimation_config(m);
    if (flags.seed) settings.seed = *flags.seed;

    ForwardScenario scenario = build_scenario(settings, data_dir);
    EstimationProblem problem;
    problem.theta0 = settings.theta0;
    problem.bound_factor = settings.bound_factor;
    problem.lambda2 = settings.lambda2;
    problem.max_iterations = settings.max_iterations;
    problem.scenario = std::move(scenario);

    std::string canonical = serialize_estimation_config(settings);
    std::string digest = config_digest(canonical);

    std::string started = iso_timestamp_now();
    CalibrationResult result = estimate(problem);
    std::string finished = iso_timestamp_now();

    fs::create_directories(flags.out_dir);
    write_text(flags.out_dir + "/config.txt", canonical);

    nlohmann::ordered_json report;
    report["theta0"] = theta_json(problem.theta0);
    ThetaVector hi;
    for (int i = 0; i < 6; ++i) hi[i] = problem.bound_factor * problem.theta0[i];
    report["bounds_low"] = theta_json(ThetaVector{});
    report["bounds_high"] = theta_json(hi);
    report["theta_opt"] = theta_json(result.theta_opt);
    report["E"] = result.error;
    report["iterations"] = result.iterations;
    report["converged"] = result.converged;
    report["objective_trace"] = result.trace;
    report["snapshot_residuals"] = result.residuals;
    report["data_times"] = problem.scenario.data_times;
    report["config_digest"] = digest;
    write_text(flags.out_dir + "/calibration.json", report.dump(2) + "\n");

    // best-fit density snapshots
    std::vector<std::string> artifacts{"config.txt", "calibration.json"};
    ForwardOutput best = forward_model(result.theta_opt, problem.scenario);
    std::vector<SnapshotFileEntry> entries;
    if (best.ok) {
        for (std::size_t k = 0; k < best.densities.size(); ++k) {
            char name[28];
            std::snprintf(name, sizeof name, "rho_fit_%04d.csv", static_cast<int>(k));
            write_field_csv(flags.out_dir + "/" + name, best.densities[k],
                            problem.scenario.data_times[k]);
            SnapshotFileEntry e;
            e.index = static_cast<int>(k);
            e.requested_time = problem.scenario.data_times[k];
            e.time = problem.scenario.data_times[k];
            e.files["rho_fit"] = name;
            entries.push_back(e);
            artifacts.push_back(name);
        }
    }
    write_manifest(flags.out_dir + "/manifest.json", "estimate", digest, settings.seed, started,
                   finished, entries, nullptr, artifacts);
    std::printf("E = %.6g after %d iterations (%s)\n", result.error, result.iterations,
                result.converged ? "converged" : "not converged");
    return kExitOk;
}

int cmd_sensitivity(const CommonFlags& flags, const std::string& data_dir, double delta_frac) {
    ConfigMap m = open_config(flags.config_path);
    EstimationSettings settings = load_estimation_config(m);
    if (flags.seed) settings.seed = *flags.seed;
    ForwardScenario scenario = build_scenario(settings, data_dir);

    std::string canonical = serialize_estimation_config(settings);
    std::string digest = config_digest(canonical);

    std::string started = iso_timestamp_now();
    std::vector<SensitivityEntry> table = sensitivity(settings.theta0, delta_frac, scenario);
    std::string finished = iso_timestamp_now();

    fs::create_directories(flags.out_dir);
    write_text(flags.out_dir + "/config.txt", canonical);

    static const char* names[6] = {"eta", "w_rep", "w_adh", "beta", "w_rep_tum", "h"};
    nlohmann::ordered_json j;
    j["delta_fraction"] = delta_frac;
    j["theta_ref"] = theta_json(settings.theta0);
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    std::ostringstream txt;
    txt << "# sensitivity of max final density, delta = " << delta_frac * 100 << "% of theta_i\n";
    for (const auto& e : table) {
        nlohmann::ordered_json row;
        row["parameter"] = names[e.component];
        if (e.skipped) {
            row["skipped"] = "theta_i = 0, perturbation undefined";
            txt << names[e.component] << ": skipped (theta_i = 0)\n";
        } else if (e.failed) {
            row["failed"] = "forward run failed";
            txt << names[e.component] << ": forward run failed\n";
        } else {
            row["S_plus"] = e.s_plus;
            row["S_minus"] = e.s_minus;
            txt << names[e.component] << " + delta: " << e.s_plus << "\n";
            txt << names[e.component] << " - delta: " << e.s_minus << "\n";
        }
        rows.push_back(row);
    }
    j["table"] = rows;
    j["config_digest"] = digest;
    write_text(flags.out_dir + "/sensitivity.json", j.dump(2) + "\n");
    write_text(flags.out_dir + "/sensitivity.txt", txt.str());
    write_manifest(flags.out_dir + "/manifest.json", "sensitivity", digest, settings.seed, started,
                   finished, {}, nullptr, {"config.txt", "sensitivity.json", "sensitivity.txt"});
    std::printf("%s", txt.str().c_str());
    return kExitOk;
}

int cmd_plot(const std::vector<std::string>& snapshot_files, const std::string& style,
             const std::string& out_dir, const std::string& trajectories, double radius) {
    fs::create_directories(out_dir);
    std::optional<MicroTrajectory> tr;
    if (!trajectories.empty()) tr = read_trajectories_csv(trajectories);
    for (const std::string& path : snapshot_files) {
        double t = 0.0;
        ScalarField field = read_field_csv(path, &t);
        Image img(1, 1);
        if (style == "heatmap") {
            img = render_heatmap(field);
        } else if (style == "quiver") {
            std::string m1_path = path, m2_path = path;
            std::size_t pos = m1_path.rfind("rho_");
            if (pos == std::string::npos)
                throw std::invalid_argument("quiver style expects rho_*.csv snapshots");
            m1_path.replace(pos, 4, "m1_");
            m2_path.replace(pos, 4, "m2_");
            ScalarField m1 = read_field_csv(m1_path);
            ScalarField m2 = read_field_csv(m2_path);
            if (!(m1.grid == field.grid) || !(m2.grid == field.grid))
                throw std::invalid_argument("quiver overlay grids do not match the snapshot");
            VectorField mom(field.grid);
            mom.comp1 = m1.values;
            mom.comp2 = m2.values;
            img = render_quiver_overlay(field, mom);
        } else if (style == "agents") {
            if (!tr) throw std::invalid_argument("agents style needs --trajectories");
            std::size_t best = 0;
            for (std::size_t k = 1; k < tr->times.size(); ++k)
                if (std::abs(tr->times[k] - t) < std::abs(tr->times[best] - t)) best = k;
            img = render_agents_overlay(field, tr->positions[best], radius);
        } else {
            throw std::invalid_argument("--style must be heatmap, quiver or agents");
        }
        std::string base = fs::path(path).stem().string() + ".png";
        img.write_png(out_dir + "/" + base);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cellmig: nonlocal Euler chemotaxis solvers, hybrid agent model and cross-scale calibration"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string kind, data_dir, style = "heatmap", trajectories;
    std::vector<std::string> snapshot_files;
    double delta_frac = 0.05, agent_radius = 0.02;

    auto add_common = [&](CLI::App* cmd, bool scheme_flags) {
        cmd->add_option("--config", flags.config_path, "configuration file (key = value)");
        cmd->add_option("--out", flags.out_dir, "output directory")->required();
        cmd->add_option("--seed", [&flags](const CLI::results_t& res) {
            flags.seed = std::stoull(res[0]);
            return true;
        }, "RNG seed override");
        if (scheme_flags) {
            cmd->add_option("--snapshots", [&flags](const CLI::results_t& res) {
                flags.snapshots = res[0];
                return true;
            }, "comma-separated snapshot times");
            cmd->add_option("--limiter", [&flags](const CLI::results_t& res) {
                flags.limiter = res[0];
                return true;
            }, "upwind | minmod");
            cmd->add_option("--epsilon", [&flags](const CLI::results_t& res) {
                flags.epsilon = std::stoi(res[0]);
                return true;
            }, "0 (pressureless) | 1 (pressure model)");
            cmd->add_option("--interactions", [&flags](const CLI::results_t& res) {
                flags.interactions = res[0];
                return true;
            }, "comma subset of i1,i2,i3 or none");
        }
    };

    CLI::App* sim = app.add_subcommand("simulate", "run a model and write snapshots");
    sim->add_option("kind", kind, "macro | macro2pop | micro")->required();
    add_common(sim, true);

    CLI::App* gen = app.add_subcommand("generate-synthetic", "run the microscopic model as a synthetic-data generator");
    add_common(gen, false);

    CLI::App* est = app.add_subcommand("estimate", "calibrate the macroscopic model against synthetic data");
    est->add_option("--data", data_dir, "synthetic data directory")->required();
    add_common(est, false);

    CLI::App* sens = app.add_subcommand("sensitivity", "local sensitivity of the maximal final density");
    sens->add_option("--data", data_dir, "synthetic data directory")->required();
    sens->add_option("--delta", delta_frac, "relative perturbation (default 0.05)");
    add_common(sens, false);

    CLI::App* plot = app.add_subcommand("plot", "render snapshots as PNG images");
    plot->add_option("snapshots", snapshot_files, "snapshot CSV files")->required();
    plot->add_option("--style", style, "heatmap | quiver | agents");
    plot->add_option("--trajectories", trajectories, "trajectory CSV for agent overlays");
    plot->add_option("--radius", agent_radius, "agent circle radius");
    plot->add_option("--out", flags.out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            if (kind == "macro") return cmd_simulate_macro(flags, false);
            if (kind == "macro2pop") return cmd_simulate_macro(flags, true);
            if (kind == "micro") return run_micro_command(flags, "simulate micro", true);
            throw std::invalid_argument("simulate kind must be macro, macro2pop or micro");
        }
        if (gen->parsed()) return run_micro_command(flags, "generate-synthetic", false);
        if (est->parsed()) return cmd_estimate(flags, data_dir);
        if (sens->parsed()) return cmd_sensitivity(flags, data_dir, delta_frac);
        if (plot->parsed()) return cmd_plot(snapshot_files, style, flags.out_dir, trajectories, agent_radius);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitValidation;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitNumerical;
    }
    return kExitOk;
}
