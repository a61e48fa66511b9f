#include "cellmig/config_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cellmig {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ConfigMap ConfigMap::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_string(buf.str(), path);
}

ConfigMap ConfigMap::from_string(const std::string& text, const std::string& origin) {
    ConfigMap m;
    m.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) +
                                        ": expected 'key = value', got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": empty key");
        if (m.values_.count(key))
            throw std::invalid_argument(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                                        key + "'");
        m.values_[key] = {value, lineno};
    }
    return m;
}

bool ConfigMap::has(const std::string& key) const { return values_.count(key) != 0; }

std::string ConfigMap::get_string(const std::string& key, const std::string& def) {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    return it->second.first;
}

double ConfigMap::get_double(const std::string& key, double def) {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second.first, &pos);
        if (pos != it->second.first.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument(origin_ + ":" + std::to_string(it->second.second) + ": key '" +
                                    key + "' is not a number");
    }
}

long ConfigMap::get_long(const std::string& key, long def) {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    try {
        std::size_t pos = 0;
        long v = std::stol(it->second.first, &pos);
        if (pos != it->second.first.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument(origin_ + ":" + std::to_string(it->second.second) + ": key '" +
                                    key + "' is not an integer");
    }
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t def) {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    try {
        std::size_t pos = 0;
        unsigned long long v = std::stoull(it->second.first, &pos);
        if (pos != it->second.first.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw std::invalid_argument(origin_ + ":" + std::to_string(it->second.second) + ": key '" +
                                    key + "' is not an unsigned integer");
    }
}

bool ConfigMap::get_bool(const std::string& key, bool def) {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    const std::string& v = it->second.first;
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw std::invalid_argument(origin_ + ":" + std::to_string(it->second.second) + ": key '" + key +
                                "' is not a boolean");
}

std::vector<double> ConfigMap::get_list(const std::string& key, const std::vector<double>& def) {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    std::vector<double> out;
    std::istringstream in(it->second.first);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        cell = trim(cell);
        if (cell.empty()) continue;
        try {
            out.push_back(std::stod(cell));
        } catch (...) {
            throw std::invalid_argument(origin_ + ":" + std::to_string(it->second.second) + ": key '" +
                                        key + "' has a non-numeric list entry '" + cell + "'");
        }
    }
    return out;
}

std::vector<Vec2> ConfigMap::get_points(const std::string& key, const std::vector<Vec2>& def) {
    auto it = values_.find(key);
    if (it == values_.end()) return def;
    consumed_.insert(key);
    std::vector<Vec2> out;
    std::istringstream in(it->second.first);
    std::string pair;
    while (std::getline(in, pair, ';')) {
        pair = trim(pair);
        if (pair.empty()) continue;
        std::istringstream ps(pair);
        Vec2 p;
        if (!(ps >> p.x >> p.y))
            throw std::invalid_argument(origin_ + ":" + std::to_string(it->second.second) + ": key '" +
                                        key + "' expects 'x y; x y; ...'");
        out.push_back(p);
    }
    return out;
}

void ConfigMap::require_consumed() const {
    std::string unknown;
    for (const auto& [key, value] : values_) {
        if (!consumed_.count(key)) {
            if (!unknown.empty()) unknown += ", ";
            unknown += key;
        }
    }
    if (!unknown.empty())
        throw std::invalid_argument(origin_ + ": unknown configuration keys: " + unknown);
}

// ---------------------------------------------------------------------------
// Defaults

MacroConfig default_twopop_macro() {
    MacroConfig c;
    c.eta = 6.0;
    c.alpha = 100.0;
    c.chemo.diffusion = 45.0;
    c.chemo.kappa = 0.2;
    c.chemo.source_mode = ChemoParams::SourceMode::tumor_convolution;
    c.use_i3 = true;
    return c;
}

MicroConfig default_micro() { return MicroConfig{}; }

EstimationSettings default_estimation() {
    EstimationSettings s;
    s.forward = default_twopop_macro();
    return s;
}

// ---------------------------------------------------------------------------
// Loaders

namespace {

void load_chemo(ConfigMap& m, ChemoParams& c) {
    c.diffusion = m.get_double("chemo.diffusion", c.diffusion);
    c.kappa = m.get_double("chemo.kappa", c.kappa);
    c.theta = m.get_double("chemo.theta", c.theta);
    std::string def = c.source_mode == ChemoParams::SourceMode::linear       ? "linear"
                      : c.source_mode == ChemoParams::SourceMode::saturating ? "saturating"
                                                                             : "tumor";
    std::string mode = m.get_string("chemo.source", def);
    if (mode == "linear") c.source_mode = ChemoParams::SourceMode::linear;
    else if (mode == "saturating") c.source_mode = ChemoParams::SourceMode::saturating;
    else if (mode == "tumor") c.source_mode = ChemoParams::SourceMode::tumor_convolution;
    else throw std::invalid_argument("chemo.source must be linear, saturating or tumor");
    c.a_lin = m.get_double("chemo.a_lin", c.a_lin);
    c.alpha1 = m.get_double("chemo.alpha1", c.alpha1);
    c.alpha2 = m.get_double("chemo.alpha2", c.alpha2);
}

void load_kernels(ConfigMap& m, KernelParams& k) {
    k.beta = m.get_double("kernels.beta", k.beta);
    k.varsigma = m.get_double("kernels.varsigma", k.varsigma);
    k.w_rep = m.get_double("kernels.w_rep", k.w_rep);
    k.w_adh = m.get_double("kernels.w_adh", k.w_adh);
    k.r_rep = m.get_double("kernels.r_rep", k.r_rep);
    k.r_adh = m.get_double("kernels.r_adh", k.r_adh);
    k.w_rep_tum = m.get_double("kernels.w_rep_tum", k.w_rep_tum);
    k.r_rep_tum = m.get_double("kernels.r_rep_tum", k.r_rep_tum);
    k.r_align = m.get_double("kernels.r_align", k.r_align);
    k.align_cutoff = m.get_bool("kernels.align_cutoff", k.align_cutoff);
}

void load_scheme(ConfigMap& m, HyperbolicOptions& h, double& blowup_factor) {
    std::string lim = m.get_string("scheme.limiter", h.limiter == Limiter::minmod ? "minmod" : "upwind");
    if (lim == "minmod") h.limiter = Limiter::minmod;
    else if (lim == "upwind") h.limiter = Limiter::upwind;
    else throw std::invalid_argument("scheme.limiter must be upwind or minmod");
    h.a_weight = m.get_double("scheme.a_weight", h.a_weight);
    h.c_safe = m.get_double("scheme.c_safe", h.c_safe);
    h.lambda_min = m.get_double("scheme.lambda_min", h.lambda_min);
    h.clip_abort_fraction = m.get_double("scheme.clip_abort", h.clip_abort_fraction);
    blowup_factor = m.get_double("scheme.blowup_factor", blowup_factor);
}

void load_tumors(ConfigMap& m, TumorLayout& t) {
    t.centers = m.get_points("tumors.centers", t.centers);
    t.radius = m.get_double("tumors.radius", t.radius);
    t.xi = m.get_double("tumors.xi", t.xi);
    t.h_tum = m.get_double("tumors.h_tum", t.h_tum);
}

void load_interactions(ConfigMap& m, MacroConfig& c) {
    std::string def;
    if (c.use_i1) def += "i1";
    if (c.use_i2) def += def.empty() ? "i2" : ",i2";
    if (c.use_i3) def += def.empty() ? "i3" : ",i3";
    if (def.empty()) def = "none";
    std::string s = m.get_string("interactions", def);
    c.use_i1 = c.use_i2 = c.use_i3 = false;
    if (s == "none" || s.empty()) return;
    std::istringstream in(s);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        tok = trim(tok);
        if (tok == "i1") c.use_i1 = true;
        else if (tok == "i2") c.use_i2 = true;
        else if (tok == "i3") c.use_i3 = true;
        else throw std::invalid_argument("interactions entries must be i1, i2, i3 or none");
    }
}

void load_macro_body(ConfigMap& m, MacroConfig& c) {
    long n = m.get_long("grid.n", c.grid.nx);
    double length = m.get_double("grid.length", c.grid.length);
    if (n < 3) throw std::invalid_argument("grid.n >= 3 required");
    c.grid = Grid2D(length, static_cast<int>(n), static_cast<int>(n));
    c.t_final = m.get_double("t_final", c.t_final);
    c.law.epsilon = m.get_double("epsilon", c.law.epsilon);
    c.law.rho0 = m.get_double("pressure.rho0", c.law.rho0);
    c.eta = m.get_double("eta", c.eta);
    c.alpha = m.get_double("alpha", c.alpha);
    c.seed = m.get_u64("seed", c.seed);
    c.snapshot_times = m.get_list("snapshots", c.snapshot_times);
    c.bump_count = static_cast<int>(m.get_long("init.bumps", c.bump_count));
    c.bump_sigma = m.get_double("init.sigma", c.bump_sigma);
    load_interactions(m, c);
    load_chemo(m, c.chemo);
    load_kernels(m, c.kernels);
    load_scheme(m, c.hyp, c.blowup_factor);
}

}  // namespace

MacroSetup load_macro_config(ConfigMap& m, bool twopop) {
    MacroSetup s;
    s.twopop = twopop;
    s.cfg = twopop ? default_twopop_macro() : MacroConfig{};
    std::string expect = twopop ? "macro2pop" : "macro";
    std::string model = m.get_string("model", expect);
    if (model != expect)
        throw std::invalid_argument("config declares model '" + model + "' but command expects '" +
                                    expect + "'");
    load_macro_body(m, s.cfg);
    if (twopop) load_tumors(m, s.tumors);
    m.require_consumed();
    s.cfg.validate();
    if (twopop) s.tumors.validate(s.cfg.grid);
    return s;
}

MicroSetup load_micro_config(ConfigMap& m) {
    MicroSetup s;
    s.cfg = default_micro();
    std::string model = m.get_string("model", "micro");
    if (model != "micro")
        throw std::invalid_argument("config declares model '" + model + "' but command expects 'micro'");
    MicroConfig& c = s.cfg;
    long n = m.get_long("grid.n", c.grid.nx);
    double length = m.get_double("grid.length", c.grid.length);
    if (n < 3) throw std::invalid_argument("grid.n >= 3 required");
    c.grid = Grid2D(length, static_cast<int>(n), static_cast<int>(n));
    c.n_agents = static_cast<int>(m.get_long("agents.n", c.n_agents));
    c.eta = m.get_double("eta", c.eta);
    c.alpha = m.get_double("alpha", c.alpha);
    c.dt = m.get_double("dt", c.dt);
    c.t_final = m.get_double("t_final", c.t_final);
    c.seed = m.get_u64("seed", c.seed);
    c.snapshot_times = m.get_list("snapshots", c.snapshot_times);
    load_chemo(m, c.chemo);
    load_kernels(m, c.kernels);
    load_tumors(m, s.tumors);
    m.require_consumed();
    c.validate();
    s.tumors.validate(c.grid);
    return s;
}

EstimationSettings load_estimation_config(ConfigMap& m) {
    EstimationSettings s = default_estimation();
    std::string model = m.get_string("model", "estimate");
    if (model != "estimate")
        throw std::invalid_argument("config declares model '" + model +
                                    "' but command expects 'estimate'");
    s.theta0[kThetaEta] = m.get_double("theta0.eta", s.theta0[kThetaEta]);
    s.theta0[kThetaWrep] = m.get_double("theta0.w_rep", s.theta0[kThetaWrep]);
    s.theta0[kThetaWadh] = m.get_double("theta0.w_adh", s.theta0[kThetaWadh]);
    s.theta0[kThetaBeta] = m.get_double("theta0.beta", s.theta0[kThetaBeta]);
    s.theta0[kThetaWrepTum] = m.get_double("theta0.w_rep_tum", s.theta0[kThetaWrepTum]);
    s.theta0[kThetaBandwidth] = m.get_double("theta0.h", s.theta0[kThetaBandwidth]);
    s.bound_factor = m.get_double("bound_factor", s.bound_factor);
    s.lambda2 = m.get_double("lambda2", s.lambda2);
    s.data_times = m.get_list("data_times", s.data_times);
    s.cell_radius = m.get_double("cell_radius", s.cell_radius);
    s.max_iterations = static_cast<int>(m.get_long("max_iterations", s.max_iterations));
    s.seed = m.get_u64("seed", s.seed);
    load_macro_body(m, s.forward);
    load_tumors(m, s.tumors);
    m.require_consumed();
    s.forward.validate();
    s.tumors.validate(s.forward.grid);
    return s;
}

// ---------------------------------------------------------------------------
// Serializers (canonical form: fixed key order, %.17g values)

namespace {

void emit_chemo(std::ostringstream& o, const ChemoParams& c) {
    o << "chemo.diffusion = " << fmt(c.diffusion) << "  # D, (length^2 / time)\n";
    o << "chemo.kappa = " << fmt(c.kappa) << "  # degradation rate (1 / time)\n";
    o << "chemo.theta = " << fmt(c.theta) << "  # theta-method parameter\n";
    o << "chemo.source = "
      << (c.source_mode == ChemoParams::SourceMode::linear       ? "linear"
          : c.source_mode == ChemoParams::SourceMode::saturating ? "saturating"
                                                                 : "tumor")
      << "\n";
    o << "chemo.a_lin = " << fmt(c.a_lin) << "\n";
    o << "chemo.alpha1 = " << fmt(c.alpha1) << "\n";
    o << "chemo.alpha2 = " << fmt(c.alpha2) << "\n";
}

void emit_kernels(std::ostringstream& o, const KernelParams& k) {
    o << "kernels.beta = " << fmt(k.beta) << "  # alignment strength\n";
    o << "kernels.varsigma = " << fmt(k.varsigma) << "  # Cucker-Smale exponent\n";
    o << "kernels.w_rep = " << fmt(k.w_rep) << "\n";
    o << "kernels.w_adh = " << fmt(k.w_adh) << "\n";
    o << "kernels.r_rep = " << fmt(k.r_rep) << "  # radii in domain lengths\n";
    o << "kernels.r_adh = " << fmt(k.r_adh) << "\n";
    o << "kernels.w_rep_tum = " << fmt(k.w_rep_tum) << "\n";
    o << "kernels.r_rep_tum = " << fmt(k.r_rep_tum) << "\n";
    o << "kernels.r_align = " << fmt(k.r_align) << "\n";
    o << "kernels.align_cutoff = " << (k.align_cutoff ? "true" : "false") << "\n";
}

void emit_scheme(std::ostringstream& o, const HyperbolicOptions& h, double blowup_factor) {
    o << "scheme.limiter = " << (h.limiter == Limiter::minmod ? "minmod" : "upwind") << "\n";
    o << "scheme.a_weight = " << fmt(h.a_weight) << "  # Maxwellian weight, a < 1/4\n";
    o << "scheme.c_safe = " << fmt(h.c_safe) << "\n";
    o << "scheme.lambda_min = " << fmt(h.lambda_min) << "\n";
    o << "scheme.blowup_factor = " << fmt(blowup_factor) << "\n";
    o << "scheme.clip_abort = " << fmt(h.clip_abort_fraction) << "\n";
}

void emit_tumors(std::ostringstream& o, const TumorLayout& t) {
    o << "tumors.centers = ";
    for (std::size_t i = 0; i < t.centers.size(); ++i) {
        if (i) o << "; ";
        o << fmt(t.centers[i].x) << " " << fmt(t.centers[i].y);
    }
    o << "\n";
    o << "tumors.radius = " << fmt(t.radius) << "\n";
    o << "tumors.xi = " << fmt(t.xi) << "  # chemoattractant production rate\n";
    o << "tumors.h_tum = " << fmt(t.h_tum) << "  # KDE bandwidth factor for zeta\n";
}

void emit_interactions(std::ostringstream& o, const MacroConfig& c) {
    std::string s;
    if (c.use_i1) s += "i1";
    if (c.use_i2) s += s.empty() ? "i2" : ",i2";
    if (c.use_i3) s += s.empty() ? "i3" : ",i3";
    if (s.empty()) s = "none";
    o << "interactions = " << s << "\n";
}

void emit_list(std::ostringstream& o, const std::string& key, const std::vector<double>& v) {
    o << key << " = ";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) o << ",";
        o << fmt(v[i]);
    }
    o << "\n";
}

void emit_macro_body(std::ostringstream& o, const MacroConfig& c) {
    o << "grid.n = " << c.grid.nx << "\n";
    o << "grid.length = " << fmt(c.grid.length) << "  # nondimensional domain side\n";
    o << "t_final = " << fmt(c.t_final) << "\n";
    o << "epsilon = " << fmt(c.law.epsilon) << "  # 0 pressureless, 1 pressure model\n";
    o << "pressure.rho0 = " << fmt(c.law.rho0) << "  # activation threshold\n";
    o << "eta = " << fmt(c.eta) << "  # chemotactic sensitivity\n";
    o << "alpha = " << fmt(c.alpha) << "  # damping coefficient\n";
    o << "seed = " << c.seed << "\n";
    emit_list(o, "snapshots", c.snapshot_times);
    o << "init.bumps = " << c.bump_count << "\n";
    o << "init.sigma = " << fmt(c.bump_sigma) << "  # bump width (cell radius)\n";
    emit_interactions(o, c);
    emit_chemo(o, c.chemo);
    emit_kernels(o, c.kernels);
    emit_scheme(o, c.hyp, c.blowup_factor);
}

}  // namespace

std::string serialize_macro_config(const MacroSetup& s) {
    std::ostringstream o;
    o << "# cellmig configuration (all quantities nondimensional)\n";
    o << "model = " << (s.twopop ? "macro2pop" : "macro") << "\n";
    emit_macro_body(o, s.cfg);
    if (s.twopop) emit_tumors(o, s.tumors);
    return o.str();
}

std::string serialize_micro_config(const MicroSetup& s) {
    std::ostringstream o;
    o << "# cellmig configuration (all quantities nondimensional)\n";
    o << "model = micro\n";
    const MicroConfig& c = s.cfg;
    o << "grid.n = " << c.grid.nx << "\n";
    o << "grid.length = " << fmt(c.grid.length) << "  # nondimensional domain side\n";
    o << "agents.n = " << c.n_agents << "\n";
    o << "eta = " << fmt(c.eta) << "  # chemotactic sensitivity\n";
    o << "alpha = " << fmt(c.alpha) << "  # damping coefficient\n";
    o << "dt = " << fmt(c.dt) << "\n";
    o << "t_final = " << fmt(c.t_final) << "\n";
    o << "seed = " << c.seed << "\n";
    emit_list(o, "snapshots", c.snapshot_times);
    emit_chemo(o, c.chemo);
    emit_kernels(o, c.kernels);
    emit_tumors(o, s.tumors);
    return o.str();
}

std::string serialize_estimation_config(const EstimationSettings& s) {
    std::ostringstream o;
    o << "# cellmig configuration (all quantities nondimensional)\n";
    o << "model = estimate\n";
    o << "theta0.eta = " << fmt(s.theta0[kThetaEta]) << "\n";
    o << "theta0.w_rep = " << fmt(s.theta0[kThetaWrep]) << "\n";
    o << "theta0.w_adh = " << fmt(s.theta0[kThetaWadh]) << "\n";
    o << "theta0.beta = " << fmt(s.theta0[kThetaBeta]) << "\n";
    o << "theta0.w_rep_tum = " << fmt(s.theta0[kThetaWrepTum]) << "\n";
    o << "theta0.h = " << fmt(s.theta0[kThetaBandwidth]) << "  # KDE bandwidth factor\n";
    o << "bound_factor = " << fmt(s.bound_factor) << "  # admissible set [0, factor * theta0]\n";
    o << "lambda2 = " << fmt(s.lambda2) << "  # Tikhonov weight\n";
    emit_list(o, "data_times", s.data_times);
    o << "cell_radius = " << fmt(s.cell_radius) << "  # immune-cell radius for the KDE\n";
    o << "max_iterations = " << s.max_iterations << "\n";
    emit_macro_body(o, s.forward);
    emit_tumors(o, s.tumors);
    return o.str();
}

std::string config_digest(const std::string& canonical_text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---------------------------------------------------------------------------
// Series and manifest output

std::vector<SnapshotFileEntry> write_series(const std::string& outdir, const SnapshotSeries& series) {
    std::vector<SnapshotFileEntry> entries;
    for (std::size_t k = 0; k < series.times.size(); ++k) {
        SnapshotFileEntry e;
        e.index = static_cast<int>(k);
        e.requested_time = series.requested[k];
        e.time = series.times[k];
        char suffix[16];
        std::snprintf(suffix, sizeof suffix, "%04d.csv", e.index);
        const std::pair<std::string, const ScalarField*> fields[] = {
            {"rho", &series.states[k].rho},
            {"m1", &series.states[k].m1},
            {"m2", &series.states[k].m2},
            {"phi", &series.phis[k]},
        };
        for (auto& [name, field] : fields) {
            std::string fname = name + std::string("_") + suffix;
            write_field_csv(outdir + "/" + fname, *field, series.times[k]);
            e.files[name] = fname;
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_manifest(const std::string& path, const std::string& command, const std::string& digest,
                    std::uint64_t seed, const std::string& started, const std::string& finished,
                    const std::vector<SnapshotFileEntry>& snapshots, const RunDiagnostics* diag,
                    const std::vector<std::string>& artifacts) {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config_digest"] = digest;
    j["seed"] = seed;
    j["started_utc"] = started;
    j["finished_utc"] = finished;
    nlohmann::ordered_json snaps = nlohmann::ordered_json::array();
    for (const auto& e : snapshots) {
        nlohmann::ordered_json s;
        s["index"] = e.index;
        s["requested_time"] = e.requested_time;
        s["time"] = e.time;
        s["files"] = e.files;
        snaps.push_back(s);
    }
    j["snapshots"] = snaps;
    if (diag) {
        nlohmann::ordered_json d;
        d["blowup"] = diag->blowup;
        if (diag->blowup) d["blowup_time"] = diag->blowup_time;
        d["clipped_mass_total"] = diag->clipped_mass_total;
        d["steps"] = diag->steps;
        d["lambda_min"] = diag->lambda_min;
        d["lambda_max"] = diag->lambda_max;
        d["dt_min"] = diag->dt_min;
        d["dt_max"] = diag->dt_max;
        d["mass_initial"] = diag->mass_initial;
        d["mass_final"] = diag->mass_final;
        j["diagnostics"] = d;
    }
    j["artifacts"] = artifacts;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_manifest: cannot open " + path);
    out << j.dump(2) << "\n";
    if (!out) throw std::runtime_error("write_manifest: write failed for " + path);
}

std::string iso_timestamp_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace cellmig
