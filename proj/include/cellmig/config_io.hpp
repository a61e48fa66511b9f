#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cellmig/estimation.hpp"
#include "cellmig/micro.hpp"
#include "cellmig/models.hpp"

namespace cellmig {

/// Flat "key = value" configuration text; '#' starts a comment, blank lines
/// are ignored. Keys must be unique. After a loader has consumed its schema,
/// require_consumed() rejects anything left over by name.
class ConfigMap {
public:
    static ConfigMap from_file(const std::string& path);
    static ConfigMap from_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key, const std::string& def);
    double get_double(const std::string& key, double def);
    long get_long(const std::string& key, long def);
    std::uint64_t get_u64(const std::string& key, std::uint64_t def);
    bool get_bool(const std::string& key, bool def);
    std::vector<double> get_list(const std::string& key, const std::vector<double>& def);
    std::vector<Vec2> get_points(const std::string& key, const std::vector<Vec2>& def);

    void require_consumed() const;

private:
    std::string origin_;
    std::map<std::string, std::pair<std::string, int>> values_;  // key -> (value, line)
    std::set<std::string> consumed_;
};

struct MacroSetup {
    MacroConfig cfg;
    TumorLayout tumors;
    bool twopop = false;
};

struct MicroSetup {
    MicroConfig cfg;
    TumorLayout tumors;
};

struct EstimationSettings {
    ThetaVector theta0{6.0, 500.0, 4.0, 2000.0, 0.0, 1.2};
    double bound_factor = 50.0;
    double lambda2 = 1e-6;
    std::vector<double> data_times{0.2, 0.4, 0.6, 0.8, 1.0};
    double cell_radius = 0.02;  // immune-cell radius for the KDE
    int max_iterations = 200;
    std::uint64_t seed = 0;
    MacroConfig forward;  // two-population forward configuration
    TumorLayout tumors;
};

/// Paper-default two-population physics (Table-1 values) shared by the
/// micro model, the macro2pop model and the estimation forward runs.
MacroConfig default_twopop_macro();
MicroConfig default_micro();
EstimationSettings default_estimation();

MacroSetup load_macro_config(ConfigMap& m, bool twopop);
MicroSetup load_micro_config(ConfigMap& m);
EstimationSettings load_estimation_config(ConfigMap& m);

std::string serialize_macro_config(const MacroSetup& s);
std::string serialize_micro_config(const MicroSetup& s);
std::string serialize_estimation_config(const EstimationSettings& s);

/// FNV-1a 64-bit digest of the canonical serialization, as hex.
std::string config_digest(const std::string& canonical_text);

/// Write one snapshot series as per-field CSV files (rho/m1/m2/phi per saved
/// time) into `outdir`; returns the snapshot index entries for the manifest.
struct SnapshotFileEntry {
    int index;
    double requested_time;
    double time;
    std::map<std::string, std::string> files;  // field -> filename
};
std::vector<SnapshotFileEntry> write_series(const std::string& outdir, const SnapshotSeries& series);

/// Run manifest (JSON): command, config digest, seed, wall-clock interval,
/// snapshot index, diagnostics, artifact list.
void write_manifest(const std::string& path, const std::string& command, const std::string& digest,
                    std::uint64_t seed, const std::string& started, const std::string& finished,
                    const std::vector<SnapshotFileEntry>& snapshots, const RunDiagnostics* diag,
                    const std::vector<std::string>& artifacts);

std::string iso_timestamp_now();

}  // namespace cellmig
