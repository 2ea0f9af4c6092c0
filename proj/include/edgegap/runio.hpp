#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "edgegap/bulk.hpp"
#include "edgegap/decay.hpp"
#include "edgegap/fill.hpp"
#include "edgegap/flow.hpp"

namespace edgegap {

using json = nlohmann::json;

// Full run configuration; every numeric default is materialized so artifact
// headers carry the exact discretization that produced them.
struct RunConfig {
    PotentialSpec potential;
    std::optional<RationalAngle> angle;
    std::string alpha;               // used when angle is absent
    int n_convergents = 5;

    int gap_index = 0;               // gap selection by index ...
    std::optional<std::pair<double, double>> gap_explicit;  // ... or explicit (a,b)

    int cutoff = 10;
    int grid_size = 16;
    int n_bands = 12;
    double X = 0.0;                  // 0 = default 5L
    double h = 0.0;                  // 0 = default L/(16 ceil L)
    double k = 0.0;
    double t = 0.0;
    std::string boundary = "dislocated";
    int k_samples = 8;
    int t_samples = 16;
    long long nonzero_budget = 200000;
    std::optional<std::pair<double, double>> window;  // edge command override

    std::string out_dir = "out";
    bool cache = true;
    int threads = 0;

    static RunConfig from_json(const json& j);
    json to_json() const;            // canonical, fully materialized
    void validate() const;           // throws with every violated field listed
};

RunConfig load_config(const std::string& path);

// Stable content hash (hex) over the canonical serialization of a fragment.
std::string cache_key(const json& fragment);

// Atomic text write (tmp + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Serialization helpers used by both the CLI and the cache.
std::string bands_to_csv(const BandStructure& bs, const json& header);
json gaps_to_json(const std::vector<SpectralGap>& gaps);
std::string fiber_to_csv(const FiberSpectrum& fs, const json& header);
json flow_to_json(const FlowVerification& fv);
std::string crossings_to_csv(const FlowResult& fr, const json& header);
json fill_to_json(const FillReport& fr);
std::string fill_to_csv(const FillReport& fr, const json& header);

// Band-structure cache (values only; eigenvectors are never cached).
void save_bands_cache(const std::filesystem::path& dir, const std::string& key,
                      const BandStructure& bs);
std::optional<BandStructure> load_bands_cache(const std::filesystem::path& dir,
                                              const std::string& key,
                                              const PeriodicPotential& V,
                                              const RationalAngle& angle);

// Runs one named pipeline; writes artifacts under config.out_dir and prints a
// one-line summary. Returns the process exit status.
int run_command(const std::string& name, const RunConfig& config);

}  // namespace edgegap
