#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "volfit/synthetic.hpp"

namespace volfit::cli {

/// Reproducibility record written next to every command's primary output as
/// <output>.manifest.json (temp file + rename, like all writers here).
struct RunManifest {
    std::string command;
    std::string config_path;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    std::string version;
    double duration_seconds = 0.0;

    std::string to_json() const;
};

/// Stamps the build version, appends the duration measured since `started`,
/// and writes the manifest next to the first output.
class ManifestWriter {
public:
    explicit ManifestWriter(std::string command);
    RunManifest& manifest() { return manifest_; }
    void write();

private:
    RunManifest manifest_;
    std::chrono::steady_clock::time_point started_;
};

/// Evaluation lattice of a surface export: nk log-moneyness points crossed
/// with nt maturities, both ends inclusive.
struct GridSpec {
    double k_min = 0.0;
    double k_max = 0.0;
    int nk = 0;
    double tau_min = 0.0;
    double tau_max = 0.0;
    int nt = 0;

    std::vector<double> k_points() const;
    std::vector<double> tau_points() const;
};

/// Parses "kmin:kmax:nk,tmin:tmax:nt", e.g. "-0.5:0.5:101,0.1:2:25".
/// Requires kmin < kmax, 0 < tmin < tmax and at least two points per axis
/// (one when the ends coincide is not supported; use nk or nt = 2).
GridSpec parse_grid_spec(const std::string& text);

/// Jump-diffusion parameter file: a flat JSON object whose keys are the
/// BatesParams field names; missing keys keep their defaults.
BatesParams bates_params_from_json(const std::string& text);
std::string bates_params_to_json(const BatesParams& params);

} // namespace volfit::cli
