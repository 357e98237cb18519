#include "cli_support.hpp"

#include <filesystem>

#include <nlohmann/json.hpp>

#include "volfit/errors.hpp"
#include "volfit/textio.hpp"

#ifndef VOLFIT_VERSION
#define VOLFIT_VERSION "unversioned"
#endif

namespace volfit::cli {

std::string RunManifest::to_json() const {
    nlohmann::json j;
    j["command"] = command;
    j["config"] = config_path;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    j["seed"] = seed;
    j["version"] = version;
    j["duration_seconds"] = duration_seconds;
    return j.dump(2) + "\n";
}

ManifestWriter::ManifestWriter(std::string command)
    : started_(std::chrono::steady_clock::now()) {
    manifest_.command = std::move(command);
    manifest_.version = VOLFIT_VERSION;
}

void ManifestWriter::write() {
    if (manifest_.outputs.empty()) return;
    manifest_.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    const std::filesystem::path target = manifest_.outputs.front() + ".manifest.json";
    write_text_file_atomic(target, manifest_.to_json());
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> points(n);
    for (int i = 0; i < n; ++i)
        points[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return points;
}

} // namespace

std::vector<double> GridSpec::k_points() const { return linspace(k_min, k_max, nk); }

std::vector<double> GridSpec::tau_points() const { return linspace(tau_min, tau_max, nt); }

GridSpec parse_grid_spec(const std::string& text) {
    const auto fail = [&text]() {
        throw InvalidInput("grid spec must be kmin:kmax:nk,tmin:tmax:nt; got: " + text);
    };
    const std::size_t comma = text.find(',');
    if (comma == std::string::npos) fail();

    const auto parse_axis = [&fail](std::string_view axis, double& lo, double& hi, int& n) {
        const std::size_t c1 = axis.find(':');
        const std::size_t c2 = c1 == std::string_view::npos ? c1 : axis.find(':', c1 + 1);
        if (c2 == std::string_view::npos) fail();
        try {
            lo = parse_double(axis.substr(0, c1));
            hi = parse_double(axis.substr(c1 + 1, c2 - c1 - 1));
            n = static_cast<int>(parse_long(axis.substr(c2 + 1)));
        } catch (const ParseError&) {
            fail();
        }
        if (!(lo < hi) || n < 2) fail();
    };

    GridSpec spec;
    parse_axis(std::string_view(text).substr(0, comma), spec.k_min, spec.k_max, spec.nk);
    parse_axis(std::string_view(text).substr(comma + 1), spec.tau_min, spec.tau_max, spec.nt);
    if (!(spec.tau_min > 0.0)) fail();
    return spec;
}

BatesParams bates_params_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("parameter file: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("parameter file: expected a JSON object");
    BatesParams params;
    const auto read = [&j](const char* name, double& field) {
        if (!j.contains(name)) return;
        if (!j.at(name).is_number()) throw ParseError(std::string("parameter file: ") + name);
        field = j.at(name).get<double>();
    };
    read("v0", params.v0);
    read("theta", params.theta);
    read("kappa", params.kappa);
    read("sigma_v", params.sigma_v);
    read("rho", params.rho);
    read("lambda_j", params.lambda_j);
    read("beta_j", params.beta_j);
    read("alpha_j", params.alpha_j);
    read("r", params.r);
    read("delta", params.delta);
    for (const auto& [key, value] : j.items()) {
        (void)value;
        static const char* known[] = {"v0",  "theta",    "kappa",  "sigma_v", "rho",
                                      "lambda_j", "beta_j", "alpha_j", "r", "delta"};
        bool ok = false;
        for (const char* name : known) ok = ok || key == name;
        if (!ok) throw ParseError("parameter file: unknown key " + key);
    }
    params.validate();
    return params;
}

std::string bates_params_to_json(const BatesParams& params) {
    nlohmann::json j;
    j["v0"] = params.v0;
    j["theta"] = params.theta;
    j["kappa"] = params.kappa;
    j["sigma_v"] = params.sigma_v;
    j["rho"] = params.rho;
    j["lambda_j"] = params.lambda_j;
    j["beta_j"] = params.beta_j;
    j["alpha_j"] = params.alpha_j;
    j["r"] = params.r;
    j["delta"] = params.delta;
    return j.dump(2) + "\n";
}

} // namespace volfit::cli
