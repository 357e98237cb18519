#include "volfit/checkpoint.hpp"

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "volfit/errors.hpp"
#include "volfit/textio.hpp"

namespace volfit {

namespace {

constexpr const char* kFormat = "volfit-checkpoint";
constexpr int kVersion = 1;

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw CheckpointMismatch(std::string("non-finite value in ") + what);
}

} // namespace

std::string checkpoint_to_json(const SurfaceModel& model) {
    if (model.mlp.weights.size() != model.mlp.biases.size())
        throw CheckpointMismatch("weight/bias layer counts differ");

    nlohmann::json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["widths"] = model.mlp.widths();

    nlohmann::json weights = nlohmann::json::array();
    nlohmann::json biases = nlohmann::json::array();
    for (std::size_t l = 0; l < model.mlp.weights.size(); ++l) {
        const auto& w = model.mlp.weights[l];
        std::vector<double> flat;
        flat.reserve(static_cast<std::size_t>(w.size()));
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
        weights.push_back(flat);
        const auto& b = model.mlp.biases[l];
        biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
    }
    j["weights"] = std::move(weights);
    j["biases"] = std::move(biases);
    j["log_alpha"] = model.mlp.log_alpha;

    j["prior"] = model.prior == PriorKind::Ssvi ? "ssvi" : "black_scholes";
    j["ssvi"] = {{"rho_raw", model.ssvi.rho_raw},
                 {"eta_raw", model.ssvi.eta_raw},
                 {"gamma_raw", model.ssvi.gamma_raw}};

    nlohmann::json knots = nlohmann::json::array();
    for (const auto& knot : model.atm.knots()) knots.push_back({knot.tau, knot.w});
    j["atm_knots"] = std::move(knots);

    j["ranges"] = {{"k_min", model.ranges.k_min},
                   {"k_max", model.ranges.k_max},
                   {"tau_max", model.ranges.tau_max}};
    return j.dump(2) + "\n";
}

SurfaceModel checkpoint_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
    }

    try {
        if (j.at("format").get<std::string>() != kFormat)
            throw CheckpointMismatch("unrecognized checkpoint format tag");
        if (j.at("version").get<int>() != kVersion)
            throw CheckpointMismatch("unsupported checkpoint version");

        const auto widths = j.at("widths").get<std::vector<int>>();
        if (widths.size() < 2 || widths.front() != 2 || widths.back() != 1)
            throw CheckpointMismatch("widths must map 2 inputs to 1 output");
        for (int w : widths)
            if (w < 1) throw CheckpointMismatch("nonpositive layer width");

        SurfaceModel model;
        const auto& weights = j.at("weights");
        const auto& biases = j.at("biases");
        if (weights.size() != widths.size() - 1 || biases.size() != widths.size() - 1)
            throw CheckpointMismatch("layer count does not match widths");
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const auto flat = weights.at(l).get<std::vector<double>>();
            const auto rows = widths[l + 1];
            const auto cols = widths[l];
            if (flat.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
                throw CheckpointMismatch("weight matrix size does not match widths");
            Eigen::MatrixXd w(rows, cols);
            for (int r = 0; r < rows; ++r)
                for (int c = 0; c < cols; ++c) {
                    w(r, c) = flat[static_cast<std::size_t>(r) * cols + c];
                    require_finite(w(r, c), "weights");
                }
            const auto bvec = biases.at(l).get<std::vector<double>>();
            if (bvec.size() != static_cast<std::size_t>(rows))
                throw CheckpointMismatch("bias vector size does not match widths");
            Eigen::VectorXd b(rows);
            for (int r = 0; r < rows; ++r) {
                b(r) = bvec[static_cast<std::size_t>(r)];
                require_finite(b(r), "biases");
            }
            model.mlp.weights.push_back(std::move(w));
            model.mlp.biases.push_back(std::move(b));
        }
        model.mlp.log_alpha = j.at("log_alpha").get<double>();
        require_finite(model.mlp.log_alpha, "log_alpha");

        const auto prior = j.at("prior").get<std::string>();
        if (prior == "ssvi")
            model.prior = PriorKind::Ssvi;
        else if (prior == "black_scholes")
            model.prior = PriorKind::BlackScholes;
        else
            throw CheckpointMismatch("unknown prior kind: " + prior);

        if (j.contains("ssvi")) {
            const auto& s = j.at("ssvi");
            model.ssvi.rho_raw = s.at("rho_raw").get<double>();
            model.ssvi.eta_raw = s.at("eta_raw").get<double>();
            model.ssvi.gamma_raw = s.at("gamma_raw").get<double>();
            require_finite(model.ssvi.rho_raw, "ssvi");
            require_finite(model.ssvi.eta_raw, "ssvi");
            require_finite(model.ssvi.gamma_raw, "ssvi");
        }

        std::vector<AtmKnot> knots;
        for (const auto& pair : j.at("atm_knots")) {
            if (!pair.is_array() || pair.size() != 2)
                throw CheckpointMismatch("atm knot must be a [tau, w] pair");
            knots.push_back({pair.at(0).get<double>(), pair.at(1).get<double>()});
        }
        if (!knots.empty()) model.atm = AtmTermStructure::from_knots(std::move(knots));

        const auto& ranges = j.at("ranges");
        model.ranges.k_min = ranges.at("k_min").get<double>();
        model.ranges.k_max = ranges.at("k_max").get<double>();
        model.ranges.tau_max = ranges.at("tau_max").get<double>();
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw CheckpointMismatch(std::string("checkpoint field error: ") + e.what());
    }
}

void save_checkpoint(const SurfaceModel& model, const std::string& path) {
    write_text_file_atomic(path, checkpoint_to_json(model));
}

SurfaceModel load_checkpoint(const std::string& path) {
    return checkpoint_from_json(read_text_file(path));
}

} // namespace volfit
