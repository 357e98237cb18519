#include "volfit/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "volfit/errors.hpp"
#include "volfit/quote_io.hpp"
#include "volfit/textio.hpp"

namespace volfit {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void quote_ranges(const std::vector<Quote>& quotes, double& k_min, double& k_max,
                  double& tau_max) {
    k_min = std::numeric_limits<double>::infinity();
    k_max = -std::numeric_limits<double>::infinity();
    tau_max = 0.0;
    for (const auto& q : quotes) {
        k_min = std::min(k_min, q.k);
        k_max = std::max(k_max, q.k);
        tau_max = std::max(tau_max, q.tau);
    }
    if (!(k_min < 0.0 && k_max > 0.0))
        throw InvalidInput("training data must straddle k = 0");
}

} // namespace

void TrainConfig::validate() const {
    if (lambda4 < 0.0 || lambda5 < 0.0 || lambda6 < 0.0 || lambda_atm < 0.0)
        throw InvalidInput("penalty weights must be nonnegative");
    if (!(lr0 > 0.0)) throw InvalidInput("lr0 must be positive");
    if (!(lr_factor > 1.0)) throw InvalidInput("lr_factor must exceed 1");
    if (plateau_epochs < 1 || patience_epochs < 1 || max_epochs < 1)
        throw InvalidInput("epoch counts must be positive");
    if (!(improve_threshold > 0.0 && improve_threshold < 1.0))
        throw InvalidInput("improve_threshold must lie in (0,1)");
    if (!(target_total_loss > 0.0 && target_total_loss < 1.0))
        throw InvalidInput("target_total_loss must lie in (0,1)");
    if (hidden_widths.empty()) throw InvalidInput("at least one hidden layer is required");
    for (int w : hidden_widths)
        if (w < 1) throw InvalidInput("hidden layer widths must be positive");
}

std::string TrainConfig::to_json() const {
    nlohmann::json j;
    j["lambda4"] = lambda4;
    j["lambda5"] = lambda5;
    j["lambda6"] = lambda6;
    j["lambda_atm"] = lambda_atm;
    j["lr0"] = lr0;
    j["plateau_epochs"] = plateau_epochs;
    j["lr_factor"] = lr_factor;
    j["improve_threshold"] = improve_threshold;
    j["patience_epochs"] = patience_epochs;
    j["max_epochs"] = max_epochs;
    j["target_total_loss"] = target_total_loss;
    j["seed"] = seed;
    j["loss_variant"] = loss_variant == LossVariant::Default ? "default" : "spread_weighted";
    j["early_stopping"] = early_stopping;
    j["hidden_widths"] = hidden_widths;
    j["prior_only"] = prior_only;
    return j.dump(2) + "\n";
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("train config is not valid JSON: ") + e.what());
    }
    TrainConfig cfg;
    try {
        if (j.contains("lambda4")) cfg.lambda4 = j["lambda4"].get<double>();
        if (j.contains("lambda5")) cfg.lambda5 = j["lambda5"].get<double>();
        if (j.contains("lambda6")) cfg.lambda6 = j["lambda6"].get<double>();
        if (j.contains("lambda_atm")) cfg.lambda_atm = j["lambda_atm"].get<double>();
        if (j.contains("lr0")) cfg.lr0 = j["lr0"].get<double>();
        if (j.contains("plateau_epochs")) cfg.plateau_epochs = j["plateau_epochs"].get<int>();
        if (j.contains("lr_factor")) cfg.lr_factor = j["lr_factor"].get<double>();
        if (j.contains("improve_threshold"))
            cfg.improve_threshold = j["improve_threshold"].get<double>();
        if (j.contains("patience_epochs")) cfg.patience_epochs = j["patience_epochs"].get<int>();
        if (j.contains("max_epochs")) cfg.max_epochs = j["max_epochs"].get<int>();
        if (j.contains("target_total_loss"))
            cfg.target_total_loss = j["target_total_loss"].get<double>();
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("loss_variant")) {
            const auto v = j["loss_variant"].get<std::string>();
            if (v == "default")
                cfg.loss_variant = LossVariant::Default;
            else if (v == "spread_weighted")
                cfg.loss_variant = LossVariant::SpreadWeighted;
            else
                throw ParseError("unknown loss_variant: " + v);
        }
        if (j.contains("early_stopping")) cfg.early_stopping = j["early_stopping"].get<bool>();
        if (j.contains("hidden_widths"))
            cfg.hidden_widths = j["hidden_widths"].get<std::vector<int>>();
        if (j.contains("prior_only")) cfg.prior_only = j["prior_only"].get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("train config field error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

JetEngine LossEvaluator::make_engine(const SurfaceModel& model, const std::vector<Quote>& quotes,
                                     const ConstraintGrids& grids) {
    std::vector<double> k;
    std::vector<double> tau;
    const std::size_t total =
        quotes.size() + grids.c45_k.size() + grids.c6_k.size() + grids.atm_tau.size();
    k.reserve(total);
    tau.reserve(total);
    for (const auto& q : quotes) {
        k.push_back(q.k);
        tau.push_back(q.tau);
    }
    k.insert(k.end(), grids.c45_k.begin(), grids.c45_k.end());
    tau.insert(tau.end(), grids.c45_tau.begin(), grids.c45_tau.end());
    k.insert(k.end(), grids.c6_k.begin(), grids.c6_k.end());
    tau.insert(tau.end(), grids.c6_tau.begin(), grids.c6_tau.end());
    k.insert(k.end(), grids.atm_tau.size(), 0.0);
    tau.insert(tau.end(), grids.atm_tau.begin(), grids.atm_tau.end());
    return JetEngine(model, k, tau);
}

LossEvaluator::LossEvaluator(const SurfaceModel& model, const std::vector<Quote>& quotes,
                             const ConstraintGrids& grids)
    : n_quotes_(quotes.size()),
      n_c45_(grids.c45_k.size()),
      n_c6_(grids.c6_k.size()),
      n_atm_(grids.atm_tau.size()),
      engine_(make_engine(model, quotes, grids)) {
    if (quotes.empty()) throw InvalidInput("loss evaluation needs at least one quote");
    sigma_.reserve(n_quotes_);
    tau_.reserve(n_quotes_);
    spread_.reserve(n_quotes_);
    for (const auto& q : quotes) {
        sigma_.push_back(q.iv);
        tau_.push_back(q.tau);
        if (q.bid_iv && q.ask_iv) {
            spread_.push_back(*q.ask_iv - *q.bid_iv);
        } else {
            spread_.push_back(0.0);
            has_spread_ = false;
        }
    }
    grid_k_.reserve(n_c45_ + n_c6_);
    grid_k_.insert(grid_k_.end(), grids.c45_k.begin(), grids.c45_k.end());
    grid_k_.insert(grid_k_.end(), grids.c6_k.begin(), grids.c6_k.end());
}

LossBreakdown LossEvaluator::evaluate(const SurfaceModel& model, const TrainConfig& config,
                                      ParamGrad* grad) {
    if (config.loss_variant == LossVariant::SpreadWeighted && !has_spread_)
        throw InvalidInput("spread-weighted loss requires bid/ask implied vols on every quote");

    engine_.forward(model);
    const std::size_t q0 = 0;
    const std::size_t c45_0 = n_quotes_;
    const std::size_t c6_0 = n_quotes_ + n_c45_;
    const std::size_t atm_0 = n_quotes_ + n_c45_ + n_c6_;

    LossBreakdown out;

    std::vector<double> sigma_hat(n_quotes_);
    std::vector<double> err(n_quotes_);
    double ss = 0.0, sum_rel = 0.0, sum_spread = 0.0;
    for (std::size_t i = 0; i < n_quotes_; ++i) {
        const double w = engine_.surface(q0 + i).v;
        sigma_hat[i] = std::sqrt(w / tau_[i]);
        err[i] = sigma_hat[i] - sigma_[i];
        ss += err[i] * err[i];
        sum_rel += std::abs(err[i]) / sigma_[i];
        sum_spread += std::abs(err[i]) / (1.0 + spread_[i]);
    }
    const double qn = static_cast<double>(n_quotes_);
    const double rmse = std::sqrt(ss / qn);
    out.l0 = config.loss_variant == LossVariant::Default ? rmse + sum_rel / qn : sum_spread / qn;

    double c4_sum = 0.0, c5_sum = 0.0;
    for (std::size_t j = 0; j < n_c45_; ++j) {
        const Jet2 jet = engine_.surface(c45_0 + j);
        c4_sum += std::max(0.0, -jet.dt);
        if (jet.v > 0.0) {
            c5_sum += std::max(0.0, -ell_but(grid_k_[j], jet));
        } else {
            c5_sum = std::numeric_limits<double>::infinity();
        }
    }
    if (n_c45_ > 0) {
        out.c4 = c4_sum / static_cast<double>(n_c45_);
        out.c5 = c5_sum / static_cast<double>(n_c45_);
    }

    double c6_sum = 0.0;
    for (std::size_t j = 0; j < n_c6_; ++j) c6_sum += std::abs(engine_.surface(c6_0 + j).dkk);
    if (n_c6_ > 0) out.c6 = c6_sum / static_cast<double>(n_c6_);

    double atm_ss = 0.0;
    for (std::size_t j = 0; j < n_atm_; ++j) {
        const double d = 1.0 - engine_.nn(atm_0 + j).v;
        atm_ss += d * d;
    }
    if (n_atm_ > 0) out.atm = std::sqrt(atm_ss / static_cast<double>(n_atm_));

    out.total = out.l0 + config.lambda4 * out.c4 + config.lambda5 * out.c5 +
                config.lambda6 * out.c6 + config.lambda_atm * out.atm;

    if (grad == nullptr) return out;

    engine_.zero_adjoints();
    for (std::size_t i = 0; i < n_quotes_; ++i) {
        double dl_dsig;
        if (config.loss_variant == LossVariant::Default) {
            dl_dsig = (rmse > 0.0 ? err[i] / (qn * rmse) : 0.0) + sgn(err[i]) / (qn * sigma_[i]);
        } else {
            dl_dsig = sgn(err[i]) / (qn * (1.0 + spread_[i]));
        }
        // sigma_hat = sqrt(w/tau)  =>  d sigma_hat / d w = 1 / (2 sigma_hat tau).
        const double bar_v = dl_dsig / (2.0 * sigma_hat[i] * tau_[i]);
        engine_.add_surface_adjoint(q0 + i, {bar_v, 0.0, 0.0, 0.0});
    }

    const double n45 = static_cast<double>(n_c45_);
    for (std::size_t j = 0; j < n_c45_; ++j) {
        const Jet2 jet = engine_.surface(c45_0 + j);
        Jet2 bar{0.0, 0.0, 0.0, 0.0};
        if (jet.dt < 0.0) bar.dt -= config.lambda4 / n45;
        if (jet.v > 0.0 && ell_but(grid_k_[j], jet) < 0.0) {
            const double k = grid_k_[j];
            const double w = jet.v;
            const double wk = jet.dk;
            const double a = 1.0 - k * wk / (2.0 * w);
            const double dl_dv = a * k * wk / (w * w) + 0.25 * wk * wk / (w * w);
            const double dl_dk = -a * k / w - 0.5 * wk * (1.0 / w + 0.25);
            const double scale = -config.lambda5 / n45;
            bar.v += scale * dl_dv;
            bar.dk += scale * dl_dk;
            bar.dkk += scale * 0.5;
        }
        if (bar.v != 0.0 || bar.dk != 0.0 || bar.dt != 0.0 || bar.dkk != 0.0)
            engine_.add_surface_adjoint(c45_0 + j, bar);
    }

    const double n6 = static_cast<double>(n_c6_);
    for (std::size_t j = 0; j < n_c6_; ++j) {
        const double dkk = engine_.surface(c6_0 + j).dkk;
        if (dkk != 0.0)
            engine_.add_surface_adjoint(c6_0 + j, {0.0, 0.0, 0.0, config.lambda6 * sgn(dkk) / n6});
    }

    if (out.atm > 0.0) {
        const double natm = static_cast<double>(n_atm_);
        for (std::size_t j = 0; j < n_atm_; ++j) {
            const double d = 1.0 - engine_.nn(atm_0 + j).v;
            engine_.add_nn_value_adjoint(atm_0 + j, -config.lambda_atm * d / (natm * out.atm));
        }
    }

    engine_.backward(model, *grad);
    return out;
}

double data_loss(const SurfaceModel& model, const std::vector<Quote>& quotes,
                 LossVariant variant) {
    if (quotes.empty()) throw InvalidInput("data loss needs at least one quote");
    LossEvaluator eval(model, quotes, ConstraintGrids{});
    TrainConfig cfg;
    cfg.loss_variant = variant;
    return eval.evaluate(model, cfg).l0;
}

LossBreakdown total_loss(const SurfaceModel& model, const std::vector<Quote>& quotes,
                         const ConstraintGrids& grids, const TrainConfig& config) {
    LossEvaluator eval(model, quotes, grids);
    return eval.evaluate(model, config);
}

namespace {

FitResult fit_from(SurfaceModel model, const std::vector<Quote>& quotes,
                   const TrainConfig& config) {
    config.validate();
    validate(quotes);
    if (config.prior_only && model.prior != PriorKind::Ssvi)
        throw InvalidInput("prior-only fitting requires the ssvi prior");
    if (config.prior_only) zero_output_layer(model.mlp);

    const ConstraintGrids grids =
        build_grids(model.ranges.k_min, model.ranges.k_max, model.ranges.tau_max);
    LossEvaluator eval(model, quotes, grids);

    ParamGrad grad, m, v;
    m.match_shape(model.mlp);
    v.match_shape(model.mlp);
    int adam_t = 0;
    double lr = config.lr0;

    const bool train_net = !config.prior_only;
    const bool train_ssvi = model.prior == PriorKind::Ssvi;

    MlpParams best_mlp = model.mlp;
    SsviParams best_ssvi = model.ssvi;
    double best_total = std::numeric_limits<double>::infinity();
    double qual_ref = std::numeric_limits<double>::infinity();
    int last_qual = 0;
    int last_lr_event = 0;
    int last_restart = 0;
    int restarts = 0;

    FitResult out;
    out.history.reserve(static_cast<std::size_t>(config.max_epochs));
    out.stop_reason = "max-epochs";

    const auto adam_array = [&](auto& theta, auto& m_, auto& v_, const auto& g_) {
        m_ = kBeta1 * m_ + (1.0 - kBeta1) * g_;
        v_.array() = kBeta2 * v_.array() + (1.0 - kBeta2) * g_.array().square();
        const double bc1 = 1.0 - std::pow(kBeta1, adam_t);
        const double bc2 = 1.0 - std::pow(kBeta2, adam_t);
        theta.array() -= lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + kAdamEps);
    };
    const auto adam_scalar = [&](double& theta, double& m_, double& v_, double g_) {
        m_ = kBeta1 * m_ + (1.0 - kBeta1) * g_;
        v_ = kBeta2 * v_ + (1.0 - kBeta2) * g_ * g_;
        const double bc1 = 1.0 - std::pow(kBeta1, adam_t);
        const double bc2 = 1.0 - std::pow(kBeta2, adam_t);
        theta -= lr * (m_ / bc1) / (std::sqrt(v_ / bc2) + kAdamEps);
    };

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const LossBreakdown lb = eval.evaluate(model, config, &grad);
        if (!std::isfinite(lb.total))
            throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch));
        out.history.push_back({epoch, lb.total, lb.l0, lb.c4, lb.c5, lb.c6, lb.atm, lr});

        if (lb.total < best_total) {
            best_total = lb.total;
            best_mlp = model.mlp;
            best_ssvi = model.ssvi;
        }
        if (lb.total < (1.0 - config.improve_threshold) * qual_ref) {
            qual_ref = lb.total;
            last_qual = epoch;
        }

        if (config.early_stopping && lb.total < config.target_total_loss) {
            out.stop_reason = "target-reached";
            break;
        }
        if (epoch == config.max_epochs) break;

        if (epoch - std::max(last_qual, last_restart) >= config.patience_epochs) {
            const bool stale = restarts > 0 && last_qual <= last_restart;
            if (stale && config.early_stopping) {
                out.stop_reason = "patience";
                break;
            }
            ++restarts;
            lr = config.lr0;
            m.set_zero();
            v.set_zero();
            adam_t = 0;
            last_restart = epoch;
            last_lr_event = epoch;
        } else if (epoch - std::max(last_qual, last_lr_event) >= config.plateau_epochs) {
            lr /= config.lr_factor;
            last_lr_event = epoch;
        }

        ++adam_t;
        if (train_net) {
            for (std::size_t l = 0; l < model.mlp.weights.size(); ++l) {
                adam_array(model.mlp.weights[l], m.d_weights[l], v.d_weights[l],
                           grad.d_weights[l]);
                adam_array(model.mlp.biases[l], m.d_biases[l], v.d_biases[l], grad.d_biases[l]);
            }
            adam_scalar(model.mlp.log_alpha, m.d_log_alpha, v.d_log_alpha, grad.d_log_alpha);
        }
        if (train_ssvi) {
            adam_scalar(model.ssvi.rho_raw, m.d_rho_raw, v.d_rho_raw, grad.d_rho_raw);
            adam_scalar(model.ssvi.eta_raw, m.d_eta_raw, v.d_eta_raw, grad.d_eta_raw);
            adam_scalar(model.ssvi.gamma_raw, m.d_gamma_raw, v.d_gamma_raw, grad.d_gamma_raw);
        }
    }

    out.epochs_run = static_cast<int>(out.history.size());
    model.mlp = std::move(best_mlp);
    model.ssvi = best_ssvi;
    out.model = std::move(model);
    return out;
}

} // namespace

FitResult fit(const std::vector<Quote>& quotes, PriorKind prior_kind, const TrainConfig& config) {
    config.validate();
    validate(quotes);
    if (quotes.empty()) throw InvalidInput("fit needs at least one quote");
    double k_min, k_max, tau_max;
    quote_ranges(quotes, k_min, k_max, tau_max);

    SurfaceModel model;
    model.mlp = init_params(config.hidden_widths, config.seed);
    model.prior = prior_kind;
    model.ssvi = SsviParams::defaults();
    model.atm = AtmTermStructure::from_quotes(quotes);
    model.ranges = {k_min, k_max, tau_max};
    return fit_from(std::move(model), quotes, config);
}

FitResult warm_start(const SurfaceModel& checkpoint, const std::vector<Quote>& quotes,
                     const TrainConfig& config) {
    config.validate();
    validate(quotes);
    if (quotes.empty()) throw InvalidInput("fit needs at least one quote");

    std::vector<int> expected;
    expected.push_back(2);
    expected.insert(expected.end(), config.hidden_widths.begin(), config.hidden_widths.end());
    expected.push_back(1);
    if (checkpoint.mlp.widths() != expected)
        throw CheckpointMismatch("checkpoint layer widths do not match the configuration");

    double k_min, k_max, tau_max;
    quote_ranges(quotes, k_min, k_max, tau_max);

    SurfaceModel model;
    model.mlp = checkpoint.mlp;
    model.prior = checkpoint.prior;
    model.ssvi = checkpoint.ssvi;
    model.atm = AtmTermStructure::from_quotes(quotes);
    model.ranges = {k_min, k_max, tau_max};
    return fit_from(std::move(model), quotes, config);
}

void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history) {
    std::string text = "epoch,total,l0,c4,c5,c6,atm,lr\n";
    for (const auto& row : history) {
        text += std::to_string(row.epoch);
        text += ',';
        text += format_double(row.total);
        text += ',';
        text += format_double(row.l0);
        text += ',';
        text += format_double(row.c4);
        text += ',';
        text += format_double(row.c5);
        text += ',';
        text += format_double(row.c6);
        text += ',';
        text += format_double(row.atm);
        text += ',';
        text += format_double(row.lr);
        text += '\n';
    }
    write_text_file_atomic(path, text);
}

} // namespace volfit
