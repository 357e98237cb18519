#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "volfit/arbitrage.hpp"
#include "volfit/engine.hpp"
#include "volfit/model.hpp"
#include "volfit/quote.hpp"

namespace volfit {

enum class LossVariant { Default, SpreadWeighted };

struct TrainConfig {
    double lambda4 = 10.0;
    double lambda5 = 10.0;
    double lambda6 = 10.0;
    double lambda_atm = 0.1;
    double lr0 = 0.01;
    int plateau_epochs = 500;
    double lr_factor = 2.0;
    double improve_threshold = 0.01;
    int patience_epochs = 2000;
    int max_epochs = 4000;
    double target_total_loss = 0.0025;
    std::uint64_t seed = 0;
    LossVariant loss_variant = LossVariant::Default;
    /// When false the run always lasts max_epochs: the target-loss and
    /// patience stops are disabled (learning-rate decay and restarts still
    /// happen). Used by fixed-epoch sweeps.
    bool early_stopping = true;
    std::vector<int> hidden_widths = {40, 40, 40, 40};
    /// Freeze the network at 1 and fit only the prior parameters. Requires
    /// the SSVI prior (the flat prior has nothing to fit).
    bool prior_only = false;

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
};

struct HistoryRow {
    int epoch = 0; // 1-based
    double total = 0.0;
    double l0 = 0.0;
    double c4 = 0.0;
    double c5 = 0.0;
    double c6 = 0.0;
    double atm = 0.0;
    double lr = 0.0;
};

struct FitResult {
    SurfaceModel model; // parameters achieving the best total loss seen
    std::vector<HistoryRow> history;
    int epochs_run = 0;
    std::string stop_reason; // "target-reached", "max-epochs", or "patience"
};

struct LossBreakdown {
    double total = 0.0;
    double l0 = 0.0;
    double c4 = 0.0;
    double c5 = 0.0;
    double c6 = 0.0;
    double atm = 0.0;
};

/// Quote-fit term alone: default variant is rmse + mean(|error|/sigma);
/// spread_weighted is mean(|error| / (1 + ask_iv - bid_iv)).
double data_loss(const SurfaceModel& model, const std::vector<Quote>& quotes,
                 LossVariant variant);

/// Reusable epoch evaluator: one jet engine over the concatenation of the
/// quote points and all penalty grid points, producing the loss breakdown
/// and, optionally, its parameter gradient.
class LossEvaluator {
public:
    LossEvaluator(const SurfaceModel& model, const std::vector<Quote>& quotes,
                  const ConstraintGrids& grids);

    LossBreakdown evaluate(const SurfaceModel& model, const TrainConfig& config,
                           ParamGrad* grad = nullptr);

private:
    std::size_t n_quotes_ = 0;
    std::size_t n_c45_ = 0;
    std::size_t n_c6_ = 0;
    std::size_t n_atm_ = 0;
    std::vector<double> sigma_;
    std::vector<double> tau_;
    std::vector<double> spread_; // ask_iv - bid_iv per quote
    bool has_spread_ = true;
    std::vector<double> grid_k_; // k of the c45 and c6 segments
    JetEngine engine_;

    static JetEngine make_engine(const SurfaceModel& model, const std::vector<Quote>& quotes,
                                 const ConstraintGrids& grids);
};

/// Full loss with the configured weights:
///   L0 + l4*C4 + l5*C5 + l6*C6 + l_atm*ATM.
LossBreakdown total_loss(const SurfaceModel& model, const std::vector<Quote>& quotes,
                         const ConstraintGrids& grids, const TrainConfig& config);

/// Full-batch Adam fit with the adaptive schedule: the learning rate halves
/// after plateau_epochs without a 1%-relative improvement of the best total
/// loss; after patience_epochs without one, training restarts (parameters
/// kept, learning rate back to lr0, Adam moments cleared); a second patience
/// with no qualifying improvement since the previous restart stops the run.
FitResult fit(const std::vector<Quote>& quotes, PriorKind prior_kind, const TrainConfig& config);

/// Same as fit() but starting from an existing model's parameters. The
/// checkpoint's layer widths must match config.hidden_widths.
FitResult warm_start(const SurfaceModel& checkpoint, const std::vector<Quote>& quotes,
                     const TrainConfig& config);

/// CSV with header: epoch,total,l0,c4,c5,c6,atm,lr
void write_history_csv(const std::string& path, const std::vector<HistoryRow>& history);

} // namespace volfit
