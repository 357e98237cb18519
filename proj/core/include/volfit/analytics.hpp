#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "volfit/arbitrage.hpp"
#include "volfit/model.hpp"
#include "volfit/quote.hpp"
#include "volfit/synthetic.hpp"

namespace volfit {

/// How the strike argument of density() is expressed. All analytics work on
/// the forward scale (strike / forward), so rates and discounting drop out;
/// a dollar-strike density is p(K/F) / F.
enum class StrikeInput { ForwardRatio, LogMoneyness };

/// Risk-neutral density of S_T / F at x, from the surface jet:
///   p = ell_but(k, tau) * phi(d_minus) / (x * sqrt(omega)),
/// the analytic second strike derivative of the undiscounted call price.
/// A negative return value flags a butterfly violation at that point.
double density(const SurfaceModel& model, double x, double tau, StrikeInput convention);

/// Dupire local volatility
///   sigma_LV^2 = (d omega / d tau) / ell_but(k, tau)
/// evaluated from the surface jet. Throws NumericalError on a nonpositive
/// denominator (butterfly violation) or numerator (calendar violation).
double local_vol(const SurfaceModel& model, double k, double tau);

enum class SplitMode { Interpolation, Extrapolation };

struct SplitSpec {
    SplitMode mode = SplitMode::Interpolation;
    std::uint64_t seed = 0;

    static SplitMode mode_from_string(const std::string& name);
};

struct SplitResult {
    std::vector<Quote> train;
    std::vector<Quote> test;
};

/// Partition of the sample, maturity slice by maturity slice.
///
/// - interpolation: a uniformly random floor(n/2) of each slice trains, the
///   rest tests.
/// - extrapolation: a random half of the contracts strictly between the 10%
///   and 90% empirical quantiles of slice log-moneyness trains; the other
///   half and everything at or beyond the quantiles tests.
///
/// Slices with fewer than two contracts pass entirely to train.
SplitResult split(const std::vector<Quote>& quotes, const SplitSpec& spec);

/// Empirical quantile with linear interpolation between order statistics.
/// Requires a nonempty sample and p in [0, 1].
double quantile(std::vector<double> values, double p);

struct MetricsSide {
    double rmse = 0.0;
    double mape = 0.0;
    double c4 = 0.0;
    double c5 = 0.0;
    double c6 = 0.0;
};

/// One backtest day. The penalty entries are properties of the surface on
/// the audit grids, not of a quote subset, so they are identical under both
/// columns; the data-fit entries differ.
struct MetricsRow {
    MetricsSide train;
    MetricsSide test;
};

/// RMSE = root mean squared implied-vol error, MAPE = mean |error| / sigma,
/// both per subset (zero for an empty subset); C4/C5/C6 from
/// penalty_losses(model, grids).
MetricsRow evaluate(const SurfaceModel& model, const std::vector<Quote>& train,
                    const std::vector<Quote>& test, const ConstraintGrids& grids);

/// Data-fit metrics of a Bates parameterization against a quote set: each
/// slice is priced by the Fourier transform on the quote strikes and the
/// prices inverted back to vols. Quotes whose model price falls below the
/// transform noise floor are skipped. The penalty entries stay zero: the
/// parametric model is free of static arbitrage by construction.
MetricsSide bates_metrics(const BatesParams& params, const std::vector<Quote>& quotes);

struct SummaryEntry {
    std::string metric; // "rmse", "mape", "c4", "c5" or "c6"
    std::string side;   // "train" or "test"
    double q05 = 0.0;   // in percent
    double q50 = 0.0;
    double q95 = 0.0;
};

/// 5% / 50% / 95% quantiles of each metric across days, in percent
/// (0.012 -> 1.2). Ten entries, metrics major, train before test.
std::vector<SummaryEntry> summarize(const std::vector<MetricsRow>& rows);

/// Two decimals, with values above 99 capped to "99+".
std::string render_percent(double value);

/// Header: day,train_rmse,train_mape,train_c4,train_c5,train_c6,
///         test_rmse,test_mape,test_c4,test_c5,test_c6
std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

/// Header: metric,side,q05,q50,q95 (percent values, uncapped).
std::string summary_to_csv(const std::vector<SummaryEntry>& entries);

/// Aligned table: one row per metric, q05/q50/q95 for train then test.
std::string summary_table(const std::string& title, const std::vector<SummaryEntry>& entries);

} // namespace volfit
