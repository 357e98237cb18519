#include "volfit/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <sstream>

#include "volfit/errors.hpp"
#include "volfit/pricing.hpp"
#include "volfit/textio.hpp"

namespace volfit {

double density(const SurfaceModel& model, double x, double tau, StrikeInput convention) {
    if (!(tau > 0.0)) throw InvalidInput("density: tau must be positive");
    double k = x;
    if (convention == StrikeInput::ForwardRatio) {
        if (!(x > 0.0)) throw InvalidInput("density: strike ratio must be positive");
        k = std::log(x);
    }
    const Jet2 jet = surface_jet(model, k, tau);
    if (!(jet.v > 0.0)) throw NumericalError("density: nonpositive total variance");
    const double root_w = std::sqrt(jet.v);
    const double d_minus = -k / root_w - 0.5 * root_w;
    return ell_but(k, jet) * norm_pdf(d_minus) / (std::exp(k) * root_w);
}

double local_vol(const SurfaceModel& model, double k, double tau) {
    if (!(tau > 0.0)) throw InvalidInput("local_vol: tau must be positive");
    const Jet2 jet = surface_jet(model, k, tau);
    if (!(jet.v > 0.0)) throw NumericalError("local_vol: nonpositive total variance");
    const double denom = ell_but(k, jet);
    if (!(denom > 0.0))
        throw NumericalError("local_vol: butterfly violation (nonpositive denominator) at k=" +
                             format_double(k) + " tau=" + format_double(tau));
    if (!(jet.dt > 0.0))
        throw NumericalError("local_vol: calendar violation (nonpositive numerator) at k=" +
                             format_double(k) + " tau=" + format_double(tau));
    return std::sqrt(jet.dt / denom);
}

SplitMode SplitSpec::mode_from_string(const std::string& name) {
    if (name == "interp" || name == "interpolation") return SplitMode::Interpolation;
    if (name == "extrap" || name == "extrapolation") return SplitMode::Extrapolation;
    throw InvalidInput("unknown split mode: " + name);
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) throw InvalidInput("quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("quantile: p outside [0, 1]");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

void sort_by_point(std::vector<Quote>& quotes) {
    std::sort(quotes.begin(), quotes.end(), [](const Quote& a, const Quote& b) {
        return a.tau != b.tau ? a.tau < b.tau : a.k < b.k;
    });
}

} // namespace

SplitResult split(const std::vector<Quote>& quotes, const SplitSpec& spec) {
    if (quotes.empty()) throw InvalidInput("split: empty sample");
    std::map<double, std::vector<std::size_t>> slices;
    for (std::size_t i = 0; i < quotes.size(); ++i) slices[quotes[i].tau].push_back(i);

    std::mt19937_64 rng(spec.seed);
    SplitResult result;
    for (auto& [tau, idx] : slices) {
        (void)tau;
        if (idx.size() < 2) {
            for (const std::size_t i : idx) result.train.push_back(quotes[i]);
            continue;
        }
        std::vector<std::size_t> pool;
        if (spec.mode == SplitMode::Interpolation) {
            pool = idx;
        } else {
            std::vector<double> ks;
            for (const std::size_t i : idx) ks.push_back(quotes[i].k);
            const double q10 = quantile(ks, 0.10);
            const double q90 = quantile(ks, 0.90);
            for (const std::size_t i : idx) {
                if (quotes[i].k > q10 && quotes[i].k < q90)
                    pool.push_back(i);
                else
                    result.test.push_back(quotes[i]);
            }
        }
        std::shuffle(pool.begin(), pool.end(), rng);
        const std::size_t n_train = pool.size() / 2;
        for (std::size_t j = 0; j < pool.size(); ++j)
            (j < n_train ? result.train : result.test).push_back(quotes[pool[j]]);
    }
    sort_by_point(result.train);
    sort_by_point(result.test);
    return result;
}

namespace {

void fill_fit_metrics(const SurfaceModel& model, const std::vector<Quote>& quotes,
                      MetricsSide& side) {
    if (quotes.empty()) return;
    double sq = 0.0;
    double ape = 0.0;
    for (const Quote& q : quotes) {
        const double err = implied_vol_of(model, q.k, q.tau) - q.iv;
        sq += err * err;
        ape += std::abs(err) / q.iv;
    }
    const double n = static_cast<double>(quotes.size());
    side.rmse = std::sqrt(sq / n);
    side.mape = ape / n;
}

} // namespace

MetricsRow evaluate(const SurfaceModel& model, const std::vector<Quote>& train,
                    const std::vector<Quote>& test, const ConstraintGrids& grids) {
    MetricsRow row;
    fill_fit_metrics(model, train, row.train);
    fill_fit_metrics(model, test, row.test);
    const PenaltyLosses penalties = penalty_losses(model, grids);
    for (MetricsSide* side : {&row.train, &row.test}) {
        side->c4 = penalties.c4;
        side->c5 = penalties.c5;
        side->c6 = penalties.c6;
    }
    return row;
}

MetricsSide bates_metrics(const BatesParams& params, const std::vector<Quote>& quotes) {
    std::map<double, std::vector<std::size_t>> slices;
    for (std::size_t i = 0; i < quotes.size(); ++i) slices[quotes[i].tau].push_back(i);

    MetricsSide side;
    double sq = 0.0;
    double ape = 0.0;
    std::size_t n = 0;
    for (const auto& [tau, idx] : slices) {
        std::vector<double> strikes;
        for (const std::size_t i : idx) strikes.push_back(std::exp(quotes[i].k));
        const FftCallPrices priced = fft_call_prices(params, tau, 1.0, strikes);
        for (std::size_t m = 0; m < idx.size(); ++m) {
            const Quote& q = quotes[idx[m]];
            const double call = priced.prices[m];
            if (!std::isfinite(call)) continue;
            const bool otm_call = q.k >= 0.0;
            const double price = otm_call ? call : call + strikes[m] - 1.0;
            double iv = 0.0;
            try {
                iv = implied_vol(price, 1.0, 0.0, 0.0, strikes[m], tau, otm_call);
            } catch (const PriceOutOfBounds&) {
                continue;
            } catch (const NoConvergence&) {
                continue;
            }
            const double err = iv - q.iv;
            sq += err * err;
            ape += std::abs(err) / q.iv;
            ++n;
        }
    }
    if (n > 0) {
        side.rmse = std::sqrt(sq / static_cast<double>(n));
        side.mape = ape / static_cast<double>(n);
    }
    return side;
}

std::vector<SummaryEntry> summarize(const std::vector<MetricsRow>& rows) {
    if (rows.empty()) throw InvalidInput("summarize: no rows");
    const char* names[] = {"rmse", "mape", "c4", "c5", "c6"};
    const auto pick = [](const MetricsSide& side, int metric) {
        switch (metric) {
            case 0: return side.rmse;
            case 1: return side.mape;
            case 2: return side.c4;
            case 3: return side.c5;
            default: return side.c6;
        }
    };
    std::vector<SummaryEntry> entries;
    for (int metric = 0; metric < 5; ++metric) {
        for (const bool is_train : {true, false}) {
            std::vector<double> values;
            for (const MetricsRow& row : rows)
                values.push_back(100.0 * pick(is_train ? row.train : row.test, metric));
            SummaryEntry entry;
            entry.metric = names[metric];
            entry.side = is_train ? "train" : "test";
            entry.q05 = quantile(values, 0.05);
            entry.q50 = quantile(values, 0.50);
            entry.q95 = quantile(values, 0.95);
            entries.push_back(entry);
        }
    }
    return entries;
}

std::string render_percent(double value) {
    if (value > 99.0) return "99+";
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.2f", value);
    return buffer;
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
    std::ostringstream out;
    out << "day,train_rmse,train_mape,train_c4,train_c5,train_c6"
           ",test_rmse,test_mape,test_c4,test_c5,test_c6\n";
    for (std::size_t day = 0; day < rows.size(); ++day) {
        out << day;
        for (const MetricsSide* side : {&rows[day].train, &rows[day].test}) {
            out << ',' << format_double(side->rmse) << ',' << format_double(side->mape) << ','
                << format_double(side->c4) << ',' << format_double(side->c5) << ','
                << format_double(side->c6);
        }
        out << '\n';
    }
    return out.str();
}

std::string summary_to_csv(const std::vector<SummaryEntry>& entries) {
    std::ostringstream out;
    out << "metric,side,q05,q50,q95\n";
    for (const SummaryEntry& entry : entries) {
        out << entry.metric << ',' << entry.side << ',' << format_double(entry.q05) << ','
            << format_double(entry.q50) << ',' << format_double(entry.q95) << '\n';
    }
    return out.str();
}

std::string summary_table(const std::string& title, const std::vector<SummaryEntry>& entries) {
    std::ostringstream out;
    out << title << '\n';
    char line[160];
    std::snprintf(line, sizeof(line), "%-8s%10s%10s%10s%10s%10s%10s\n", "metric", "train_q05",
                  "train_q50", "train_q95", "test_q05", "test_q50", "test_q95");
    out << line;
    for (const char* name : {"rmse", "mape", "c4", "c5", "c6"}) {
        const SummaryEntry* train = nullptr;
        const SummaryEntry* test = nullptr;
        for (const SummaryEntry& entry : entries) {
            if (entry.metric != name) continue;
            (entry.side == "train" ? train : test) = &entry;
        }
        if (train == nullptr || test == nullptr) continue;
        std::snprintf(line, sizeof(line), "%-8s%10s%10s%10s%10s%10s%10s\n", name,
                      render_percent(train->q05).c_str(), render_percent(train->q50).c_str(),
                      render_percent(train->q95).c_str(), render_percent(test->q05).c_str(),
                      render_percent(test->q50).c_str(), render_percent(test->q95).c_str());
        out << line;
    }
    return out.str();
}

} // namespace volfit
