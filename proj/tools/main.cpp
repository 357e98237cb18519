#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "cli_support.hpp"
#include "volfit/analytics.hpp"
#include "volfit/arbitrage.hpp"
#include "volfit/checkpoint.hpp"
#include "volfit/errors.hpp"
#include "volfit/market_data.hpp"
#include "volfit/quote_io.hpp"
#include "volfit/synthetic.hpp"
#include "volfit/textio.hpp"
#include "volfit/trainer.hpp"

namespace fs = std::filesystem;
using namespace volfit;

namespace {

int thread_budget() {
    if (const char* env = std::getenv("VOLFIT_THREADS")) {
        const long n = parse_long(env);
        if (n < 1) throw InvalidInput("VOLFIT_THREADS must be at least 1");
        return static_cast<int>(n);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

PriorKind prior_from_string(const std::string& name) {
    if (name == "bs") return PriorKind::BlackScholes;
    if (name == "ssvi") return PriorKind::Ssvi;
    throw InvalidInput("prior must be bs or ssvi; got: " + name);
}

std::string sibling_path(const std::string& primary, const std::string& suffix) {
    fs::path p(primary);
    const std::string stem = p.stem().string();
    return (p.parent_path() / (stem + suffix)).string();
}

TrainConfig load_train_config(const std::string& path) {
    if (path.empty()) return TrainConfig{};
    return TrainConfig::from_json(read_text_file(path));
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << '\n';
}

double best_total(const std::vector<HistoryRow>& history) {
    double best = std::numeric_limits<double>::infinity();
    for (const HistoryRow& row : history) best = std::min(best, row.total);
    return best;
}

// --- synth ------------------------------------------------------------

struct SynthArgs {
    std::string params_path;
    std::string out;
    double noise = 0.0;
    std::uint64_t seed = 0;
};

void run_synth(const SynthArgs& args) {
    cli::ManifestWriter manifest("synth");
    BatesParams params = BatesParams::defaults();
    if (!args.params_path.empty() && args.params_path != "default") {
        params = cli::bates_params_from_json(read_text_file(args.params_path));
        manifest.manifest().inputs.push_back(args.params_path);
        manifest.manifest().config_path = args.params_path;
    }
    SyntheticDataset data = generate_dataset(params);
    print_warnings(data.warnings);
    if (args.noise > 0.0) data = perturb(data, args.noise, args.seed);
    write_quotes_csv(args.out, data.quotes);
    std::cout << "synth: " << data.quotes.size() << " quotes, " << data.warnings.size()
              << " skipped points -> " << args.out << '\n';
    manifest.manifest().outputs.push_back(args.out);
    manifest.manifest().seed = args.seed;
    manifest.write();
}

// --- ingest -----------------------------------------------------------

struct IngestArgs {
    std::string raw;
    std::string out;
};

void run_ingest(const IngestArgs& args) {
    cli::ManifestWriter manifest("ingest");
    const std::vector<RawQuote> raws = raw_quotes_from_csv(read_text_file(args.raw));
    const IngestResult result = build_dataset(raws);
    print_warnings(result.warnings);
    write_quotes_csv(args.out, result.quotes);
    std::cout << "ingest: " << raws.size() << " raw rows -> " << result.quotes.size()
              << " quotes, " << result.warnings.size() << " warnings -> " << args.out << '\n';
    manifest.manifest().inputs.push_back(args.raw);
    manifest.manifest().outputs.push_back(args.out);
    manifest.write();
}

// --- fit --------------------------------------------------------------

struct FitArgs {
    std::string data;
    std::string prior = "ssvi";
    std::string config_path;
    std::string out;
    std::string warm_start_path;
    std::string history_path;
    std::string audit_path;
};

void run_fit(const FitArgs& args) {
    cli::ManifestWriter manifest("fit");
    const std::vector<Quote> quotes = read_quotes_csv(args.data);
    const TrainConfig config = load_train_config(args.config_path);

    FitResult result;
    if (args.warm_start_path.empty()) {
        result = fit(quotes, prior_from_string(args.prior), config);
    } else {
        result = warm_start(load_checkpoint(args.warm_start_path), quotes, config);
        manifest.manifest().inputs.push_back(args.warm_start_path);
    }
    save_checkpoint(result.model, args.out);

    const std::string history_path =
        args.history_path.empty() ? sibling_path(args.out, "_history.csv") : args.history_path;
    write_history_csv(history_path, result.history);

    const ConstraintGrids grids = build_grids(result.model.ranges.k_min,
                                              result.model.ranges.k_max,
                                              result.model.ranges.tau_max);
    const ArbitrageReport report = audit(result.model, grids);
    const std::string audit_path =
        args.audit_path.empty() ? sibling_path(args.out, "_audit.json") : args.audit_path;
    write_text_file_atomic(audit_path, report_to_json(report));

    std::cout << "fit: stop=" << result.stop_reason << " epochs=" << result.epochs_run
              << " best_total=" << format_double(best_total(result.history))
              << " violations=" << report.violations.size() << '\n';

    manifest.manifest().inputs.push_back(args.data);
    manifest.manifest().config_path = args.config_path;
    manifest.manifest().outputs = {args.out, history_path, audit_path};
    manifest.manifest().seed = config.seed;
    manifest.write();
}

// --- audit ------------------------------------------------------------

struct AuditArgs {
    std::string model;
    std::string out;
};

void run_audit(const AuditArgs& args) {
    cli::ManifestWriter manifest("audit");
    const SurfaceModel model = load_checkpoint(args.model);
    const ConstraintGrids grids =
        build_grids(model.ranges.k_min, model.ranges.k_max, model.ranges.tau_max);
    const std::string json = report_to_json(audit(model, grids));
    std::cout << json;
    if (!args.out.empty()) {
        write_text_file_atomic(args.out, json);
        manifest.manifest().inputs.push_back(args.model);
        manifest.manifest().outputs.push_back(args.out);
        manifest.write();
    }
}

// --- surface ----------------------------------------------------------

struct SurfaceArgs {
    std::string model;
    std::string grid;
    std::string out;
};

void run_surface(const SurfaceArgs& args) {
    cli::ManifestWriter manifest("surface");
    const SurfaceModel model = load_checkpoint(args.model);
    const cli::GridSpec spec = cli::parse_grid_spec(args.grid);

    std::string csv = "k,tau,iv,total_variance,density,local_vol\n";
    for (const double tau : spec.tau_points()) {
        for (const double k : spec.k_points()) {
            const Jet2 jet = surface_jet(model, k, tau);
            double lv = std::numeric_limits<double>::quiet_NaN();
            try {
                lv = local_vol(model, k, tau);
            } catch (const NumericalError&) {
            }
            csv += format_double(k) + ',' + format_double(tau) + ',' +
                   format_double(std::sqrt(jet.v / tau)) + ',' + format_double(jet.v) + ',' +
                   format_double(density(model, k, tau, StrikeInput::LogMoneyness)) + ',' +
                   format_double(lv) + '\n';
        }
    }
    write_text_file_atomic(args.out, csv);
    std::cout << "surface: " << spec.nk << "x" << spec.nt << " grid -> " << args.out << '\n';

    manifest.manifest().inputs.push_back(args.model);
    manifest.manifest().outputs.push_back(args.out);
    manifest.write();
}

// --- backtest ---------------------------------------------------------

struct BacktestArgs {
    std::string data_dir;
    std::string mode = "interp";
    double lambda = 10.0;
    int seeds = 1;
    std::string out;
    std::string baseline = "none";
    std::string prior = "ssvi";
    std::string config_path;
};

MetricsRow backtest_day(const BacktestArgs& args, const TrainConfig& base_config,
                        const std::vector<Quote>& quotes, int day) {
    SplitSpec spec;
    spec.mode = SplitSpec::mode_from_string(args.mode);
    spec.seed = static_cast<std::uint64_t>(day);
    const SplitResult parts = split(quotes, spec);

    if (args.baseline == "bates") {
        const CalibrationResult fit = calibrate_bates(parts.train, BatesParams::defaults());
        MetricsRow row;
        row.train = bates_metrics(fit.params, parts.train);
        row.test = bates_metrics(fit.params, parts.test);
        return row;
    }

    TrainConfig config = base_config;
    config.lambda4 = config.lambda5 = config.lambda6 = args.lambda;
    config.seed = base_config.seed + static_cast<std::uint64_t>(day);
    if (args.baseline == "ssvi") {
        config.prior_only = true;
        config.lambda4 = config.lambda5 = config.lambda6 = 0.0;
        config.lambda_atm = 0.0;
    } else if (args.baseline != "none") {
        throw InvalidInput("baseline must be none, ssvi or bates; got: " + args.baseline);
    }
    const PriorKind prior =
        args.baseline == "ssvi" ? PriorKind::Ssvi : prior_from_string(args.prior);
    const FitResult fitted = fit(parts.train, prior, config);
    const ConstraintGrids grids = build_grids(fitted.model.ranges.k_min,
                                              fitted.model.ranges.k_max,
                                              fitted.model.ranges.tau_max);
    return evaluate(fitted.model, parts.train, parts.test, grids);
}

void run_backtest(const BacktestArgs& args) {
    cli::ManifestWriter manifest("backtest");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(args.data_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw InvalidInput("backtest: no .csv files in " + args.data_dir);
    if (args.seeds < 1) throw InvalidInput("backtest: --seeds must be at least 1");
    SplitSpec::mode_from_string(args.mode); // validate early

    const TrainConfig base_config = load_train_config(args.config_path);
    std::vector<std::vector<Quote>> days;
    for (int day = 0; day < args.seeds; ++day)
        days.push_back(read_quotes_csv(files[day % files.size()]));

    std::vector<std::optional<MetricsRow>> rows(days.size());
    std::vector<std::string> failures;
    std::mutex failures_mutex;
    std::atomic<int> next{0};
    const auto worker = [&]() {
        for (int day = next.fetch_add(1); day < static_cast<int>(days.size());
             day = next.fetch_add(1)) {
            try {
                rows[day] = backtest_day(args, base_config, days[day], day);
            } catch (const std::exception& e) {
                const std::lock_guard<std::mutex> lock(failures_mutex);
                failures.push_back("day " + std::to_string(day) + ": " + e.what());
            }
        }
    };
    const int n_threads = std::min<int>(thread_budget(), static_cast<int>(days.size()));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }

    for (const std::string& failure : failures) std::cerr << "warning: " << failure << '\n';
    std::vector<MetricsRow> completed;
    for (const auto& row : rows)
        if (row.has_value()) completed.push_back(*row);
    if (completed.empty()) throw NumericalError("backtest: every day failed");

    const std::string days_path = sibling_path(args.out, "_days.csv");
    write_text_file_atomic(days_path, metrics_to_csv(completed));
    const std::vector<SummaryEntry> summary = summarize(completed);
    std::string summary_csv = summary_to_csv(summary);
    if (!failures.empty())
        summary_csv += "# failed_days=" + std::to_string(failures.size()) + "\n";
    write_text_file_atomic(args.out, summary_csv);

    const std::string title = "mode=" + args.mode + " lambda=" + format_double(args.lambda) +
                              " baseline=" + args.baseline + " days=" +
                              std::to_string(completed.size()) + "/" +
                              std::to_string(days.size());
    std::cout << summary_table(title, summary);

    for (const fs::path& file : files) manifest.manifest().inputs.push_back(file.string());
    manifest.manifest().config_path = args.config_path;
    manifest.manifest().outputs = {args.out, days_path};
    manifest.manifest().seed = base_config.seed;
    manifest.write();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"neural implied-volatility surface toolkit"};
    app.require_subcommand(1);

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "generate the jump-diffusion option grid");
    synth->add_option("--params", synth_args.params_path,
                      "parameter JSON, or 'default' for the built-in values");
    synth->add_option("--out", synth_args.out, "quotes CSV path")->required();
    synth->add_option("--noise", synth_args.noise, "multiplicative vol noise level")
        ->check(CLI::NonNegativeNumber);
    synth->add_option("--seed", synth_args.seed, "noise seed");

    IngestArgs ingest_args;
    CLI::App* ingest = app.add_subcommand("ingest", "raw option chain to fitting dataset");
    ingest->add_option("--raw", ingest_args.raw, "raw chain CSV")->required();
    ingest->add_option("--out", ingest_args.out, "quotes CSV path")->required();

    FitArgs fit_args;
    CLI::App* fit_cmd = app.add_subcommand("fit", "train the surface on a quotes file");
    fit_cmd->add_option("--data", fit_args.data, "quotes CSV")->required();
    fit_cmd->add_option("--prior", fit_args.prior, "bs or ssvi (default ssvi)");
    fit_cmd->add_option("--config", fit_args.config_path, "training config JSON");
    fit_cmd->add_option("--out", fit_args.out, "checkpoint JSON path")->required();
    fit_cmd->add_option("--warm-start", fit_args.warm_start_path, "checkpoint to resume from");
    fit_cmd->add_option("--history", fit_args.history_path,
                        "loss history CSV (default <out>_history.csv)");
    fit_cmd->add_option("--audit-out", fit_args.audit_path,
                        "arbitrage report JSON (default <out>_audit.json)");

    AuditArgs audit_args;
    CLI::App* audit_cmd = app.add_subcommand("audit", "arbitrage report for a checkpoint");
    audit_cmd->add_option("--model", audit_args.model, "checkpoint JSON")->required();
    audit_cmd->add_option("--out", audit_args.out, "write the report here as well");

    SurfaceArgs surface_args;
    CLI::App* surface_cmd =
        app.add_subcommand("surface", "export vol/variance/density/local-vol on a grid");
    surface_cmd->add_option("--model", surface_args.model, "checkpoint JSON")->required();
    surface_cmd->add_option("--grid", surface_args.grid, "kmin:kmax:nk,tmin:tmax:nt")->required();
    surface_cmd->add_option("--out", surface_args.out, "surface CSV path")->required();

    BacktestArgs backtest_args;
    CLI::App* backtest_cmd =
        app.add_subcommand("backtest", "split/fit/evaluate across daily quote files");
    backtest_cmd->add_option("--data-dir", backtest_args.data_dir, "directory of daily quote CSVs")
        ->required();
    backtest_cmd->add_option("--mode", backtest_args.mode, "interp or extrap");
    backtest_cmd->add_option("--lambda", backtest_args.lambda, "penalty weight for C4/C5/C6")
        ->check(CLI::NonNegativeNumber);
    backtest_cmd->add_option("--seeds", backtest_args.seeds,
                             "number of days; day i reads file (i mod #files) with split seed i");
    backtest_cmd->add_option("--out", backtest_args.out, "summary CSV path")->required();
    backtest_cmd->add_option("--baseline", backtest_args.baseline, "none, ssvi or bates");
    backtest_cmd->add_option("--prior", backtest_args.prior, "prior for the fitted model");
    backtest_cmd->add_option("--config", backtest_args.config_path, "training config JSON");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) run_synth(synth_args);
        if (ingest->parsed()) run_ingest(ingest_args);
        if (fit_cmd->parsed()) run_fit(fit_args);
        if (audit_cmd->parsed()) run_audit(audit_args);
        if (surface_cmd->parsed()) run_surface(surface_args);
        if (backtest_cmd->parsed()) run_backtest(backtest_args);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NoConvergence& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const PriceOutOfBounds& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
