#include "volfit/analytics.hpp"
#include "volfit/atm_curve.hpp"
#include "volfit/checkpoint.hpp"
#include "volfit/market_data.hpp"
#include "volfit/net.hpp"
#include "volfit/pricing.hpp"
#include "volfit/quote_io.hpp"
#include "volfit/textio.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace volfit;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "volfit_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

int run(const std::string& args, const std::string& log_name = "") {
    std::string cmd = std::string(VOLFIT_CLI_PATH) + " " + args;
    const fs::path log =
        work_dir() / (log_name.empty() ? "last" : log_name);
    cmd += " >" + (log.string() + ".out") + " 2>" + (log.string() + ".err");
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& path) { return read_text_file(path); }

std::string quick_config_path() {
    static const std::string path = [] {
        const fs::path p = work_dir() / "quick.json";
        write_text_file_atomic(p, "{\"max_epochs\": 40, \"hidden_widths\": [6, 6], "
                                  "\"early_stopping\": false}\n");
        return p.string();
    }();
    return path;
}

} // namespace

TEST_CASE("synth writes the quote grid reproducibly") {
    const fs::path base = work_dir() / "synth_base.csv";
    const fs::path zero = work_dir() / "synth_zero.csv";
    REQUIRE(run("synth --out " + base.string(), "synth1") == 0);
    REQUIRE(fs::exists(base));
    const std::vector<Quote> quotes = read_quotes_csv(base);
    CHECK(quotes.size() <= 324);
    CHECK(quotes.size() == 284);

    REQUIRE(run("synth --out " + zero.string() + " --noise 0 --seed 9", "synth2") == 0);
    CHECK(slurp(zero) == slurp(base));

    const fs::path noisy_a = work_dir() / "synth_a.csv";
    const fs::path noisy_b = work_dir() / "synth_b.csv";
    const fs::path noisy_c = work_dir() / "synth_c.csv";
    REQUIRE(run("synth --out " + noisy_a.string() + " --noise 0.02 --seed 5", "synth3") == 0);
    REQUIRE(run("synth --out " + noisy_b.string() + " --noise 0.02 --seed 5", "synth4") == 0);
    REQUIRE(run("synth --out " + noisy_c.string() + " --noise 0.02 --seed 6", "synth5") == 0);
    CHECK(slurp(noisy_a) == slurp(noisy_b));
    CHECK(slurp(noisy_a) != slurp(noisy_c));

    const std::string manifest = slurp(base.string() + ".manifest.json");
    CHECK(manifest.find("\"command\": \"synth\"") != std::string::npos);
    CHECK(manifest.find("\"version\"") != std::string::npos);

    // Parameter file: a lower vol-of-vol changes the surface.
    const fs::path params = work_dir() / "params.json";
    write_text_file_atomic(params, "{\"sigma_v\": 0.5}\n");
    const fs::path alt = work_dir() / "synth_alt.csv";
    REQUIRE(run("synth --params " + params.string() + " --out " + alt.string(), "synth6") == 0);
    CHECK(slurp(alt) != slurp(base));
    const fs::path bad_params = work_dir() / "bad_params.json";
    write_text_file_atomic(bad_params, "{\"sigma_v\": -1}\n");
    CHECK(run("synth --params " + bad_params.string() + " --out " + alt.string(), "synth7") == 1);
}

TEST_CASE("ingest matches the library pipeline") {
    std::vector<RawQuote> raws;
    for (const double strike : {90.0, 95.0, 105.0, 110.0}) {
        for (const bool is_call : {true, false}) {
            RawQuote raw;
            raw.quote_date = "2006-09-15";
            raw.expiry_date = "2006-12-15";
            raw.is_call = is_call;
            raw.strike = strike;
            const double price =
                is_call ? bs_call_price(100.0, 0.25, 0.0, 0.0, strike, 91.0 / 365.0)
                        : bs_put_price(100.0, 0.25, 0.0, 0.0, strike, 91.0 / 365.0);
            raw.bid = price;
            raw.ask = price;
            raw.underlying_close = 100.0;
            raws.push_back(raw);
        }
    }
    const fs::path raw_path = work_dir() / "raw.csv";
    write_text_file_atomic(raw_path, raw_quotes_to_csv(raws));
    const fs::path out = work_dir() / "ingested.csv";
    REQUIRE(run("ingest --raw " + raw_path.string() + " --out " + out.string(), "ingest") == 0);
    CHECK(slurp(out) == quotes_to_csv(build_dataset(raws).quotes));

    CHECK(run("ingest --raw " + (work_dir() / "missing.csv").string() + " --out " + out.string(),
              "ingest_missing") == 1);
}

TEST_CASE("fit trains, audits and reruns identically") {
    const fs::path data = work_dir() / "synth_base.csv";
    if (!fs::exists(data)) REQUIRE(run("synth --out " + data.string(), "synth_fit") == 0);

    const fs::path model = work_dir() / "model.json";
    const std::string fit_args = "fit --data " + data.string() + " --config " +
                                 quick_config_path() + " --out " + model.string();
    REQUIRE(run(fit_args, "fit1") == 0);
    REQUIRE(fs::exists(model));
    REQUIRE(fs::exists(work_dir() / "model_history.csv"));
    REQUIRE(fs::exists(work_dir() / "model_audit.json"));
    const std::string stdout_text = slurp(work_dir() / "fit1.out");
    CHECK(stdout_text.find("stop=max-epochs") != std::string::npos);
    CHECK(slurp(work_dir() / "model_history.csv").rfind("epoch,total,l0,c4,c5,c6,atm,lr", 0) == 0);
    const SurfaceModel fitted = load_checkpoint(model.string());
    CHECK(fitted.prior == PriorKind::Ssvi);

    // Determinism: a rerun reproduces the checkpoint byte for byte.
    const std::string first = slurp(model);
    REQUIRE(run(fit_args, "fit2") == 0);
    CHECK(slurp(model) == first);

    // A different prior trains different parameters.
    const fs::path bs_model = work_dir() / "model_bs.json";
    REQUIRE(run("fit --data " + data.string() + " --config " + quick_config_path() +
                    " --prior bs --out " + bs_model.string(),
                "fit3") == 0);
    CHECK(slurp(bs_model) != first);
    CHECK(load_checkpoint(bs_model.string()).prior == PriorKind::BlackScholes);

    // Warm start resumes from the checkpoint.
    const fs::path resumed = work_dir() / "model_resumed.json";
    REQUIRE(run("fit --data " + data.string() + " --config " + quick_config_path() +
                    " --warm-start " + model.string() + " --out " + resumed.string(),
                "fit4") == 0);
    CHECK(fs::exists(resumed));

    CHECK(run("fit --data " + (work_dir() / "missing.csv").string() + " --out " + model.string(),
              "fit5") == 1);
    CHECK(run("fit --data " + data.string() + " --prior bogus --out " + model.string(), "fit6") ==
          1);

    // A checkpoint driven into saturation makes the resumed loss non-finite.
    SurfaceModel broken = load_checkpoint(model.string());
    broken.mlp.biases.back()(0) = -100.0;
    save_checkpoint(broken, (work_dir() / "broken.json").string());
    CHECK(run("fit --data " + data.string() + " --config " + quick_config_path() +
                  " --warm-start " + (work_dir() / "broken.json").string() + " --out " +
                  (work_dir() / "never.json").string(),
              "fit7") == 2);
}

TEST_CASE("audit reports a stored checkpoint") {
    const fs::path model = work_dir() / "model.json";
    REQUIRE(fs::exists(model));
    REQUIRE(run("audit --model " + model.string(), "audit1") == 0);
    const std::string out = slurp(work_dir() / "audit1.out");
    CHECK(out.find("\"worst_cal\"") != std::string::npos);
    CHECK(out.find("\"worst_but\"") != std::string::npos);
    CHECK(out.find("\"lee_max\"") != std::string::npos);

    const fs::path report = work_dir() / "audit.json";
    REQUIRE(run("audit --model " + model.string() + " --out " + report.string(), "audit2") == 0);
    CHECK(slurp(report) == out);

    CHECK(run("audit --model " + (work_dir() / "missing.json").string(), "audit3") == 1);
}

TEST_CASE("surface exports a flat fit as a constant vol column") {
    SurfaceModel flat;
    flat.mlp = init_params({5, 5}, 2);
    zero_output_layer(flat.mlp);
    flat.prior = PriorKind::BlackScholes;
    std::vector<AtmKnot> knots;
    for (const double tau : {0.1, 0.5, 1.0, 3.0}) knots.push_back({tau, 0.04 * tau});
    flat.atm = AtmTermStructure::from_knots(knots);
    flat.ranges = {-0.5, 0.5, 2.0};
    const fs::path model = work_dir() / "flat.json";
    save_checkpoint(flat, model.string());

    const fs::path out = work_dir() / "surface.csv";
    REQUIRE(run("surface --model " + model.string() + " --grid -0.4:0.4:9,0.25:1.75:4 --out " +
                    out.string(),
                "surface1") == 0);
    const std::string csv = slurp(out);
    CHECK(csv.rfind("k,tau,iv,total_variance,density,local_vol\n", 0) == 0);

    std::size_t rows = 0;
    std::size_t pos = csv.find('\n') + 1;
    while (pos < csv.size()) {
        const std::size_t end = csv.find('\n', pos);
        const std::string line = csv.substr(pos, end - pos);
        const auto fields = split_csv_line(line);
        REQUIRE(fields.size() == 6);
        const double k = parse_double(fields[0]);
        const double tau = parse_double(fields[1]);
        CHECK(parse_double(fields[2]) == Catch::Approx(0.2).margin(1e-9));
        CHECK(parse_double(fields[3]) == Catch::Approx(0.04 * tau).margin(1e-9));
        CHECK(parse_double(fields[4]) ==
              Catch::Approx(density(flat, k, tau, StrikeInput::LogMoneyness)).margin(1e-12));
        CHECK(parse_double(fields[5]) == Catch::Approx(0.2).margin(1e-6));
        ++rows;
        pos = end + 1;
    }
    CHECK(rows == 9 * 4);

    CHECK(run("surface --model " + model.string() + " --grid bogus --out " + out.string(),
              "surface2") == 1);
    CHECK(run("surface --model " + model.string() + " --grid -0.4:0.4:9,-1:2:4 --out " +
                  out.string(),
              "surface3") == 1);
}

TEST_CASE("backtest summarizes days and notes failures") {
    const fs::path days = work_dir() / "days";
    fs::create_directories(days);
    REQUIRE(run("synth --out " + (days / "d0.csv").string() + " --noise 0.02 --seed 0",
                "bt_synth0") == 0);
    REQUIRE(run("synth --out " + (days / "d1.csv").string() + " --noise 0.02 --seed 1",
                "bt_synth1") == 0);

    const fs::path summary = work_dir() / "summary.csv";
    REQUIRE(run("backtest --data-dir " + days.string() + " --mode interp --lambda 10 --seeds 3" +
                    " --config " + quick_config_path() + " --out " + summary.string(),
                "bt1") == 0);
    const std::string summary_csv = slurp(summary);
    CHECK(summary_csv.rfind("metric,side,q05,q50,q95\n", 0) == 0);
    CHECK(std::count(summary_csv.begin(), summary_csv.end(), '\n') == 11);
    const std::string days_csv = slurp(work_dir() / "summary_days.csv");
    CHECK(std::count(days_csv.begin(), days_csv.end(), '\n') == 4); // header + 3 days
    const std::string table = slurp(work_dir() / "bt1.out");
    CHECK(table.find("days=3/3") != std::string::npos);
    CHECK(table.find("rmse") != std::string::npos);

    // ssvi baseline runs the prior alone; bates calibrates per day.
    REQUIRE(run("backtest --data-dir " + days.string() + " --mode extrap --seeds 1" +
                    " --baseline ssvi --config " + quick_config_path() + " --out " +
                    summary.string(),
                "bt2") == 0);
    CHECK(slurp(work_dir() / "bt2.out").find("baseline=ssvi") != std::string::npos);

    CHECK(run("backtest --data-dir " + (work_dir() / "empty_dir").string() + " --out " +
                  summary.string(),
              "bt3") == 1);
    CHECK(run("backtest --data-dir " + days.string() + " --mode bogus --out " + summary.string(),
              "bt4") == 1);
}

TEST_CASE("argument errors exit with the input-error code") {
    CHECK(run("", "cli1") == 1);                     // missing subcommand
    CHECK(run("frobnicate", "cli2") == 1);           // unknown subcommand
    CHECK(run("synth", "cli3") == 1);                // missing required --out
    CHECK(run("--help", "cli4") == 0);
    CHECK(run("synth --help", "cli5") == 0);
}
