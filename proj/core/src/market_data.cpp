#include "volfit/market_data.hpp"

#include "volfit/errors.hpp"
#include "volfit/pricing.hpp"
#include "volfit/textio.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>

namespace volfit {

namespace {

constexpr double kBandLow = 0.925;
constexpr double kBandHigh = 1.075;
constexpr long kMinDays = 2;
constexpr long kMaxDays = 730;
constexpr double kMaxAbsK = 1.5;
constexpr double kMaxIv = 3.0;

bool all_digits(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

/// Days since 1970-01-01 of a proleptic Gregorian date (Euclidean-era form).
long days_from_civil(long y, unsigned m, unsigned d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned long yoe = static_cast<unsigned long>(y - era * 400);
    const unsigned long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

long parse_iso_date(const std::string& text) {
    const auto fail = [&] { throw ParseError("invalid ISO-8601 date: '" + text + "'"); };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') fail();
    const std::string_view ys{text.data(), 4};
    const std::string_view ms{text.data() + 5, 2};
    const std::string_view ds{text.data() + 8, 2};
    if (!all_digits(ys) || !all_digits(ms) || !all_digits(ds)) fail();
    const long y = parse_long(ys);
    const long m = parse_long(ms);
    const long d = parse_long(ds);
    if (m < 1 || m > 12) fail();
    static constexpr int kDays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    const int last = kDays[m - 1] + (m == 2 && leap ? 1 : 0);
    if (d < 1 || d > last) fail();
    return days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

std::optional<double> try_implied_vol(double price, double spot, double r, double q, double strike,
                                      double tau, bool is_call) {
    try {
        return implied_vol(price, spot, r, q, strike, tau, is_call);
    } catch (const PriceOutOfBounds&) {
        return std::nullopt;
    } catch (const NoConvergence&) {
        return std::nullopt;
    }
}

} // namespace

void validate(const RawQuote& raw) {
    if (!(raw.strike > 0.0)) throw InvalidInput("raw quote: strike must be positive");
    if (!(raw.bid >= 0.0)) throw InvalidInput("raw quote: bid must be non-negative");
    if (!(raw.ask >= raw.bid)) throw InvalidInput("raw quote: ask must not be below bid");
    if (!(raw.underlying_close > 0.0))
        throw InvalidInput("raw quote: underlying close must be positive");
    if (days_between(raw.quote_date, raw.expiry_date) <= 0)
        throw InvalidInput("raw quote: expiry must be after the quote date");
}

long days_between(const std::string& from_date, const std::string& to_date) {
    return parse_iso_date(to_date) - parse_iso_date(from_date);
}

CurvePoint implied_carry(const std::vector<RawQuote>& chain) {
    if (chain.empty()) throw InvalidInput("implied_carry: empty chain");
    const std::string& date = chain.front().quote_date;
    const std::string& expiry = chain.front().expiry_date;
    const double spot = chain.front().underlying_close;
    for (const RawQuote& raw : chain) {
        if (raw.quote_date != date || raw.expiry_date != expiry)
            throw InvalidInput("implied_carry: records span several dates or expiries");
        if (raw.underlying_close != spot)
            throw InvalidInput("implied_carry: inconsistent underlying close");
    }

    struct Pair {
        std::optional<double> call;
        std::optional<double> put;
    };
    std::map<double, Pair> by_strike;
    for (const RawQuote& raw : chain) {
        const double moneyness = raw.strike / spot;
        if (moneyness < kBandLow || moneyness > kBandHigh) continue;
        Pair& pair = by_strike[raw.strike];
        (raw.is_call ? pair.call : pair.put) = raw.mid();
    }

    std::vector<double> strikes;
    std::vector<double> parity; // call mid - put mid
    for (const auto& [strike, pair] : by_strike) {
        if (pair.call && pair.put) {
            strikes.push_back(strike);
            parity.push_back(*pair.call - *pair.put);
        }
    }
    if (strikes.size() < 2)
        throw InvalidInput("implied_carry: need at least two strike pairs around the money");

    // Least squares of parity on (S, -K); S is constant within the chain, so
    // the normal equations reduce to a 2x2 solve in (beta_s, beta_k).
    const double n = static_cast<double>(strikes.size());
    double sum_k = 0.0;
    double sum_kk = 0.0;
    double sum_y = 0.0;
    double sum_ky = 0.0;
    for (std::size_t i = 0; i < strikes.size(); ++i) {
        sum_k += strikes[i];
        sum_kk += strikes[i] * strikes[i];
        sum_y += parity[i];
        sum_ky += strikes[i] * parity[i];
    }
    const double a11 = n * spot * spot;
    const double a12 = -spot * sum_k;
    const double a22 = sum_kk;
    const double b1 = spot * sum_y;
    const double b2 = -sum_ky;
    const double det = a11 * a22 - a12 * a12;
    if (!(std::abs(det) > 0.0))
        throw InvalidInput("implied_carry: degenerate strike design");
    const double beta_s = (b1 * a22 - b2 * a12) / det;
    const double beta_k = (a11 * b2 - a12 * b1) / det;
    if (!(beta_s > 0.0) || !(beta_k > 0.0))
        throw InvalidInput("implied_carry: nonpositive parity slope, cannot take logs");

    CurvePoint point;
    point.tau = static_cast<double>(days_between(date, expiry)) / 365.0;
    point.beta_s = beta_s;
    point.beta_k = beta_k;
    point.implied_r = -std::log(beta_k) / point.tau;
    point.implied_delta = -std::log(beta_s) / point.tau;
    point.n_pairs = static_cast<int>(strikes.size());
    return point;
}

IngestResult build_dataset(const std::vector<RawQuote>& one_date) {
    if (one_date.empty()) throw InvalidInput("build_dataset: no raw quotes");
    const std::string& date = one_date.front().quote_date;
    for (const RawQuote& raw : one_date) {
        validate(raw);
        if (raw.quote_date != date)
            throw InvalidInput("build_dataset: records span several quote dates");
    }

    std::map<std::string, std::vector<const RawQuote*>> by_expiry;
    for (const RawQuote& raw : one_date) by_expiry[raw.expiry_date].push_back(&raw);

    IngestResult out;
    for (const auto& [expiry, contracts] : by_expiry) {
        const long days = days_between(date, expiry);
        if (days < kMinDays || days > kMaxDays) continue;
        const double tau = static_cast<double>(days) / 365.0;

        CurvePoint carry;
        try {
            std::vector<RawQuote> chain;
            chain.reserve(contracts.size());
            for (const RawQuote* raw : contracts) chain.push_back(*raw);
            carry = implied_carry(chain);
        } catch (const InvalidInput& e) {
            out.warnings.push_back("expiry " + expiry + ": " + e.what());
            continue;
        }

        for (const RawQuote* raw : contracts) {
            const double spot = raw->underlying_close;
            const double k = std::log(raw->strike / spot) -
                             (carry.implied_r - carry.implied_delta) * tau;
            if (raw->is_call ? !(k > 0.0) : !(k < 0.0)) continue;
            if (std::abs(k) > kMaxAbsK) continue;

            const auto describe = [&] {
                std::ostringstream label;
                label << (raw->is_call ? "call" : "put") << " K=" << format_double(raw->strike)
                      << " expiry " << expiry;
                return label.str();
            };
            const std::optional<double> iv =
                try_implied_vol(raw->mid(), spot, carry.implied_r, carry.implied_delta,
                                raw->strike, tau, raw->is_call);
            if (!iv) {
                out.warnings.push_back(describe() + ": mid price does not invert");
                continue;
            }
            if (!(*iv < kMaxIv)) continue;

            Quote quote;
            quote.k = k;
            quote.tau = tau;
            quote.iv = *iv;
            quote.date = date;
            const std::optional<double> bid_iv =
                try_implied_vol(raw->bid, spot, carry.implied_r, carry.implied_delta, raw->strike,
                                tau, raw->is_call);
            const std::optional<double> ask_iv =
                try_implied_vol(raw->ask, spot, carry.implied_r, carry.implied_delta, raw->strike,
                                tau, raw->is_call);
            if (bid_iv && ask_iv) {
                quote.bid_iv = bid_iv;
                quote.ask_iv = ask_iv;
            }
            out.quotes.push_back(quote);
        }
    }
    if (out.quotes.empty()) throw InvalidInput("build_dataset: no contract survived the filters");
    return out;
}

std::vector<RawQuote> raw_quotes_from_csv(const std::string& text) {
    constexpr std::string_view kHeader = "quote_date,expiry_date,cp_flag,strike,bid,ask,underlying_close";
    std::istringstream lines(text);
    std::string line;
    if (!std::getline(lines, line) || line != kHeader)
        throw ParseError("raw quotes csv: missing or wrong header");
    std::vector<RawQuote> out;
    std::size_t line_no = 1;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string_view> fields = split_csv_line(line);
        if (fields.size() != 7)
            throw ParseError("raw quotes csv line " + std::to_string(line_no) +
                             ": expected 7 fields");
        RawQuote raw;
        raw.quote_date = std::string(fields[0]);
        raw.expiry_date = std::string(fields[1]);
        if (fields[2] == "C") {
            raw.is_call = true;
        } else if (fields[2] == "P") {
            raw.is_call = false;
        } else {
            throw ParseError("raw quotes csv line " + std::to_string(line_no) +
                             ": cp_flag must be C or P");
        }
        try {
            raw.strike = parse_double(fields[3]);
            raw.bid = parse_double(fields[4]);
            raw.ask = parse_double(fields[5]);
            raw.underlying_close = parse_double(fields[6]);
            validate(raw);
        } catch (const std::exception& e) {
            throw ParseError("raw quotes csv line " + std::to_string(line_no) + ": " + e.what());
        }
        out.push_back(std::move(raw));
    }
    return out;
}

std::string raw_quotes_to_csv(const std::vector<RawQuote>& raws) {
    std::string out = "quote_date,expiry_date,cp_flag,strike,bid,ask,underlying_close\n";
    for (const RawQuote& raw : raws) {
        out += raw.quote_date;
        out += ',';
        out += raw.expiry_date;
        out += ',';
        out += raw.is_call ? 'C' : 'P';
        out += ',';
        out += format_double(raw.strike);
        out += ',';
        out += format_double(raw.bid);
        out += ',';
        out += format_double(raw.ask);
        out += ',';
        out += format_double(raw.underlying_close);
        out += '\n';
    }
    return out;
}

} // namespace volfit
