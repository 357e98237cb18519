#pragma once

#include <string>
#include <vector>

#include "volfit/quote.hpp"

namespace volfit {

/// One raw option record as quoted: absolute strike and premium, ISO-8601
/// dates, the underlying close attached to the quote date.
struct RawQuote {
    std::string quote_date;
    std::string expiry_date;
    bool is_call = true;
    double strike = 0.0;
    double bid = 0.0;
    double ask = 0.0;
    double underlying_close = 0.0;

    double mid() const { return 0.5 * (bid + ask); }
};

/// Throws InvalidInput unless strike > 0, 0 <= bid <= ask,
/// underlying_close > 0 and expiry_date > quote_date.
void validate(const RawQuote& raw);

/// Calendar days from one ISO-8601 date to another (negative when the
/// second date is earlier). Throws ParseError on malformed dates.
long days_between(const std::string& from_date, const std::string& to_date);

/// Per-maturity carry implied from put-call parity:
/// regress call_mid - put_mid on (S, -K) without intercept, then
/// r = -log(beta_k)/tau and delta = -log(beta_s)/tau.
struct CurvePoint {
    double tau = 0.0;
    double implied_r = 0.0;
    double implied_delta = 0.0;
    double beta_s = 0.0;
    double beta_k = 0.0;
    int n_pairs = 0;
};

/// Fits the parity regression over strikes within +-7.5% of spot that quote
/// both a call and a put. All records must share one quote date and one
/// expiry. Throws InvalidInput when fewer than two distinct strikes pair up
/// or when a regression slope is not positive.
CurvePoint implied_carry(const std::vector<RawQuote>& chain);

struct IngestResult {
    std::vector<Quote> quotes;
    /// One entry per dropped contract or skipped maturity.
    std::vector<std::string> warnings;
};

/// Full one-date pipeline: per-maturity implied carry, forward log
/// moneyness, Brent implied vols from mid prices, then the liquidity
/// filters (out-of-the-money only, 2..730 days, |k| <= 1.5, iv < 3).
/// Bid/ask vols are attached when both sides invert. Throws InvalidInput
/// when no contract survives.
IngestResult build_dataset(const std::vector<RawQuote>& one_date);

/// CSV schema (header required):
/// quote_date,expiry_date,cp_flag,strike,bid,ask,underlying_close
/// with cp_flag C or P. Throws ParseError on schema violations.
std::vector<RawQuote> raw_quotes_from_csv(const std::string& text);
std::string raw_quotes_to_csv(const std::vector<RawQuote>& raws);

} // namespace volfit
