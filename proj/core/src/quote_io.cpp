#include "volfit/quote_io.hpp"

#include "volfit/errors.hpp"
#include "volfit/textio.hpp"

#include <cmath>

namespace volfit {

void validate(const Quote& quote) {
    if (!(std::isfinite(quote.k) && std::isfinite(quote.tau) && std::isfinite(quote.iv))) {
        throw InvalidInput("non-finite quote field");
    }
    if (!(quote.tau > 0.0)) throw InvalidInput("quote tau must be positive");
    if (!(quote.iv > 0.0)) throw InvalidInput("quote iv must be positive");
    if (quote.bid_iv && quote.ask_iv && !(*quote.bid_iv <= *quote.ask_iv)) {
        throw InvalidInput("quote bid_iv above ask_iv");
    }
}

void validate(const std::vector<Quote>& quotes) {
    for (const auto& q : quotes) validate(q);
}

std::string quotes_to_csv(const std::vector<Quote>& quotes) {
    std::string out = "date,tau,k,iv,bid_iv,ask_iv\n";
    for (const auto& q : quotes) {
        out += q.date;
        out += ',';
        out += format_double(q.tau);
        out += ',';
        out += format_double(q.k);
        out += ',';
        out += format_double(q.iv);
        out += ',';
        if (q.bid_iv) out += format_double(*q.bid_iv);
        out += ',';
        if (q.ask_iv) out += format_double(*q.ask_iv);
        out += '\n';
    }
    return out;
}

std::vector<Quote> quotes_from_csv(const std::string& text) {
    std::vector<Quote> quotes;
    size_t pos = 0;
    size_t line_no = 0;
    bool saw_header = false;
    while (pos < text.size()) {
        size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (!saw_header) {
            if (line != "date,tau,k,iv,bid_iv,ask_iv") {
                throw ParseError("quotes CSV: unexpected header '" + std::string(line) + "'");
            }
            saw_header = true;
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 6) {
            throw ParseError("quotes CSV line " + std::to_string(line_no) + ": expected 6 fields");
        }
        Quote q;
        q.date = std::string(fields[0]);
        q.tau = parse_double(fields[1]);
        q.k = parse_double(fields[2]);
        q.iv = parse_double(fields[3]);
        if (!fields[4].empty()) q.bid_iv = parse_double(fields[4]);
        if (!fields[5].empty()) q.ask_iv = parse_double(fields[5]);
        validate(q);
        quotes.push_back(std::move(q));
    }
    if (!saw_header) throw ParseError("quotes CSV: missing header");
    return quotes;
}

void write_quotes_csv(const std::filesystem::path& path, const std::vector<Quote>& quotes) {
    write_text_file_atomic(path, quotes_to_csv(quotes));
}

std::vector<Quote> read_quotes_csv(const std::filesystem::path& path) {
    return quotes_from_csv(read_text_file(path));
}

} // namespace volfit
