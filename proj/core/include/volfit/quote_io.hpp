#pragma once

#include "volfit/quote.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace volfit {

/// Shared quotes CSV schema: header "date,tau,k,iv,bid_iv,ask_iv",
/// bid_iv/ask_iv left empty when absent. UTF-8, LF line endings.
std::string quotes_to_csv(const std::vector<Quote>& quotes);
std::vector<Quote> quotes_from_csv(const std::string& text);

void write_quotes_csv(const std::filesystem::path& path, const std::vector<Quote>& quotes);
std::vector<Quote> read_quotes_csv(const std::filesystem::path& path);

} // namespace volfit
