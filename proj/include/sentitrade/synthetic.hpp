#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sentitrade/ingest.hpp"

namespace sentitrade::synthetic {

struct Options {
    std::size_t days = 400;
    Date start = Date{std::chrono::year{2021} / 1 / 1};
    std::uint64_t seed = 7;
    std::size_t posts_per_day = 6;
};

/// Correlated geometric random walks for the two currencies.
std::pair<PriceSeries, PriceSeries> prices(const Options& options);
DatedTable blockchain(const Options& options);
/// Weekday-only observations, as equity and rate series arrive.
DatedTable macro(const Options& options);
std::vector<TextPost> posts(const Options& options, const PriceSeries& btc, const PriceSeries& eth);

/// Writes btc.csv, eth.csv, blockchain.csv, macro.csv, posts.jsonl,
/// lexicon.csv, config.json (all features) and config_nosent.json.
void write_dataset(const std::filesystem::path& dir, const Options& options = {});

}  // namespace sentitrade::synthetic
