#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "sentitrade/error.hpp"
#include "sentitrade/ingest.hpp"
#include "sentitrade/util.hpp"

namespace th {

namespace fs = std::filesystem;
using namespace sentitrade;

inline Date day(int y, unsigned m, unsigned d) { return Date{std::chrono::year{y} / m / d}; }

inline fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("sentitrade_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

inline fs::path source_dir() { return SENTITRADE_SOURCE_DIR; }

// Kind of the library error thrown by f, or nothing if f returned.
template <typename F>
std::string error_kind(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return std::string(to_string(e.kind()));
    }
    return "none";
}

inline PriceSeries random_walk(std::size_t n, std::uint64_t seed, double start = 100, Date first = day(2021, 1, 1)) {
    Rng rng(seed);
    PriceSeries s;
    double prev = start;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = prev * std::exp(0.03 * rng.normal());
        const double o = prev * std::exp(0.005 * rng.normal());
        PriceBar b;
        b.date = first + std::chrono::days{static_cast<int>(i)};
        b.open = o;
        b.close = c;
        b.adj_close = c;
        b.high = std::max(o, c) * (1 + 0.01 * std::abs(rng.normal()));
        b.low = std::min(o, c) * (1 - 0.01 * std::abs(rng.normal()));
        b.volume = 1000 * std::exp(0.3 * rng.normal());
        s.bars.push_back(b);
        prev = c;
    }
    return s;
}

}  // namespace th
