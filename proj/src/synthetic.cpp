#include "sentitrade/synthetic.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sentitrade/error.hpp"
#include "sentitrade/util.hpp"

namespace sentitrade::synthetic {

using json = nlohmann::json;

namespace {

const std::vector<const char*> kPositive{"surge", "rally", "bullish", "gain",  "soar",   "adoption", "breakout",
                                         "record", "strong", "profit", "moon", "upgrade"};
const std::vector<const char*> kNegative{"crash", "dump",  "bearish", "loss", "plunge", "ban",
                                         "hack",  "fear",  "weak",    "sell", "fraud",  "collapse"};
const std::vector<const char*> kNeutral{"market", "price", "today",  "trading", "network", "update", "report",
                                        "chart",  "coin",  "volume", "analyst", "week",    "exchange"};

PriceSeries walk(Date start, std::size_t days, double price0, double volume0, const std::vector<double>& shocks,
                 Rng& rng) {
    PriceSeries s;
    double prev_close = price0;
    for (std::size_t t = 0; t < days; ++t) {
        PriceBar b;
        b.date = start + std::chrono::days{static_cast<int>(t)};
        b.open = prev_close * std::exp(0.003 * rng.normal());
        b.close = b.open * std::exp(0.0005 + shocks[t]);
        b.high = std::max(b.open, b.close) * std::exp(0.01 * std::abs(rng.normal()));
        b.low = std::min(b.open, b.close) * std::exp(-0.01 * std::abs(rng.normal()));
        b.adj_close = b.close;
        b.volume = volume0 * std::exp(0.3 * rng.normal());
        prev_close = b.close;
        s.bars.push_back(b);
    }
    return s;
}

std::string fmt(double v) { return format_double(v); }

}  // namespace

std::pair<PriceSeries, PriceSeries> prices(const Options& o) {
    if (o.days < 2) fail(ErrorKind::Argument, "synthetic data needs at least two days");
    Rng rng(derive_seed(o.seed, 1));
    std::vector<double> a(o.days), b(o.days);
    for (std::size_t t = 0; t < o.days; ++t) {
        const double z1 = rng.normal(), z2 = rng.normal();
        a[t] = 0.035 * z1;
        b[t] = 0.045 * (0.8 * z1 + 0.6 * z2);
    }
    Rng r1(derive_seed(o.seed, 2)), r2(derive_seed(o.seed, 3));
    return {walk(o.start, o.days, 30000, 5e4, a, r1), walk(o.start, o.days, 1200, 8e5, b, r2)};
}

DatedTable blockchain(const Options& o) {
    static const std::array<const char*, 9> names{"hash_rate",   "difficulty",      "transactions",
                                                  "active_addr", "fees",            "block_size",
                                                  "mempool",     "miner_revenue",   "supply"};
    Rng rng(derive_seed(o.seed, 4));
    DatedTable t;
    t.names.assign(names.begin(), names.end());
    t.columns.assign(names.size(), {});
    std::vector<double> level{1.5e8, 2.0e13, 3.0e5, 9.0e5, 2.5e6, 1.2e6, 4.0e4, 4.0e7, 1.86e7};
    for (std::size_t d = 0; d < o.days; ++d) {
        t.dates.push_back(o.start + std::chrono::days{static_cast<int>(d)});
        for (std::size_t c = 0; c < names.size(); ++c) {
            level[c] *= std::exp((c == 8 ? 0.0002 : 0.0) + (c == 8 ? 0.0001 : 0.05) * rng.normal());
            t.columns[c].push_back(level[c]);
        }
    }
    return t;
}

DatedTable macro(const Options& o) {
    static const std::array<const char*, 5> names{"sp500", "gold", "vix", "dxy", "us10y"};
    Rng rng(derive_seed(o.seed, 5));
    DatedTable t;
    t.names.assign(names.begin(), names.end());
    t.columns.assign(names.size(), {});
    std::vector<double> level{3800, 1850, 22, 90, 1.2};
    for (std::size_t d = 0; d < o.days; ++d) {
        const Date day = o.start + std::chrono::days{static_cast<int>(d)};
        if (weekday_index(day) >= 5) continue;
        t.dates.push_back(day);
        for (std::size_t c = 0; c < names.size(); ++c) {
            level[c] *= std::exp(0.01 * rng.normal());
            t.columns[c].push_back(level[c]);
        }
    }
    return t;
}

std::vector<TextPost> posts(const Options& o, const PriceSeries& btc, const PriceSeries& eth) {
    Rng rng(derive_seed(o.seed, 6));
    std::vector<TextPost> out;
    constexpr std::array<Source, 3> sources{Source::News, Source::Twitter, Source::Reddit};
    std::size_t serial = 0;
    for (std::size_t d = 0; d < o.days; ++d) {
        for (std::size_t k = 0; k < o.posts_per_day; ++k) {
            TextPost p;
            p.currency = rng.coin() ? Currency::BTC : Currency::ETH;
            const PriceSeries& s = p.currency == Currency::BTC ? btc : eth;
            // Tone leans with the day's move so the sentiment columns carry
            // some signal.
            const double move = s.bars[d].close / s.bars[d].open - 1;
            const double p_pos = move > 0 ? 0.6 : 0.3;
            p.source = sources[static_cast<std::size_t>(rng.below(3))];
            p.id = "p" + std::to_string(serial++);
            p.timestamp = std::chrono::sys_seconds{std::chrono::duration_cast<std::chrono::seconds>(
                (btc.bars[d].date + std::chrono::hours{1 + static_cast<int>(rng.below(22))}).time_since_epoch())};
            if (p.source == Source::Reddit && rng.below(20) == 0) {
                p.text = "https://example.com/thread/" + std::to_string(serial);
            } else {
                std::ostringstream text;
                const std::size_t words = 4 + static_cast<std::size_t>(rng.below(6));
                for (std::size_t w = 0; w < words; ++w) {
                    const double u = rng.uniform();
                    const char* word;
                    if (u < 0.25) word = (rng.uniform() < p_pos ? kPositive : kNegative)[rng.below(12)];
                    else word = kNeutral[rng.below(kNeutral.size())];
                    text << (w ? " " : "") << word;
                }
                p.text = text.str();
            }
            if (p.source == Source::Twitter) {
                p.engagement["retweets"] = static_cast<std::int64_t>(rng.below(40));
                p.engagement["likes"] = static_cast<std::int64_t>(rng.below(400));
                p.engagement["followers"] = static_cast<std::int64_t>(rng.below(100000));
                p.engagement["verified"] = rng.below(10) == 0;
            } else if (p.source == Source::Reddit) {
                p.engagement["comments"] = static_cast<std::int64_t>(rng.below(50));
                p.engagement["likes"] = static_cast<std::int64_t>(rng.below(500));
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

namespace {

void save_table(const DatedTable& t, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "date";
    for (const auto& n : t.names) out << ',' << n;
    out << "\n";
    for (std::size_t r = 0; r < t.dates.size(); ++r) {
        out << format_date(t.dates[r]);
        for (const auto& c : t.columns) out << ',' << fmt(c[r]);
        out << "\n";
    }
    write_text_file(path, out.str());
}

json base_config(const Options& o) {
    const Date last = o.start + std::chrono::days{static_cast<int>(o.days) - 1};
    const Date end = last - std::chrono::days{1};
    const Date train_end = end - std::chrono::days{100};
    return {
        {"currency", "BTC"},
        {"data",
         {{"prices", "btc.csv"},
          {"other_prices", "eth.csv"},
          {"blockchain", "blockchain.csv"},
          {"macro", "macro.csv"},
          {"posts", "posts.jsonl"}}},
        {"period", {{"start", format_date(o.start)}, {"train_end", format_date(train_end)}, {"end", format_date(end)}}},
        {"features", {{"price_lags", {0, 1, 2}}, {"lags", {0, 1, 2}}, {"sentiment", true}}},
        {"filters",
         {{"twitter", {{"min_engagement", {{"retweets", 2}}}, {"min_length", 10}}},
          {"reddit", {{"reject_url_only", true}}}}},
        {"sentiment", {{"classifiers", json::array({{{"type", "lexicon"}, {"lexicon", "lexicon.csv"}}})}, {"bias", "nb"}}},
        {"selection", {{"vif_cutoff", 5}}},
        {"models",
         json::array({{{"name", "ridge"}, {"kind", "ridge"}, {"task", "regression"}, {"grid", {{"alpha", {0.1, 1, 10}}}}},
                      {{"name", "tree"},
                       {"kind", "decision-tree"},
                       {"task", "classification"},
                       {"grid", {{"max_depth", {1, 2, 3}}, {"min_samples_leaf", {5}}}}}})},
        {"cv", {{"folds", 5}, {"repeats", 3}}},
        {"backtest", {{"frame_len", 60}, {"shift", 10}, {"cost_rate", 0.002}, {"initial", 1000}, {"random_repetitions", 100}}},
        {"seed", o.seed},
        {"output", "run"},
    };
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const Options& o) {
    std::filesystem::create_directories(dir);
    const auto [btc, eth] = prices(o);
    ingest::save_price_series(btc, dir / "btc.csv");
    ingest::save_price_series(eth, dir / "eth.csv");
    save_table(blockchain(o), dir / "blockchain.csv");
    save_table(macro(o), dir / "macro.csv");
    ingest::save_posts(posts(o, btc, eth), dir / "posts.jsonl");

    std::ostringstream lex;
    lex << "# token,polarity\n";
    for (const char* w : kPositive) lex << w << ",1\n";
    for (const char* w : kNegative) lex << w << ",-1\n";
    write_text_file(dir / "lexicon.csv", lex.str());

    json cfg = base_config(o);
    write_text_file(dir / "config.json", cfg.dump(2) + "\n");
    cfg["features"]["sentiment"] = false;
    cfg.erase("sentiment");
    cfg["data"].erase("posts");
    cfg["output"] = "run_nosent";
    write_text_file(dir / "config_nosent.json", cfg.dump(2) + "\n");
}

}  // namespace sentitrade::synthetic
