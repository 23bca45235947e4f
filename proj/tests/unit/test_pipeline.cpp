#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include "helpers.hpp"
#include "sentitrade/hash.hpp"
#include "sentitrade/pipeline.hpp"
#include "sentitrade/synthetic.hpp"

using namespace sentitrade;
namespace pl = sentitrade::pipeline;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// One synthetic dataset shared by the tests in this file.
const fs::path& dataset() {
    static const fs::path dir = [] {
        auto d = th::scratch("pipeline_data");
        synthetic::write_dataset(d);
        return d;
    }();
    return dir;
}

json base_config() { return json::parse(read_text_file(dataset() / "config.json")); }

pl::RunConfig config_with(const json& raw, const std::string& out) {
    pl::Overrides o;
    o.out = th::scratch(out);
    return pl::parse_config(raw, dataset(), o);
}

std::map<std::string, std::string> hashes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = sha256_file(e.path());
    }
    return out;
}

std::string kind_of(const std::function<void()>& f) { return th::error_kind(f); }

int cli(const std::string& args) {
    const int rc = std::system((std::string(SENTITRADE_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("feature counts with and without blockchain inputs") {
    auto cfg = config_with(base_config(), "counts_btc");
    pl::run_stage(cfg, pl::Stage::Ingest);
    pl::run_stage(cfg, pl::Stage::Label);
    pl::run_stage(cfg, pl::Stage::Features);
    CHECK(ingest::load_matrix(pl::stage_dir(cfg, pl::Stage::Features) / "matrix.csv").cols() == 178);

    auto raw = base_config();
    raw["data"].erase("blockchain");
    auto no_chain = config_with(raw, "counts_nochain");
    pl::run_stage(no_chain, pl::Stage::Ingest);
    pl::run_stage(no_chain, pl::Stage::Label);
    pl::run_stage(no_chain, pl::Stage::Features);
    CHECK(ingest::load_matrix(pl::stage_dir(no_chain, pl::Stage::Features) / "matrix.csv").cols() == 151);
}

TEST_CASE("full run, stage manifests and isolation") {
    auto cfg = config_with(base_config(), "full");
    pl::run_all(cfg);
    for (auto s : pl::kStages) {
        const auto manifest = json::parse(read_text_file(pl::stage_dir(cfg, s) / "manifest.json"));
        CHECK(manifest.at("config_sha256") == cfg.hash());
        for (const auto& [file, sha] : manifest.at("outputs").items()) {
            CHECK(sha256_file(pl::stage_dir(cfg, s) / file) == sha.get<std::string>());
        }
    }
    for (const char* f : {"models.csv", "summary.csv", "frames.csv", "baselines.csv", "vif.txt"}) {
        CHECK(fs::exists(pl::stage_dir(cfg, pl::Stage::Report) / f));
    }
    // Re-running late stages leaves earlier artifacts untouched.
    const auto before = hashes(pl::stage_dir(cfg, pl::Stage::Select));
    const auto ingest_before = hashes(pl::stage_dir(cfg, pl::Stage::Ingest));
    pl::run_stage(cfg, pl::Stage::Train);
    pl::run_stage(cfg, pl::Stage::Backtest);
    pl::run_stage(cfg, pl::Stage::Report);
    CHECK(hashes(pl::stage_dir(cfg, pl::Stage::Select)) == before);
    CHECK(hashes(pl::stage_dir(cfg, pl::Stage::Ingest)) == ingest_before);

    // Same config and inputs: identical artifacts.
    auto again = config_with(base_config(), "full_again");
    pl::run_all(again);
    for (auto s : pl::kStages) {
        auto a = hashes(pl::stage_dir(cfg, s));
        auto b = hashes(pl::stage_dir(again, s));
        a.erase("manifest.json");
        b.erase("manifest.json");
        CHECK(a == b);
    }

    SUBCASE("compare") {
        const auto self = pl::compare_runs(cfg.out_dir, again.out_dir);
        std::istringstream in(self);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            const auto cells = split(line, ',');
            REQUIRE(cells.size() == 6);
            CHECK(cells[5] == "0");
        }
        auto nosent = config_with(json::parse(read_text_file(dataset() / "config_nosent.json")), "nosent");
        pl::run_all(nosent);
        const auto diff = pl::compare_runs(cfg.out_dir, nosent.out_dir);
        CHECK(diff.find("feature_columns,,,178,172,-6") != std::string::npos);

        auto shorter = base_config();
        shorter["backtest"]["frame_len"] = 50;
        auto other = config_with(shorter, "short_frames");
        pl::run_all(other);
        CHECK(kind_of([&] { pl::compare_runs(cfg.out_dir, other.out_dir); }) == "comparison");
    }
}

TEST_CASE("dependency and validation errors") {
    auto cfg = config_with(base_config(), "deps");
    CHECK(kind_of([&] { pl::run_stage(cfg, pl::Stage::Backtest); }) == "dependency");
    pl::run_stage(cfg, pl::Stage::Ingest);
    CHECK(kind_of([&] { pl::run_stage(cfg, pl::Stage::Features); }) == "dependency");

    auto eth = base_config();
    eth["currency"] = "ETH";
    CHECK(kind_of([&] { config_with(eth, "eth"); }) == "validation");

    auto bad = base_config();
    bad["unknown_key"] = 1;
    bad["backtest"]["frame_len"] = 0;
    try {
        config_with(bad, "bad");
        FAIL("expected validation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Validation);
        const std::string msg = e.what();
        CHECK(msg.find("unknown_key") != std::string::npos);
        CHECK(msg.find("frame_len") != std::string::npos);
    }
    CHECK(pl::exit_code_for(ErrorKind::Validation) == 2);
    CHECK(pl::exit_code_for(ErrorKind::Dependency) == 3);
    CHECK(pl::exit_code_for(ErrorKind::Numerical) == 4);
}

TEST_CASE("config changes invalidate downstream stages") {
    auto cfg = config_with(base_config(), "stale");
    pl::run_stage(cfg, pl::Stage::Ingest);
    auto raw = base_config();
    raw["seed"] = 8;
    pl::Overrides o;
    o.out = cfg.out_dir;
    auto changed = pl::parse_config(raw, dataset(), o);
    CHECK(kind_of([&] { pl::run_stage(changed, pl::Stage::Label); }) == "dependency");
}

TEST_CASE("cli exit codes") {
    const auto cfg = (dataset() / "config.json").string();
    const auto out = th::scratch("cli").string();
    CHECK(cli("run --config /nonexistent.json") == 2);
    CHECK(cli("backtest --config " + cfg + " --out " + out) == 3);
    CHECK(cli("run --config " + cfg + " --stage ingest --out " + out) == 0);
    CHECK(cli("--no-such-flag") == 2);
}
