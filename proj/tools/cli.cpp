#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "sentitrade/error.hpp"
#include "sentitrade/indicators.hpp"
#include "sentitrade/pipeline.hpp"
#include "sentitrade/synthetic.hpp"
#include "sentitrade/util.hpp"

namespace st = sentitrade;
namespace pl = sentitrade::pipeline;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config, "Run configuration (JSON)")->required();
    cmd->add_option("--seed", flags.seed, "Override the configured seed");
    cmd->add_option("--out", flags.out, "Override the output directory");
}

pl::RunConfig load(const CommonFlags& flags) {
    pl::Overrides o;
    o.seed = flags.seed;
    if (flags.out) o.out = std::filesystem::absolute(*flags.out);
    return pl::load_config(flags.config, o);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sentiment-aware crypto return forecasting and backtesting pipeline"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string stage_name = "all";

    CLI::App* run = app.add_subcommand("run", "Run one stage or the whole pipeline");
    add_common(run, flags);
    run->add_option("--stage", stage_name, "Stage name or 'all'");

    std::vector<std::pair<CLI::App*, pl::Stage>> stage_cmds;
    for (pl::Stage s : pl::kStages) {
        if (s == pl::Stage::Report) continue;
        CLI::App* cmd = app.add_subcommand(std::string(pl::to_string(s)), "Run the " + std::string(pl::to_string(s)) + " stage");
        add_common(cmd, flags);
        stage_cmds.emplace_back(cmd, s);
    }
    CLI::App* report = app.add_subcommand("report", "Write report tables from backtest results");
    add_common(report, flags);
    stage_cmds.emplace_back(report, pl::Stage::Report);

    std::string run_a, run_b;
    std::optional<std::string> compare_out;
    CLI::App* compare = app.add_subcommand("compare", "Compare two completed runs");
    compare->add_option("run_a", run_a, "First run directory")->required();
    compare->add_option("run_b", run_b, "Second run directory")->required();
    compare->add_option("--out", compare_out, "Write the comparison here instead of stdout");

    std::string synth_dir;
    st::synthetic::Options synth_opts;
    std::size_t synth_days = synth_opts.days;
    CLI::App* synth = app.add_subcommand("synth", "Write a synthetic dataset and configs");
    synth->add_option("--out", synth_dir, "Target directory")->required();
    synth->add_option("--days", synth_days, "Number of daily bars");
    synth->add_option("--seed", synth_opts.seed, "Generator seed");

    CLI::App* inventory = app.add_subcommand("inventory", "Print the indicator inventory as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run) {
            const auto cfg = load(flags);
            if (stage_name == "all") pl::run_all(cfg);
            else pl::run_stage(cfg, pl::parse_stage(stage_name));
        } else if (*compare) {
            const std::string text = pl::compare_runs(run_a, run_b);
            if (compare_out) st::write_text_file(*compare_out, text);
            else std::cout << text;
        } else if (*synth) {
            synth_opts.days = synth_days;
            st::synthetic::write_dataset(synth_dir, synth_opts);
        } else if (*inventory) {
            std::cout << st::indicators::inventory_json();
        } else {
            for (auto& [cmd, stage] : stage_cmds) {
                if (*cmd) pl::run_stage(load(flags), stage);
            }
        }
    } catch (const st::Error& e) {
        std::cerr << "error [" << st::to_string(e.kind()) << "]: " << e.what() << "\n";
        return pl::exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
