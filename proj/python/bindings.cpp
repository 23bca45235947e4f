#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sentitrade/backtest.hpp"
#include "sentitrade/error.hpp"
#include "sentitrade/featselect.hpp"
#include "sentitrade/indicators.hpp"
#include "sentitrade/pipeline.hpp"
#include "sentitrade/sentiment.hpp"
#include "sentitrade/stats.hpp"
#include "sentitrade/synthetic.hpp"

namespace py = pybind11;
using namespace sentitrade;
namespace fs = std::filesystem;

namespace {

std::vector<Direction> to_directions(const std::vector<int>& raw) {
    std::vector<Direction> out;
    out.reserve(raw.size());
    for (int d : raw) {
        if (d != 0 && d != 1) fail(ErrorKind::Argument, "directions must be 0 (down) or 1 (up)");
        out.push_back(d ? Direction::Up : Direction::Down);
    }
    return out;
}

std::vector<Label> to_labels(const std::vector<std::string>& raw) {
    std::vector<Label> out;
    for (const auto& s : raw) out.push_back(parse_label(s));
    return out;
}

py::dict ledger_dict(const TradeLedger& l) {
    py::list events;
    for (const auto& e : l.events) {
        py::dict d;
        d["day"] = e.day;
        d["side"] = e.side == Side::Buy ? "buy" : "sell";
        d["price"] = e.price;
        d["notional"] = e.notional;
        d["cost"] = e.cost;
        events.append(d);
    }
    py::dict out;
    out["events"] = events;
    out["fiat"] = l.fiat;
    out["coins"] = l.coins;
    out["final_value"] = l.final_value;
    out["total_cost"] = l.total_cost;
    out["transactions"] = l.transactions();
    return out;
}

py::dict ttest_dict(const stats::TTest& t) {
    py::dict d;
    d["n"] = t.n;
    d["mean"] = t.mean;
    d["sd"] = t.sd;
    d["t"] = t.t;
    d["p"] = t.p;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "sentitrade core bindings";

    static py::exception<Error> error_type(m, "Error");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object instance = py::reinterpret_borrow<py::object>(error_type)(e.what());
            instance.attr("kind") = std::string(to_string(e.kind()));
            PyErr_SetObject(error_type.ptr(), instance.ptr());
        }
    });

    m.def(
        "make_frames",
        [](std::size_t test_len, std::size_t frame_len, std::size_t shift) {
            std::vector<std::pair<std::size_t, std::size_t>> out;
            for (const auto& f : backtest::make_frames(test_len, frame_len, shift)) out.emplace_back(f.first, f.length);
            return out;
        },
        py::arg("test_len"), py::arg("frame_len") = 60, py::arg("shift") = 10,
        "(first, length) of every sliding frame over a test span.");

    m.def(
        "simulate_strategy",
        [](const std::vector<double>& closes, const std::vector<int>& directions, double cost_rate, double initial) {
            return ledger_dict(backtest::simulate_strategy(closes, to_directions(directions), cost_rate, initial));
        },
        py::arg("closes"), py::arg("directions"), py::arg("cost_rate") = backtest::kDefaultCost,
        py::arg("initial") = 1000.0);

    m.def(
        "ideal_scenario",
        [](const std::vector<double>& closes, double cost_rate, double initial) {
            return ledger_dict(backtest::ideal_scenario(closes, cost_rate, initial));
        },
        py::arg("closes"), py::arg("cost_rate") = backtest::kDefaultCost, py::arg("initial") = 1000.0);

    m.def(
        "hold_scenario",
        [](const std::vector<double>& closes, double cost_rate, double initial) {
            return ledger_dict(backtest::hold_scenario(closes, cost_rate, initial));
        },
        py::arg("closes"), py::arg("cost_rate") = backtest::kDefaultCost, py::arg("initial") = 1000.0);

    m.def(
        "gain_ratio_distribution",
        [](const std::vector<double>& model, const std::vector<double>& baseline) {
            auto g = backtest::gain_ratio_distribution(model, baseline);
            py::dict d = ttest_dict(g.test);
            d["gains"] = g.gains;
            return d;
        },
        py::arg("model_values"), py::arg("baseline_values"));

    m.def(
        "one_sample_t", [](const std::vector<double>& sample) { return ttest_dict(stats::one_sample_t(sample)); },
        py::arg("sample"));

    m.def(
        "majority_vote",
        [](const std::vector<std::string>& labels, const std::string& bias) {
            return std::string(to_string(sentiment::majority_vote(to_labels(labels), parse_bias(bias))));
        },
        py::arg("labels"), py::arg("bias") = "nb", "Ensemble vote over 'positive'/'neutral'/'negative' labels.");

    m.def("sentiment_score", &sentiment::sentiment_score, py::arg("pos"), py::arg("neu"), py::arg("neg"));

    m.def(
        "compute_vif",
        [](const std::vector<std::vector<double>>& columns) { return featselect::compute_vif(columns); },
        py::arg("columns"), "VIF of each column against the others; +inf for perfect collinearity.");

    m.def("inventory_json", &indicators::inventory_json);

    m.def(
        "synth",
        [](const fs::path& dir, std::size_t days, std::uint64_t seed) {
            synthetic::Options o;
            o.days = days;
            o.seed = seed;
            synthetic::write_dataset(dir, o);
        },
        py::arg("dir"), py::arg("days") = 400, py::arg("seed") = 7);

    m.def(
        "run",
        [](const fs::path& config, const std::string& stage, std::optional<std::uint64_t> seed,
           std::optional<fs::path> out) {
            pipeline::Overrides o;
            o.seed = seed;
            o.out = out;
            const auto cfg = pipeline::load_config(config, o);
            {
                py::gil_scoped_release release;
                if (stage == "all") {
                    pipeline::run_all(cfg);
                } else {
                    pipeline::run_stage(cfg, pipeline::parse_stage(stage));
                }
            }
            return cfg.out_dir;
        },
        py::arg("config"), py::arg("stage") = "all", py::arg("seed") = py::none(), py::arg("out") = py::none(),
        "Runs the pipeline (or one stage) and returns the output directory.");

    m.def("compare_runs", &pipeline::compare_runs, py::arg("run_a"), py::arg("run_b"));
}
