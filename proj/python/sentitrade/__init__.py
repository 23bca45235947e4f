"""Python access to the sentitrade C++ core."""

from ._core import (
    Error,
    compare_runs,
    compute_vif,
    gain_ratio_distribution,
    hold_scenario,
    ideal_scenario,
    inventory_json,
    majority_vote,
    make_frames,
    one_sample_t,
    run,
    sentiment_score,
    simulate_strategy,
    synth,
)

__all__ = [
    "Error",
    "compare_runs",
    "compute_vif",
    "gain_ratio_distribution",
    "hold_scenario",
    "ideal_scenario",
    "inventory_json",
    "majority_vote",
    "make_frames",
    "one_sample_t",
    "run",
    "sentiment_score",
    "simulate_strategy",
    "synth",
]
