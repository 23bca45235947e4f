import itertools
import json
import math

import pytest

import sentitrade as st


def test_frames_cover_test_span():
    frames = st.make_frames(199, 60, 10)
    assert len(frames) == 14
    assert frames[0] == (0, 60)
    assert frames[-1] == (130, 60)


def test_frames_reject_long_window():
    with pytest.raises(st.Error) as info:
        st.make_frames(50, 60, 10)
    assert info.value.kind == "range"


def test_hand_traced_ledger():
    ledger = st.simulate_strategy([100, 110, 105, 115], [1, 0, 1], 0.002)
    assert [e["side"] for e in ledger["events"]] == ["buy", "sell", "buy"]
    assert ledger["events"][0]["cost"] == pytest.approx(2.0)
    assert round(ledger["final_value"], 2) == 1197.55


def test_ideal_beats_every_schedule():
    closes = [100, 104, 99, 101, 108, 103, 111]
    best = st.ideal_scenario(closes, 0.002)["final_value"]
    brute = max(
        st.simulate_strategy(closes, list(d), 0.002)["final_value"]
        for d in itertools.product([0, 1], repeat=len(closes) - 1)
    )
    assert best == brute


def test_hold_buys_once():
    ledger = st.hold_scenario([100, 120], 0.0)
    assert ledger["transactions"] == 1
    assert ledger["final_value"] == pytest.approx(1200.0)


def test_votes_and_scores():
    assert st.majority_vote(["positive", "positive", "negative"]) == "positive"
    assert st.majority_vote(["positive", "negative"], "nb") == "neutral"
    assert st.sentiment_score(3, 1, 1) == pytest.approx(0.4)
    assert st.sentiment_score(0, 0, 0) == 0.0


def test_vif():
    assert st.compute_vif([[1, -1, 1, -1], [1, 1, -1, -1]]) == pytest.approx([1.0, 1.0])
    vif = st.compute_vif([[1, 2, 3, 4], [2, 4, 6, 8], [0, 1, 0, 1]])
    assert math.isinf(vif[0]) and math.isinf(vif[1])


def test_t_test():
    r = st.one_sample_t([1, 2, 3])
    assert r["t"] == pytest.approx(3.4641, abs=1e-4)
    # df = 2 has a closed-form two-tailed p
    t = r["t"]
    assert r["p"] == pytest.approx(1 - t / math.sqrt(t * t + 2), rel=1e-9)


def test_inventory():
    inv = json.loads(st.inventory_json())
    assert len(inv["technical"]) == 78
    assert len(inv["lagged_technical"]) == 10


def test_pipeline_end_to_end(tmp_path):
    st.synth(tmp_path, days=400, seed=7)
    out = st.run(tmp_path / "config.json", out=tmp_path / "run")
    assert out == tmp_path / "run"
    assert (out / "report").is_dir()
    text = st.compare_runs(out, out)
    assert "feature_columns" in text


def test_bad_config_raises():
    with pytest.raises(st.Error) as info:
        st.run("/nonexistent/config.json")
    assert info.value.kind in {"io", "validation"}
