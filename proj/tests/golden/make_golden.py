"""Regenerate the indicator fixture and its golden values.

The golden values come from the `ta` package (0.11), an implementation
independent of this repository. Run from the repository root:

    python3 tests/golden/make_golden.py

Known quirks of `ta` that are neutralised here:
  * ADX leaves the smoothed sums of the final bar at zero, so the series is
    computed on one extra bar and truncated.
  * PSAR up/down are NaN on the inactive side; the engine reports 0 there.
The lagged technicals are plain pandas expressions.
"""

import math
import os

import numpy as np
import pandas as pd
import ta
from ta.momentum import (AwesomeOscillatorIndicator, KAMAIndicator, PercentagePriceOscillator,
                         PercentageVolumeOscillator, ROCIndicator, RSIIndicator, StochasticOscillator,
                         StochRSIIndicator, TSIIndicator, UltimateOscillator, WilliamsRIndicator)
from ta.trend import (ADXIndicator, CCIIndicator, DPOIndicator, EMAIndicator, IchimokuIndicator, KSTIndicator,
                      MACD, MassIndex, PSARIndicator, SMAIndicator, STCIndicator, TRIXIndicator, VortexIndicator,
                      WMAIndicator)
from ta.volatility import AverageTrueRange, BollingerBands, DonchianChannel, KeltnerChannel, UlcerIndex
from ta.volume import (AccDistIndexIndicator, ChaikinMoneyFlowIndicator, EaseOfMovementIndicator,
                       ForceIndexIndicator, MFIIndicator, NegativeVolumeIndexIndicator, OnBalanceVolumeIndicator,
                       VolumePriceTrendIndicator, VolumeWeightedAveragePrice)

HERE = os.path.dirname(os.path.abspath(__file__))
BARS = 120


def make_series(rng, n, start_price, vol_scale):
    closes = [start_price]
    for _ in range(n - 1):
        closes.append(closes[-1] * math.exp(rng.normal(0.001, 0.03)))
    rows = []
    prev = start_price * math.exp(rng.normal(0, 0.01))
    for c in closes:
        o = prev * math.exp(rng.normal(0, 0.005))
        hi = max(o, c) * (1 + abs(rng.normal(0, 0.015)))
        lo = min(o, c) * (1 - abs(rng.normal(0, 0.015)))
        v = vol_scale * math.exp(rng.normal(0, 0.4))
        rows.append((o, hi, lo, c, v))
        prev = c
    return rows


def technicals(df):
    h, l, c, v = df["high"], df["low"], df["close"], df["volume"]
    out = {}
    out["volume_adi"] = AccDistIndexIndicator(h, l, c, v).acc_dist_index()
    out["volume_obv"] = OnBalanceVolumeIndicator(c, v).on_balance_volume()
    out["volume_cmf"] = ChaikinMoneyFlowIndicator(h, l, c, v).chaikin_money_flow()
    out["volume_fi"] = ForceIndexIndicator(c, v, window=13).force_index()
    eom = EaseOfMovementIndicator(h, l, v, window=14)
    out["volume_em"] = eom.ease_of_movement()
    out["volume_sma_em"] = eom.sma_ease_of_movement()
    out["volume_vpt"] = VolumePriceTrendIndicator(c, v).volume_price_trend()
    out["volume_vwap"] = VolumeWeightedAveragePrice(h, l, c, v, window=14).volume_weighted_average_price()
    out["volume_mfi"] = MFIIndicator(h, l, c, v, window=14).money_flow_index()
    out["volume_nvi"] = NegativeVolumeIndexIndicator(c, v).negative_volume_index()

    bb = BollingerBands(c, window=20, window_dev=2)
    out["volatility_bbm"] = bb.bollinger_mavg()
    out["volatility_bbh"] = bb.bollinger_hband()
    out["volatility_bbl"] = bb.bollinger_lband()
    out["volatility_bbw"] = bb.bollinger_wband()
    out["volatility_bbp"] = bb.bollinger_pband()
    out["volatility_bbhi"] = bb.bollinger_hband_indicator()
    out["volatility_bbli"] = bb.bollinger_lband_indicator()
    kc = KeltnerChannel(h, l, c, window=10)
    out["volatility_kcc"] = kc.keltner_channel_mband()
    out["volatility_kch"] = kc.keltner_channel_hband()
    out["volatility_kcl"] = kc.keltner_channel_lband()
    out["volatility_kcw"] = kc.keltner_channel_wband()
    out["volatility_kcp"] = kc.keltner_channel_pband()
    out["volatility_kchi"] = kc.keltner_channel_hband_indicator()
    out["volatility_kcli"] = kc.keltner_channel_lband_indicator()
    dc = DonchianChannel(h, l, c, window=20)
    out["volatility_dcl"] = dc.donchian_channel_lband()
    out["volatility_dch"] = dc.donchian_channel_hband()
    out["volatility_dcm"] = dc.donchian_channel_mband()
    out["volatility_dcw"] = dc.donchian_channel_wband()
    out["volatility_dcp"] = dc.donchian_channel_pband()
    out["volatility_atr"] = AverageTrueRange(h, l, c, window=10).average_true_range()
    out["volatility_ui"] = UlcerIndex(c, window=14).ulcer_index()

    macd = MACD(c, window_slow=26, window_fast=12, window_sign=9)
    out["trend_macd"] = macd.macd()
    out["trend_macd_signal"] = macd.macd_signal()
    out["trend_macd_diff"] = macd.macd_diff()
    out["trend_sma_fast"] = SMAIndicator(c, window=12).sma_indicator()
    out["trend_sma_slow"] = SMAIndicator(c, window=26).sma_indicator()
    out["trend_ema_fast"] = EMAIndicator(c, window=12).ema_indicator()
    out["trend_ema_slow"] = EMAIndicator(c, window=26).ema_indicator()
    out["trend_wma_fast"] = WMAIndicator(c, window=12).wma()
    out["trend_wma_slow"] = WMAIndicator(c, window=26).wma()
    vortex = VortexIndicator(h, l, c, window=14)
    out["trend_vortex_ind_pos"] = vortex.vortex_indicator_pos()
    out["trend_vortex_ind_neg"] = vortex.vortex_indicator_neg()
    out["trend_vortex_ind_diff"] = vortex.vortex_indicator_diff()
    out["trend_trix"] = TRIXIndicator(c, window=15).trix()
    out["trend_mass_index"] = MassIndex(h, l, window_fast=9, window_slow=25).mass_index()
    out["trend_dpo"] = DPOIndicator(c, window=20).dpo()
    kst = KSTIndicator(c, 10, 15, 20, 30, 10, 10, 10, 15, 9)
    out["trend_kst"] = kst.kst()
    out["trend_kst_sig"] = kst.kst_sig()
    out["trend_kst_diff"] = kst.kst_diff()
    ichi = IchimokuIndicator(h, l, window1=9, window2=26, window3=52, visual=False)
    out["trend_ichimoku_conv"] = ichi.ichimoku_conversion_line()
    out["trend_ichimoku_base"] = ichi.ichimoku_base_line()
    out["trend_ichimoku_a"] = ichi.ichimoku_a()
    out["trend_ichimoku_b"] = ichi.ichimoku_b()
    out["trend_stc"] = STCIndicator(c, window_slow=50, window_fast=23, cycle=10, smooth1=3, smooth2=3).stc()
    adx = ADXIndicator(h, l, c, window=14)
    out["trend_adx"] = adx.adx()
    out["trend_adx_pos"] = adx.adx_pos()
    out["trend_adx_neg"] = adx.adx_neg()
    out["trend_cci"] = CCIIndicator(h, l, c, window=20, constant=0.015).cci()
    psar = PSARIndicator(h, l, c, step=0.02, max_step=0.2)
    out["trend_psar_up"] = psar.psar_up().fillna(0.0)
    out["trend_psar_down"] = psar.psar_down().fillna(0.0)
    # bars 0 and 1 have no SAR at all
    out["trend_psar_up"].iloc[:2] = np.nan
    out["trend_psar_down"].iloc[:2] = np.nan

    out["momentum_rsi"] = RSIIndicator(c, window=14).rsi()
    srsi = StochRSIIndicator(c, window=14, smooth1=3, smooth2=3)
    out["momentum_stoch_rsi"] = srsi.stochrsi()
    out["momentum_stoch_rsi_k"] = srsi.stochrsi_k()
    out["momentum_stoch_rsi_d"] = srsi.stochrsi_d()
    out["momentum_tsi"] = TSIIndicator(c, window_slow=25, window_fast=13).tsi()
    out["momentum_uo"] = UltimateOscillator(h, l, c, 7, 14, 28, 4.0, 2.0, 1.0).ultimate_oscillator()
    so = StochasticOscillator(h, l, c, window=14, smooth_window=3)
    out["momentum_stoch"] = so.stoch()
    out["momentum_stoch_signal"] = so.stoch_signal()
    out["momentum_wr"] = WilliamsRIndicator(h, l, c, lbp=14).williams_r()
    out["momentum_ao"] = AwesomeOscillatorIndicator(h, l, window1=5, window2=34).awesome_oscillator()
    out["momentum_roc"] = ROCIndicator(c, window=12).roc()
    ppo = PercentagePriceOscillator(c, 26, 12, 9)
    out["momentum_ppo"] = ppo.ppo()
    out["momentum_ppo_signal"] = ppo.ppo_signal()
    out["momentum_ppo_hist"] = ppo.ppo_hist()
    pvo = PercentageVolumeOscillator(v, 26, 12, 9)
    out["momentum_pvo"] = pvo.pvo()
    out["momentum_pvo_signal"] = pvo.pvo_signal()
    out["momentum_pvo_hist"] = pvo.pvo_hist()
    out["momentum_kama"] = KAMAIndicator(c, window=10, pow1=2, pow2=30).kama()
    return out


def lagged(df, other):
    c, o, h, l = df["close"], df["open"], df["high"], df["low"]
    out = {}
    out["close_open_return"] = c / o - 1.0
    out["log_return"] = np.log(c / c.shift(1))
    out["cumulative_return"] = c / c.iloc[0] - 1.0
    out["volume"] = df["volume"]
    out["price_std_30"] = c.rolling(30).std()
    out["parkinson"] = np.sqrt(np.log(h / l) ** 2 / (4.0 * math.log(2.0)))
    out["intraday_range"] = (h - l) / o
    out["other_close"] = other["close"]
    out["other_return"] = other["close"].pct_change()
    out["other_volume"] = other["volume"]
    return out


def write_csv(path, dates, columns):
    names = list(columns)
    with open(path, "w") as f:
        f.write("date," + ",".join(names) + "\n")
        for i, d in enumerate(dates):
            cells = []
            for n in names:
                x = float(columns[n].iloc[i])
                cells.append("nan" if math.isnan(x) else "%.17g" % x)
            f.write(d + "," + ",".join(cells) + "\n")


def main():
    rng = np.random.default_rng(20240601)
    dates_all = pd.date_range("2021-01-01", periods=BARS + 1, freq="D").strftime("%Y-%m-%d").tolist()
    series = {"btc": make_series(rng, BARS + 1, 30000.0, 5.0e4), "eth": make_series(rng, BARS + 1, 1200.0, 8.0e5)}
    frames = {}
    for name, rows in series.items():
        frames[name] = pd.DataFrame(rows, columns=["open", "high", "low", "close", "volume"])

    dates = dates_all[:BARS]
    for name, df in frames.items():
        with open(os.path.join(HERE, f"fixture_{name}.csv"), "w") as f:
            f.write("date,open,high,low,close,adj_close,volume\n")
            for i in range(BARS):
                r = df.iloc[i]
                f.write("%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n" %
                        (dates[i], r.open, r.high, r.low, r.close, r.close, r.volume))

    btc_long = frames["btc"]
    cols = technicals(btc_long)
    cols = {k: v.iloc[:BARS].reset_index(drop=True) for k, v in cols.items()}
    btc = btc_long.iloc[:BARS].reset_index(drop=True)
    eth = frames["eth"].iloc[:BARS].reset_index(drop=True)
    cols.update(lagged(btc, eth))
    assert len(cols) == 88, len(cols)
    write_csv(os.path.join(HERE, "golden_btc.csv"), dates, cols)
    print("ta", ta.__version__ if hasattr(ta, "__version__") else "?", "columns", len(cols))


if __name__ == "__main__":
    main()
