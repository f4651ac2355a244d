"""Rolling monthly-rebalance backtest over a CSV return panel.

Protocol: for each testing month, estimate moments from the trailing
``lookback_months`` calendar months, build one portfolio per candidate
regularizer plus the unregularized (Q = 0, pseudo-inverse) baseline, select
the month's best candidate by the in-sample estimator, hold all weights
through the month, then report realized Sharpe/volatility of the daily
return series over rolling forward windows.

The mean used for mean-variance construction is either the testing month's
own realized mean (an explicitly flagged look-ahead oracle, for evaluating
the covariance correction in isolation) or the trailing sample mean.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ._linalg import format_float
from .frontier import frontier_coefficients
from .moments import (
    PortfolioWeights,
    Regularizer,
    ReturnsPanel,
    compute_sample_moments,
    gmv_weights,
    mv_weights,
)
from .selection import CandidateSet, select

STRATEGIES = ("mv_known_mu", "mv_sample_mu", "gmv", "frontier")
MU_SOURCES = ("oracle_month_ahead", "historical_sample")

ZERO_LABEL = "Q=0"
STAR_LABEL = "Q*"

_CRITERION_BY_STRATEGY = {
    "mv_known_mu": "max_sr_known",
    "mv_sample_mu": "max_sr_unknown",
    "gmv": "max_inv_vol_gmv",
    "frontier": "min_frontier_var",
}

TRADING_DAYS_PER_YEAR = 252


@dataclass(frozen=True)
class BacktestConfig:
    """Protocol parameters for one rolling run."""

    lookback_months: int
    test_start: str  # "YYYY-MM"
    test_end: str  # "YYYY-MM"
    candidates: CandidateSet
    strategy: str
    mu_source: str = "historical_sample"
    forward_window_months: int = 36
    window_stride_months: int = 1
    mu0: float | None = None
    rebalance: str = "monthly"
    annualize: bool = False

    def __post_init__(self):
        if self.lookback_months < 1:
            raise ValueError("lookback_months must be >= 1")
        if self.forward_window_months < 1:
            raise ValueError("forward_window_months must be >= 1")
        if self.window_stride_months < 1:
            raise ValueError("window_stride_months must be >= 1")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.mu_source not in MU_SOURCES:
            raise ValueError(f"unknown mu_source {self.mu_source!r}")
        if self.rebalance != "monthly":
            raise ValueError("only monthly rebalancing is supported")
        if self.strategy == "mv_sample_mu" and self.mu_source != "historical_sample":
            raise ValueError("mv_sample_mu uses the historical sample mean")
        if self.strategy == "frontier" and self.mu0 is None:
            raise ValueError("frontier strategy requires mu0")
        np.datetime64(self.test_start, "M")
        np.datetime64(self.test_end, "M")

    @property
    def uses_lookahead_mu(self) -> bool:
        return (self.strategy in ("mv_known_mu", "frontier")
                and self.mu_source == "oracle_month_ahead")


@dataclass(frozen=True)
class MonthRecord:
    month: str
    chosen_label: str
    weights_summary: dict
    errors: tuple[str, ...] = ()


@dataclass(frozen=True)
class WindowRecord:
    window_start: str
    label: str
    realized_sr: float
    realized_vol: float


@dataclass
class BacktestReport:
    """Per-month selections, daily return series, and forward-window stats."""

    config: dict
    labels: tuple[str, ...]
    months: list[MonthRecord]
    daily_dates: np.ndarray = field(repr=False)
    daily: dict[str, np.ndarray] = field(repr=False, default_factory=dict)
    windows: list[WindowRecord] = field(default_factory=list)

    def recompute_windows(self) -> list[WindowRecord]:
        """Recompute window stats from the stored daily series (audit path)."""
        return _window_stats(
            self.daily_dates, self.daily, self.labels,
            np.datetime64(self.config["test_start"], "M"),
            np.datetime64(self.config["test_end"], "M"),
            self.config["forward_window_months"],
            self.config["window_stride_months"],
            self.config["annualize"],
        )

    def write(self, outdir) -> list[str]:
        """Write monthly.csv, windows.csv, daily.csv, report.json; 17-digit floats."""
        from pathlib import Path

        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = []

        path = outdir / "monthly.csv"
        lines = ["month,chosen_label,book,net,max_abs,errors"]
        for rec in self.months:
            ws = rec.weights_summary
            lines.append(
                f"{rec.month},{rec.chosen_label},{format_float(ws['book'])},"
                f"{format_float(ws['net'])},{format_float(ws['max_abs'])},"
                f"{';'.join(rec.errors)}"
            )
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(str(path))

        path = outdir / "windows.csv"
        lines = ["window_start,label,realized_sr,realized_vol"]
        for w in self.windows:
            lines.append(f"{w.window_start},{w.label},"
                         f"{format_float(w.realized_sr)},{format_float(w.realized_vol)}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(str(path))

        path = outdir / "daily.csv"
        header = "date," + ",".join(self.labels)
        lines = [header]
        for i, d in enumerate(self.daily_dates):
            row = [str(d)] + [format_float(float(self.daily[lab][i])) for lab in self.labels]
            lines.append(",".join(row))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        written.append(str(path))

        path = outdir / "report.json"
        payload = {
            "config": self.config,
            "months": [
                {"month": m.month, "chosen_label": m.chosen_label,
                 "weights_summary": m.weights_summary, "errors": list(m.errors)}
                for m in self.months
            ],
            "windows": [
                {"window_start": w.window_start, "label": w.label,
                 "realized_sr": w.realized_sr, "realized_vol": w.realized_vol}
                for w in self.windows
            ],
        }
        path.write_text(json.dumps(payload, sort_keys=True, indent=1) + "\n",
                        encoding="utf-8")
        written.append(str(path))
        return written


def realized_stats(daily: np.ndarray, annualize: bool = False) -> dict[str, float]:
    """Realized Sharpe (mean/std) and volatility of a daily series.

    Population standard deviation (divisor N) to match the in-sample
    covariance convention; zero variance or fewer than two points is an error.
    """
    daily = np.asarray(daily, dtype=float)
    if daily.size < 2:
        raise ValueError("need at least two observations")
    if not np.all(np.isfinite(daily)):
        raise ValueError("daily series contains non-finite entries")
    std = float(daily.std(ddof=0))
    if std == 0.0:
        raise ValueError("zero variance daily series")
    sr = float(daily.mean()) / std
    if annualize:
        root = np.sqrt(TRADING_DAYS_PER_YEAR)
        return {"sr": sr * root, "vol": std * root}
    return {"sr": sr, "vol": std}


def load_panel(path, fmt: str = "csv") -> ReturnsPanel:
    """Load a (date, asset...) CSV into a panel.

    Assets with any missing value are dropped with a warning; duplicate or
    unsorted dates and non-numeric cells are errors.
    """
    if fmt != "csv":
        raise ValueError(f"unsupported panel format {fmt!r}")
    frame = pd.read_csv(path)
    if frame.shape[1] < 2:
        raise ValueError("panel needs a date column plus at least one asset")
    date_col = frame.columns[0]
    try:
        dates = pd.to_datetime(frame[date_col], format="ISO8601").to_numpy("datetime64[D]")
    except (ValueError, TypeError) as exc:
        raise ValueError(f"cannot parse dates in column {date_col!r}: {exc}") from exc
    if len(np.unique(dates)) != len(dates):
        raise ValueError("duplicate dates in panel")
    if np.any(np.diff(dates) <= np.timedelta64(0, "D")):
        raise ValueError("dates must be strictly increasing")
    values = frame.drop(columns=[date_col])
    for col in values.columns:
        if not np.issubdtype(values[col].dtype, np.number):
            coerced = pd.to_numeric(values[col], errors="coerce")
            if coerced.isna().sum() > values[col].isna().sum():
                raise ValueError(f"non-numeric cells in asset column {col!r}")
            values[col] = coerced
    keep = [col for col in values.columns if not values[col].isna().any()]
    dropped = [col for col in values.columns if col not in keep]
    if dropped:
        warnings.warn(f"dropping {len(dropped)} asset(s) with missing values: "
                      f"{dropped[:5]}{'...' if len(dropped) > 5 else ''}")
    if not keep:
        raise ValueError("no complete asset columns remain after dropping")
    data = values[keep].to_numpy(dtype=float)
    return ReturnsPanel(data=data, dates=tuple(dates), assets=tuple(keep))


def _month_weights(strategy: str, moments, mu_for_direction, reg: Regularizer,
                   mu0: float | None) -> PortfolioWeights:
    if strategy in ("mv_known_mu", "mv_sample_mu"):
        return mv_weights(moments, mu_for_direction, reg)
    if strategy == "gmv":
        return gmv_weights(moments, reg)
    coeffs = frontier_coefficients(mu_for_direction, moments, reg)
    return PortfolioWeights(w=coeffs.weights(mu0), normalization="raw")


def _window_stats(daily_dates, daily, labels, start_m, end_m, fw, stride,
                  annualize) -> list[WindowRecord]:
    day_months = daily_dates.astype("datetime64[M]")
    records = []
    w_start = start_m
    while w_start + fw - 1 <= end_m:
        mask = (day_months >= w_start) & (day_months < w_start + fw)
        for lab in labels:
            series = daily[lab][mask]
            if series.size >= 2 and np.all(np.isfinite(series)) and series.std() > 0:
                stats = realized_stats(series, annualize=annualize)
                sr, vol = stats["sr"], stats["vol"]
            else:
                sr, vol = float("nan"), float("nan")
            records.append(WindowRecord(window_start=str(w_start), label=lab,
                                        realized_sr=sr, realized_vol=vol))
        w_start = w_start + stride
    return records


def run_backtest(panel: ReturnsPanel, config: BacktestConfig) -> BacktestReport:
    """Roll the monthly protocol over the panel and assemble the report.

    Weights for a testing month depend only on rows strictly before its first
    date, except when ``mu_source="oracle_month_ahead"`` injects the testing
    month's mean; that look-ahead is surfaced as ``lookahead_mu`` in the
    report config.
    """
    if panel.dates is None:
        raise ValueError("backtest requires a dated panel")
    dates = np.asarray(panel.dates, dtype="datetime64[D]")
    months_of_rows = dates.astype("datetime64[M]")
    start_m = np.datetime64(config.test_start, "M")
    end_m = np.datetime64(config.test_end, "M")
    if start_m > end_m:
        raise ValueError("test_start is after test_end")
    if start_m - config.lookback_months < months_of_rows[0]:
        raise ValueError("lookback window extends before panel coverage")
    if end_m > months_of_rows[-1]:
        raise ValueError("test range extends beyond panel coverage")

    labels = tuple(c.label for c in config.candidates.candidates) + (ZERO_LABEL, STAR_LABEL)
    zero_reg = Regularizer.zero(panel.p)
    criterion = _CRITERION_BY_STRATEGY[config.strategy]

    test_months = np.arange(start_m, end_m + 1)
    month_records: list[MonthRecord] = []
    daily_chunks: dict[str, list[np.ndarray]] = {lab: [] for lab in labels}
    date_chunks: list[np.ndarray] = []

    for m in test_months:
        in_month = months_of_rows == m
        if not in_month.any():
            warnings.warn(f"no trading days in {m}; month skipped")
            continue
        hist = (months_of_rows >= m - config.lookback_months) & (months_of_rows < m)
        if hist.sum() < 2:
            raise ValueError(f"insufficient lookback rows before {m}")
        hist_panel = ReturnsPanel(data=panel.data[hist], risk_free=panel.risk_free)
        moments = compute_sample_moments(hist_panel)

        month_rows = panel.data[in_month]
        if config.mu_source == "oracle_month_ahead":
            mu_excess = month_rows.mean(axis=0) - panel.risk_free
        else:
            mu_excess = moments.mu_hat
        if config.strategy == "frontier":
            mu_direction = mu_excess + panel.risk_free  # raw mean return
        elif config.strategy == "mv_sample_mu":
            mu_direction = moments.mu_hat
        else:
            mu_direction = mu_excess

        errors: list[str] = []
        month_excess = month_rows - panel.risk_free
        month_weights: dict[str, np.ndarray | None] = {}
        for reg in tuple(config.candidates.candidates) + (zero_reg,):
            lab = reg.label if reg is not zero_reg else ZERO_LABEL
            try:
                w = _month_weights(config.strategy, moments, mu_direction, reg,
                                   config.mu0).w
            except (ValueError, np.linalg.LinAlgError) as exc:
                errors.append(f"{lab}: {exc}")
                w = None
            month_weights[lab] = w

        sel_mu = None if config.strategy == "gmv" else mu_direction
        try:
            result = select(moments, sel_mu, config.candidates, criterion,
                            mu0=config.mu0)
            chosen = result.chosen.label
            month_weights[STAR_LABEL] = month_weights[chosen]
        except (ValueError, np.linalg.LinAlgError) as exc:
            errors.append(f"{STAR_LABEL}: {exc}")
            chosen = "none"
            month_weights[STAR_LABEL] = None

        raw_returns = config.strategy == "frontier"
        for lab in labels:
            w = month_weights[lab]
            if w is None:
                daily_chunks[lab].append(np.full(month_rows.shape[0], np.nan))
            elif raw_returns:
                daily_chunks[lab].append(month_rows @ w)
            else:
                daily_chunks[lab].append(month_excess @ w)
        date_chunks.append(dates[in_month])

        w_star = month_weights[STAR_LABEL]
        if w_star is None:
            summary = {"book": float("nan"), "net": float("nan"),
                       "max_abs": float("nan")}
        else:
            summary = {
                "book": float(np.abs(w_star).sum()),
                "net": float(w_star.sum()),
                "max_abs": float(np.abs(w_star).max()),
            }
        month_records.append(MonthRecord(month=str(m), chosen_label=chosen,
                                         weights_summary=summary,
                                         errors=tuple(errors)))

    if not date_chunks:
        raise ValueError("no testing months with trading days")
    daily_dates = np.concatenate(date_chunks)
    daily = {lab: np.concatenate(daily_chunks[lab]) for lab in labels}

    windows = _window_stats(daily_dates, daily, labels, start_m, end_m,
                            config.forward_window_months,
                            config.window_stride_months, config.annualize)
    config_echo = {
        "lookback_months": config.lookback_months,
        "test_start": config.test_start,
        "test_end": config.test_end,
        "strategy": config.strategy,
        "mu_source": config.mu_source,
        "forward_window_months": config.forward_window_months,
        "window_stride_months": config.window_stride_months,
        "mu0": config.mu0,
        "annualize": config.annualize,
        "lookahead_mu": config.uses_lookahead_mu,
        "n_candidates": len(config.candidates),
        "labels": list(labels),
    }
    return BacktestReport(config=config_echo, labels=labels,
                          months=month_records, daily_dates=daily_dates,
                          daily=daily, windows=windows)
