"""Command-line entry point: simulate / estimate / frontier / select / backtest.

Every command is driven by a declarative JSON config (plus a few flags),
validates the config before touching the filesystem, and removes any files it
already wrote if a later step fails, so an exit code of 0 means all outputs
exist.  All randomness is seeded from the config (--seed overrides), making
primary outputs byte-identical across runs; the manifest carries timing and
is excluded from that guarantee.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._linalg import format_float
from .backtest import BacktestConfig, load_panel, run_backtest
from .moments import Regularizer, compute_sample_moments
from .selection import CandidateSet, select
from .frontier import frontier_coefficients, frontier_point
from .sharpe import sr_hat_known_mu, sr_hat_unknown_mu, unknown_mu_bias_term
from .simgen import DesignSpec, run_monte_carlo

THREADS_ENV = "SHARPE_RMT_THREADS"


class ConfigError(ValueError):
    pass


def _check_keys(cfg: dict, where: str, required: tuple[str, ...],
                optional: tuple[str, ...] = ()) -> None:
    if not isinstance(cfg, dict):
        raise ConfigError(f"{where} must be a JSON object")
    allowed = set(required) | set(optional)
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    missing = sorted(set(required) - set(cfg))
    if missing:
        raise ConfigError(f"missing key(s) in {where}: {', '.join(missing)}")


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _load_vector(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        vec = np.load(path)
    else:
        vec = np.loadtxt(path, delimiter=",")
    vec = np.asarray(vec, dtype=float).ravel()
    if vec.size == 0 or not np.all(np.isfinite(vec)):
        raise ConfigError(f"invalid vector file {path}")
    return vec


def _load_matrix(path: str) -> np.ndarray:
    if path.endswith(".npy"):
        m = np.load(path)
    else:
        m = np.loadtxt(path, delimiter=",")
    return np.asarray(m, dtype=float)


def _base_matrix(spec: dict, p: int, where: str) -> np.ndarray:
    _check_keys(spec, where, required=("base",), optional=("file", "scales", "scale"))
    base = spec["base"]
    if base == "identity":
        return np.eye(p)
    if base == "file":
        if "file" not in spec:
            raise ConfigError(f"{where}: base 'file' needs a 'file' path")
        m = _load_matrix(spec["file"])
        if m.shape != (p, p):
            raise ConfigError(f"{where}: base matrix shape {m.shape} != ({p}, {p})")
        return m
    raise ConfigError(f"{where}: unknown base {base!r} (use 'identity' or 'file')")


def _regularizer_from(spec: dict, p: int, where: str) -> Regularizer:
    scale = float(spec.get("scale", 0.0))
    if spec.get("base") == "zero" or scale == 0.0:
        return Regularizer.zero(p)
    base = _base_matrix(spec, p, where)
    label_base = "I" if spec["base"] == "identity" else "B"
    return Regularizer.scaled(base, scale, label_base)


def _candidates_from(spec: dict, p: int) -> CandidateSet:
    _check_keys(spec, "candidates", required=("base", "scales"), optional=("file",))
    scales = [float(q) for q in spec["scales"]]
    if not scales:
        raise ConfigError("candidates.scales must be non-empty")
    base = _base_matrix(spec, p, "candidates")
    label_base = "I" if spec["base"] == "identity" else "B"
    return CandidateSet.scaled(base, scales, label_base)


class _OutputTracker:
    """Records written files so a failure can roll them back."""

    def __init__(self, outdir: str):
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.outdir / name
        self.written.append(p)
        return p

    def rollback(self) -> None:
        for p in self.written:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _write_manifest(tracker: _OutputTracker, command: str, config: dict,
                    seed, elapsed: float) -> None:
    import scipy

    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "elapsed_seconds": elapsed,
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "sharpe_rmt": __version__,
        },
    }
    tracker.path("manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg, "config", required=("task", "n", "trials", "design"))
    design_cfg = dict(cfg["design"])
    _check_keys(design_cfg, "design",
                required=("p", "seed"),
                optional=("sigma_kind", "mu_kind", "q_kind", "q_grid",
                          "mu0_grid", "frontier_q"))
    if args.seed is not None:
        design_cfg["seed"] = args.seed
    if "q_grid" in design_cfg and design_cfg["q_grid"] is not None:
        design_cfg["q_grid"] = tuple(design_cfg["q_grid"])
    if "mu0_grid" in design_cfg:
        design_cfg["mu0_grid"] = tuple(design_cfg["mu0_grid"])
    spec = DesignSpec(**design_cfg)
    t0 = time.monotonic()
    report = run_monte_carlo(spec, int(cfg["n"]), int(cfg["trials"]),
                             cfg["task"], threads=args.threads)
    tracker = _OutputTracker(args.out)
    try:
        report.to_csv(tracker.path("report.csv"))
        report.to_json(tracker.path("report.json"))
        lines = ["cell,mean_true,mean_hat"]
        for rec in report.cells:
            lines.append(f"{format_float(rec['cell'])},"
                         f"{format_float(rec['mean_true'])},"
                         f"{format_float(rec['mean_hat'])}")
        tracker.path("curves.csv").write_text("\n".join(lines) + "\n",
                                              encoding="utf-8")
        _write_manifest(tracker, "simulate", cfg, spec.seed,
                        time.monotonic() - t0)
    except Exception:
        tracker.rollback()
        raise
    return 0


def cmd_estimate(args) -> int:
    panel = load_panel(args.panel)
    mu = _load_vector(args.mu) if args.mu else None
    q_spec = {"base": args.q_base, "scale": args.q_scale}
    if args.q_file:
        q_spec = {"base": "file", "file": args.q_file, "scale": args.q_scale}
    reg = _regularizer_from(q_spec, panel.p, "q")
    if mu is not None:
        moments = compute_sample_moments(panel, known_mu=mu)
        est = sr_hat_known_mu(mu, moments, reg)
        payload = {
            "mode": est.mode,
            "value": est.value,
            "t_n1": est.numerator,
            "t_n2_hat": est.denominator**2,
            "correction": est.correction,
        }
    else:
        moments = compute_sample_moments(panel)
        est = sr_hat_unknown_mu(moments, reg)
        payload = {
            "mode": est.mode,
            "value": est.value,
            "numerator": est.numerator,
            "t_n2_hat": est.denominator**2,
            "correction": est.correction,
            "bias_term": unknown_mu_bias_term(moments, reg),
        }
    payload.update({"n": moments.n, "p": moments.p, "c": moments.c,
                    "q_label": reg.label})
    print(json.dumps(payload, sort_keys=True, indent=1))
    return 0


def cmd_frontier(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg, "config", required=("panel", "q", "mu0_grid"),
                optional=("mu",))
    panel = load_panel(cfg["panel"])
    t0 = time.monotonic()
    if "mu" in cfg:
        mu = _load_vector(cfg["mu"])
        moments = compute_sample_moments(panel, known_mu=mu)
        r = mu + panel.risk_free
    else:
        moments = compute_sample_moments(panel)
        r = moments.mu_hat + panel.risk_free
    reg = _regularizer_from(cfg["q"], panel.p, "q")
    coeffs = frontier_coefficients(r, moments, reg)
    tracker = _OutputTracker(args.out)
    try:
        lines = ["mu0,sigma_hat"]
        for mu0 in cfg["mu0_grid"]:
            pt = frontier_point(coeffs, float(mu0), moments, reg)
            lines.append(f"{format_float(float(mu0))},{format_float(pt.sigma_hat)}")
        tracker.path("frontier.csv").write_text("\n".join(lines) + "\n",
                                                encoding="utf-8")
        _write_manifest(tracker, "frontier", cfg, None, time.monotonic() - t0)
    except Exception:
        tracker.rollback()
        raise
    return 0


def cmd_select(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg, "config", required=("panel", "candidates", "criterion"),
                optional=("mu", "mu0"))
    panel = load_panel(cfg["panel"])
    t0 = time.monotonic()
    mu = _load_vector(cfg["mu"]) if "mu" in cfg else None
    criterion = cfg["criterion"]
    if criterion == "max_sr_known" and mu is None:
        raise ConfigError("criterion max_sr_known requires a 'mu' file")
    if mu is not None and criterion in ("max_sr_known", "min_frontier_var"):
        moments = compute_sample_moments(panel, known_mu=mu)
    else:
        moments = compute_sample_moments(panel)
        if criterion == "min_frontier_var" and mu is None:
            mu = moments.mu_hat + panel.risk_free
    candidates = _candidates_from(cfg["candidates"], panel.p)
    result = select(moments, mu, candidates, criterion,
                    mu0=cfg.get("mu0"))
    tracker = _OutputTracker(args.out)
    try:
        result.to_csv(tracker.path("scores.csv"))
        _write_manifest(tracker, "select", cfg, None, time.monotonic() - t0)
    except Exception:
        tracker.rollback()
        raise
    print(result.chosen.label)
    return 0


def cmd_backtest(args) -> int:
    cfg = _load_config(args.config)
    _check_keys(cfg, "config",
                required=("panel", "lookback_months", "test_start", "test_end",
                          "candidates", "strategy"),
                optional=("mu_source", "forward_window_months",
                          "window_stride_months", "mu0", "annualize"))
    panel = load_panel(cfg["panel"])
    t0 = time.monotonic()
    candidates = _candidates_from(cfg["candidates"], panel.p)
    config = BacktestConfig(
        lookback_months=int(cfg["lookback_months"]),
        test_start=cfg["test_start"],
        test_end=cfg["test_end"],
        candidates=candidates,
        strategy=cfg["strategy"],
        mu_source=cfg.get("mu_source", "historical_sample"),
        forward_window_months=int(cfg.get("forward_window_months", 36)),
        window_stride_months=int(cfg.get("window_stride_months", 1)),
        mu0=cfg.get("mu0"),
        annualize=bool(cfg.get("annualize", False)),
    )
    report = run_backtest(panel, config)
    tracker = _OutputTracker(args.out)
    for name in ("monthly.csv", "windows.csv", "daily.csv", "report.json"):
        tracker.path(name)  # pre-register so a partial write rolls back
    try:
        report.write(args.out)
        _write_manifest(tracker, "backtest", cfg, None, time.monotonic() - t0)
    except Exception:
        tracker.rollback()
        raise
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sharpe-rmt",
        description="Out-of-sample Sharpe estimation for regularized portfolios",
    )
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get(THREADS_ENV, "1")),
                        help=f"worker threads (default: ${THREADS_ENV} or 1)")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, needs_config in (
        ("simulate", cmd_simulate, True),
        ("frontier", cmd_frontier, True),
        ("select", cmd_select, True),
        ("backtest", cmd_backtest, True),
    ):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=needs_config)
        sp.add_argument("--out", required=True)
        sp.add_argument("--seed", type=int, default=None)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("estimate")
    sp.add_argument("--panel", required=True)
    sp.add_argument("--mu", default=None,
                    help="known mean vector (.npy or csv); omit for sample mean")
    sp.add_argument("--q-scale", type=float, default=0.0)
    sp.add_argument("--q-base", choices=("zero", "identity"), default="zero")
    sp.add_argument("--q-file", default=None)
    sp.set_defaults(func=cmd_estimate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
