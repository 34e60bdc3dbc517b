"""Monte Carlo replication study and the market-data analysis pipeline."""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import asymptotics, diagnostics
from .data import MarketDataset
from .density import CumulantEvaluator, DensityFailure, density_x
from .estimate import estimate
from .model import PARAM_NAMES, GridConstants, ModelParams, theoretical_acf_tau, unconditional_moments
from .simulate import RngStream, simulate_gamma_ou

log = logging.getLogger(__name__)

RESIDUAL_STATS = ("mean", "std", "skew", "kurt")


@dataclass
class McStudyConfig:
    theta0: ModelParams
    n: int
    m: int
    seed: int = 7
    delta: float = 1 / 250
    residual_point: str = "left"
    lb_lags: int | None = None

    def __post_init__(self):
        if self.m < 1 or self.n < 2:
            raise ValueError("need m >= 1 replications of n >= 2 observations")


@dataclass
class McStudyReport:
    config: McStudyConfig
    theta_hat: np.ndarray  # (m, 7), zero rows for invalid replications
    valid: np.ndarray
    residual_stats: np.ndarray  # (m, 4), NaN rows for invalid replications
    lb_reject: np.ndarray
    summary: dict = field(default_factory=dict)

    @property
    def validity_rate(self) -> float:
        return float(self.valid.mean())

    def as_dict(self) -> dict:
        cfg = self.config
        return {"theta0": cfg.theta0.as_dict(), "n": cfg.n, "m": cfg.m, "seed": cfg.seed, "delta": cfg.delta,
                "validity_rate": self.validity_rate, **self.summary}

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "mc_study.json").write_text(json.dumps(self.as_dict(), indent=2))
        with (out / "replications.csv").open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replication", "valid", *PARAM_NAMES, *(f"resid_{s}" for s in RESIDUAL_STATS),
                        "lb_reject"])
            for k in range(self.config.m):
                w.writerow([k, int(self.valid[k]), *(format(v, ".17g") for v in self.theta_hat[k]),
                            *(format(v, ".17g") for v in self.residual_stats[k]), int(self.lb_reject[k])])


def _summarize(values: np.ndarray, truth: np.ndarray | None, names) -> dict:
    m = values.shape[0]

    def spread(a):
        return a.std(axis=0, ddof=1).tolist() if m > 1 else None

    out = {"mean": dict(zip(names, values.mean(axis=0).tolist())),
           "std": dict(zip(names, spread(values))) if m > 1 else None}
    if truth is not None:
        sq, ab = (values - truth)**2, np.abs(values - truth)
        out["mse"] = dict(zip(names, sq.mean(axis=0).tolist()))
        out["mse_std"] = dict(zip(names, spread(sq))) if m > 1 else None
        out["mae"] = dict(zip(names, ab.mean(axis=0).tolist()))
        out["mae_std"] = dict(zip(names, spread(ab))) if m > 1 else None
    return out


def _replicate(args):
    cfg, k = args
    sample = simulate_gamma_ou(cfg.theta0, cfg.n, cfg.delta, RngStream(cfg.seed, k))
    est = estimate(sample)
    if not est.valid:
        return k, est.theta, False, np.full(4, np.nan), False
    res = diagnostics.residuals(sample, est.params, point=cfg.residual_point)
    lb = diagnostics.ljung_box(res.eps**2, cfg.lb_lags)
    return k, est.theta, True, np.array(diagnostics.moment_stats(res.eps)), lb.reject_at_5pct


def mc_study(config: McStudyConfig, threads: int = 1) -> McStudyReport:
    """Simulate, estimate and summarize ``config.m`` independent replications.

    Replication ``k`` uses stream ``(seed, k)``; results are merged by
    replication index, so the report does not depend on ``threads``.
    """
    jobs = [(config, k) for k in range(config.m)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_replicate, jobs, chunksize=max(1, config.m // (4 * threads))))
    else:
        results = [_replicate(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    theta = np.array([r[1] for r in results])
    valid = np.array([r[2] for r in results])
    resid = np.array([r[3] for r in results])
    lb = np.array([r[4] for r in results])

    summary = {}
    if valid.any():
        summary["parameters"] = _summarize(theta[valid], config.theta0.as_vector(), PARAM_NAMES)
        ideal = np.array([0.0, 1.0, 0.0, 3.0])
        summary["residuals"] = _summarize(resid[valid], ideal, RESIDUAL_STATS)
        summary["ljung_box_rejections"] = int(lb[valid].sum())
    return McStudyReport(config, theta, valid, resid, lb, summary)


# --- market data pipeline -------------------------------------------------------------------------

@dataclass
class AnalysisOptions:
    lb_lags: int = 35
    acf_lags: int = 50
    density_points: int = 201
    density_tol: float = 1e-8
    residual_point: str = "left"


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([format(v, ".17g") if isinstance(v, float) else v for v in row])


def _acf_rows(series, lags):
    lags = min(lags, len(series) - 1)
    band = diagnostics.acf_band(len(series))
    return [(k + 1, float(r), band) for k, r in enumerate(diagnostics.acf(series, lags))]


def analyze(dataset: MarketDataset, delta: float, options: AnalysisOptions | None = None,
            out_dir=None) -> dict:
    """Fit the Gamma-OU model to a market dataset and run the fit diagnostics.

    Returns the JSON-ready report; with ``out_dir`` also writes it as
    ``report.json`` next to the plot-ready CSV series.
    """
    opts = options or AnalysisOptions()
    sample = dataset.to_sample(delta)
    if sample.n < 100:
        log.warning("only %d returns; estimates will be unreliable", sample.n)
    est = estimate(sample)
    report: dict = {"n": sample.n, "delta": delta, "volume_unit": dataset.volume_unit,
                    "estimate": est.as_dict(), "valid": est.valid}
    series: dict[str, tuple] = {}
    if est.valid:
        params = est.params
        grid = GridConstants.for_params(params.lam, delta)
        try:
            sw = asymptotics.empirical_sandwich(sample, params, grid)
            report["standard_errors"] = dict(zip(PARAM_NAMES, sw.standard_errors().tolist()))
            report["sandwich"] = sw.as_dict()
        except asymptotics.SingularJacobianError as exc:
            report["standard_errors"] = None
            report["sandwich_failure"] = {"message": str(exc), "cond": exc.cond}
        report["unconditional_moments"] = unconditional_moments(params, grid)

        returns = sample.x
        mean, std, skew, kurt = diagnostics.moment_stats(returns)
        report["returns"] = {"mean": mean, "std": std, "skew": skew, "kurt": kurt}

        tau_acf = _acf_rows(sample.tau, opts.acf_lags)
        report["volume_acf"] = {"empirical": [r[1] for r in tau_acf],
                                "theoretical": [theoretical_acf_tau(params, k, grid) for k, _, _ in tau_acf]}
        series["acf_volume.csv"] = (["lag", "rho", "band"], tau_acf)
        series["acf_sq_returns.csv"] = (["lag", "rho", "band"], _acf_rows(returns**2, opts.acf_lags))
        series["volatility.csv"] = (["i", "date", "vol"],
                                    [(i + 1, dataset.dates[i + 1].isoformat(), float(v))
                                     for i, v in enumerate(params.sigma * np.sqrt(sample.tau[1:]))])
        try:
            res = diagnostics.residuals(sample, params, delta, point=opts.residual_point)
        except ValueError as exc:
            report["residual_failure"] = str(exc)
        else:
            m, s, sk, ku = diagnostics.moment_stats(res.eps)
            report["residuals"] = {
                "mean": m, "std": s, "skew": sk, "kurt": ku,
                "ljung_box_squared": diagnostics.ljung_box(res.eps**2, opts.lb_lags).as_dict(),
                "ks_normality": diagnostics.ks_normality(res.eps).as_dict(),
            }
            series["residuals.csv"] = (["i", "date", "eps", "zhat"],
                                       [(i + 1, dataset.dates[i + 1].isoformat(), float(e), float(z))
                                        for i, (e, z) in enumerate(zip(res.eps, res.zhat))])
            series["acf_residuals.csv"] = (["lag", "rho", "band"], _acf_rows(res.eps, opts.acf_lags))
            series["acf_sq_residuals.csv"] = (["lag", "rho", "band"], _acf_rows(res.eps**2, opts.acf_lags))

        x_grid = np.linspace(returns.min(), returns.max(), opts.density_points)
        try:
            curve = density_x(x_grid, CumulantEvaluator.from_params(params, grid), opts.density_tol)
        except (DensityFailure, ValueError) as exc:
            report["density_failure"] = str(exc)
        else:
            report["density"] = {"truncation": curve.truncation, "remainder_bound": curve.remainder_bound}
            series["density.csv"] = (["x", "pdf", "log_pdf"],
                                     [(float(a), float(b), float(c))
                                      for a, b, c in zip(curve.x_grid, curve.pdf, curve.log_pdf)])

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json.dumps(report, indent=2))
        for name, (header, rows) in series.items():
            _write_csv(out / name, header, rows)
    return report
