"""Residuals, sample moments, autocorrelations and goodness-of-fit tests."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .model import ModelParams
from .simulate import PathSample


@dataclass
class ResidualSeries:
    eps: np.ndarray
    zhat: np.ndarray
    vol: np.ndarray


@dataclass
class TestResult:
    statistic: float
    p_value: float
    lags_or_n: int

    @property
    def reject_at_5pct(self) -> bool:
        return self.p_value < 0.05

    def as_dict(self) -> dict:
        return {"statistic": float(self.statistic), "p_value": float(self.p_value),
                "lags_or_n": int(self.lags_or_n), "reject_at_5pct": self.reject_at_5pct}


def residuals(sample: PathSample, theta: ModelParams, delta: float | None = None,
              point: str = "left") -> ResidualSeries:
    """Standardized return innovations under Euler approximations.

    The jump part is approximated by ``Z_i ~ (lambda Delta + 1) tau_i - tau_{i-1}``
    and the integrated volume by ``tau Delta`` at the left (``tau_{i-1}``) or
    right (``tau_i``) end of the interval, selected by ``point``. ``vol`` is
    the volatility path ``sigma sqrt(tau_i)``.
    """
    delta = sample.delta if delta is None else delta
    tau = sample.tau
    if point not in ("left", "right"):
        raise ValueError("point must be 'left' or 'right'")
    bad = np.flatnonzero(tau <= 0)
    if bad.size:
        raise ValueError(f"volume must be positive, tau[{bad[0]}] = {tau[bad[0]]}")
    cur, prev = tau[1:], tau[:-1]
    level = prev if point == "left" else cur
    zhat = (theta.lam * delta + 1) * cur - prev
    eps = (sample.x - theta.mu * delta - theta.beta * level * delta - theta.rho * zhat) / (
        theta.sigma * np.sqrt(level * delta))
    return ResidualSeries(eps=eps, zhat=zhat, vol=theta.sigma * np.sqrt(cur))


def moment_stats(series) -> tuple[float, float, float, float]:
    """Mean, std, skewness mu3 / mu2^1.5 and kurtosis mu4 / mu2^2 from plain central moments."""
    y = np.asarray(series, dtype=float)
    if y.size < 4:
        raise ValueError("need at least 4 values")
    m = y.mean()
    c = y - m
    m2 = np.mean(c**2)
    if m2 == 0:
        raise ValueError("zero variance: skewness and kurtosis undefined")
    return float(m), math.sqrt(m2), float(np.mean(c**3) / m2**1.5), float(np.mean(c**4) / m2**2)


def acf(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags 1..max_lag (normalized by the lag-0 sum)."""
    y = np.asarray(series, dtype=float)
    if not 0 < max_lag < y.size:
        raise ValueError(f"max_lag must be in 1..{y.size - 1}")
    c = y - y.mean()
    denom = c @ c
    if denom == 0:
        raise ValueError("zero variance: autocorrelation undefined")
    return np.array([c[:-k] @ c[k:] for k in range(1, max_lag + 1)]) / denom


def acf_band(n: int) -> float:
    return 1.96 / math.sqrt(n)


def ljung_box(series, lags: int | None = None) -> TestResult:
    y = np.asarray(series, dtype=float)
    n = y.size
    lags = math.isqrt(n) if lags is None else lags
    r = acf(y, lags)
    q = n * (n + 2) * np.sum(r**2 / (n - np.arange(1, lags + 1)))
    return TestResult(float(q), float(stats.chi2.sf(q, lags)), lags)


def ks_normality(series) -> TestResult:
    """One-sample Kolmogorov-Smirnov test against N(0, 1), asymptotic p-value."""
    y = np.asarray(series, dtype=float)
    if y.size < 10:
        raise ValueError("need at least 10 values")
    d = stats.kstest(y, "norm").statistic
    return TestResult(float(d), ks_asymptotic_pvalue(d, y.size), y.size)


def ks_asymptotic_pvalue(d: float, n: int) -> float:
    return float(np.clip(stats.kstwobign.sf(d * math.sqrt(n)), 0.0, 1.0))
