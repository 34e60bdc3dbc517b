"""Closed-form martingale estimating function estimator.

The seven estimating equations ``sum_k [Xi_k - f(tau_{k-1}, theta)] = 0`` are
solved explicitly: the three volume equations are the AR(1) moment
equations for ``(zeta, eta, gamma)``; given those, the four return equations
are linear in ``(mu, beta, rho, sigma**2)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import PARAM_NAMES, GridConstants, ModelParams, MomentSet, moment_coefficients
from .simulate import PathSample


class FailureReason(str, enum.Enum):
    NONE = "None"
    NONPOSITIVE_AUTOCOVARIANCE = "NonpositiveAutocovariance"
    DEGENERATE_VOLUME_VARIANCE = "DegenerateVolumeVariance"
    NONPOSITIVE_SIGMA_SQUARE = "NonpositiveSigmaSquare"
    GAMMA_OUT_OF_RANGE = "GammaOutOfRange"


@dataclass
class EstimateReport:
    theta: np.ndarray
    zeta: float
    eta: float
    valid: bool
    failure_reason: FailureReason
    moments: MomentSet

    @property
    def params(self) -> ModelParams:
        if not self.valid:
            raise ValueError(f"no valid estimate ({self.failure_reason.value})")
        return ModelParams.from_vector(self.theta)

    def as_dict(self) -> dict:
        d = dict(zip(PARAM_NAMES, map(float, self.theta)))
        d.update(zeta=float(self.zeta), eta=float(self.eta), valid=bool(self.valid),
                 failure_reason=self.failure_reason.value, n=int(self.moments.n))
        return d


def _mean(a: np.ndarray) -> float:
    # np.add.reduce uses pairwise summation for contiguous float arrays
    return float(np.add.reduce(np.ascontiguousarray(a, dtype=float))) / a.size


def empirical_moments(sample: PathSample) -> MomentSet:
    """The nine sample averages of returns and volumes over i = 1..n."""
    n = sample.n
    if n < 2:
        raise ValueError(f"need at least 2 observations, got {n}")
    x, tau = sample.x, sample.tau
    cur, prev = tau[1:], tau[:-1]
    xi = np.array([_mean(cur), _mean(cur * prev), _mean(cur * cur), _mean(x),
                   _mean(x * prev), _mean(x * cur), _mean(x * x)])
    return MomentSet(xi=xi, upsilon=np.array([_mean(prev), _mean(prev * prev)]), n=n)


def _failed(moments: MomentSet, reason: FailureReason) -> EstimateReport:
    return EstimateReport(np.zeros(7), 0.0, 0.0, False, reason, moments)


def solve(moments: MomentSet, delta: float) -> EstimateReport:
    """Solve the estimating equations for the moment averages ``moments``.

    Outside the admissible event the estimate is the zero vector and
    ``valid`` is false; nothing is raised.
    """
    x1, x2, x3, x4, x5, x6, x7 = map(float, moments.xi)
    u1, u2 = map(float, moments.upsilon)
    autocov = x2 - x1 * u1
    var_prev = u2 - u1**2
    if not var_prev > 0:
        return _failed(moments, FailureReason.DEGENERATE_VOLUME_VARIANCE)
    if not autocov > 0:
        return _failed(moments, FailureReason.NONPOSITIVE_AUTOCOVARIANCE)
    g = autocov / var_prev
    if not g < 1:
        return _failed(moments, FailureReason.GAMMA_OUT_OF_RANGE)

    zeta = (g * u1 - x1) / (g - 1)
    # exact root of the third equation; replacing x1**2 by u1**2 here (equal in the limit)
    # leaves an O(1/n) residual in it
    eta = (x3 - g**2 * u2 - x1**2 + g**2 * u1**2) / (1 - g**2)
    lam = -math.log(g) / delta
    eps = (1 - g) / lam
    beta = (x5 - u1 * x4) / (eps * var_prev)
    rho = (-beta * eps * (-u1**2 + eps * lam * (eta + u1**2 - u2) + u2) - x1 * x4 + x6) / (2 * eps * eta * lam)
    mu = (-delta * lam * rho * zeta - beta * (delta * zeta + eps * (u1 - zeta)) + x4) / delta
    a = (4 * beta * (eps - delta) * eta * lam * rho
         + beta**2 * (-2 * delta * eta + eps * (eta * (2 + eps * lam) + eps * lam * (u1**2 - u2)))
         + lam * (-2 * delta * eta * lam * rho**2 - x4**2 + x7)) / lam
    b = delta * zeta + eps * (u1 - zeta)
    if not (zeta > 0 and eta > 0 and b != 0 and a / b > 0):
        # zeta, eta > 0 hold on the admissible event up to rounding; sigma^2 need not
        return _failed(moments, FailureReason.NONPOSITIVE_SIGMA_SQUARE)
    sigma = math.sqrt(a / b)
    nu, alpha = zeta**2 / eta, zeta / eta
    theta = np.array([nu, alpha, lam, mu, beta, sigma, rho])
    return EstimateReport(theta, zeta, eta, True, FailureReason.NONE, moments)


def estimate(sample: PathSample, delta: float | None = None) -> EstimateReport:
    return solve(empirical_moments(sample), sample.delta if delta is None else delta)


def estimating_function_residuals(sample: PathSample, params: ModelParams, grid: GridConstants) -> np.ndarray:
    """``H_k^i = Xi_k^i - f^i(tau_{k-1}, theta)`` as an (n, 7) array."""
    x, cur, prev = sample.x, sample.tau[1:], sample.tau[:-1]
    xi = np.column_stack([cur, cur * prev, cur * cur, x, x * prev, x * cur, x * x])
    c = moment_coefficients(params, grid)
    f = c[:, 0] + np.outer(prev, c[:, 1]) + np.outer(prev**2, c[:, 2])
    return xi - f
