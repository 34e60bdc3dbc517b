"""Parameters, stationary laws and conditional moments of the volume-driven BNS model.

Trading volume ``tau`` follows a non-Gaussian OU process driven by an
increasing Levy process ``Z(lambda t)``; log returns load on the integrated
volume, a Brownian term scaled by ``sigma * sqrt(tau)`` and the BDLP jumps:

    dX = (mu + beta tau) dt + sigma sqrt(tau) dW + rho dZ(lambda t)
    dtau = -lambda tau dt + dZ(lambda t)

All moment formulas are written in the generic parameterization
``(zeta, eta, lambda, mu, beta, sigma, rho)`` where ``zeta`` and ``eta`` are the
stationary mean and variance of the volume. ``(nu, alpha)`` of the Gamma-OU
law and ``(delta, gamma)`` of the IG-OU law are views on ``(zeta, eta)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

TRADING_DAYS = 250
PARAM_NAMES = ("nu", "alpha", "lambda", "mu", "beta", "sigma", "rho")
MAX_MOMENT_ORDER = 8


class LawKind(str, enum.Enum):
    GAMMA_OU = "GammaOU"
    IG_OU = "IGOU"


@dataclass(frozen=True)
class StationaryLaw:
    """Stationary distribution of the volume process, stored as mean and variance."""

    kind: LawKind
    zeta: float
    eta: float

    def __post_init__(self):
        if not (self.zeta > 0 and self.eta > 0):
            raise ValueError(f"stationary mean and variance must be positive, got {self.zeta}, {self.eta}")

    @classmethod
    def gamma(cls, nu: float, alpha: float) -> "StationaryLaw":
        if not (nu > 0 and alpha > 0):
            raise ValueError("Gamma law needs nu > 0 and alpha > 0")
        return cls(LawKind.GAMMA_OU, nu / alpha, nu / alpha**2)

    @classmethod
    def inverse_gaussian(cls, delta: float, gamma_ig: float) -> "StationaryLaw":
        if not (delta > 0 and gamma_ig > 0):
            raise ValueError("IG law needs delta > 0 and gamma > 0")
        return cls(LawKind.IG_OU, delta / gamma_ig, delta / gamma_ig**3)

    @property
    def native_params(self) -> tuple[float, float]:
        """``(nu, alpha)`` for the Gamma law, ``(delta, gamma_ig)`` for the IG law."""
        if self.kind is LawKind.GAMMA_OU:
            return self.zeta**2 / self.eta, self.zeta / self.eta
        gamma_ig = math.sqrt(self.zeta / self.eta)
        return self.zeta * gamma_ig, gamma_ig


@dataclass(frozen=True)
class ModelParams:
    """The parameter vector ``theta = (nu, alpha, lambda, mu, beta, sigma, rho)``.

    ``nu`` and ``alpha`` are the Gamma-OU shape and rate of the stationary
    volume law. ``lam`` is the mean reversion rate per year.
    """

    nu: float
    alpha: float
    lam: float
    mu: float
    beta: float
    sigma: float
    rho: float

    def __post_init__(self):
        bad = [n for n, v in zip(("nu", "alpha", "lambda", "sigma"),
                                 (self.nu, self.alpha, self.lam, self.sigma)) if not v > 0]
        if bad:
            raise ValueError(f"parameters must be positive: {', '.join(bad)}")

    @classmethod
    def from_generic(cls, zeta, eta, lam, mu, beta, sigma, rho) -> "ModelParams":
        nu, alpha = StationaryLaw(LawKind.GAMMA_OU, zeta, eta).native_params
        return cls(nu, alpha, lam, mu, beta, sigma, rho)

    @classmethod
    def from_vector(cls, theta) -> "ModelParams":
        return cls(*(float(v) for v in theta))

    @property
    def zeta(self) -> float:
        return self.nu / self.alpha

    @property
    def eta(self) -> float:
        return self.nu / self.alpha**2

    @property
    def law(self) -> StationaryLaw:
        return StationaryLaw(LawKind.GAMMA_OU, self.zeta, self.eta)

    def as_vector(self) -> np.ndarray:
        return np.array([self.nu, self.alpha, self.lam, self.mu, self.beta, self.sigma, self.rho])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(PARAM_NAMES, map(float, self.as_vector())))


# Parameter values of the simulation study (one year = 250 trading days).
REFERENCE_PARAMS = ModelParams(nu=6.17, alpha=1.42, lam=177.95, mu=0.435,
                               beta=-0.015, sigma=0.087, rho=-0.00056)


@dataclass(frozen=True)
class GridConstants:
    delta: float
    gamma_grid: float
    epsilon: float

    @classmethod
    def for_params(cls, lam: float, delta: float = 1.0 / TRADING_DAYS) -> "GridConstants":
        if not delta > 0:
            raise ValueError("grid spacing must be positive")
        gamma_grid = math.exp(-lam * delta)
        # -expm1 keeps 1 - gamma accurate when lambda * delta is small
        return cls(delta, gamma_grid, -math.expm1(-lam * delta) / lam)


@dataclass
class MomentSet:
    """The nine sample averages (xi^1..xi^7, upsilon^1, upsilon^2); ``n = 0`` for limits."""

    xi: np.ndarray
    upsilon: np.ndarray
    n: int = 0

    def as_dict(self) -> dict:
        return {"xi": self.xi.tolist(), "upsilon": self.upsilon.tolist(), "n": self.n}


def _check_index(i: int) -> None:
    if i not in range(1, 8):
        raise ValueError(f"moment index must be in 1..7, got {i}")


def moment_coefficients(params: ModelParams, grid: GridConstants) -> np.ndarray:
    """Coefficients ``c[i-1, k]`` with ``f^i(iota) = sum_k c[i-1, k] iota**k``.

    Written in the generic ``(zeta, eta)`` form. In f^6 and f^7 the products
    ``eta * nu`` of the Gamma-OU form are ``zeta**2``.
    """
    z, h = params.zeta, params.eta
    lam, mu, b, s, r = params.lam, params.mu, params.beta, params.sigma, params.rho
    d, g, e = grid.delta, grid.gamma_grid, grid.epsilon

    c = np.zeros((7, 3))
    c[0] = [(1 - g) * z, g, 0.0]
    c[1] = [0.0, (1 - g) * z, g]
    c[2] = [(1 - g)**2 * z**2 + (1 - g**2) * h, 2 * g * (1 - g) * z, g**2]
    m0 = d * mu + b * d * z - b * e * z + d * lam * r * z
    c[3] = [m0, b * e, 0.0]
    c[4] = [0.0, m0, b * e]
    c[5] = [
        lam * (d * b * e * z**2 + e * (2 * h + d * lam * z**2) * r) + z * d * lam * mu * e
        # conditional covariance of integrated volume and U_1; absent from the printed form
        + b * lam * e**2 * (h - z**2),
        d * mu * g + z * (b * (e * (1 - 2 * g) + d * g) + d * lam * g * r),
        b * e * g,
    ]
    c[6] = [
        d**2 * z**2 * b**2 + e**2 * z**2 * b**2 - 2 * d * e * z**2 * b**2
        + 4 * d * h * r * b - 4 * e * h * r * b
        + 2 * d**2 * mu * z * b - 2 * d * e * mu * z * b + d**2 * mu**2 + d**2 * lam**2 * z**2 * r**2
        - e * s**2 * z + d * s**2 * z
        + lam * (2 * b * z**2 * r * d**2 + 2 * mu * r * z * d**2 + 2 * h * r**2 * d - 2 * b * e * z**2 * r * d)
        + (2 * b**2 * d * h - 4 * b**2 * e * h) / lam
        + (b**2 * h - b**2 * h * g**2) / lam**2,
        b**2 * e * (2 * d * z - 2 * e * z) + 2 * d * e * mu * b + e * s**2 + lam * 2 * b * e * r * z * d,
        b**2 * e**2,
    ]
    return c


def conditional_moment(i: int, iota, params: ModelParams, grid: GridConstants):
    """``f^i(iota, theta) = E[Xi_1^i | tau_0 = iota]`` for ``i`` in 1..7.

    ``Xi = (tau_1, tau_1 tau_0, tau_1**2, X_1, X_1 tau_0, X_1 tau_1, X_1**2)``.
    Accepts scalar or array ``iota``.
    """
    _check_index(i)
    c = moment_coefficients(params, grid)[i - 1]
    iota = np.asarray(iota, dtype=float)
    if np.any(iota < 0):
        raise ValueError("volume level must be nonnegative")
    out = c[0] + iota * (c[1] + iota * c[2])
    return float(out) if out.ndim == 0 else out


def printed_f6(iota, params: ModelParams, grid: GridConstants):
    """The f^6 expression in the lemma's printed form, kept for comparison only.

    It lacks the term ``beta * lambda * eps**2 * (eta - zeta**2)``, which
    vanishes only for ``nu = 1``; the conditional Monte Carlo oracle rejects it.
    """
    z, h, nu = params.zeta, params.eta, params.nu
    lam, mu, b, r = params.lam, params.mu, params.beta, params.rho
    d, g, e = grid.delta, grid.gamma_grid, grid.epsilon
    iota = np.asarray(iota, dtype=float)
    return (b * e * g * iota**2 + d * mu * g * iota
            + h * lam * (d * b * e * nu + e * (2 + d * lam * nu) * r)
            + z * (b * iota * (e * (1 - 2 * g) + d * g) + d * lam * (mu * e + g * iota * r)))


def theoretical_moments(params: ModelParams, grid: GridConstants) -> MomentSet:
    """Almost-sure limits of the nine sample averages under the stationary law."""
    z, h = params.zeta, params.eta
    lam, mu, b, s, r = params.lam, params.mu, params.beta, params.sigma, params.rho
    d, g, e = grid.delta, grid.gamma_grid, grid.epsilon
    drift = mu + lam * r * z
    xi = np.array([
        z,
        z**2 + g * h,
        z**2 + h,
        d * (mu + (b + lam * r) * z),
        d * z * drift + b * (e * h + d * z**2),
        2 * e * h * lam * r + d * z * drift + b * (e * h + d * z**2),
        b**2 * (2 * d * h - 2 * e * h + d**2 * lam * z**2) / lam
        + 2 * b * (2 * d * h * r - 2 * e * h * r + d**2 * z * drift)
        + d * (2 * h * lam * r**2 + s**2 * z + d * drift**2),
    ])
    return MomentSet(xi=xi, upsilon=np.array([z, z**2 + h]), n=0)


def _cumulants_to_raw(kappa: list[float], k: int) -> float:
    m = [1.0]
    for n in range(1, k + 1):
        m.append(sum(math.comb(n - 1, j - 1) * kappa[j] * m[n - j] for j in range(1, n + 1)))
    return m[k]


def stationary_raw_moment(law: StationaryLaw, k: int) -> float:
    """``E[tau_0**k]`` under the stationary law, ``0 <= k <= 8``."""
    if not (0 <= k <= MAX_MOMENT_ORDER) or int(k) != k:
        raise ValueError(f"moment order must be an integer in 0..{MAX_MOMENT_ORDER}, got {k}")
    if law.kind is LawKind.GAMMA_OU:
        nu, alpha = law.native_params
        return math.prod(nu + j for j in range(k)) / alpha**k
    delta, gamma_ig = law.native_params
    # IG cumulants: kappa_n = delta (2n-3)!! / gamma^(2n-1)
    kappa = [0.0] + [delta * math.prod(range(1, 2 * n - 2, 2)) / gamma_ig**(2 * n - 1)
                     for n in range(1, k + 1)]
    return _cumulants_to_raw(kappa, k)


def theoretical_acf_tau(params: ModelParams, lag_h: int, grid: GridConstants) -> float:
    if lag_h < 0:
        raise ValueError("lag must be nonnegative")
    return grid.gamma_grid**lag_h


def unconditional_moments(params: ModelParams, grid: GridConstants) -> dict[str, float]:
    """Mean and std of one-period returns and of the instantaneous variance ``sigma^2 tau``."""
    xi = theoretical_moments(params, grid).xi
    s2 = params.sigma**2
    return {
        "mean_x": float(xi[3]),
        "std_x": math.sqrt(xi[6] - xi[3]**2),
        "mean_v": s2 * params.zeta,
        "std_v": s2 * math.sqrt(params.eta),
    }
