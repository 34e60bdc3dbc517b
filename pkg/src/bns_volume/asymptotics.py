"""Sandwich covariance ``T = A^-1 Upsilon A^-T`` of the estimator.

``A[i, j] = E[d f^i(tau_0, theta) / d theta_j]`` is exact: every ``f^i`` is a
quadratic in ``tau_0`` whose coefficients are differentiated by hand below.
``Upsilon = E[Cov(Xi_1 | tau_0)]`` is estimated, either by nested Monte Carlo
at a given ``theta`` or by the outer product of the estimating function terms
on data.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import PARAM_NAMES, GridConstants, ModelParams, stationary_raw_moment
from .estimate import estimating_function_residuals
from .simulate import PathSample, RngStream, conditional_draw

COND_LIMIT = 1e12

# partials are first taken w.r.t. these intermediates, then chained to theta
_ZETA, _ETA, _LAM, _GAM, _EPS, _MU, _BETA, _SIGMA, _RHO = range(9)


class Method(str, enum.Enum):
    THEORETICAL_MC = "TheoreticalMC"
    EMPIRICAL_PLUGIN = "EmpiricalPlugin"


class SingularJacobianError(np.linalg.LinAlgError):
    def __init__(self, cond: float):
        super().__init__(f"Jacobian matrix is numerically singular (condition number {cond:.3g})")
        self.cond = cond


@dataclass
class SandwichReport:
    A: np.ndarray
    Upsilon: np.ndarray
    T: np.ndarray
    s: np.ndarray
    r: np.ndarray
    method: Method
    cond: float
    n: int | None = None

    def standard_errors(self, n: int | None = None) -> np.ndarray:
        n = self.n if n is None else n
        return self.s / np.sqrt(n)

    def as_dict(self) -> dict:
        out = {"method": self.method.value, "params": list(PARAM_NAMES), "rows": 7, "cols": 7,
               "cond_A": float(self.cond), "s": self.s.tolist()}
        for key in ("A", "Upsilon", "T", "r"):
            out[key] = getattr(self, key).ravel().tolist()
        if self.n is not None:
            out["n"] = self.n
            out["standard_errors"] = self.standard_errors().tolist()
        return out


def _coefficient_gradients(params: ModelParams, grid: GridConstants) -> np.ndarray:
    """d c[i, k] / d theta_j as an array of shape (7, 3, 7)."""
    z, h = params.zeta, params.eta
    l, mu, b, s, r = params.lam, params.mu, params.beta, params.sigma, params.rho
    d, g, e = grid.delta, grid.gamma_grid, grid.epsilon

    val = np.zeros((7, 3))
    grad = np.zeros((7, 3, 9))

    val[0] = [(1 - g) * z, g, 0]
    grad[0, 0, [_ZETA, _GAM]] = [1 - g, -z]
    grad[0, 1, _GAM] = 1

    val[1] = [0, (1 - g) * z, g]
    grad[1, 1, [_ZETA, _GAM]] = [1 - g, -z]
    grad[1, 2, _GAM] = 1

    grad[2, 0, [_ZETA, _ETA, _GAM]] = [2 * (1 - g)**2 * z, 1 - g**2, -2 * (1 - g) * z**2 - 2 * g * h]
    grad[2, 1, [_ZETA, _GAM]] = [2 * g * (1 - g), 2 * (1 - 2 * g) * z]
    grad[2, 2, _GAM] = 2 * g

    m0 = d * mu + b * (d - e) * z + d * l * r * z
    dm0 = np.zeros(9)
    dm0[[_ZETA, _LAM, _EPS, _MU, _BETA, _RHO]] = [b * (d - e) + d * l * r, d * r * z, -b * z, d, (d - e) * z, d * l * z]
    val[3] = [m0, b * e, 0]
    grad[3, 0] = dm0
    grad[3, 1, [_BETA, _EPS]] = [e, b]
    grad[4, 1:] = grad[3, :2]

    # f^6 = f^4 f^1 + beta eta lam eps^2 + 2 rho lam eps eta
    p4, p1 = val[3], val[0]
    grad[5, 0] = grad[3, 0] * p1[0] + p4[0] * grad[0, 0]
    grad[5, 1] = grad[3, 0] * p1[1] + p4[0] * grad[0, 1] + grad[3, 1] * p1[0] + p4[1] * grad[0, 0]
    grad[5, 2] = grad[3, 1] * p1[1] + p4[1] * grad[0, 1]
    grad[5, 0, [_ETA, _LAM, _EPS, _BETA, _RHO]] += [
        b * l * e**2 + 2 * r * l * e,
        b * h * e**2 + 2 * r * e * h,
        2 * b * h * l * e + 2 * r * l * h,
        h * l * e**2,
        2 * l * e * h,
    ]

    # f^7 = (f^4)^2 + K + sigma^2 (eps iota + (Delta - eps) zeta), K the conditional return variance
    # net of the diffusion part
    q = 2 * l * d - 4 * l * e + 1 - g**2
    grad[6, 0] = 2 * p4[0] * grad[3, 0]
    grad[6, 1] = 2 * (p4[0] * grad[3, 1] + p4[1] * grad[3, 0])
    grad[6, 2] = 2 * p4[1] * grad[3, 1]
    grad[6, 0, [_ETA, _LAM, _GAM, _EPS, _BETA, _RHO]] += [
        b**2 * q / l**2 + 2 * r**2 * l * d + 4 * b * r * (d - e),
        b**2 * h * ((2 * d - 4 * e) / l**2 - 2 * q / l**3) + 2 * r**2 * h * d,
        -2 * b**2 * h * g / l**2,
        -4 * b**2 * h / l - 4 * b * r * h,
        2 * b * h * q / l**2 + 4 * r * h * (d - e),
        4 * r * h * l * d + 4 * b * h * (d - e),
    ]
    grad[6, 0, [_ZETA, _EPS, _SIGMA]] += [s**2 * (d - e), -s**2 * z, 2 * s * (d - e) * z]
    grad[6, 1, [_EPS, _SIGMA]] += [s**2, 2 * s * e]

    nu, alpha = params.nu, params.alpha
    out = np.zeros((7, 3, 7))
    out[..., 0] = grad[..., _ZETA] / alpha + grad[..., _ETA] / alpha**2
    out[..., 1] = -grad[..., _ZETA] * nu / alpha**2 - grad[..., _ETA] * 2 * nu / alpha**3
    out[..., 2] = grad[..., _LAM] - grad[..., _GAM] * d * g + grad[..., _EPS] * (d * g - e) / l
    out[..., 3] = grad[..., _MU]
    out[..., 4] = grad[..., _BETA]
    out[..., 5] = grad[..., _SIGMA]
    out[..., 6] = grad[..., _RHO]
    return out


def a_matrix(params: ModelParams, grid: GridConstants) -> np.ndarray:
    """Expected Jacobian of the conditional moments, parameter order (nu, alpha, lambda, mu, beta, sigma, rho)."""
    powers = np.array([stationary_raw_moment(params.law, k) for k in range(3)])
    return np.einsum("ikj,k->ij", _coefficient_gradients(params, grid), powers)


def jacobian_on_sample(prev_tau: np.ndarray, params: ModelParams, grid: GridConstants) -> np.ndarray:
    """Sample average of d f^i(tau_{k-1}) / d theta_j."""
    powers = np.array([1.0, np.mean(prev_tau), np.mean(prev_tau**2)])
    return np.einsum("ikj,k->ij", _coefficient_gradients(params, grid), powers)


def _xi_vectors(x, tau0, tau1):
    return np.stack([tau1, tau1 * tau0, tau1**2, x, x * tau0, x * tau1, x * x], axis=-1)


def upsilon_mc(params: ModelParams, grid: GridConstants, n_outer: int = 2000, n_inner: int = 2000,
               rng: RngStream = RngStream(0), chunk: int = 100) -> np.ndarray:
    """Nested Monte Carlo estimate of ``E[Cov(Xi_1 | tau_0)]``.

    Outer draws of ``tau_0`` come from the stationary Gamma law; for each,
    ``n_inner`` exact conditional draws give an unbiased covariance matrix.
    Chunks are reduced in a fixed order.
    """
    if n_outer < 2 or n_inner < 2:
        raise ValueError("need n_outer >= 2 and n_inner >= 2")
    gen = rng.generator()
    tau0 = gen.gamma(params.nu, 1.0 / params.alpha, n_outer)
    total = np.zeros((7, 7))
    for start in range(0, n_outer, chunk):
        t0 = np.repeat(tau0[start:start + chunk], n_inner)
        x, t1 = conditional_draw(params, t0, gen, delta=grid.delta)
        xi = _xi_vectors(x, t0, t1).reshape(-1, n_inner, 7)
        dev = xi - xi.mean(axis=1, keepdims=True)
        total += np.einsum("bki,bkj->ij", dev, dev) / (n_inner - 1)
    ups = total / n_outer
    return 0.5 * (ups + ups.T)


def upsilon_empirical(sample: PathSample, params: ModelParams, grid: GridConstants) -> np.ndarray:
    """Outer-product estimate ``(1/n) sum_k H_k H_k^T`` of the estimating function terms."""
    if sample.n < 10:
        raise ValueError("need at least 10 observations")
    hk = estimating_function_residuals(sample, params, grid)
    ups = hk.T @ hk / sample.n
    return 0.5 * (ups + ups.T)


def sandwich(A: np.ndarray, upsilon: np.ndarray) -> tuple[np.ndarray, float]:
    """``A^-1 Upsilon A^-T`` through an SVD of ``A``; raises if ``A`` is numerically singular."""
    u, sv, vt = np.linalg.svd(A)
    cond = sv[0] / sv[-1] if sv[-1] > 0 else np.inf
    if cond > COND_LIMIT:
        raise SingularJacobianError(cond)
    a_inv = (vt.T / sv) @ u.T
    t = a_inv @ upsilon @ a_inv.T
    return 0.5 * (t + t.T), float(cond)


def correlation_from_T(T: np.ndarray) -> np.ndarray:
    sd = np.sqrt(np.diag(T))
    if not np.all(sd > 0):
        raise ValueError("covariance matrix has a zero or negative diagonal entry")
    r = T / np.outer(sd, sd)
    np.fill_diagonal(r, 1.0)
    return np.clip(r, -1.0, 1.0)


def theoretical_sandwich(params: ModelParams, grid: GridConstants, n_outer: int = 2000, n_inner: int = 2000,
                         rng: RngStream = RngStream(0)) -> SandwichReport:
    A = a_matrix(params, grid)
    ups = upsilon_mc(params, grid, n_outer, n_inner, rng)
    T, cond = sandwich(A, ups)
    return SandwichReport(A, ups, T, np.sqrt(np.diag(T)), correlation_from_T(T), Method.THEORETICAL_MC, cond)


def empirical_sandwich(sample: PathSample, params: ModelParams, grid: GridConstants) -> SandwichReport:
    """Plug-in sandwich on data; ``standard_errors()`` gives ``sqrt(diag(T) / n)``."""
    A = jacobian_on_sample(sample.tau[:-1], params, grid)
    ups = upsilon_empirical(sample, params, grid)
    T, cond = sandwich(A, ups)
    return SandwichReport(A, ups, T, np.sqrt(np.diag(T)), correlation_from_T(T), Method.EMPIRICAL_PLUGIN,
                          cond, n=sample.n)
