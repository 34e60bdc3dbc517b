"""Cumulant functions of the one-period quantities and the return density.

Notation: ``eps_lam(t) = (1 - exp(-lambda t)) / lambda``; ``k_Z`` is the
cumulant function of the BDLP at time one and ``k_tau0`` that of the
stationary volume. With ``a(h) = beta h + sigma**2 h**2 / 2``,

    k_X(h) = h mu Delta + k_(Y,Z)(a(h), rho h).

The return density is recovered as
``f(x) = (1/pi) int_0^inf Re exp(k_X(iy) - ixy) dy``.

Every logarithm and square root below is taken of a quantity whose real
part is positive on the cumulant domain, so principal branches are
continuous along any path inside the domain, including the imaginary axis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .model import GridConstants, LawKind, ModelParams, StationaryLaw


class CumulantDomainError(ValueError):
    pass


class DensityFailure(ArithmeticError):
    pass


def eps_lambda(t, lam: float):
    return -np.expm1(-lam * np.asarray(t, dtype=float)) / lam


def _require(cond, what: str) -> None:
    if not np.all(cond):
        raise CumulantDomainError(f"argument outside the cumulant domain: {what}")


def _quad_complex(fun, a: float, b: float, shape, tol: float = 1e-14):
    """Adaptive Gauss-Kronrod integral of a complex array-valued function."""

    def split(s):
        v = np.asarray(fun(s), dtype=complex).ravel()
        return np.concatenate([v.real, v.imag])

    res, _ = integrate.quad_vec(split, a, b, epsabs=tol, epsrel=1e-13, norm="max", limit=2000)
    m = res.size // 2
    return (res[:m] + 1j * res[m:]).reshape(shape)


@dataclass(frozen=True)
class CumulantEvaluator:
    """Cumulant functions for a stationary law and the return parameters."""

    law: StationaryLaw
    lam: float
    mu: float
    beta: float
    sigma: float
    rho: float
    delta: float

    @classmethod
    def from_params(cls, params: ModelParams, grid: GridConstants) -> "CumulantEvaluator":
        return cls(params.law, params.lam, params.mu, params.beta, params.sigma, params.rho, grid.delta)

    @property
    def eps(self) -> float:
        return float(eps_lambda(self.delta, self.lam))

    @property
    def _bound(self) -> float:
        """Supremum of Re(h) on the BDLP and stationary cumulant domains."""
        if self.law.kind is LawKind.GAMMA_OU:
            return self.law.native_params[1]
        return self.law.native_params[1] ** 2 / 2

    # one-dimensional cumulants

    def cumulant_bdlp(self, h):
        h = np.asarray(h, dtype=complex)
        _require(h.real < self._bound, "BDLP cumulant needs Re(h) below the law's bound")
        if self.law.kind is LawKind.GAMMA_OU:
            nu, alpha = self.law.native_params
            return nu * h / (alpha - h)
        delta_ig, gamma_ig = self.law.native_params
        return h * delta_ig / np.sqrt(gamma_ig**2 - 2 * h)

    def cumulant_tau0(self, h):
        h = np.asarray(h, dtype=complex)
        _require(h.real < self._bound, "stationary volume cumulant needs Re(h) below the law's bound")
        if self.law.kind is LawKind.GAMMA_OU:
            nu, alpha = self.law.native_params
            return -nu * np.log1p(-h / alpha)
        delta_ig, gamma_ig = self.law.native_params
        return delta_ig * (gamma_ig - np.sqrt(gamma_ig**2 - 2 * h))

    # bivariate cumulants

    def cumulant_z_u(self, h1, h2, closed_form: bool = False):
        """``log E exp(h1 Z_1 + h2 U_1) = lambda int_0^Delta k_Z(h1 + h2 e^{-lambda(Delta-s)}) ds``."""
        h1, h2 = np.broadcast_arrays(np.asarray(h1, dtype=complex), np.asarray(h2, dtype=complex))
        g = math.exp(-self.lam * self.delta)
        # the argument is affine in e^{-lambda u}, so checking both ends covers the path
        _require(h1.real + h2.real < self._bound, "h1 + h2 (jump at the interval end)")
        _require(h1.real + g * h2.real < self._bound, "h1 + gamma h2 (jump at the interval start)")
        if closed_form:
            if self.law.kind is not LawKind.GAMMA_OU:
                raise ValueError("closed form is available for the Gamma-OU law only")
            nu, alpha = self.law.native_params
            b = alpha - h1
            return nu * (self.lam * self.delta * h1 + alpha * (np.log(b - g * h2) - np.log(b - h2))) / b
        lam = self.lam
        return lam * _quad_complex(lambda u: self.cumulant_bdlp(h1 + h2 * np.exp(-lam * u)),
                                   0.0, self.delta, h1.shape)

    def cumulant_y_z(self, h1, h2):
        """``log E exp(h1 Y_1 + h2 Z_1)`` for a stationary start."""
        h1, h2 = np.broadcast_arrays(np.asarray(h1, dtype=complex), np.asarray(h2, dtype=complex))
        lam, eps = self.lam, self.eps
        _require(h2.real < self._bound, "h2 (jump at the interval end)")
        _require(h1.real * eps + h2.real < self._bound, "h1 eps + h2 (jump at the interval start)")
        integral = _quad_complex(lambda u: self.cumulant_bdlp(h1 * eps_lambda(u, lam) + h2),
                                 0.0, self.delta, h1.shape)
        return self.cumulant_tau0(h1 * eps) + lam * integral

    # returns

    def _cumulant_x_closed(self, h):
        if self.law.kind is not LawKind.GAMMA_OU:
            raise ValueError("closed form is available for the Gamma-OU law only")
        nu, alpha = self.law.native_params
        lam, mu, beta, s2, rho, d, eps = self.lam, self.mu, self.beta, self.sigma**2, self.rho, self.delta, self.eps
        a = beta * h + 0.5 * s2 * h * h
        _require((eps * a).real < alpha, "eps_lambda(Delta) (beta h + sigma^2 h^2 / 2) in the stationary cumulant")
        _require((rho * h).real < alpha, "rho h in the BDLP cumulant")
        _require((rho * h + eps * a).real < alpha, "rho h + eps_lambda(Delta) a(h) in the BDLP cumulant")
        log_term = -nu * np.log1p(-eps * a / alpha)
        slope = 2 * beta + 2 * lam * rho + s2 * h
        ratio_log = np.log1p(-eps * a / (alpha - rho * h))
        rational = lam * nu * (h * d * slope + 2 * alpha * ratio_log) / (2 * alpha * lam - h * slope)
        return h * mu * d + log_term + rational

    def cumulant_x(self, h, route: str = "closed"):
        """Cumulant function of the one-period log return.

        ``route="closed"`` uses the integrated Gamma-OU form; ``"composite"``
        evaluates ``h mu Delta + k_(Y,Z)(beta h + sigma^2 h^2 / 2, rho h)`` by
        quadrature and works for both laws.
        """
        h = np.asarray(h, dtype=complex)
        if route == "closed":
            return self._cumulant_x_closed(h)
        if route != "composite":
            raise ValueError(f"unknown route {route!r}")
        return h * self.mu * self.delta + self.cumulant_y_z(self.beta * h + 0.5 * self.sigma**2 * h * h,
                                                            self.rho * h)

    def default_route(self) -> str:
        return "closed" if self.law.kind is LawKind.GAMMA_OU else "composite"

    def return_mean_variance(self, step: float = 1e-4) -> tuple[float, float]:
        """Mean and variance of X_1 from central differences of ``k_X`` on the real axis."""
        k = lambda t: float(self.cumulant_x(t, self.default_route()).real)
        sd_guess = self.sigma * math.sqrt(self.law.zeta * self.delta)
        hs = step / sd_guess
        kp, km = k(hs), k(-hs)
        return (kp - km) / (2 * hs), (kp - 2 * k(0.0) + km) / hs**2


@dataclass
class DensityCurve:
    x_grid: np.ndarray
    pdf: np.ndarray
    quadrature_tol: float
    truncation: float
    remainder_bound: float

    @property
    def log_pdf(self) -> np.ndarray:
        return np.log(np.maximum(self.pdf, np.finfo(float).tiny))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,pdf,log_pdf\n")
            for x, p, lp in zip(self.x_grid, self.pdf, self.log_pdf):
                fh.write(f"{x:.17g},{p:.17g},{lp:.17g}\n")


def _truncation_point(envelope, target: float, start: float, max_doublings: int = 60) -> float:
    y = start
    for _ in range(max_doublings):
        if envelope(y) < target:
            return y
        y *= 2
    raise DensityFailure(f"characteristic function does not decay below {target:g} (last y = {y:g})")


def density_x(x_grid, evaluator: CumulantEvaluator, quad_tol: float = 1e-8) -> DensityCurve:
    """Return density on ``x_grid`` by Fourier inversion of the cumulant function.

    The integral is truncated at the first doubling point where
    ``|exp(k_X(iy))|`` drops below ``quad_tol / 100``; the neglected tail is
    bounded by integrating the envelope beyond that point.
    """
    if not quad_tol > 0:
        raise ValueError("quad_tol must be positive")
    x = np.atleast_1d(np.asarray(x_grid, dtype=float))
    route = evaluator.default_route()
    if route == "closed":
        kx = lambda y: evaluator.cumulant_x(1j * np.asarray(y), "closed")
    else:
        kx = lambda y: evaluator.cumulant_x(1j * np.atleast_1d(y), "composite")
    envelope = lambda y: float(np.abs(np.exp(np.atleast_1d(kx(y)).real))[0])

    sd_guess = evaluator.sigma * math.sqrt(evaluator.law.zeta * evaluator.delta)
    y_max = _truncation_point(envelope, quad_tol * 1e-2, 1.0 / sd_guess)

    # tail: envelope integral over [y_max, 64 y_max] plus a power-law bound beyond
    tail, _ = integrate.quad(envelope, y_max, 64 * y_max, limit=200)
    far = envelope(64 * y_max)
    decay = math.log2(envelope(32 * y_max) / far) if far > 0 else math.inf
    tail += far * 64 * y_max / (decay - 1) if decay > 1 else math.inf
    remainder = tail / math.pi
    if not remainder <= quad_tol:
        raise DensityFailure(f"truncation remainder {remainder:g} exceeds tolerance {quad_tol:g}")

    def integrand(y):
        return (np.exp(kx(y) - 1j * x * y)).real

    vals, _ = integrate.quad_vec(integrand, 0.0, y_max, epsabs=quad_tol * math.pi / 2, epsrel=0,
                                 norm="max", limit=5000)
    return DensityCurve(x, vals / math.pi, quad_tol, y_max, remainder)
