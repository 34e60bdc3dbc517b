"""Simulation of the bivariate (return, volume) process on an equidistant grid.

The Gamma-OU path is exact: the BDLP is compound Poisson, so every jump of
``Z(lambda t)`` is drawn and the interval quantities

    U_i = sum_j exp(-lambda (t_i - s_j)) J_j,   Z_i = sum_j J_j,
    S_i = (Z_i - U_i) / lambda,   Y_i = eps tau_{i-1} + S_i,
    tau_i = gamma tau_{i-1} + U_i,
    X_i = mu Delta + beta Y_i + sigma sqrt(Y_i) W_i + rho Z_i

are computed without discretization. The IG-OU BDLP has infinite activity
and is approximated on a sub-mesh.

Random draws come from one Philox stream per ``(seed, stream_id)``. Within a
call the draw order is fixed: initial volume, jump counts for all intervals,
jump offsets, jump sizes, then the Gaussian innovations.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import GridConstants, LawKind, ModelParams, StationaryLaw


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))


@dataclass
class PathSample:
    """Observed returns ``x`` (length n) and volumes ``tau`` (length n + 1).

    The latent arrays ``z, u, y, s`` have length n when present.
    """

    x: np.ndarray
    tau: np.ndarray
    delta: float
    z: np.ndarray | None = None
    u: np.ndarray | None = None
    y: np.ndarray | None = None
    s: np.ndarray | None = None
    seed: int | None = None
    stream_id: int | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.tau = np.asarray(self.tau, dtype=float)
        if self.tau.shape != (self.x.size + 1,):
            raise ValueError(f"need len(tau) == len(x) + 1, got {self.tau.size} and {self.x.size}")

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def has_latent(self) -> bool:
        return self.z is not None

    def to_csv(self, path) -> None:
        cols = ["i", "x", "tau"] + (["z", "u", "y", "s"] if self.has_latent else [])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for i in range(self.n + 1):
                row = [i, "" if i == 0 else _fmt(self.x[i - 1]), _fmt(self.tau[i])]
                if self.has_latent:
                    row += [""] * 4 if i == 0 else [_fmt(a[i - 1]) for a in (self.z, self.u, self.y, self.s)]
                w.writerow(row)

    @classmethod
    def from_csv(cls, path, delta: float) -> "PathSample":
        """Read a path dump written by :meth:`to_csv`."""
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows or "tau" not in rows[0] or "x" not in rows[0]:
            raise ValueError(f"{path}: expected header with columns i,x,tau")
        try:
            tau = np.array([float(r["tau"]) for r in rows])
            x = np.array([float(r["x"]) for r in rows[1:]])
            latent = {}
            if "z" in rows[0]:
                latent = {k: np.array([float(r[k]) for r in rows[1:]]) for k in ("z", "u", "y", "s")}
        except ValueError as exc:
            raise ValueError(f"{path}: malformed number ({exc})") from None
        return cls(x=x, tau=tau, delta=delta, **latent)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _jumps(gen: np.random.Generator, n: int, rate: float, alpha: float, lam: float, delta: float):
    """Compound-Poisson BDLP increments (Z_i, U_i) over n intervals of length delta."""
    counts = gen.poisson(rate * delta, n)
    total = int(counts.sum())
    back = gen.uniform(0.0, delta, total)  # t_i - s_j
    sizes = gen.exponential(1.0 / alpha, total)
    owner = np.repeat(np.arange(n), counts)
    z = np.bincount(owner, weights=sizes, minlength=n)
    u = np.bincount(owner, weights=sizes * np.exp(-lam * back), minlength=n)
    return z, u


def _returns(params_ret, y, z, w, delta):
    mu, beta, sigma, rho = params_ret
    return mu * delta + beta * y + sigma * np.sqrt(y) * w + rho * z


def _ar1(tau0: float, gamma_grid: float, u: np.ndarray) -> np.ndarray:
    tau = [float(tau0)]
    for ui in u.tolist():
        tau.append(gamma_grid * tau[-1] + ui)
    return np.array(tau)


def simulate_gamma_ou(params: ModelParams, n: int, delta: float, rng: RngStream,
                      with_latent: bool = False) -> PathSample:
    """Exact stationary simulation of n intervals of the Gamma-OU model."""
    if n < 1:
        raise ValueError("need at least one interval")
    grid = GridConstants.for_params(params.lam, delta)
    gen = rng.generator()
    tau0 = gen.gamma(params.nu, 1.0 / params.alpha)
    z, u = _jumps(gen, n, params.lam * params.nu, params.alpha, params.lam, delta)
    w = gen.standard_normal(n)
    tau = _ar1(tau0, grid.gamma_grid, u)
    s = (z - u) / params.lam
    y = grid.epsilon * tau[:-1] + s
    x = _returns((params.mu, params.beta, params.sigma, params.rho), y, z, w, delta)
    latent = dict(z=z, u=u, y=y, s=s) if with_latent else {}
    return PathSample(x=x, tau=tau, delta=delta, seed=rng.seed, stream_id=rng.stream_id, **latent)


def conditional_draw(params: ModelParams, iota0, rng: RngStream | np.random.Generator,
                     delta: float = 1 / 250, size: int | None = None, latent: bool = False):
    """Exact draws of ``(X_1, tau_1)`` given ``tau_0 = iota0``.

    ``iota0`` may be an array, giving one draw per entry; otherwise ``size``
    draws share the same starting volume. With ``latent=True`` a dict with
    ``x, tau, z, u, y, s`` is returned instead of the pair.
    """
    iota0 = np.asarray(iota0, dtype=float)
    if np.any(iota0 < 0):
        raise ValueError("starting volume must be nonnegative")
    if size is not None:
        iota0 = np.broadcast_to(iota0, (size,))
    shape = iota0.shape
    m = iota0.size
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    grid = GridConstants.for_params(params.lam, delta)
    z, u = _jumps(gen, m, params.lam * params.nu, params.alpha, params.lam, delta)
    w = gen.standard_normal(m)
    iota = iota0.reshape(-1)
    tau1 = grid.gamma_grid * iota + u
    s = (z - u) / params.lam
    y = grid.epsilon * iota + s
    x = _returns((params.mu, params.beta, params.sigma, params.rho), y, z, w, delta)
    if latent:
        return {k: v.reshape(shape) for k, v in dict(x=x, tau=tau1, z=z, u=u, y=y, s=s).items()}
    if not shape:
        return float(x[0]), float(tau1[0])
    return x.reshape(shape), tau1.reshape(shape)


def simulate_ig_ou(law: StationaryLaw, lam: float, mu: float, beta: float, sigma: float, rho: float,
                   n: int, delta: float, rng: RngStream, mesh: int = 16,
                   with_latent: bool = False) -> PathSample:
    """Approximate simulation of the IG-OU model on ``mesh`` sub-steps per interval.

    The BDLP over BDLP-time ``lambda * dt`` is an IG(delta/2 * lambda dt, gamma)
    increment plus a compound Poisson part with intensity
    ``delta * gamma / 2 * lambda dt`` and Gamma(1/2, rate gamma**2 / 2) jumps.
    Each sub-step's mass is placed at the sub-step's left end, so the
    interval identities for U, S, Y hold exactly for the approximating path.
    """
    if law.kind is not LawKind.IG_OU:
        raise ValueError("simulate_ig_ou needs an IG-OU stationary law")
    if n < 1 or mesh < 1:
        raise ValueError("need n >= 1 and mesh >= 1")
    if not (lam > 0 and sigma > 0):
        raise ValueError("lambda and sigma must be positive")
    delta_ig, gamma_ig = law.native_params
    grid = GridConstants.for_params(lam, delta)
    dt = delta / mesh
    bdlp_time = lam * dt
    gen = rng.generator()
    tau0 = gen.wald(law.zeta, delta_ig**2)

    shape_t = 0.5 * delta_ig * bdlp_time
    counts = gen.poisson(0.5 * delta_ig * gamma_ig * bdlp_time, n * mesh)
    cp_sizes = gen.gamma(0.5, 2.0 / gamma_ig**2, int(counts.sum()))
    ig_part = gen.wald(shape_t / gamma_ig, shape_t**2, n * mesh)
    w = gen.standard_normal(n)

    cp = np.bincount(np.repeat(np.arange(n * mesh), counts), weights=cp_sizes, minlength=n * mesh)
    dz = (ig_part + cp).reshape(n, mesh)
    weights = np.exp(-lam * (delta - dt * np.arange(mesh)))
    z = dz.sum(axis=1)
    u = dz @ weights
    tau = _ar1(tau0, grid.gamma_grid, u)
    s = (z - u) / lam
    y = grid.epsilon * tau[:-1] + s
    x = _returns((mu, beta, sigma, rho), y, z, w, delta)
    latent = dict(z=z, u=u, y=y, s=s) if with_latent else {}
    return PathSample(x=x, tau=tau, delta=delta, seed=rng.seed, stream_id=rng.stream_id, **latent)
