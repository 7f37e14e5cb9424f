"""Scattering data for the squeezed potentials and their zero-range limits.

For an incoming wave exp(ikx) from the left, the finite-eps coefficients
follow from the boundary traces of the fundamental pair of

    -w'' + alpha Phi w + beta eps Psi w = (eps k)**2 w,  s in (-1, 1),

by Cramer's rule on the 4x4 matching system at x = -eps and x = +eps.
The limits are the coefficients of the point interaction with coupling
matrix [[theta, 0], [beta kappa, 1/theta]] at resonance, and R = -1, T = 0
(an opaque wall) otherwise.
"""

from __future__ import annotations

import cmath
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateDenominator, NotConverged
from .ode_core import FundamentalPair, SolverSettings, fundamental_pair
from .resonance import RECORD_RESIDUAL_TOL, ResonanceRecord, resonance_record, shooting_residual

DENOMINATOR_TOL = 1e-14
DEFAULT_EPS_LIST = tuple(2.0**-n for n in range(3, 10))
ERROR_FLOOR = 1e-10


@dataclass(frozen=True)
class ScatteringData:
    k: float
    alpha: float
    beta: float
    eps: float
    R: complex
    T: complex

    @property
    def T2(self) -> float:
        return abs(self.T) ** 2

    @property
    def flux_defect(self) -> float:
        return abs(abs(self.R) ** 2 + abs(self.T) ** 2 - 1.0)


@dataclass(frozen=True)
class LimitScattering:
    k: float
    alpha: float
    beta: float
    resonant: bool
    R: complex
    T: complex
    theta: float | None = None
    kappa: float | None = None


def coefficients_from_pair(pair: FundamentalPair, eps: float, k: float) -> tuple[complex, complex]:
    """R_eps and T_eps from u(1), u'(1), v(1), v'(1)."""
    a = eps * k
    denom = pair.du1 - 1j * a * (pair.u1 + pair.dv1) - a * a * pair.v1
    if abs(denom) < DENOMINATOR_TOL:
        raise DegenerateDenominator(f"|denominator|={abs(denom):.3g} at eps={eps}, k={k}")
    phase = -cmath.exp(-2j * a)
    R = phase * (pair.du1 - 1j * a * (pair.u1 - pair.dv1) + a * a * pair.v1) / denom
    T = phase * 2j * a / denom
    return R, T


def scatter_finite(
    phi,
    psi,
    alpha: float,
    beta: float,
    eps: float,
    k: float,
    settings: SolverSettings | None = None,
    method: str = "auto",
) -> ScatteringData:
    if not (eps > 0 and k > 0):
        raise ValueError("scatter_finite needs eps > 0 and k > 0")
    pair = fundamental_pair(phi, psi, alpha, beta, eps, k, settings, method)
    R, T = coefficients_from_pair(pair, eps, k)
    return ScatteringData(k, alpha, beta, eps, R, T)


def scatter_finite_right(phi, psi, alpha, beta, eps, k, settings=None, method="auto") -> ScatteringData:
    """Incidence from the right, obtained by mirroring both shapes."""
    return scatter_finite(phi.reflected(), psi.reflected(), alpha, beta, eps, k, settings, method)


def _maps(maps):
    if maps is None:
        return None
    if isinstance(maps, ResonanceRecord):
        return maps.theta, maps.kappa, maps.alpha
    theta, kappa = maps
    return float(theta), float(kappa), math.nan


def scatter_limit(maps, beta: float, k: float) -> LimitScattering:
    """Limit coefficients; ``maps`` is a ResonanceRecord, a (theta, kappa)
    pair, or None for a non-resonant coupling."""
    if not k > 0:
        raise ValueError("k must be positive")
    m = _maps(maps)
    if m is None:
        return LimitScattering(k, math.nan, beta, False, complex(-1.0), complex(0.0))
    theta, kappa, alpha = m
    ik = 1j * k
    denom = ik * (1 / theta + theta) - beta * kappa
    R = (ik * (1 / theta - theta) + beta * kappa) / denom
    T = 2 * ik / denom
    return LimitScattering(k, alpha, beta, True, R, T, theta, kappa)


def transmission_probability(ls, beta: float | None = None, k: float | None = None) -> float:
    """|T|^2 = 4k^2 / (k^2 (1/theta + theta)^2 + beta^2 kappa^2) at resonance."""
    if isinstance(ls, LimitScattering):
        if not ls.resonant:
            raise ValueError("transmission_probability is defined on resonant couplings")
        theta, kappa, beta, k = ls.theta, ls.kappa, ls.beta, ls.k
    else:
        if beta is None or k is None:
            raise ValueError("beta and k are required with a record")
        theta, kappa, _ = _maps(ls)
    return 4 * k * k / (k * k * (1 / theta + theta) ** 2 + beta * beta * kappa * kappa)


def default_workers() -> int:
    """Worker cap from DPLAB_THREADS (0 or unset means one per CPU)."""
    try:
        n = int(os.environ.get("DPLAB_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else (os.cpu_count() or 1)


def sweep(phi, psi, beta, alphas, ks, epss, settings=None, workers: int | None = None) -> list[ScatteringData]:
    """scatter_finite over the product grid, ordered alpha-major, then k, then eps."""
    jobs = [(a, k, e) for a in alphas for k in ks for e in epss]
    workers = workers or default_workers()

    def run(job):
        a, k, e = job
        return scatter_finite(phi, psi, float(a), beta, float(e), float(k), settings)

    if workers == 1 or len(jobs) < 2:
        return [run(j) for j in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, jobs))


def sweep_alpha(phi, psi, beta, eps, k, alpha_grid, settings=None, workers=None) -> list[tuple[float, float]]:
    """Table of (alpha, |T_eps|^2) along ``alpha_grid``."""
    rows = sweep(phi, psi, beta, alpha_grid, [k], [eps], settings, workers)
    return [(d.alpha, d.T2) for d in rows]


def spike_locations(alphas: Sequence[float], t2: Sequence[float], min_height: float = 0.0) -> np.ndarray:
    """Grid points where |T|^2 has a strict local maximum above ``min_height``."""
    a, t = np.asarray(alphas), np.asarray(t2)
    inner = (t[1:-1] > t[:-2]) & (t[1:-1] >= t[2:]) & (t[1:-1] > min_height)
    idx = np.nonzero(inner)[0] + 1
    if len(t) > 1 and t[0] > t[1] and t[0] > min_height:
        idx = np.insert(idx, 0, 0)
    if len(t) > 1 and t[-1] > t[-2] and t[-1] > min_height:
        idx = np.append(idx, len(t) - 1)
    return a[idx]


def fit_order(eps, err, floor: float = ERROR_FLOOR) -> float:
    """Least-squares slope of log(err) against log(eps), ignoring errors at
    or below ``floor``. Returns inf when every error is at the floor."""
    eps, err = np.asarray(eps, float), np.asarray(err, float)
    keep = err > floor
    if keep.sum() == 0:
        return math.inf
    if keep.sum() == 1:
        return math.nan
    return float(np.polyfit(np.log(eps[keep]), np.log(err[keep]), 1)[0])


def check_monotone(errors, floor: float = ERROR_FLOOR, tail: int = 3, what: str = "errors") -> None:
    """Raise NotConverged unless the last ``tail`` errors are non-increasing
    (errors already at the floor are exempt)."""
    last = list(errors)[-tail:]
    for prev, cur in zip(last, last[1:]):
        if cur > prev and cur > floor:
            raise NotConverged(f"{what} increased from {prev:.3g} to {cur:.3g}")


@dataclass(frozen=True)
class ConvergenceReport:
    eps: np.ndarray
    err_R: np.ndarray
    err_T: np.ndarray
    order_R: float
    order_T: float
    order: float
    resonant: bool
    limit: LimitScattering
    du1_over_eps: np.ndarray
    du1_target: float

    def rows(self):
        err = np.maximum(self.err_R, self.err_T)
        return [(e, r, t) for e, r, t in zip(self.eps, self.err_R, self.err_T)], err


def scattering_convergence(
    phi,
    psi,
    alpha: float,
    beta: float,
    k: float,
    eps_list: Sequence[float] = DEFAULT_EPS_LIST,
    settings: SolverSettings | None = None,
    record: ResonanceRecord | None = None,
    resonance_tol: float = RECORD_RESIDUAL_TOL,
) -> ConvergenceReport:
    """Distance of (R_eps, T_eps) from the limit coefficients along ``eps_list``.

    The limit is resonant when |u'(1; alpha)| <= ``resonance_tol`` (or a
    record is supplied). At resonance u'_eps(1)/eps is also tabulated; it
    tends to beta * kappa.
    """
    eps = np.asarray(eps_list, dtype=float)
    if eps.ndim != 1 or len(eps) < 2 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("eps_list must be positive and strictly decreasing")
    if record is None and abs(shooting_residual(phi, alpha, settings)) <= resonance_tol:
        record = resonance_record(phi, psi, alpha, resonance_tol, settings)
    limit = scatter_limit(record, beta, k)
    err_R, err_T, ratio = [], [], []
    for e in eps:
        pair = fundamental_pair(phi, psi, alpha, beta, e, k, settings)
        R, T = coefficients_from_pair(pair, e, k)
        err_R.append(abs(R - limit.R))
        err_T.append(abs(T - limit.T))
        ratio.append(pair.du1 / e)
    err_R, err_T = np.array(err_R), np.array(err_T)
    check_monotone(err_R, what="|R_eps - R|")
    check_monotone(err_T, what="|T_eps - T|")
    target = beta * record.kappa if record is not None else math.nan
    return ConvergenceReport(
        eps,
        err_R,
        err_T,
        fit_order(eps, err_R),
        fit_order(eps, err_T),
        fit_order(eps, np.maximum(err_R, err_T)),
        record is not None,
        limit,
        np.array(ratio),
        target,
    )
