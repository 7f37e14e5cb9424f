"""Resonant coupling constants, half-bound states and the maps theta, kappa.

The potential alpha*Phi has a zero-energy resonance exactly when the Neumann
problem

    -u'' + alpha Phi u = 0 on (-1, 1),  u'(-1) = u'(1) = 0

has a nontrivial solution. Shooting from u(-1) = 1, u'(-1) = 0 turns this
into the scalar equation u'(1; alpha) = 0, solved here by a grid scan for
sign changes followed by bisection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import NotResonant, SingularAlpha, ZeroShape
from .ode_core import SolverSettings, integrate_ivp
from .potential import PiecewisePolynomial, ShapePotential, combine

DEFAULT_WINDOW = (-50.0, 50.0)
DEFAULT_STEP = 0.05
DEFAULT_ROOT_TOL = 1e-10
RECORD_RESIDUAL_TOL = 1e-8
_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(16)
_MAX_PANEL = 0.125


@dataclass(frozen=True, eq=False)
class ResonanceRecord:
    alpha: float
    theta: float
    kappa: float
    half_bound_trace: object = field(repr=False)
    residual: float

    def u(self, s) -> np.ndarray:
        """Half-bound state normalized by u(-1) = 1."""
        return self.half_bound_trace(s)[:, 0]

    def du(self, s) -> np.ndarray:
        return self.half_bound_trace.derivative(s)[:, 0]


@dataclass(frozen=True)
class ResonantSet:
    records: tuple[ResonanceRecord, ...]
    scan_window: tuple[float, float]
    scan_step: float
    warnings: tuple[str, ...] = ()

    @property
    def alphas(self) -> np.ndarray:
        return np.array([r.alpha for r in self.records])

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def shooting_residual(phi: PiecewisePolynomial, alpha: float, settings: SolverSettings | None = None) -> float:
    """u'(1; alpha) for the solution with u(-1) = 1, u'(-1) = 0."""
    sol = integrate_ivp(combine([(alpha, phi)]), 0.0, 1.0, 0.0, settings)
    return float(sol.dw1[0])


def resonant_maps(u_left: float, u_right: float, psi_u2: float) -> tuple[float, float]:
    """theta and kappa from the boundary values of any half-bound state and
    the integral of Psi * u**2. Both are invariant under u -> c*u."""
    return u_right / u_left, psi_u2 / (u_left * u_right)


def _panels(psi: PiecewisePolynomial, phi: PiecewisePolynomial):
    cuts = np.unique(np.concatenate([phi.breakpoints, psi.breakpoints, [-1.0, 1.0]]))
    for a, b in zip(cuts[:-1], cuts[1:]):
        if psi.piece_at(0.5 * (a + b)) is None:
            continue
        n = max(1, math.ceil((b - a) / _MAX_PANEL))
        edges = np.linspace(a, b, n + 1)
        yield from zip(edges[:-1], edges[1:])


def psi_u2_integral(psi, phi, u) -> float:
    """Composite 16-point Gauss rule for the integral of Psi * u**2 over [-1, 1].

    Panels follow the breakpoints of both shapes so the integrand is smooth
    on each of them.
    """
    total = 0.0
    for a, b in _panels(psi, phi):
        s = 0.5 * (b - a) * _GAUSS_NODES + 0.5 * (a + b)
        total += 0.5 * (b - a) * float(np.dot(_GAUSS_WEIGHTS, psi(s) * u(s) ** 2))
    return total


def _build_record(phi, psi, alpha, settings) -> ResonanceRecord:
    sol = integrate_ivp(combine([(alpha, phi)]), 0.0, 1.0, 0.0, settings)
    u_right, du_right = sol.column(0)
    integral = psi_u2_integral(psi, phi, lambda s: sol.trace(s)[:, 0])
    theta, kappa = resonant_maps(1.0, u_right, integral)
    return ResonanceRecord(float(alpha), theta, kappa, sol.trace, abs(du_right))


def resonance_record(
    phi: PiecewisePolynomial,
    psi: PiecewisePolynomial,
    alpha: float,
    root_tol: float = RECORD_RESIDUAL_TOL,
    settings: SolverSettings | None = None,
) -> ResonanceRecord:
    """theta, kappa and the half-bound state at a resonant coupling ``alpha``.

    Raises
    ------
    NotResonant
        If |u'(1; alpha)| exceeds ``root_tol``.
    """
    rec = _build_record(phi, psi, alpha, settings)
    if rec.residual > root_tol:
        raise NotResonant(f"alpha={alpha!r} has shooting residual {rec.residual:.3g} > {root_tol:.3g}")
    return rec


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 0.5))
    grid = lo + step * np.arange(n + 1)
    grid[-1] = min(grid[-1], hi)
    if lo <= 0.0 <= hi:
        grid = grid[np.abs(grid) > 1e-9 * step]
        grid = np.sort(np.append(grid, 0.0))
    return grid


def _bisect(f, a, fa, b, fb, tol):
    while b - a > tol:
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
    # one secant step inside the final bracket: stays within tol, shrinks the residual
    return a - fa * (b - a) / (fb - fa)


def scan_resonances(
    phi: PiecewisePolynomial,
    window: Sequence[float] = DEFAULT_WINDOW,
    step: float = DEFAULT_STEP,
    root_tol: float = DEFAULT_ROOT_TOL,
    psi: PiecewisePolynomial | None = None,
    settings: SolverSettings | None = None,
) -> ResonantSet:
    """Resonant couplings of ``phi`` inside ``window``.

    Sign changes of the shooting residual on a grid of spacing ``step`` are
    refined by bisection to ``root_tol``. alpha = 0 is always resonant and is
    included whenever the window contains it. Grid points where |residual|
    has a local minimum below sqrt(root_tol) without a sign change are
    reported as possible double roots (a warning, not a record).

    ``psi`` only enters kappa; it defaults to the zero shape.
    """
    if not step > 0 or not root_tol > 0:
        raise ValueError("step and root_tol must be positive")
    lo, hi = (float(w) for w in window)
    if not lo < hi:
        raise ValueError("window must satisfy min < max")
    if phi.is_zero:
        raise ZeroShape("Phi is identically zero: every alpha is resonant")
    psi = psi if psi is not None else ShapePotential.zero()

    def f(a):
        return 0.0 if a == 0.0 else shooting_residual(phi, a, settings)

    grid = _grid(lo, hi, step)
    vals = np.array([f(a) for a in grid])
    roots = [a for a, v in zip(grid, vals) if v == 0.0]
    for i in range(len(grid) - 1):
        if vals[i] * vals[i + 1] < 0:
            roots.append(_bisect(f, grid[i], vals[i], grid[i + 1], vals[i + 1], root_tol))

    notes = []
    thresh = math.sqrt(root_tol)
    for i in range(1, len(grid) - 1):
        v = abs(vals[i])
        if v == 0.0 or v >= thresh:
            continue
        if vals[i - 1] * vals[i] <= 0 or vals[i] * vals[i + 1] <= 0:
            continue
        if v < abs(vals[i - 1]) and v < abs(vals[i + 1]):
            notes.append(f"possible tangential root near alpha={grid[i]!r} (|residual|={v:.3g})")
    for msg in notes:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    records = tuple(_build_record(phi, psi, a, settings) for a in sorted(roots))
    return ResonantSet(records, (lo, hi), float(step), tuple(notes))


def coupling_matrix(rec, beta: float) -> np.ndarray:
    """[[theta, 0], [beta*kappa, 1/theta]]; ``rec`` is a record or (theta, kappa)."""
    theta, kappa = (rec.theta, rec.kappa) if hasattr(rec, "theta") else rec
    return np.array([[theta, 0.0], [beta * kappa, 1.0 / theta]])


def kurasov_matrix(alpha: float, beta: float) -> np.ndarray:
    """Coupling matrix of the product-formula interpretation of alpha*delta' + beta*delta."""
    if alpha in (2.0, -2.0):
        raise SingularAlpha(f"alpha={alpha} is a singular value of the product-formula model")
    return np.array(
        [
            [(2 + alpha) / (2 - alpha), 0.0],
            [4 * beta / (2 - alpha) ** 2, (2 - alpha) / (2 + alpha)],
        ]
    )
