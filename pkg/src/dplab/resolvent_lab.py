"""Numerical check of norm-resolvent convergence on a fixed right-hand side.

Two solutions of (H - zeta) y = f are compared:

* the limit operator, -d^2/dx^2 on R \\ {0} with either the matching
  conditions y(+0) = mu y(-0), y'(+0) = y'(-0)/mu + nu y(-0) (resonant) or
  y(-0) = y(+0) = 0 (split). Solved in closed form: free-resolvent
  convolution plus one decaying exponential on each half-line, with all
  integrals of f against exponentials done exactly piece by piece;
* the squeezed operator on [-L, L] with Dirichlet ends, discretized by
  second-order central differences with cell-averaged potential and data,
  solved by Thomas elimination.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import IllConditioned
from .ode_core import SolverSettings
from .potential import PiecewisePolynomial, squeezed
from .resonance import RECORD_RESIDUAL_TOL, resonance_record, shooting_residual
from .scattering import check_monotone, fit_order

GROWTH_LIMIT = 1e8
TRUNCATION_TARGET = 1e-10
MIN_HALFWIDTH = 8.0
DEFAULT_CELLS_PER_EPS = 64


@dataclass(frozen=True)
class LimitOperator:
    kind: str  # "resonant" or "split"
    mu: float = 1.0
    nu: float = 0.0

    def __post_init__(self):
        if self.kind not in ("resonant", "split"):
            raise ValueError(f"unknown limit operator kind {self.kind!r}")
        if self.kind == "resonant" and self.mu == 0:
            raise ValueError("mu must be nonzero")

    @classmethod
    def resonant(cls, mu: float, nu: float) -> "LimitOperator":
        return cls("resonant", float(mu), float(nu))

    @classmethod
    def split(cls) -> "LimitOperator":
        return cls("split", math.nan, math.nan)


def decaying_root(zeta: complex) -> complex:
    """Square root of zeta with positive imaginary part."""
    k = cmath.sqrt(zeta)
    return k if k.imag > 0 else -k


@dataclass(frozen=True)
class ResolventProbe:
    """Right-hand side, spectral point and grid for one resolvent comparison.

    ``halfwidth=None`` picks L so that the decaying tail of the solution is
    below 1e-10 at x = +-L; ``grid_step`` is set per eps by resolvent_error.
    """

    f: PiecewisePolynomial
    zeta: complex = 2j
    halfwidth: float | None = None
    grid_step: float | None = None

    def __post_init__(self):
        if complex(self.zeta).imag == 0:
            raise ValueError("zeta must have nonzero imaginary part")
        if self.halfwidth is not None and self.halfwidth < 4:
            raise ValueError("halfwidth must be at least 4")
        if self.grid_step is not None and not self.grid_step > 0:
            raise ValueError("grid_step must be positive")

    def tail_estimate(self, halfwidth: float) -> float:
        """Rough bound on |y(+-L)|: ||f||_1 exp(-Im k (L - R)) / (2|k|)."""
        k = decaying_root(self.zeta)
        reach = max((max(abs(p.a), abs(p.b)) for p in self.f.pieces), default=0.0)
        return _l1_bound(self.f) / (2 * abs(k)) * math.exp(-k.imag * max(halfwidth - reach, 0.0))

    def domain_halfwidth(self) -> float:
        if self.halfwidth is not None:
            return float(self.halfwidth)
        k = decaying_root(self.zeta)
        reach = max((max(abs(p.a), abs(p.b)) for p in self.f.pieces), default=0.0)
        amp = _l1_bound(self.f) / (2 * abs(k))
        extra = math.log(max(amp / TRUNCATION_TARGET, 1.0)) / k.imag
        return max(MIN_HALFWIDTH, math.ceil(reach + extra))


def _l1_bound(f: PiecewisePolynomial) -> float:
    total = 0.0
    for p in f.pieces:
        s = np.linspace(p.a, p.b, 257)
        total += (p.b - p.a) * float(np.max(np.abs(P.polyval(s, p.coeffs))))
    return total


def discrete_norm(values, h: float) -> float:
    return float(math.sqrt(h * np.sum(np.abs(values) ** 2)))


# ---------------------------------------------------------------------------
# limit operator


def _exp_antiderivative(coeffs, c: complex) -> np.ndarray:
    """Q with d/dt [exp(c t) Q(t)] = p(t) exp(c t): Q = sum_j (-1)^j p^(j) / c^(j+1)."""
    p = np.asarray(coeffs, dtype=complex)
    q = np.zeros(len(p), dtype=complex)
    term = p
    for j in range(len(p)):
        q[: len(term)] += (-1) ** j * term / c ** (j + 1)
        term = P.polyder(term) if len(term) > 1 else np.zeros(1)
    return q


class LimitResolvent:
    """Closed-form y = (S0 - zeta)^{-1} f for a LimitOperator."""

    def __init__(self, op: LimitOperator, f: PiecewisePolynomial, zeta: complex):
        self.op, self.f, self.zeta = op, f, complex(zeta)
        self.k = k = decaying_root(zeta)
        self._pieces = [
            (p.a, p.b, _exp_antiderivative(p.coeffs, -1j * k), _exp_antiderivative(p.coeffs, 1j * k))
            for p in f.pieces
        ]
        yp0 = self._particular(np.zeros(1))
        y0, dy0 = complex(yp0[0][0]), complex(yp0[1][0])
        if op.kind == "split":
            self.a_plus = self.b_minus = -y0
        else:
            mu, nu, ik = op.mu, op.nu, 1j * k
            mat = np.array([[1.0, -mu], [ik, ik / mu - nu]], dtype=complex)
            rhs = np.array([(mu - 1) * y0, (1 / mu - 1) * dy0 + nu * y0])
            self.a_plus, self.b_minus = np.linalg.solve(mat, rhs)
        self._yp0 = (y0, dy0)

    def _particular(self, x):
        """Free-resolvent convolution and its derivative at x."""
        k = self.k
        ik = 1j * k
        x = np.asarray(x, dtype=float)
        left = np.zeros(x.shape, dtype=complex)  # exp(ikx) * int_{-inf}^x exp(-ikt) f
        right = np.zeros(x.shape, dtype=complex)  # exp(-ikx) * int_x^inf exp(ikt) f
        for a, b, q1, q2 in self._pieces:
            past = x >= b
            if past.any():
                xs = x[past]
                left[past] += np.exp(ik * (xs - b)) * P.polyval(b, q1) - np.exp(ik * (xs - a)) * P.polyval(a, q1)
            before = x <= a
            if before.any():
                xs = x[before]
                right[before] += np.exp(ik * (b - xs)) * P.polyval(b, q2) - np.exp(ik * (a - xs)) * P.polyval(a, q2)
            inside = (x > a) & (x < b)
            if inside.any():
                xs = x[inside]
                left[inside] += P.polyval(xs, q1) - np.exp(ik * (xs - a)) * P.polyval(a, q1)
                right[inside] += np.exp(ik * (b - xs)) * P.polyval(b, q2) - P.polyval(xs, q2)
        y = 1j / (2 * k) * (left + right)
        dy = -0.5 * (left - right)
        return y, dy

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y, _ = self._particular(x)
        pos = x >= 0
        y[pos] += self.a_plus * np.exp(1j * self.k * x[pos])
        y[~pos] += self.b_minus * np.exp(-1j * self.k * x[~pos])
        return y

    def derivative(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        _, dy = self._particular(x)
        ik = 1j * self.k
        pos = x >= 0
        dy[pos] += ik * self.a_plus * np.exp(ik * x[pos])
        dy[~pos] -= ik * self.b_minus * np.exp(-ik * x[~pos])
        return dy

    def boundary_values(self) -> tuple[complex, complex, complex, complex]:
        """(y(-0), y(+0), y'(-0), y'(+0))."""
        y0, dy0 = self._yp0
        ik = 1j * self.k
        return (y0 + self.b_minus, y0 + self.a_plus, dy0 - ik * self.b_minus, dy0 + ik * self.a_plus)

    def matching_residuals(self) -> tuple[complex, complex]:
        ym, yp, dym, dyp = self.boundary_values()
        if self.op.kind == "split":
            return ym, yp
        mu, nu = self.op.mu, self.op.nu
        return yp - mu * ym, dyp - dym / mu - nu * ym


def solve_limit_resolvent(op: LimitOperator, probe: ResolventProbe) -> LimitResolvent:
    return LimitResolvent(op, probe.f, probe.zeta)


# ---------------------------------------------------------------------------
# squeezed operator


def thomas(lower, diag, upper, rhs):
    """Solve a tridiagonal system without pivoting.

    Returns the solution and the growth factor max|modified entries| / max|A|.
    """
    n = len(diag)
    lower = [complex(x) for x in lower]
    upper = [complex(x) for x in upper]
    b = [complex(x) for x in diag]
    d = [complex(x) for x in rhs]
    scale = max(max(abs(x) for x in b), max((abs(x) for x in lower), default=0.0), max((abs(x) for x in upper), default=0.0))
    cp = [0j] * n
    dp = [0j] * n
    piv = b[0]
    biggest = abs(piv)
    if piv == 0:
        raise IllConditioned("zero pivot in tridiagonal solve")
    cp[0] = upper[0] / piv if n > 1 else 0j
    dp[0] = d[0] / piv
    for i in range(1, n):
        piv = b[i] - lower[i - 1] * cp[i - 1]
        if piv == 0:
            raise IllConditioned("zero pivot in tridiagonal solve")
        a = abs(piv)
        if a > biggest:
            biggest = a
        if i < n - 1:
            cp[i] = upper[i] / piv
        dp[i] = (d[i] - lower[i - 1] * dp[i - 1]) / piv
    x = [0j] * n
    x[-1] = dp[-1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return np.array(x), biggest / scale


@dataclass(frozen=True)
class GridSolution:
    x: np.ndarray
    y: np.ndarray
    h: float
    growth: float


def solve_eps_resolvent(phi, psi, alpha: float, beta: float, eps: float, probe: ResolventProbe) -> GridSolution:
    """Finite-difference (S_eps - zeta)^{-1} f on [-L, L] with Dirichlet ends."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    h = probe.grid_step if probe.grid_step is not None else eps / DEFAULT_CELLS_PER_EPS
    if h > eps / 32 * (1 + 1e-12):
        raise ValueError(f"grid_step {h} exceeds eps/32 = {eps / 32}")
    L = probe.domain_halfwidth()
    if probe.tail_estimate(L) > TRUNCATION_TARGET:
        warnings.warn(f"halfwidth {L} leaves a tail estimate of {probe.tail_estimate(L):.2g}", RuntimeWarning, stacklevel=2)
    n_half = math.ceil(L / h - 1e-9)
    x = h * np.arange(-n_half, n_half + 1)
    edges = np.concatenate([x - 0.5 * h, [x[-1] + 0.5 * h]])
    V = squeezed(phi, psi, alpha, beta, eps).cell_averages(edges)
    f = probe.f.cell_averages(edges)
    inner = slice(1, -1)
    diag = 2.0 / h**2 + V[inner] - probe.zeta
    off = np.full(len(diag) - 1, -1.0 / h**2)
    y_in, growth = thomas(off, diag, off, f[inner])
    if growth > GROWTH_LIMIT:
        raise IllConditioned(f"growth factor {growth:.3g} exceeds {GROWTH_LIMIT:.0e}")
    y = np.zeros(len(x), dtype=complex)
    y[inner] = y_in
    return GridSolution(x, y, h, growth)


# ---------------------------------------------------------------------------
# convergence study


def limit_operator_for(phi, psi, alpha, beta, resonance_tol=RECORD_RESIDUAL_TOL, settings=None) -> LimitOperator:
    """Resonant S(theta, beta*kappa) if alpha is resonant for phi, else the split sum."""
    if abs(shooting_residual(phi, alpha, settings)) <= resonance_tol:
        rec = resonance_record(phi, psi, alpha, resonance_tol, settings)
        return LimitOperator.resonant(rec.theta, beta * rec.kappa)
    return LimitOperator.split()


@dataclass(frozen=True)
class ResolventReport:
    eps: np.ndarray
    h: np.ndarray
    errors: np.ndarray
    order: float
    limit: LimitOperator
    f_norm: float
    solution_norms: np.ndarray
    solutions: tuple[GridSolution, ...] = ()


def resolvent_error(
    phi,
    psi,
    alpha: float,
    beta: float,
    eps_list: Sequence[float],
    probe: ResolventProbe,
    cells_per_eps: int = DEFAULT_CELLS_PER_EPS,
    limit: LimitOperator | None = None,
    settings: SolverSettings | None = None,
    keep_solutions: bool = False,
) -> ResolventReport:
    """Discrete L2 distance between y_eps and the limit resolvent outside |x| <= eps."""
    eps = np.asarray(eps_list, dtype=float)
    if eps.ndim != 1 or len(eps) < 2 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise ValueError("eps_list must be positive and strictly decreasing")
    if cells_per_eps < 32:
        raise ValueError("cells_per_eps must be at least 32")
    limit = limit or limit_operator_for(phi, psi, alpha, beta, settings=settings)
    y_lim = solve_limit_resolvent(limit, probe)
    errors, steps, norms, sols = [], [], [], []
    for e in eps:
        sol = solve_eps_resolvent(phi, psi, alpha, beta, e, replace(probe, grid_step=e / cells_per_eps))
        outside = np.abs(sol.x) > e * (1 + 1e-9)
        errors.append(discrete_norm((sol.y - y_lim(sol.x))[outside], sol.h))
        steps.append(sol.h)
        norms.append(discrete_norm(sol.y, sol.h))
        if keep_solutions:
            sols.append(sol)
    errors = np.array(errors)
    check_monotone(errors, what="resolvent error")
    f_norm = math.sqrt(_l2_squared(probe.f))
    return ResolventReport(eps, np.array(steps), errors, fit_order(eps, errors), limit, f_norm, np.array(norms), tuple(sols))


def _l2_squared(f: PiecewisePolynomial) -> float:
    total = 0.0
    for p in f.pieces:
        sq = P.polyint(P.polymul(p.coeffs, p.coeffs))
        total += P.polyval(p.b, sq) - P.polyval(p.a, sq)
    return float(total)
