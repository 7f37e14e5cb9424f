"""Integration of -w'' + q(s) w = E w on [-1, 1].

Two engines share one interface:

* ``rk45``: Dormand-Prince 4(5) with adaptive steps that never straddle a
  breakpoint of q. The dense trace is a quintic Hermite interpolant built
  from w, w' and w'' = (q - E) w at every step end, so it is accurate to
  O(h^6) without extra right-hand-side evaluations.
* ``exact``: for piecewise-constant q, the product of per-piece cos/cosh
  propagators. This is the oracle for the stepper and the engine for the
  exactly solvable examples.

Several solution columns may be integrated at once on a shared mesh; the
fundamental pair (u, v) uses that.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import NumericalError, StepUnderflow
from .potential import PiecewisePolynomial, combine

log = logging.getLogger(__name__)

WRONSKIAN_TOL = 1e-8


@dataclass(frozen=True)
class SolverSettings:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.05
    min_step: float = 1e-9

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.min_step <= self.max_step <= 2:
            raise ValueError("need 0 < min_step <= max_step <= 2")

    def halved(self) -> "SolverSettings":
        return SolverSettings(self.rel_tol / 2, self.abs_tol / 2, self.max_step, self.min_step)


DEFAULT_SETTINGS = SolverSettings()


# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A2 = 1 / 5
_A3 = (3 / 40, 9 / 40)
_A4 = (44 / 45, -56 / 15, 32 / 9)
_A5 = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_A6 = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_B = (35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)  # stages 1,3,4,5,6
_E = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)  # 1,3,4,5,6,7


def _segments(q: PiecewisePolynomial) -> list[tuple[float, float, np.ndarray]]:
    """Split [-1, 1] at the breakpoints of q; each segment carries one polynomial."""
    pts = [-1.0, 1.0] + [float(b) for b in q.breakpoints if -1.0 < b < 1.0]
    pts = sorted(set(pts))
    segs = []
    for a, b in zip(pts[:-1], pts[1:]):
        piece = q.piece_at(0.5 * (a + b))
        coeffs = np.asarray(piece.coeffs) if piece is not None else np.zeros(1)
        segs.append((a, b, coeffs))
    return segs


# ---------------------------------------------------------------------------
# dense traces


class HermiteTrace:
    """Piecewise quintic Hermite interpolant of the stepper output."""

    def __init__(self, s_left, s_right, w_l, w_r, p_l, p_r, a_l, a_r):
        self.s_left = np.asarray(s_left)
        self.s_right = np.asarray(s_right)
        self._data = [np.asarray(x) for x in (w_l, p_l, a_l, w_r, p_r, a_r)]

    def _locate(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        i = np.clip(np.searchsorted(self.s_left, s, side="right") - 1, 0, len(self.s_left) - 1)
        h = (self.s_right - self.s_left)[i]
        t = ((s - self.s_left[i]) / h)[:, None]
        return i, h[:, None], t

    def __call__(self, s) -> np.ndarray:
        """Solution values, shape (len(s), ncols)."""
        i, h, t = self._locate(s)
        w_l, p_l, a_l, w_r, p_r, a_r = (x[i] for x in self._data)
        t2, t3 = t * t, t * t * t
        t4, t5 = t3 * t, t3 * t2
        h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5
        h1 = t - 6 * t3 + 8 * t4 - 3 * t5
        h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5)
        h3 = 10 * t3 - 15 * t4 + 6 * t5
        h4 = -4 * t3 + 7 * t4 - 3 * t5
        h5 = 0.5 * (t3 - 2 * t4 + t5)
        return h0 * w_l + h * h1 * p_l + h * h * h2 * a_l + h3 * w_r + h * h4 * p_r + h * h * h5 * a_r

    def derivative(self, s) -> np.ndarray:
        i, h, t = self._locate(s)
        w_l, p_l, a_l, w_r, p_r, a_r = (x[i] for x in self._data)
        t2, t3, t4 = t * t, t * t * t, t * t * t * t
        d0 = -30 * t2 + 60 * t3 - 30 * t4
        d1 = 1 - 18 * t2 + 32 * t3 - 15 * t4
        d2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4)
        d3 = -d0
        d4 = -12 * t2 + 28 * t3 - 15 * t4
        d5 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4)
        return (d0 * w_l + d3 * w_r) / h + d1 * p_l + d4 * p_r + h * (d2 * a_l + d5 * a_r)


def _propagator(c, length):
    """Entries of the transfer matrix of w'' = c w over ``length`` (vectorized)."""
    c = np.asarray(c, dtype=float)
    length = np.asarray(length, dtype=float)
    omega = np.sqrt(np.abs(c))
    x = omega * length
    pos, neg = c > 0, c < 0
    m11 = np.ones(np.broadcast(c, length).shape)
    m12 = np.broadcast_to(length, m11.shape).astype(float).copy()
    m21 = np.zeros_like(m11)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
        ch, sh = np.cosh(x), np.sinh(x)
        co, si = np.cos(x), np.sin(x)
        m11 = np.where(pos, ch, np.where(neg, co, m11))
        m12 = np.where(pos, sh / np.where(pos, omega, 1), np.where(neg, si / np.where(neg, omega, 1), m12))
        m21 = np.where(pos, omega * sh, np.where(neg, -omega * si, m21))
    return m11, m12, m21, m11


class ExactTrace:
    """Trace of the exact piecewise-constant solution."""

    def __init__(self, starts, ends, cs, w0, p0):
        self.starts = np.asarray(starts)
        self.ends = np.asarray(ends)
        self.cs = np.asarray(cs)
        self.w0 = np.asarray(w0)
        self.p0 = np.asarray(p0)

    def _prop(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        i = np.clip(np.searchsorted(self.starts, s, side="right") - 1, 0, len(self.starts) - 1)
        m11, m12, m21, m22 = _propagator(self.cs[i], s - self.starts[i])
        return i, m11[:, None], m12[:, None], m21[:, None], m22[:, None]

    def __call__(self, s) -> np.ndarray:
        i, m11, m12, _, _ = self._prop(s)
        return m11 * self.w0[i] + m12 * self.p0[i]

    def derivative(self, s) -> np.ndarray:
        i, _, _, m21, m22 = self._prop(s)
        return m21 * self.w0[i] + m22 * self.p0[i]


# ---------------------------------------------------------------------------
# solution container and drivers


@dataclass(frozen=True)
class IVPSolution:
    w1: np.ndarray
    dw1: np.ndarray
    trace: HermiteTrace | ExactTrace
    error_estimate: float
    nsteps: int
    method: str

    def column(self, j: int = 0):
        """(w(1), w'(1)) for one column as floats."""
        return float(self.w1[j]), float(self.dw1[j])


def _integrate_exact(segs, E, w0, dw0):
    w = np.array(w0, dtype=float)
    p = np.array(dw0, dtype=float)
    starts, ends, cs, ws, ps = [], [], [], [], []
    for a, b, coeffs in segs:
        c = float(coeffs[0]) - E
        starts.append(a), ends.append(b), cs.append(c), ws.append(w.copy()), ps.append(p.copy())
        m11, m12, m21, m22 = (float(x) for x in _propagator(c, b - a))
        with np.errstate(over="ignore", invalid="ignore"):
            w, p = m11 * w + m12 * p, m21 * w + m22 * p
    trace = ExactTrace(starts, ends, cs, np.array(ws), np.array(ps))
    return w, p, trace, 0.0, len(segs)


def _integrate_rk45(segs, E, w0, dw0, settings: SolverSettings):
    rtol, atol = settings.rel_tol, settings.abs_tol
    hmax, hmin = settings.max_step, settings.min_step
    m = len(w0)
    w = [float(x) for x in w0]
    p = [float(x) for x in dw0]
    rec_sl, rec_sr, rec_wl, rec_wr, rec_pl, rec_pr, rec_al, rec_ar = ([] for _ in range(8))
    err_sum = 0.0
    nsteps = 0
    h = hmax
    for a, b, coeffs in segs:
        cq = [float(x) for x in coeffs]
        cq[0] -= E
        deg = len(cq) - 1

        def cfun(s):
            v = cq[deg]
            for j in range(deg - 1, -1, -1):
                v = v * s + cq[j]
            return v

        s = a
        c_now = cfun(s)
        h = min(h, hmax, b - a)
        while s < b:
            last = False
            if s + h >= b or b - (s + h) < hmin:
                h = b - s
                last = True
            cst = [c_now] + [cfun(s + ci * h) for ci in _C[1:6]]
            c7 = cfun(b) if last else cfun(s + h)
            cst.append(c7)
            new_w, new_p = [0.0] * m, [0.0] * m
            err2 = 0.0
            errabs = 0.0
            for j in range(m):
                w1, p1 = w[j], p[j]
                kw1, kp1 = p1, cst[0] * w1
                w2 = w1 + h * _A2 * kw1
                p2 = p1 + h * _A2 * kp1
                kw2, kp2 = p2, cst[1] * w2
                w3 = w1 + h * (_A3[0] * kw1 + _A3[1] * kw2)
                p3 = p1 + h * (_A3[0] * kp1 + _A3[1] * kp2)
                kw3, kp3 = p3, cst[2] * w3
                w4 = w1 + h * (_A4[0] * kw1 + _A4[1] * kw2 + _A4[2] * kw3)
                p4 = p1 + h * (_A4[0] * kp1 + _A4[1] * kp2 + _A4[2] * kp3)
                kw4, kp4 = p4, cst[3] * w4
                w5 = w1 + h * (_A5[0] * kw1 + _A5[1] * kw2 + _A5[2] * kw3 + _A5[3] * kw4)
                p5 = p1 + h * (_A5[0] * kp1 + _A5[1] * kp2 + _A5[2] * kp3 + _A5[3] * kp4)
                kw5, kp5 = p5, cst[4] * w5
                w6 = w1 + h * (_A6[0] * kw1 + _A6[1] * kw2 + _A6[2] * kw3 + _A6[3] * kw4 + _A6[4] * kw5)
                p6 = p1 + h * (_A6[0] * kp1 + _A6[1] * kp2 + _A6[2] * kp3 + _A6[3] * kp4 + _A6[4] * kp5)
                kw6, kp6 = p6, cst[5] * w6
                wn = w1 + h * (_B[0] * kw1 + _B[1] * kw3 + _B[2] * kw4 + _B[3] * kw5 + _B[4] * kw6)
                pn = p1 + h * (_B[0] * kp1 + _B[1] * kp3 + _B[2] * kp4 + _B[3] * kp5 + _B[4] * kp6)
                kw7, kp7 = pn, cst[6] * wn
                ew = h * (_E[0] * kw1 + _E[1] * kw3 + _E[2] * kw4 + _E[3] * kw5 + _E[4] * kw6 + _E[5] * kw7)
                ep = h * (_E[0] * kp1 + _E[1] * kp3 + _E[2] * kp4 + _E[3] * kp5 + _E[4] * kp6 + _E[5] * kp7)
                sw = atol + rtol * max(abs(w1), abs(wn))
                sp = atol + rtol * max(abs(p1), abs(pn))
                err2 += (ew / sw) ** 2 + (ep / sp) ** 2
                errabs = max(errabs, abs(ew), abs(ep))
                new_w[j], new_p[j] = wn, pn
            err = math.sqrt(err2 / (2 * m))
            if err <= 1.0:
                s_new = b if last else s + h
                rec_sl.append(s), rec_sr.append(s_new)
                rec_wl.append(w), rec_wr.append(new_w)
                rec_pl.append(p), rec_pr.append(new_p)
                rec_al.append([c_now * x for x in w]), rec_ar.append([c7 * x for x in new_w])
                s, w, p, c_now = s_new, new_w, new_p, c7
                err_sum += errabs
                nsteps += 1
                factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
                h = min(hmax, h * factor)
            else:
                h = h * max(0.2, 0.9 * err ** -0.2)
                if h < hmin:
                    raise StepUnderflow(
                        f"step {h:.3g} below min_step {hmin:.3g} at s={s:.6g}"
                    )
    trace = HermiteTrace(rec_sl, rec_sr, rec_wl, rec_wr, rec_pl, rec_pr, rec_al, rec_ar)
    return np.array(w), np.array(p), trace, err_sum, nsteps


def integrate_ivp(
    q: PiecewisePolynomial,
    E: float,
    w0,
    dw0,
    settings: SolverSettings | None = None,
    method: str = "auto",
) -> IVPSolution:
    """Solve -w'' + q w = E w from s = -1 to s = +1.

    Parameters
    ----------
    q : PiecewisePolynomial
        Effective potential; only its restriction to [-1, 1] matters.
    E : float
        Spectral parameter.
    w0, dw0 : float or sequence of float
        Initial data at s = -1. Sequences integrate several columns on a
        shared mesh.
    method : {"auto", "rk45", "exact"}
        ``auto`` picks ``exact`` when every piece of q is constant.

    Returns
    -------
    IVPSolution
        Terminal values (always arrays, one entry per column), a dense trace
        and the accumulated local error estimate.
    """
    settings = settings or DEFAULT_SETTINGS
    w0 = np.atleast_1d(np.asarray(w0, dtype=float))
    dw0 = np.atleast_1d(np.asarray(dw0, dtype=float))
    if w0.shape != dw0.shape:
        raise ValueError("w0 and dw0 must have the same shape")
    segs = _segments(q)
    if method == "auto":
        method = "exact" if q.max_degree == 0 else "rk45"
    if method == "exact":
        if q.max_degree != 0:
            raise ValueError("exact propagation needs a piecewise-constant potential")
        out = _integrate_exact(segs, float(E), w0, dw0)
    elif method == "rk45":
        out = _integrate_rk45(segs, float(E), w0, dw0, settings)
    else:
        raise ValueError(f"unknown method {method!r}")
    w1, dw1, trace, err, n = out
    return IVPSolution(w1, dw1, trace, err, n, method)


def transfer_matrix(q: PiecewisePolynomial, E: float) -> np.ndarray:
    """Exact 2x2 transfer matrix over [-1, 1] for piecewise-constant q."""
    sol = integrate_ivp(q, E, [1.0, 0.0], [0.0, 1.0], method="exact")
    return np.array([[sol.w1[0], sol.w1[1]], [sol.dw1[0], sol.dw1[1]]])


@dataclass(frozen=True)
class FundamentalPair:
    """Boundary traces at s = 1 of the solutions with (u, u') = (1, 0) and
    (v, v') = (0, 1) at s = -1."""

    u1: float
    du1: float
    v1: float
    dv1: float
    wronskian_defect: float
    alpha: float
    beta: float
    eps: float
    k: float
    error_estimate: float = 0.0
    method: str = ""

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.u1, self.v1], [self.du1, self.dv1]])


def auxiliary_potential(phi, psi, alpha: float, beta: float, eps: float) -> PiecewisePolynomial:
    """q = alpha * Phi + beta * eps * Psi."""
    return combine([(alpha, phi), (beta * eps, psi)])


def fundamental_pair(
    phi,
    psi,
    alpha: float,
    beta: float,
    eps: float,
    k: float,
    settings: SolverSettings | None = None,
    method: str = "auto",
) -> FundamentalPair:
    if eps < 0 or k < 0:
        raise ValueError("eps and k must be non-negative")
    q = auxiliary_potential(phi, psi, alpha, beta, eps)
    sol = integrate_ivp(q, (eps * k) ** 2, [1.0, 0.0], [0.0, 1.0], settings, method)
    u1, v1 = (float(x) for x in sol.w1)
    du1, dv1 = (float(x) for x in sol.dw1)
    if not all(math.isfinite(x) for x in (u1, du1, v1, dv1)):
        raise NumericalError(f"fundamental solutions overflowed at alpha={alpha}, eps={eps}, k={k}")
    defect = abs(u1 * dv1 - du1 * v1 - 1.0)
    if defect > WRONSKIAN_TOL:
        log.warning("Wronskian defect %.3g at alpha=%g eps=%g k=%g", defect, alpha, eps, k)
    return FundamentalPair(
        u1, du1, v1, dv1, defect, alpha, beta, eps, k, sol.error_estimate, sol.method
    )
