"""Piecewise-polynomial shape functions and their moments.

A shape is a finite list of closed intervals, each carrying a polynomial in
ascending-degree coefficients. Between intervals (and outside them) the
function is zero. Evaluation is right-continuous at shared breakpoints and
a piece includes its own right endpoint when no other piece starts there.

The squeezed potential built from two shapes is

    V_eps(x) = alpha * eps**-2 * Phi(x / eps) + beta * eps**-1 * Psi(x / eps)
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

MAX_SHAPE_DEGREE = 8
DEFAULT_MOMENT_TOL = 1e-10


@dataclass(frozen=True)
class Piece:
    a: float
    b: float
    coeffs: tuple[float, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def _as_piece(a, b, coeffs) -> Piece:
    a, b = float(a), float(b)
    c = tuple(float(x) for x in coeffs) or (0.0,)
    if not (math.isfinite(a) and math.isfinite(b)) or not a < b:
        raise ValueError(f"invalid piece interval [{a}, {b}]")
    if not all(math.isfinite(x) for x in c):
        raise ValueError(f"non-finite coefficient on [{a}, {b}]")
    return Piece(a, b, c)


@dataclass(frozen=True, eq=False)
class PiecewisePolynomial:
    """Compactly supported piecewise polynomial on the real line."""

    pieces: tuple[Piece, ...] = ()
    label: str = ""
    _starts: np.ndarray = field(init=False, repr=False)
    _ends: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pieces = tuple(p if isinstance(p, Piece) else _as_piece(*p) for p in self.pieces)
        pieces = tuple(sorted(pieces, key=lambda p: p.a))
        for left, right in zip(pieces, pieces[1:]):
            if right.a < left.b:
                raise ValueError(
                    f"overlapping pieces [{left.a}, {left.b}] and [{right.a}, {right.b}]"
                )
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "_starts", np.array([p.a for p in pieces]))
        object.__setattr__(self, "_ends", np.array([p.b for p in pieces]))

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple[float, float, Sequence[float]]], label: str = ""):
        return cls(tuple(_as_piece(a, b, c) for a, b, c in pieces), label)

    @classmethod
    def constant(cls, value: float, a: float = -1.0, b: float = 1.0, label: str = ""):
        return cls.from_pieces([(a, b, [value])], label)

    # -- basic queries -------------------------------------------------

    @property
    def breakpoints(self) -> np.ndarray:
        pts = {p.a for p in self.pieces} | {p.b for p in self.pieces}
        return np.array(sorted(pts))

    @property
    def max_degree(self) -> int:
        return max((p.degree for p in self.pieces), default=0)

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for p in self.pieces for c in p.coeffs)

    @property
    def support(self) -> tuple[float, float]:
        if not self.pieces:
            return (0.0, 0.0)
        return (self.pieces[0].a, self.pieces[-1].b)

    def piece_at(self, s: float) -> Piece | None:
        i = int(np.searchsorted(self._starts, s, side="right")) - 1
        if i < 0 or s > self._ends[i]:
            return None
        return self.pieces[i]

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        out = np.zeros_like(s)
        if self.pieces:
            idx = np.searchsorted(self._starts, s, side="right") - 1
            inside = idx >= 0
            inside[inside] &= s[inside] <= self._ends[idx[inside]]
            for i, p in enumerate(self.pieces):
                m = inside & (idx == i)
                if m.any():
                    out[m] = P.polyval(s[m], p.coeffs)
        return float(out[0]) if scalar else out

    # -- algebra -------------------------------------------------------

    def scaled(self, factor: float) -> "PiecewisePolynomial":
        return type(self)._rebuild(
            self, tuple(Piece(p.a, p.b, tuple(factor * c for c in p.coeffs)) for p in self.pieces)
        )

    def reflected(self) -> "PiecewisePolynomial":
        """Return s -> f(-s)."""
        pieces = tuple(
            Piece(-p.b, -p.a, tuple(c * (-1) ** j for j, c in enumerate(p.coeffs)))
            for p in self.pieces
        )
        return type(self)._rebuild(self, pieces)

    @staticmethod
    def _rebuild(template, pieces):
        obj = PiecewisePolynomial(pieces, template.label)
        if isinstance(template, ShapePotential):
            return ShapePotential(obj.pieces, template.label)
        return obj

    # -- exact integration ---------------------------------------------

    def integral(self, power: int = 0) -> float:
        """Exact value of the integral of s**power * f(s) over the line."""
        total = 0.0
        for p in self.pieces:
            poly = np.asarray(p.coeffs)
            for _ in range(power):
                poly = P.polymulx(poly)
            anti = P.polyint(poly)
            total += P.polyval(p.b, anti) - P.polyval(p.a, anti)
        return float(total)

    def cumulative(self, x) -> np.ndarray:
        """Exact antiderivative F(x) = integral of f over (-inf, x]."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        acc = 0.0
        for p in self.pieces:
            anti = P.polyint(p.coeffs)
            fa = P.polyval(p.a, anti)
            full = P.polyval(p.b, anti) - fa
            inside = (x > p.a) & (x < p.b)
            out[inside] = acc + P.polyval(x[inside], anti) - fa
            out[x >= p.b] = acc + full
            acc += full
        return out

    def cell_averages(self, edges) -> np.ndarray:
        """Exact mean of f over each cell [edges[i], edges[i+1]]."""
        edges = np.asarray(edges, dtype=float)
        return np.diff(self.cumulative(edges)) / np.diff(edges)

    # -- serialization -------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "pieces": [{"interval": [p.a, p.b], "coeffs": list(p.coeffs)} for p in self.pieces],
        }

    @classmethod
    def from_dict(cls, data: dict):
        try:
            pieces = [(d["interval"][0], d["interval"][1], d["coeffs"]) for d in data.get("pieces", [])]
        except (KeyError, IndexError, TypeError) as exc:
            raise ValueError(f"malformed shape description: {exc}") from exc
        return cls.from_pieces(pieces, str(data.get("label", "")))


def combine(terms: Sequence[tuple[float, PiecewisePolynomial]]) -> PiecewisePolynomial:
    """Linear combination sum(c * f) as a single piecewise polynomial.

    Pieces of the result are the elementary intervals between the union of
    all breakpoints that are covered by at least one term.
    """
    terms = [(float(c), f) for c, f in terms if c != 0.0 and f.pieces]
    if not terms:
        return PiecewisePolynomial()
    pts = np.unique(np.concatenate([f.breakpoints for _, f in terms]))
    pieces = []
    for a, b in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (a + b)
        poly = np.zeros(1)
        covered = False
        for c, f in terms:
            p = f.piece_at(mid)
            if p is not None:
                covered = True
                poly = P.polyadd(poly, c * np.asarray(p.coeffs))
        if covered:
            pieces.append(Piece(float(a), float(b), tuple(float(v) for v in np.atleast_1d(poly))))
    return PiecewisePolynomial(tuple(pieces))


class ShapePotential(PiecewisePolynomial):
    """Bounded real shape supported in [-1, 1] with pieces of degree <= 8."""

    def __post_init__(self):
        super().__post_init__()
        for p in self.pieces:
            if p.a < -1.0 or p.b > 1.0:
                raise ValueError(f"piece [{p.a}, {p.b}] leaves [-1, 1]")
            if p.degree > MAX_SHAPE_DEGREE:
                raise ValueError(f"piece degree {p.degree} exceeds {MAX_SHAPE_DEGREE}")

    @classmethod
    def zero(cls, label: str = "zero"):
        return cls((), label)


def evaluate(p: PiecewisePolynomial, s):
    return p(s)


def load_shape(path: str | Path) -> ShapePotential:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return ShapePotential.from_dict(data)


def save_shape(shape: PiecewisePolynomial, path: str | Path) -> None:
    Path(path).write_text(json.dumps(shape.to_dict(), indent=2) + "\n", encoding="utf-8")


class LimitClass(str, enum.Enum):
    DELTA_PRIME_DELTA = "DeltaPrimeDeltaLimit"
    DIVERGENT = "DivergentInDistributions"
    OTHER = "OtherWeakLimit"


@dataclass(frozen=True)
class MomentReport:
    m0_phi: float
    m1_phi: float
    m0_psi: float
    classification: LimitClass

    def to_dict(self) -> dict:
        return {
            "m0_phi": self.m0_phi,
            "m1_phi": self.m1_phi,
            "m0_psi": self.m0_psi,
            "classification": self.classification.value,
        }


def moments(phi: PiecewisePolynomial, psi: PiecewisePolynomial, tol: float = DEFAULT_MOMENT_TOL) -> MomentReport:
    """Exact moments deciding the distributional limit of the squeezed potential."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    m0_phi = phi.integral(0)
    m1_phi = phi.integral(1)
    m0_psi = psi.integral(0)
    if abs(m0_phi) > tol:
        cls = LimitClass.DIVERGENT
    elif abs(m1_phi + 1.0) <= tol and abs(m0_psi - 1.0) <= tol:
        cls = LimitClass.DELTA_PRIME_DELTA
    else:
        cls = LimitClass.OTHER
    return MomentReport(m0_phi, m1_phi, m0_psi, cls)


def squeezed_value(phi, psi, alpha: float, beta: float, eps: float, x):
    """Pointwise value of alpha/eps**2 Phi(x/eps) + beta/eps Psi(x/eps)."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    s = np.asarray(x, dtype=float) / eps
    out = alpha / eps**2 * phi(s) + beta / eps * psi(s)
    return out


def squeezed(phi, psi, alpha: float, beta: float, eps: float) -> PiecewisePolynomial:
    """The squeezed potential as a piecewise polynomial in x (support [-eps, eps])."""
    if not eps > 0:
        raise ValueError("eps must be positive")

    def rescale(f: PiecewisePolynomial, amp: float) -> PiecewisePolynomial:
        pieces = tuple(
            Piece(p.a * eps, p.b * eps, tuple(amp * c / eps**j for j, c in enumerate(p.coeffs)))
            for p in f.pieces
        )
        return PiecewisePolynomial(pieces)

    return combine([(1.0, rescale(phi, alpha / eps**2)), (1.0, rescale(psi, beta / eps))])
