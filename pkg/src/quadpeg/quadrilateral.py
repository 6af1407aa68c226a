"""Cyclic quadrilaterals: parameter form, vertex form, inscription residual.

An oriented similarity class of cyclic quadrilaterals is named by a triple
``(s, t, phi)``: the two diagonal ratios measured at the diagonal crossing
and the crossing angle.  This module converts between that parameter form
and explicit vertices, and evaluates the residual of the linear equation
that characterizes when four labeled points realize a given class.

Conventions: vertices are complex numbers, labels A, B, C, D run
counterclockwise, diagonals are AC and BD, and X denotes their crossing.
The ratios are s = |AX|/|AC| and t = |BX|/|BD|, both in (0, 1/2], and
phi is the angle from ray XA to ray XB, in (0, pi).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence, Tuple, Union

import numpy as np

__all__ = [
    "ComplexPair",
    "CyclicQuadParams",
    "QuadVertices",
    "QuadrilateralError",
    "NotConvexError",
    "NotCyclicError",
    "apply_F",
    "apply_R",
    "inscription_residual",
    "residual_components",
    "is_degenerate",
    "is_cyclic",
    "params_from_vertices",
    "vertices_from_params",
    "similarity_class_equal",
]

#: A point of the complex 2-plane, acted on by ``apply_F`` and ``apply_R``.
ComplexPair = Tuple[complex, complex]


class QuadrilateralError(ValueError):
    """Invalid quadrilateral input."""


class NotConvexError(QuadrilateralError):
    """The diagonals do not cross, or the labels are not counterclockwise."""


class NotCyclicError(QuadrilateralError):
    """The chord products at the diagonal crossing disagree."""


@dataclass(frozen=True)
class CyclicQuadParams:
    """Similarity-class parameters (s, t, phi) of a cyclic quadrilateral.

    Invariants: 0 < s <= 1/2, 0 < t <= 1/2, 0 < phi < pi.
    """

    s: float
    t: float
    phi: float

    def __post_init__(self) -> None:
        if not (0.0 < self.s <= 0.5):
            raise ValueError(f"ratio s must lie in (0, 1/2], got {self.s}")
        if not (0.0 < self.t <= 0.5):
            raise ValueError(f"ratio t must lie in (0, 1/2], got {self.t}")
        if not (0.0 < self.phi < math.pi):
            raise ValueError(f"angle phi must lie in (0, pi), got {self.phi}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.s, self.t, self.phi)


@dataclass(frozen=True)
class QuadVertices:
    """Four labeled vertices in convex counterclockwise position."""

    A: complex
    B: complex
    C: complex
    D: complex

    def as_tuple(self) -> tuple[complex, complex, complex, complex]:
        return (self.A, self.B, self.C, self.D)

    @property
    def signed_area(self) -> float:
        """Shoelace area; positive for counterclockwise labels."""
        pts = self.as_tuple()
        total = 0.0
        for i in range(4):
            total += (pts[i].conjugate() * pts[(i + 1) % 4]).imag
        return 0.5 * total


VertexInput = Union[QuadVertices, Sequence[complex]]


def _coerce_vertices(v: VertexInput) -> tuple[complex, complex, complex, complex]:
    if isinstance(v, QuadVertices):
        return v.as_tuple()
    pts = tuple(complex(p) for p in v)
    if len(pts) != 4:
        raise QuadrilateralError(f"expected 4 vertices, got {len(pts)}")
    return pts


def apply_F(r: float, p: ComplexPair) -> ComplexPair:
    """Apply the diagonal-splitting map F_r to a pair (z, w).

    Returns ``(r*z + (1-r)*w, sqrt(r*(1-r))*(z - w))``.  The ratio r must
    lie in (0, 1/2].
    """
    if not (0.0 < r <= 0.5):
        raise ValueError(f"ratio must lie in (0, 1/2], got {r}")
    z, w = complex(p[0]), complex(p[1])
    q = math.sqrt(r * (1.0 - r))
    return (r * z + (1.0 - r) * w, q * (z - w))


def apply_R(phi: float, p: ComplexPair) -> ComplexPair:
    """Rotate the second coordinate of a pair by the angle phi."""
    z, w = complex(p[0]), complex(p[1])
    return (z, cmath.exp(1j * phi) * w)


def residual_components(s, t, phi, a, b, c, d):
    """Complex components of the inscription residual, broadcasting over arrays.

    The first component vanishes exactly when the diagonals AC and BD cross
    at the common point X with |AX| = s*|AC| and |BX| = t*|BD|; given that,
    the second vanishes exactly when the crossing angle is phi and the chord
    products agree.  Inputs a..d are the vertex points A..D.
    """
    ws = np.exp(1j * phi) * np.sqrt(s * (1.0 - s))
    wt = np.sqrt(t * (1.0 - t))
    first = (1.0 - s) * a + s * c - (1.0 - t) * b - t * d
    second = ws * (a - c) - wt * (b - d)
    return first, second


def inscription_residual(q: CyclicQuadParams, v: VertexInput) -> np.ndarray:
    """Real 4-vector residual of the inscription equation.

    Layout is ``(Re r1, Im r1, Re r2, Im r2)`` for the two complex
    components.  The residual is zero exactly when the four points are the
    vertices of a cyclic quadrilateral of class ``q`` in counterclockwise
    convex position, or when all four points coincide (the degenerate case,
    reported separately by :func:`is_degenerate`).
    """
    a, b, c, d = _coerce_vertices(v)
    first, second = residual_components(q.s, q.t, q.phi, a, b, c, d)
    return np.array([first.real, first.imag, second.real, second.imag])


def is_degenerate(v: VertexInput, tol: float) -> bool:
    """True when the diagonal endpoints A and C are within tol of each other."""
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    a, _, c, _ = _coerce_vertices(v)
    return abs(a - c) < tol


def _cross(p: complex, q: complex) -> float:
    return (p.conjugate() * q).imag


def _diagonal_crossing(a: complex, b: complex, c: complex, d: complex):
    """Crossing of open segments AC and BD as (u, w, X).

    u and w are the affine parameters along AC and BD.  Raises
    NotConvexError when the open segments do not cross.
    """
    d1 = c - a
    d2 = d - b
    scale = abs(d1) * abs(d2)
    if scale == 0.0:
        raise NotConvexError("a diagonal has coincident endpoints")
    denom = _cross(d1, d2)
    if abs(denom) <= 1e-14 * scale:
        raise NotConvexError("diagonals are parallel and do not cross")
    r = b - a
    u = _cross(r, d2) / denom
    w = _cross(r, d1) / denom
    if not (0.0 < u < 1.0 and 0.0 < w < 1.0):
        raise NotConvexError("diagonals AC and BD do not cross; "
                             "vertices are not in convex order")
    return u, w, a + u * d1


def is_cyclic(v: VertexInput, tol: float = 1e-9) -> bool:
    """Chord-products test at the diagonal crossing, with relative tolerance.

    True iff ``| |AX||CX| - |BX||DX| | <= tol * max(products)``.  Raises
    NotConvexError when the diagonals do not cross.
    """
    a, b, c, d = _coerce_vertices(v)
    _, _, x = _diagonal_crossing(a, b, c, d)
    p1 = abs(a - x) * abs(c - x)
    p2 = abs(b - x) * abs(d - x)
    return abs(p1 - p2) <= tol * max(p1, p2)


# Slack for the `ratio <= 1/2` test when picking a label rotation; absorbs
# rounding at the s = 1/2 boundary where two rotations tie.
_HALF_SLACK = 1e-12


def params_from_vertices(v: VertexInput, tol: float = 1e-9) -> CyclicQuadParams:
    """Recover (s, t, phi) from four concyclic vertices.

    The labels are cyclically rotated as needed so that both ratios lie in
    (0, 1/2]; ties (a ratio equal to 1/2) are broken by smallest s, then
    smallest t.  Raises NotCyclicError when the chord products differ beyond
    the relative tolerance, NotConvexError when the diagonals do not cross
    or the labels run clockwise.
    """
    a, b, c, d = _coerce_vertices(v)
    u, w, x = _diagonal_crossing(a, b, c, d)

    p1 = abs(a - x) * abs(c - x)
    p2 = abs(b - x) * abs(d - x)
    if abs(p1 - p2) > tol * max(p1, p2):
        raise NotCyclicError(
            f"chord products at the diagonal crossing differ: {p1:.17g} vs {p2:.17g}")

    phi = cmath.phase((b - x) / (a - x))
    if phi <= 0.0:
        raise NotConvexError("vertex labels run clockwise; "
                             "counterclockwise order is required")

    # Cyclic relabelings (A,B,C,D) -> (B,C,D,A) -> ... act on the data as
    # (s, t, phi) -> (t, 1-s, pi-phi); exactly one rotation puts both ratios
    # in (0, 1/2] except at a 1/2 boundary.
    rotations = [
        (u, w, phi),
        (w, 1.0 - u, math.pi - phi),
        (1.0 - u, 1.0 - w, phi),
        (1.0 - w, u, math.pi - phi),
    ]
    candidates = [r for r in rotations
                  if r[0] <= 0.5 + _HALF_SLACK and r[1] <= 0.5 + _HALF_SLACK]
    if not candidates:
        raise QuadrilateralError("no label rotation yields ratios in (0, 1/2]")
    s, t, phi = min(candidates)
    return CyclicQuadParams(min(s, 0.5), min(t, 0.5), phi)


def vertices_from_params(q: CyclicQuadParams) -> QuadVertices:
    """Canonical vertex representative of the class ``q``.

    Places the diagonal crossing X at the origin with AC on the real axis
    and |AC| = 1.  The result satisfies the inscription residual exactly and
    has chord products |AX||CX| = |BX||DX| = s(1-s).
    """
    s, t, phi = q.s, q.t, q.phi
    k = math.sqrt(s * (1.0 - s) / (t * (1.0 - t)))
    e = cmath.exp(1j * phi)
    return QuadVertices(
        A=complex(-s),
        B=-t * k * e,
        C=complex(1.0 - s),
        D=(1.0 - t) * k * e,
    )


def similarity_class_equal(q1: CyclicQuadParams, q2: CyclicQuadParams,
                           tol: float = 1e-9) -> bool:
    """Whether two parameter triples name the same oriented similarity class.

    Componentwise equality within tol, or, when s1 or t1 equals 1/2 within
    tol, equality with the swapped triple (t1, s1, pi - phi1).
    """
    if (abs(q1.s - q2.s) <= tol and abs(q1.t - q2.t) <= tol
            and abs(q1.phi - q2.phi) <= tol):
        return True
    if abs(q1.s - 0.5) <= tol or abs(q1.t - 0.5) <= tol:
        return (abs(q2.s - q1.t) <= tol and abs(q2.t - q1.s) <= tol
                and abs(q2.phi - (math.pi - q1.phi)) <= tol)
    return False
