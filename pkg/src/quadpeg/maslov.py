"""Maslov indices of loops of Lagrangian planes in complex 2-space.

A 2-plane spanned over the reals by vectors v1, v2 in C^2 is Lagrangian
for the weighted product form with positive weights (c1, c2) when
``c1*Im(v1_1 * conj(v2_1)) + c2*Im(v1_2 * conj(v2_2))`` vanishes.  After
rescaling each coordinate by sqrt(c_i) such a plane has a unitary frame,
and the winding number of det^2 of that frame along a loop of planes is
the Maslov index, an integer invariant.

The torus loops of interest here are tangent planes of gamma x gamma along
the (m, n) homology classes and their images under the diagonal-splitting
linear maps of :mod:`quadpeg.quadrilateral`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from .curve import FourierCurve, ResolutionError
from .quadrilateral import apply_F, apply_R

__all__ = [
    "FormWeights",
    "LagrangianPlane",
    "LagrangianLoop",
    "DegeneratePlaneError",
    "LagrangianViolationError",
    "symplectic_product",
    "is_lagrangian",
    "unitary_frame",
    "maslov_index",
    "torus_loop",
    "image_torus_loop",
    "minimum_maslov_number",
]


class DegeneratePlaneError(ValueError):
    """The two spanning vectors are linearly dependent over the reals."""


class LagrangianViolationError(RuntimeError):
    """A plane that should be Lagrangian is not; indicates a bug."""


@dataclass(frozen=True)
class FormWeights:
    """Positive weights (c1, c2) of a product symplectic form."""

    c1: float
    c2: float

    def __post_init__(self) -> None:
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("form weights must be positive")


STANDARD_WEIGHTS = FormWeights(1.0, 1.0)


@dataclass(frozen=True)
class LagrangianPlane:
    """A real 2-plane in C^2 spanned by the basis vectors v1 and v2."""

    v1: Tuple[complex, complex]
    v2: Tuple[complex, complex]


def symplectic_product(weights: FormWeights, u: Sequence[complex],
                       v: Sequence[complex]) -> float:
    """Weighted form evaluated on a pair of vectors."""
    return (weights.c1 * (u[0] * complex(v[0]).conjugate()).imag
            + weights.c2 * (u[1] * complex(v[1]).conjugate()).imag)


def is_lagrangian(plane: LagrangianPlane, weights: FormWeights,
                  tol: float = 1e-10) -> bool:
    """Whether the weighted form vanishes on the plane, relative to its scale."""
    u, v = plane.v1, plane.v2
    scale = (weights.c1 * abs(u[0]) * abs(v[0])
             + weights.c2 * abs(u[1]) * abs(v[1]))
    if scale == 0.0:
        return True
    return abs(symplectic_product(weights, u, v)) <= tol * scale


def _frames_batch(V1: np.ndarray, V2: np.ndarray, weights: FormWeights):
    """Unitary frames for batches of plane bases, as column pairs (u1, u2).

    Rescales coordinates by sqrt(c_i), then Gram-Schmidt under the real
    part of the Hermitian inner product.  Returns (u1, u2) arrays of shape
    (n, 2) and the relative sizes used for degeneracy detection.
    """
    scale = np.array([math.sqrt(weights.c1), math.sqrt(weights.c2)])
    w1 = V1 * scale
    w2 = V2 * scale
    n1 = np.sqrt(np.sum(np.abs(w1) ** 2, axis=-1))
    ref = np.sqrt(np.sum(np.abs(w2) ** 2, axis=-1))
    with np.errstate(invalid="ignore", divide="ignore"):
        u1 = w1 / n1[..., None]
        proj = np.sum((w2 * np.conj(u1)).real, axis=-1)
        v = w2 - proj[..., None] * u1
        n2 = np.sqrt(np.sum(np.abs(v) ** 2, axis=-1))
        u2 = v / n2[..., None]
    return u1, u2, n1, n2, ref


def unitary_frame(plane: LagrangianPlane, weights: FormWeights) -> np.ndarray:
    """2x2 matrix whose columns are an orthonormal basis of the plane.

    Orthonormalization happens after rescaling coordinates by sqrt(c_i);
    for a Lagrangian plane the result is unitary to machine precision.
    Raises :class:`DegeneratePlaneError` for dependent basis vectors.
    """
    V1 = np.array([plane.v1], dtype=complex)
    V2 = np.array([plane.v2], dtype=complex)
    u1, u2, n1, n2, ref = _frames_batch(V1, V2, weights)
    if n1[0] == 0.0 or ref[0] == 0.0 or n2[0] <= 1e-12 * ref[0]:
        raise DegeneratePlaneError("spanning vectors are linearly dependent")
    return np.stack([u1[0], u2[0]], axis=-1)


class LagrangianLoop:
    """A sampled loop of Lagrangian planes at parameters j/n, j = 0..n-1.

    Stored as two (n, 2) arrays of spanning vectors plus the form weights.
    """

    def __init__(self, v1: np.ndarray, v2: np.ndarray, weights: FormWeights):
        v1 = np.asarray(v1, dtype=complex)
        v2 = np.asarray(v2, dtype=complex)
        if v1.shape != v2.shape or v1.ndim != 2 or v1.shape[1] != 2:
            raise ValueError("spanning vector arrays must both have shape (n, 2)")
        if v1.shape[0] < 2:
            raise ValueError("a loop needs at least 2 samples")
        self.v1 = v1
        self.v2 = v2
        self.weights = weights

    @classmethod
    def from_planes(cls, planes: Iterable[LagrangianPlane],
                    weights: FormWeights) -> "LagrangianLoop":
        planes = list(planes)
        v1 = np.array([p.v1 for p in planes], dtype=complex)
        v2 = np.array([p.v2 for p in planes], dtype=complex)
        return cls(v1, v2, weights)

    def __len__(self) -> int:
        return self.v1.shape[0]

    def plane(self, j: int) -> LagrangianPlane:
        return LagrangianPlane(
            v1=(complex(self.v1[j, 0]), complex(self.v1[j, 1])),
            v2=(complex(self.v2[j, 0]), complex(self.v2[j, 1])),
        )


def maslov_index(loop: LagrangianLoop) -> int:
    """Winding number of det^2 of the loop's unitary frames around 0.

    Accumulates the principal angle difference between consecutive samples
    (including the closing step); any gap of pi/2 or more raises
    :class:`ResolutionError` instead of risking a wrong integer.
    """
    u1, u2, n1, n2, ref = _frames_batch(loop.v1, loop.v2, loop.weights)
    if np.any(n1 == 0.0) or np.any(n2 <= 1e-12 * ref):
        raise DegeneratePlaneError("loop contains a degenerate plane")
    det = u1[:, 0] * u2[:, 1] - u2[:, 0] * u1[:, 1]
    det2 = det * det
    steps = np.angle(np.roll(det2, -1) / det2)
    if np.max(np.abs(steps)) >= math.pi / 2:
        raise ResolutionError(
            "det^2 angle gap of pi/2 or more between samples; "
            "raise the sample count")
    w = float(np.sum(steps)) / (2.0 * math.pi)
    k = round(w)
    if abs(w - k) > 0.1:
        raise ResolutionError("det^2 winding did not close up to an integer")
    return int(k)


def torus_loop(curve: FourierCurve, weights: FormWeights, m: int, n: int,
               samples: int = 4096) -> LagrangianLoop:
    """Tangent planes of gamma x gamma along the (m, n) class.

    At loop parameter theta the plane is spanned by (gamma'(m theta), 0)
    and (0, gamma'(n theta)); it is Lagrangian for every product form
    weight.  (m, n) = (1, 1) traverses the diagonal class.
    """
    if samples < 8:
        raise ValueError("samples must be at least 8")
    th = np.arange(samples) / samples
    d1 = curve.deriv((m * th) % 1.0)
    d2 = curve.deriv((n * th) % 1.0)
    zeros = np.zeros(samples, dtype=complex)
    v1 = np.stack([d1, zeros], axis=-1)
    v2 = np.stack([zeros, d2], axis=-1)
    return LagrangianLoop(v1, v2, weights)


def _map_matrix(map_kind: str, map_params) -> np.ndarray:
    """2x2 complex matrix of the named diagonal-splitting map.

    ``"F_t"`` takes a single ratio t; ``"R_phi_F_s"`` takes (s, phi) and
    composes the second-coordinate rotation with the splitting map.
    """
    kind = map_kind.replace("-", "_").lower()
    e1, e2 = (1.0 + 0j, 0j), (0j, 1.0 + 0j)
    if kind == "f_t":
        t = float(map_params)
        cols = [apply_F(t, e1), apply_F(t, e2)]
    elif kind in ("r_phi_f_s", "rphi_fs", "r_phi_fs"):
        s, phi = map_params
        cols = [apply_R(phi, apply_F(float(s), e1)),
                apply_R(phi, apply_F(float(s), e2))]
    else:
        raise ValueError(f"unknown map kind {map_kind!r}; "
                         "expected 'F_t' or 'R_phi_F_s'")
    return np.array(cols, dtype=complex).T


def _push_loop(loop: LagrangianLoop, matrix: np.ndarray,
               weights: FormWeights = STANDARD_WEIGHTS,
               check_tol: float = 1e-10) -> LagrangianLoop:
    """Push a loop forward through a linear map, verifying Lagrangian-ness."""
    v1 = loop.v1 @ matrix.T
    v2 = loop.v2 @ matrix.T
    form = (weights.c1 * (v1[:, 0] * np.conj(v2[:, 0])).imag
            + weights.c2 * (v1[:, 1] * np.conj(v2[:, 1])).imag)
    scale = (weights.c1 * np.abs(v1[:, 0]) * np.abs(v2[:, 0])
             + weights.c2 * np.abs(v1[:, 1]) * np.abs(v2[:, 1]))
    bad = np.abs(form) > check_tol * np.maximum(scale, np.finfo(float).tiny)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise LagrangianViolationError(
            f"pushed-forward plane at sample {j} fails the Lagrangian check "
            f"(relative form value {abs(form[j]) / max(scale[j], 1e-300):.3e})")
    return LagrangianLoop(v1, v2, weights)


def image_torus_loop(curve: FourierCurve, map_kind: str, map_params,
                     m: int, n: int, samples: int = 4096) -> LagrangianLoop:
    """The (m, n) tangent loop pushed through a diagonal-splitting map.

    The image is measured against the standard weights (1, 1); every pushed
    plane is verified Lagrangian to 1e-10, which fails only on an
    implementation bug.
    """
    base = torus_loop(curve, STANDARD_WEIGHTS, m, n, samples=samples)
    return _push_loop(base, _map_matrix(map_kind, map_params))


def minimum_maslov_number(indices: Tuple[int, int]) -> int:
    """gcd of the indices of a homology basis (gcd(0, 0) = 0)."""
    i1, i2 = indices
    return math.gcd(int(i1), int(i2))
