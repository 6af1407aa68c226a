"""Smooth closed plane curves as truncated Fourier series.

A curve is ``z(theta) = sum_k c_k exp(2*pi*i*k*theta)`` for integer modes
k = -K..K, evaluated on the unit parameter circle theta in [0, 1).  The
representation is analytic, 1-periodic by construction, and differentiates
exactly, which makes it a convenient stand-in for an arbitrary smooth
Jordan curve once immersion and embeddedness have been checked at sample
resolution.

Factories
---------
:func:`circle`, :func:`ellipse` and :func:`random_curve` build standard
test curves; :func:`generate` dispatches on a kind string.  Random curves
are deterministic functions of their seed and are regenerated (with a
derived seed) until they pass :func:`validate`.

File format
-----------
:func:`save_curve` / :func:`load_curve` read and write a line-oriented text
format: header ``fourier-curve v1``, then the mode cutoff K, then one line
``k re(c_k) im(c_k)`` for each k = -K..K in increasing order, full decimal
precision.  Parsers reject duplicate or missing modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "FourierCurve",
    "CurveSample",
    "CurveValidityReport",
    "CurveFormatError",
    "CurveValidationError",
    "GenerationError",
    "ResolutionError",
    "circle",
    "ellipse",
    "random_curve",
    "generate",
    "validate",
    "turning_number",
    "circle_distance",
    "save_curve",
    "load_curve",
    "dumps_curve",
    "loads_curve",
]

_TWO_PI = 2.0 * math.pi


class CurveFormatError(ValueError):
    """Malformed curve file."""


class CurveValidationError(ValueError):
    """A curve failed an immersion or embeddedness check."""


class GenerationError(RuntimeError):
    """Random curve generation exhausted its retry budget."""


class ResolutionError(RuntimeError):
    """A sampled winding computation is too coarse to be trusted."""


def circle_distance(a, b):
    """Distance on the unit parameter circle (elementwise, broadcasting)."""
    d = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)) % 1.0
    return np.minimum(d, 1.0 - d)


class FourierCurve:
    """Closed plane curve with finitely many Fourier coefficients.

    Parameters
    ----------
    coefficients : array-like of complex, length 2K+1
        Coefficients c_k ordered by increasing k from -K to K.
    """

    def __init__(self, coefficients: Sequence[complex]):
        coeffs = np.array(coefficients, dtype=complex)
        if coeffs.ndim != 1 or coeffs.size % 2 != 1:
            raise ValueError("coefficients must be a 1-d sequence of odd length "
                             f"(2K+1), got shape {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must be finite")
        coeffs.setflags(write=False)
        self._coeffs = coeffs
        self._K = coeffs.size // 2
        self._diameter: float | None = None

    @property
    def K(self) -> int:
        """Mode cutoff."""
        return self._K

    @property
    def coefficients(self) -> np.ndarray:
        """Read-only coefficient array, ordered k = -K..K."""
        return self._coeffs

    def coefficient(self, k: int) -> complex:
        """The coefficient c_k (zero outside -K..K)."""
        if abs(k) > self._K:
            return 0.0 + 0.0j
        return complex(self._coeffs[k + self._K])

    def __repr__(self) -> str:
        return f"FourierCurve(K={self._K})"

    # -- evaluation ----------------------------------------------------

    def _series(self, theta, mode_weight):
        """Sum of ``mode_weight(k) * c_k * exp(2 pi i k theta)`` over k.

        ``mode_weight`` maps a signed mode index to a scalar factor; the
        mode phases are built by repeated in-place multiplication so large
        batched evaluations stay allocation-light (and bitwise independent
        of how a batch is split).
        """
        th = np.asarray(theta, dtype=float) % 1.0
        c = self._coeffs
        K = self._K
        out = np.full(th.shape, mode_weight(0) * c[K], dtype=complex)
        if K:
            base = np.exp((2j * math.pi) * th)
            p = base.copy()
            tmp = np.empty_like(base)
            for k in range(1, K + 1):
                np.multiply(p, mode_weight(k) * c[K + k], out=tmp)
                out += tmp
                np.conjugate(p, out=tmp)
                tmp *= mode_weight(-k) * c[K - k]
                out += tmp
                if k < K:
                    p *= base
        return out

    def eval(self, theta):
        """Curve point(s) z(theta).  Accepts scalars or arrays of any shape."""
        out = self._series(theta, lambda k: 1.0)
        return complex(out[()]) if np.ndim(theta) == 0 else out

    __call__ = eval

    def deriv(self, theta):
        """Tangent vector(s) z'(theta)."""
        out = self._series(theta, lambda k: (2j * math.pi) * k)
        return complex(out[()]) if np.ndim(theta) == 0 else out

    def second_deriv(self, theta):
        """Second derivative z''(theta)."""
        out = self._series(theta, lambda k: -(_TWO_PI * k) ** 2)
        return complex(out[()]) if np.ndim(theta) == 0 else out

    def point_and_tangent(self, theta):
        """(z(theta), z'(theta)) as one call."""
        z = self.eval(theta)
        dz = self.deriv(theta)
        return z, dz

    def sample(self, theta: float) -> "CurveSample":
        """Point and tangent at one parameter, as a :class:`CurveSample`."""
        z, dz = self.point_and_tangent(float(theta))
        return CurveSample(theta=float(theta) % 1.0, point=z, tangent=dz)

    def diameter(self) -> float:
        """Maximum pairwise distance over 512 samples (cached)."""
        if self._diameter is None:
            th = np.arange(512) / 512.0
            z = self.eval(th)
            self._diameter = float(np.max(np.abs(z[:, None] - z[None, :])))
        return self._diameter


@dataclass(frozen=True)
class CurveSample:
    """A curve point with its parameter and (nonzero) tangent."""

    theta: float
    point: complex
    tangent: complex

    def __post_init__(self) -> None:
        if self.tangent == 0:
            raise ValueError("tangent must be nonzero")


# -- validity checks ----------------------------------------------------


@dataclass(frozen=True)
class CurveValidityReport:
    """Outcome of the sampled immersion and embeddedness checks."""

    n_samples: int
    delta_sep: float
    eps_emb: float
    min_speed: float
    immersion_ok: bool
    closest_approach: float
    closest_pair: tuple[float, float]
    embedded_ok: bool

    @property
    def ok(self) -> bool:
        return self.immersion_ok and self.embedded_ok

    @property
    def failures(self) -> list[str]:
        out = []
        if not self.immersion_ok:
            out.append("immersion")
        if not self.embedded_ok:
            out.append("embeddedness")
        return out


def _refine_closest_pair(curve: FourierCurve, t1: float, t2: float,
                         h0: float, delta_sep: float,
                         rounds: int = 6, grid: int = 17):
    """Zoom refinement of the separated-pair closest approach near (t1, t2).

    Keeps the circle separation above delta_sep; a true self-intersection
    drives the value toward zero, an embedded curve bottoms out at the
    separation boundary.
    """
    best_d = math.inf
    h = h0
    for _ in range(rounds):
        u = t1 + np.linspace(-h, h, grid)
        v = t2 + np.linspace(-h, h, grid)
        zu = curve.eval(u)
        zv = curve.eval(v)
        dist = np.abs(zu[:, None] - zv[None, :])
        sep = circle_distance(u[:, None], v[None, :])
        dist[sep <= delta_sep] = math.inf
        flat = int(np.argmin(dist))
        i, j = divmod(flat, grid)
        if dist[i, j] < best_d:
            best_d = float(dist[i, j])
            t1, t2 = float(u[i] % 1.0), float(v[j] % 1.0)
        h /= 8.0
    return best_d, t1, t2


def validate(curve: FourierCurve, n_samples: int | None = None,
             eps_emb: float | None = None,
             delta_sep: float | None = None) -> CurveValidityReport:
    """Check the immersion and embeddedness hypotheses at sample resolution.

    Immersion requires min |z'| > 0 over the samples.  Embeddedness requires
    that no two parameters at circle distance greater than ``delta_sep``
    come closer than ``eps_emb`` in the plane; candidate near approaches
    from the sample grid are refined by local zooming so that transversal
    self-crossings are detected and not lost between samples.

    Defaults: n_samples = max(1024, 64K), delta_sep = 2/n_samples,
    eps_emb = 1e-6 * diameter.
    """
    n = n_samples if n_samples is not None else max(1024, 64 * curve.K)
    if n < 4 * curve.K + 16:
        raise ValueError(f"n_samples must be at least 4K+16 = {4 * curve.K + 16}")
    delta = delta_sep if delta_sep is not None else 2.0 / n
    eps = eps_emb if eps_emb is not None else 1e-6 * curve.diameter()

    th = np.arange(n) / n
    z, dz = curve.point_and_tangent(th)
    min_speed = float(np.min(np.abs(dz)))
    immersion_ok = min_speed > 0.0

    # Candidate pairs: the smallest sampled separated distances, gathered
    # chunk by chunk to bound memory.
    n_cand = 32
    cand: list[tuple[float, int, int]] = []
    chunk = 512
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        dist = np.abs(z[lo:hi, None] - z[None, :])
        sep = circle_distance(th[lo:hi, None], th[None, :])
        dist[sep <= delta] = math.inf
        flat = np.argpartition(dist, min(n_cand, dist.size - 1), axis=None)[:n_cand]
        rows, cols = np.unravel_index(flat, dist.shape)
        for r, cix in zip(rows, cols):
            if math.isfinite(dist[r, cix]):
                cand.append((float(dist[r, cix]), int(lo + r), int(cix)))
    cand.sort()

    # Refine one representative per near-approach neighborhood.
    picked: list[tuple[float, int, int]] = []
    for d0, i, j in cand:
        t1, t2 = float(th[i]), float(th[j])
        dup = any(
            max(circle_distance(t1, u), circle_distance(t2, v)) < 3.0 / n
            for _, u, v in ((0, float(th[pi]), float(th[pj])) for _, pi, pj in picked)
        )
        if not dup:
            picked.append((d0, i, j))
        if len(picked) >= 8:
            break

    closest = math.inf
    closest_pair = (0.0, 0.0)
    for d0, i, j in picked:
        d, u, v = _refine_closest_pair(curve, float(th[i]), float(th[j]), 1.0 / n, delta)
        if d < closest:
            closest = d
            closest_pair = (u, v)
    embedded_ok = closest >= eps

    return CurveValidityReport(
        n_samples=n, delta_sep=delta, eps_emb=eps,
        min_speed=min_speed, immersion_ok=immersion_ok,
        closest_approach=closest, closest_pair=closest_pair,
        embedded_ok=embedded_ok,
    )


def turning_number(curve: FourierCurve, n_samples: int | None = None) -> int:
    """Winding number of the unit tangent around 0, by angle unwrapping.

    Equals +1 for counterclockwise embedded curves.  Raises
    :class:`ResolutionError` when consecutive tangent angles jump by pi/2
    or more, or when a sampled tangent vanishes.
    """
    n = n_samples if n_samples is not None else max(1024, 64 * curve.K)
    th = np.arange(n) / n
    dz = curve.deriv(th)
    if np.any(dz == 0):
        raise ResolutionError("tangent vanishes at a sample; curve is not immersed")
    steps = np.angle(np.roll(dz, -1) / dz)
    if np.max(np.abs(steps)) >= math.pi / 2:
        raise ResolutionError(
            "consecutive tangent angles jump by >= pi/2; raise n_samples")
    w = float(np.sum(steps)) / _TWO_PI
    k = round(w)
    if abs(w - k) > 0.1:
        raise ResolutionError("tangent winding did not close up to an integer")
    return int(k)


# -- factories -----------------------------------------------------------


def circle(radius: float = 1.0) -> FourierCurve:
    """Counterclockwise circle of the given radius centered at 0."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    return FourierCurve([0.0, 0.0, radius])


def ellipse(a: float, b: float) -> FourierCurve:
    """Axis-aligned ellipse ``a*cos + i*b*sin``, counterclockwise."""
    if a <= 0 or b <= 0:
        raise ValueError("semi-axes must be positive")
    return FourierCurve([(a - b) / 2.0, 0.0, (a + b) / 2.0])


_RANDOM_AMPLITUDE = 0.45
_MAX_ATTEMPTS = 64


def random_curve(seed: int, K: int = 8, decay: float = 2.5) -> FourierCurve:
    """Random validated counterclockwise curve, deterministic in the seed.

    Coefficient magnitudes scale like |k|**(-decay) around a fixed c_1 = 1;
    draws that fail :func:`validate` are retried with a deterministically
    derived seed.
    """
    if K < 1:
        raise ValueError("K must be at least 1")
    if decay <= 1.0:
        raise ValueError("decay must exceed 1")
    ks = [k for k in range(-K, K + 1) if k not in (0, 1)]
    for attempt in range(_MAX_ATTEMPTS):
        rng = np.random.default_rng([seed, attempt])
        mags = _RANDOM_AMPLITUDE * rng.uniform(0.0, 1.0, len(ks))
        phases = rng.uniform(0.0, _TWO_PI, len(ks))
        coeffs = np.zeros(2 * K + 1, dtype=complex)
        coeffs[K + 1] = 1.0
        for k, m, ph in zip(ks, mags, phases):
            coeffs[K + k] = m * abs(k) ** (-decay) * np.exp(1j * ph)
        curve = FourierCurve(coeffs)
        try:
            if turning_number(curve) == -1:
                curve = FourierCurve(coeffs[::-1])
        except ResolutionError:
            continue
        try:
            if validate(curve).ok and turning_number(curve) == 1:
                return curve
        except ResolutionError:
            continue
    raise GenerationError(
        f"no valid curve found for seed {seed} after {_MAX_ATTEMPTS} attempts")


def generate(kind: str, seed: int = 0, K: int = 8, decay: float = 2.5,
             a: float = 2.0, b: float = 1.0) -> FourierCurve:
    """Factory dispatch: kind is 'circle', 'ellipse' or 'random'."""
    kind = kind.lower()
    if kind == "circle":
        return circle()
    if kind == "ellipse":
        return ellipse(a, b)
    if kind == "random":
        return random_curve(seed, K=K, decay=decay)
    raise ValueError(f"unknown curve kind {kind!r}")


# -- file format ----------------------------------------------------------

_HEADER = "fourier-curve v1"


def dumps_curve(curve: FourierCurve) -> str:
    """Serialize to the v1 text format (full decimal precision)."""
    K = curve.K
    lines = [_HEADER, str(K)]
    for k in range(-K, K + 1):
        c = curve.coefficient(k)
        lines.append(f"{k} {c.real!r} {c.imag!r}")
    return "\n".join(lines) + "\n"


def loads_curve(text: str) -> FourierCurve:
    """Parse the v1 text format; rejects duplicate or missing modes."""
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != _HEADER:
        raise CurveFormatError(f"expected header {_HEADER!r}")
    if len(lines) < 2:
        raise CurveFormatError("missing mode cutoff line")
    try:
        K = int(lines[1])
    except ValueError as exc:
        raise CurveFormatError(f"invalid mode cutoff {lines[1]!r}") from exc
    if K < 0:
        raise CurveFormatError("mode cutoff must be non-negative")
    body = lines[2:]
    if len(body) != 2 * K + 1:
        raise CurveFormatError(
            f"expected {2 * K + 1} coefficient lines, got {len(body)}")
    seen: dict[int, complex] = {}
    for ln in body:
        parts = ln.split()
        if len(parts) != 3:
            raise CurveFormatError(f"malformed coefficient line {ln!r}")
        try:
            k = int(parts[0])
            re, im = float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise CurveFormatError(f"malformed coefficient line {ln!r}") from exc
        if k in seen:
            raise CurveFormatError(f"duplicate mode k={k}")
        if abs(k) > K:
            raise CurveFormatError(f"mode k={k} outside -K..K")
        seen[k] = complex(re, im)
    missing = [k for k in range(-K, K + 1) if k not in seen]
    if missing:
        raise CurveFormatError(f"missing modes {missing}")
    return FourierCurve([seen[k] for k in range(-K, K + 1)])


def save_curve(curve: FourierCurve, path: Union[str, Path]) -> None:
    """Write the v1 text format to a file."""
    Path(path).write_text(dumps_curve(curve), encoding="ascii")


def load_curve(path: Union[str, Path]) -> FourierCurve:
    """Read a curve from the v1 text format."""
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise CurveFormatError(f"cannot read curve file {path}: {exc}") from exc
    return loads_curve(text)
