"""Multistart Newton solver for inscriptions of a cyclic quadrilateral.

An inscription of the class (s, t, phi) in a curve gamma is a 4-tuple of
curve parameters (a, b, c, d) whose points satisfy the inscription
residual from :mod:`quadpeg.quadrilateral`.  The solver seeds a damped
Newton iteration from a uniform grid on the 4-torus, discards degenerate
limits (all four points collapsing toward one, i.e. A close to C), checks
each survivor by recovering the input parameters from its vertices,
deduplicates, and reports a deterministic sorted list.

A brute-force grid scan (:func:`oracle_grid_search`) is provided as an
independent cross-check for tests and diagnostics.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterator, List, Sequence, Union

import numpy as np

from .curve import CurveValidationError, FourierCurve, circle_distance, validate
from .quadrilateral import (
    CyclicQuadParams,
    QuadrilateralError,
    QuadVertices,
    params_from_vertices,
    residual_components,
    similarity_class_equal,
)

__all__ = [
    "SolverOptions",
    "InscriptionProblem",
    "Inscription",
    "NewtonFailure",
    "SolveDiagnostics",
    "SolveResult",
    "newton_refine",
    "solve_all",
    "dedupe",
    "oracle_grid_search",
]

# Condition number beyond which a Newton failure is blamed on the Jacobian.
_SINGULAR_COND = 1e14
# Relative smallest singular value below which a solution Jacobian is
# flagged rank-deficient (non-isolated solution family).
_RANK_TOL = 1e-8
# Step-halving budget per sweep; the warm-started damping factor lets a
# seed keep shrinking its step across sweeps beyond this.
_MAX_HALVINGS = 8

_CONVERGED, _NO_CONV, _SINGULAR, _DEGENERATE = 0, 1, 2, 3
_FAILURE_KINDS = {_NO_CONV: "no-convergence", _SINGULAR: "singular-jacobian",
                  _DEGENERATE: "degenerate"}
# Residual level below which a near-diagonal iterate is committed to the
# degenerate valley (relative to curve diameter); lets the engine stop
# polishing seeds that cannot produce a non-degenerate inscription.
_DEGEN_GATE = 1e-8


@dataclass(frozen=True)
class SolverOptions:
    """Tuning knobs for :func:`solve_all` and :func:`newton_refine`.

    ``newton_tol`` and ``degen_tol`` are relative to the curve diameter;
    ``dedup_tol`` is a distance on the parameter 4-torus.
    """

    grid: int = 12
    newton_tol: float = 1e-11
    max_iter: int = 50
    dedup_tol: float = 1e-4
    degen_tol: float = 1e-3

    def __post_init__(self) -> None:
        if self.grid < 4:
            raise ValueError("grid density must be at least 4")
        if self.newton_tol <= 0 or self.dedup_tol <= 0 or self.degen_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass(frozen=True)
class Inscription:
    """One inscription: curve parameters, vertices and residual norm."""

    a: float
    b: float
    c: float
    d: float
    vertices: QuadVertices
    residual_norm: float
    converged: bool
    rank_deficient: bool = False
    iterations: int = 0

    @property
    def x(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c, self.d])

    def key(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)


@dataclass(frozen=True)
class NewtonFailure:
    """Why a Newton start did not produce an inscription."""

    kind: str  # "no-convergence" | "singular-jacobian" | "degenerate"
    x: np.ndarray
    residual_norm: float
    iterations: int


@dataclass
class InscriptionProblem:
    """A validated curve, a parameter triple, and solver options."""

    curve: FourierCurve
    params: CyclicQuadParams
    options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self) -> None:
        report = validate(self.curve)
        if not report.ok:
            raise CurveValidationError(
                "curve failed validation: " + ", ".join(report.failures))
        self._diameter = self.curve.diameter()

    @property
    def diameter(self) -> float:
        return self._diameter

    @property
    def newton_tol_abs(self) -> float:
        return self.options.newton_tol * self._diameter

    @property
    def degen_tol_abs(self) -> float:
        return self.options.degen_tol * self._diameter

    def residual(self, x) -> np.ndarray:
        """Real residual 4-vector(s) at parameter tuple(s) ``x`` (..., 4)."""
        x = np.asarray(x, dtype=float)
        pts = self.curve.eval(x)
        q = self.params
        first, second = residual_components(
            q.s, q.t, q.phi, pts[..., 0], pts[..., 1], pts[..., 2], pts[..., 3])
        return np.stack([first.real, first.imag, second.real, second.imag], axis=-1)

    def jacobian(self, x) -> np.ndarray:
        """Analytic Jacobian(s) of :meth:`residual`, shape (..., 4, 4).

        Rows are (Re r1, Im r1, Re r2, Im r2), columns are d/d(a,b,c,d);
        entries follow from the chain rule through the curve tangent.
        """
        x = np.asarray(x, dtype=float)
        dz = self.curve.deriv(x)
        q = self.params
        ws = np.exp(1j * q.phi) * math.sqrt(q.s * (1.0 - q.s))
        wt = math.sqrt(q.t * (1.0 - q.t))
        f1 = np.array([1.0 - q.s, -(1.0 - q.t), q.s, -q.t], dtype=complex)
        f2 = np.array([ws, -wt, -ws, wt], dtype=complex)
        c1 = f1 * dz
        c2 = f2 * dz
        return np.stack([c1.real, c1.imag, c2.real, c2.imag], axis=-2)


def _solve_steps(J: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Newton steps -J^{-1} F, with NaN rows where J is exactly singular.

    Exactly singular rows are masked out before the batched solve (which
    would otherwise refuse the whole batch).
    """
    det = np.linalg.det(J)
    bad = ~np.isfinite(det) | (det == 0.0)
    if np.any(bad):
        J = J.copy()
        J[bad] = np.eye(4)
    step = -np.linalg.solve(J, F[..., None])[..., 0]
    if np.any(bad):
        step[bad] = np.nan
    return step


def _newton_batch(problem: InscriptionProblem, x0: np.ndarray):
    """Damped Newton iteration on a batch of starts.

    Returns (x, residual_norm, status, iterations) arrays; status is 0 for
    converged, 1 for no convergence, 2 for a singular Jacobian (condition
    number above 1e14 at the point where the line search stalled).
    """
    x = np.atleast_2d(np.asarray(x0, dtype=float)) % 1.0
    x = np.array(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("starting points must be finite")
    n = x.shape[0]
    tol = problem.newton_tol_abs

    fvec = problem.residual(x)
    fnorm = np.linalg.norm(fvec, axis=-1)
    status = np.full(n, _NO_CONV, dtype=np.int8)
    iters = np.zeros(n, dtype=np.int32)
    status[fnorm < tol] = _CONVERGED
    active = np.flatnonzero(fnorm >= tol)
    # Per-seed warm start for the damping factor: resume near the last
    # accepted step fraction instead of re-halving from 1 every sweep.
    # Purely per-row state, so results do not depend on batch composition.
    lam0 = np.ones(n)

    for _ in range(problem.options.max_iter):
        if active.size == 0:
            break
        xa = x[active]
        fa = fnorm[active]
        J = problem.jacobian(xa)
        step = _solve_steps(J, fvec[active])
        ok_step = np.isfinite(step).all(axis=1)

        accepted = np.zeros(active.size, dtype=bool)
        new_x = xa.copy()
        new_f = fvec[active].copy()
        new_fn = fa.copy()
        lam = np.minimum(1.0, 2.0 * lam0[active])
        pending = ok_step.copy()
        for _ in range(_MAX_HALVINGS):
            rows = np.flatnonzero(pending)
            if rows.size == 0:
                break
            trial = (xa[rows] + lam[rows, None] * step[rows]) % 1.0
            ft_vec = problem.residual(trial)
            ft = np.linalg.norm(ft_vec, axis=-1)
            good = np.isfinite(ft) & (ft < fa[rows])
            gi = rows[good]
            new_x[gi] = trial[good]
            new_f[gi] = ft_vec[good]
            new_fn[gi] = ft[good]
            accepted[gi] = True
            pending[gi] = False
            lam0[active[gi]] = lam[gi]
            lam = 0.5 * lam

        failed = np.flatnonzero(~accepted)
        if failed.size:
            conds = np.linalg.cond(J[failed])
            bad = ~np.isfinite(conds) | (conds > _SINGULAR_COND)
            gidx = active[failed]
            status[gidx] = np.where(bad, _SINGULAR, _NO_CONV)

        moved = np.flatnonzero(accepted)
        gidx = active[moved]
        x[gidx] = new_x[moved]
        fvec[gidx] = new_f[moved]
        fnorm[gidx] = new_fn[moved]
        iters[gidx] += 1
        conv = new_fn[moved] < tol
        status[gidx[conv]] = _CONVERGED
        active = gidx[~conv]

        # Seeds that are locally converged onto the diagonal valley
        # (tiny residual, A close to C) can only end degenerate; retire
        # them instead of polishing further.
        if active.size:
            low = active[fnorm[active] < _DEGEN_GATE * problem.diameter]
            if low.size:
                pts = problem.curve.eval(x[low][:, [0, 2]])
                dg = np.abs(pts[:, 0] - pts[:, 1]) < 0.5 * problem.degen_tol_abs
                status[low[dg]] = _DEGENERATE
                if np.any(dg):
                    active = active[~np.isin(active, low[dg])]

    return x, fnorm, status, iters


def _rank_deficient_flags(problem: InscriptionProblem, x: np.ndarray) -> np.ndarray:
    if x.size == 0:
        return np.zeros(0, dtype=bool)
    J = problem.jacobian(np.atleast_2d(x))
    svals = np.linalg.svd(J, compute_uv=False)
    return svals[:, -1] < _RANK_TOL * svals[:, 0]


def _make_inscription(problem: InscriptionProblem, x: np.ndarray,
                      resnorm: float, iters: int, rank_deficient: bool) -> Inscription:
    pts = problem.curve.eval(x)
    return Inscription(
        a=float(x[0]), b=float(x[1]), c=float(x[2]), d=float(x[3]),
        vertices=QuadVertices(complex(pts[0]), complex(pts[1]),
                              complex(pts[2]), complex(pts[3])),
        residual_norm=float(resnorm), converged=True,
        rank_deficient=bool(rank_deficient), iterations=int(iters),
    )


def newton_refine(problem: InscriptionProblem,
                  x0: Sequence[float]) -> Union[Inscription, NewtonFailure]:
    """Refine a single starting 4-tuple.

    Returns an :class:`Inscription` on convergence to a non-degenerate
    solution, otherwise a :class:`NewtonFailure` whose kind is one of
    "no-convergence", "singular-jacobian" or "degenerate".
    """
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (4,):
        raise ValueError("x0 must be a 4-vector")
    x, fnorm, status, iters = _newton_batch(problem, x0[None, :])
    x, fnorm, status, iters = x[0], float(fnorm[0]), int(status[0]), int(iters[0])
    if status != _CONVERGED:
        return NewtonFailure(kind=_FAILURE_KINDS[int(status)], x=x,
                             residual_norm=fnorm, iterations=iters)
    pts = problem.curve.eval(x)
    if abs(pts[0] - pts[2]) < problem.degen_tol_abs:
        return NewtonFailure(kind="degenerate", x=x,
                             residual_norm=fnorm, iterations=iters)
    flag = bool(_rank_deficient_flags(problem, x[None, :])[0])
    return _make_inscription(problem, x, fnorm, iters, flag)


# -- seed grid -----------------------------------------------------------


def _diagonal_radius(x: np.ndarray) -> np.ndarray:
    """Distance from torus points (..., 4) to the diagonal {(h,h,h,h)}.

    Measured as the radius of the smallest circle arc enclosing the four
    coordinates (max-metric distance to the nearest diagonal point).
    """
    s = np.sort(np.asarray(x, dtype=float) % 1.0, axis=-1)
    gaps = np.diff(s, axis=-1)
    wrap = 1.0 - (s[..., -1] - s[..., 0])
    max_gap = np.maximum(np.max(gaps, axis=-1), wrap)
    return (1.0 - max_gap) / 2.0


def _seed_grid(g: int) -> tuple[np.ndarray, int]:
    """Uniform g^4 torus grid minus seeds within 1/g of the diagonal."""
    axis = np.arange(g) / g
    grid = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"),
                    axis=-1).reshape(-1, 4)
    keep = _diagonal_radius(grid) > 1.0 / g
    return grid[keep], int(np.sum(~keep))


# -- dedup ---------------------------------------------------------------


def _torus_max_dist(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.max(circle_distance(x, y), axis=-1)


def _lex_order(X: np.ndarray) -> np.ndarray:
    return np.lexsort((X[:, 3], X[:, 2], X[:, 1], X[:, 0]))


def _dedupe_pass(X: np.ndarray, fn: np.ndarray, tol: float) -> np.ndarray:
    """One greedy clustering pass over lex-sorted rows; returns kept indices."""
    order = _lex_order(X)
    centers: list[int] = []
    members: list[list[int]] = []
    center_arr = np.empty((0, 4))
    for i in order:
        if centers:
            dists = _torus_max_dist(center_arr, X[i][None, :])
            j = int(np.argmin(dists))
            if dists[j] <= tol:
                members[j].append(i)
                continue
        centers.append(i)
        members.append([i])
        center_arr = np.vstack([center_arr, X[i][None, :]])
    reps = []
    for group in members:
        group_fn = fn[group]
        reps.append(group[int(np.argmin(group_fn))])
    return np.array(sorted(reps), dtype=int)


def _dedupe_indices(X: np.ndarray, fn: np.ndarray, tol: float) -> np.ndarray:
    """Greedy torus clustering, iterated to a fixed point for idempotence.

    A rounding pre-collapse (cell size well below tol) first reduces the
    machine-identical copies that multistart produces in bulk; each cell
    keeps its lowest-residual member, so the surviving representatives
    match what the greedy pass alone would have chosen.
    """
    n = len(X)
    if n == 0:
        return np.zeros(0, dtype=int)
    decimals = min(12, max(5, int(math.ceil(1.0 - math.log10(tol)))))
    cells = np.round(X, decimals) % 1.0
    _, inverse = np.unique(cells, axis=0, return_inverse=True)
    order = np.lexsort((np.arange(n), fn, inverse))
    cell_sorted = inverse[order]
    firsts = np.flatnonzero(np.r_[True, np.diff(cell_sorted) != 0])
    idx = np.sort(order[firsts])
    while len(idx) > 1:
        kept = _dedupe_pass(X[idx], fn[idx], tol)
        if len(kept) == len(idx):
            break
        idx = idx[kept]
    return idx


def dedupe(solutions: Sequence[Inscription], tol: float = 1e-4) -> List[Inscription]:
    """Collapse near-duplicate inscriptions on the parameter 4-torus.

    Greedy clustering under the metric ``max_i circle_distance(x_i, y_i)``;
    each cluster keeps its lowest-residual member.  Idempotent.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sols = list(solutions)
    if not sols:
        return []
    X = np.array([s.key() for s in sols])
    fn = np.array([s.residual_norm for s in sols])
    idx = _dedupe_indices(X, fn, tol)
    kept = [sols[i] for i in idx]
    kept.sort(key=Inscription.key)
    return kept


# -- full solve ----------------------------------------------------------


@dataclass(frozen=True)
class SolveDiagnostics:
    """Counts from one multistart run, useful when nothing was found."""

    grid: int
    n_seeds: int
    n_skipped_diagonal: int
    n_converged: int
    n_no_convergence: int
    n_singular: int
    n_degenerate: int
    n_recovery_failed: int
    n_after_dedup: int
    best_residual: float

    def summary(self) -> str:
        return (
            f"grid={self.grid} seeds={self.n_seeds} "
            f"(skipped near diagonal: {self.n_skipped_diagonal}) "
            f"converged={self.n_converged} no-convergence={self.n_no_convergence} "
            f"singular={self.n_singular} degenerate={self.n_degenerate} "
            f"recovery-failed={self.n_recovery_failed} "
            f"deduped={self.n_after_dedup} best-residual={self.best_residual:.3e}"
        )


@dataclass(frozen=True)
class SolveResult:
    """Sorted inscriptions plus run diagnostics; iterable and sized."""

    inscriptions: List[Inscription]
    diagnostics: SolveDiagnostics

    def __iter__(self) -> Iterator[Inscription]:
        return iter(self.inscriptions)

    def __len__(self) -> int:
        return len(self.inscriptions)

    def __getitem__(self, i):
        return self.inscriptions[i]

    @property
    def found(self) -> bool:
        return bool(self.inscriptions)


def solve_all(problem: InscriptionProblem, workers: int = 1) -> SolveResult:
    """Find inscriptions by multistart Newton from a uniform torus grid.

    Seeds within 1/grid of the diagonal are skipped; converged limits are
    dropped when degenerate (|A - C| below the degeneracy threshold) or when
    recovering parameters from their vertices does not reproduce the input
    class within 1e-6.  Survivors are deduplicated and sorted by (a, b, c, d),
    so the output is deterministic and independent of ``workers``.

    An empty result is accompanied by diagnostics; for a validated curve it
    indicates insufficient grid density rather than a true absence.
    """
    opts = problem.options
    seeds, n_skipped = _seed_grid(opts.grid)
    workers = max(1, int(workers))

    if workers == 1 or len(seeds) < 4 * workers:
        parts = [_newton_batch(problem, seeds)]
    else:
        chunks = np.array_split(seeds, workers)
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda ch: _newton_batch(problem, ch), chunks))
    x = np.vstack([p[0] for p in parts])
    fnorm = np.concatenate([p[1] for p in parts])
    status = np.concatenate([p[2] for p in parts])
    iters = np.concatenate([p[3] for p in parts])

    conv = status == _CONVERGED
    pts = problem.curve.eval(x[conv]) if np.any(conv) else np.zeros((0, 4), complex)
    degen = np.abs(pts[:, 0] - pts[:, 2]) < problem.degen_tol_abs
    n_degenerate = int(np.sum(degen)) + int(np.sum(status == _DEGENERATE))

    cx = x[conv][~degen]
    cf = fnorm[conv][~degen]
    ci = iters[conv][~degen]

    idx = _dedupe_indices(cx, cf, opts.dedup_tol) if len(cx) else np.zeros(0, int)
    n_after_dedup = len(idx)

    n_recovery_failed = 0
    kept: list[Inscription] = []
    if len(idx):
        flags = _rank_deficient_flags(problem, cx[idx])
        for j, flag in zip(idx, flags):
            ins = _make_inscription(problem, cx[j], cf[j], ci[j], flag)
            try:
                recovered = params_from_vertices(ins.vertices, tol=1e-6)
            except QuadrilateralError:
                n_recovery_failed += 1
                continue
            if not similarity_class_equal(problem.params, recovered, tol=1e-6):
                n_recovery_failed += 1
                continue
            kept.append(ins)
    kept.sort(key=Inscription.key)

    diag = SolveDiagnostics(
        grid=opts.grid,
        n_seeds=len(seeds),
        n_skipped_diagonal=n_skipped,
        n_converged=int(np.sum(conv)),
        n_no_convergence=int(np.sum(status == _NO_CONV)),
        n_singular=int(np.sum(status == _SINGULAR)),
        n_degenerate=n_degenerate,
        n_recovery_failed=n_recovery_failed,
        n_after_dedup=n_after_dedup,
        best_residual=float(np.min(fnorm)) if len(fnorm) else math.inf,
    )
    return SolveResult(inscriptions=kept, diagnostics=diag)


# -- brute-force oracle ----------------------------------------------------


def oracle_grid_search(problem: InscriptionProblem, g: int) -> List[Inscription]:
    """Residual-norm local minima on the full g^4 grid (diagonal masked).

    Independent of the Newton machinery; intended for tests and diagnostics.
    Returns grid points that are local minima among their 3^4 - 1 torus
    neighbors with value at most 10x the best found, as unconverged
    :class:`Inscription` records sorted by (a, b, c, d).
    """
    if g < 8:
        raise ValueError("oracle grid density must be at least 8")
    axis = np.arange(g) / g
    grid = np.stack(np.meshgrid(axis, axis, axis, axis, indexing="ij"),
                    axis=-1).reshape(-1, 4)
    rn = np.linalg.norm(problem.residual(grid), axis=-1)
    rn[_diagonal_radius(grid) <= 1.0 / g] = np.inf
    V = rn.reshape(g, g, g, g)

    # Plateau tolerance: exact solution sets sit at residual values that are
    # pure roundoff dust, so neighbor comparisons get a small slack.
    slack = 1e-12 * problem.diameter
    is_min = np.ones(V.shape, dtype=bool)
    for da in (-1, 0, 1):
        for db in (-1, 0, 1):
            for dc in (-1, 0, 1):
                for dd in (-1, 0, 1):
                    if (da, db, dc, dd) == (0, 0, 0, 0):
                        continue
                    shifted = np.roll(V, (da, db, dc, dd), axis=(0, 1, 2, 3))
                    is_min &= V <= shifted + slack
    finite = np.isfinite(V)
    best = float(np.min(V[finite]))
    keep = is_min & finite & (V <= 10.0 * best + slack)

    out = []
    for flat in np.flatnonzero(keep.reshape(-1)):
        xx = grid[flat]
        pts = problem.curve.eval(xx)
        out.append(Inscription(
            a=float(xx[0]), b=float(xx[1]), c=float(xx[2]), d=float(xx[3]),
            vertices=QuadVertices(*(complex(p) for p in pts)),
            residual_norm=float(rn[flat]), converged=False,
        ))
    out.sort(key=Inscription.key)
    return out
