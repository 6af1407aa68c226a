import math

import numpy as np
import pytest

from quadpeg.curve import CurveValidationError, FourierCurve, circle, ellipse, random_curve
from quadpeg.quadrilateral import CyclicQuadParams, params_from_vertices, similarity_class_equal
from quadpeg.solver import (
    Inscription,
    InscriptionProblem,
    NewtonFailure,
    SolverOptions,
    dedupe,
    newton_refine,
    oracle_grid_search,
    solve_all,
)

SQUARE = CyclicQuadParams(0.5, 0.5, math.pi / 2)


@pytest.fixture(scope="module")
def circle_problem():
    return InscriptionProblem(circle(), SQUARE)


@pytest.fixture(scope="module")
def ellipse_problem():
    return InscriptionProblem(ellipse(2, 1), SQUARE)


@pytest.fixture(scope="module")
def circle_solutions(circle_problem):
    return solve_all(circle_problem)


@pytest.fixture(scope="module")
def ellipse_solutions(ellipse_problem):
    return solve_all(ellipse_problem)


class TestResidual:
    def test_square_on_circle(self, circle_problem):
        r = circle_problem.residual([0.0, 0.25, 0.5, 0.75])
        assert np.max(np.abs(r)) < 1e-15

    def test_diagonal_is_zero(self, circle_problem):
        r = circle_problem.residual([0.37, 0.37, 0.37, 0.37])
        assert np.max(np.abs(r)) == 0.0

    def test_axis_points_of_ellipse(self, ellipse_problem):
        # vertices (2, i, -2, -i) under square parameters:
        # r1 = 0.5(A + C) - 0.5(B + D) = 0, r2 = 0.5i(A - C) - 0.5(B - D) = i
        r = ellipse_problem.residual([0.0, 0.25, 0.5, 0.75])
        assert np.allclose(r, [0.0, 0.0, 0.0, 1.0], atol=1e-14)

    def test_batched_shape(self, circle_problem):
        x = np.random.default_rng(0).uniform(0, 1, (10, 4))
        assert circle_problem.residual(x).shape == (10, 4)


class TestJacobian:
    def test_matches_finite_differences(self):
        h = 1e-5
        rng = np.random.default_rng(1)
        for seed in (0, 1):
            curve = random_curve(seed)
            prob = InscriptionProblem(
                curve, CyclicQuadParams(0.23, 0.41, 1.7))
            for _ in range(20):
                x = rng.uniform(0, 1, 4)
                J = prob.jacobian(x)
                Jfd = np.empty((4, 4))
                for j in range(4):
                    e = np.zeros(4)
                    e[j] = h
                    Jfd[:, j] = (prob.residual(x + e) - prob.residual(x - e)) / (2 * h)
                assert np.max(np.abs(J - Jfd)) < 1e-6

    def test_rotation_direction_in_kernel_on_circle(self, circle_problem):
        # on the circle, sliding all four parameters together stays a solution
        x = np.array([0.0, 0.25, 0.5, 0.75])
        J = circle_problem.jacobian(x)
        assert np.linalg.norm(J @ np.ones(4)) < 1e-12

    def test_scales_linearly_with_curve(self):
        q = CyclicQuadParams(0.3, 0.4, 1.2)
        base = random_curve(3)
        doubled = FourierCurve(2.0 * base.coefficients)
        p1 = InscriptionProblem(base, q)
        p2 = InscriptionProblem(doubled, q)
        x = np.array([0.1, 0.4, 0.6, 0.9])
        assert np.allclose(p2.jacobian(x), 2.0 * p1.jacobian(x), rtol=1e-13)

    def test_batched_shape(self, circle_problem):
        x = np.random.default_rng(0).uniform(0, 1, (7, 4))
        assert circle_problem.jacobian(x).shape == (7, 4, 4)


class TestNewtonRefine:
    def test_circle_square_family(self, circle_problem):
        res = newton_refine(circle_problem, [0.01, 0.26, 0.49, 0.74])
        assert isinstance(res, Inscription)
        assert res.converged
        assert res.residual_norm < 1e-11 * circle_problem.diameter
        # limit lies on the rotational family (h, h+1/4, h+1/2, h+3/4)
        x = res.x
        gaps = (np.roll(x, -1) - x) % 1.0
        assert np.allclose(gaps[:3], 0.25, atol=1e-9)
        assert res.rank_deficient  # family direction kills a singular value

    def test_diagonal_start_is_degenerate(self, circle_problem):
        res = newton_refine(circle_problem, [0.3, 0.3, 0.3, 0.3])
        assert isinstance(res, NewtonFailure)
        assert res.kind == "degenerate"
        assert res.residual_norm == 0.0

    def test_ellipse_square_vertices(self, ellipse_problem):
        res = newton_refine(ellipse_problem, [0.18, 0.32, 0.68, 0.82])
        assert isinstance(res, Inscription)
        k = 2 / math.sqrt(5)
        target = np.array([k + 1j * k, -k + 1j * k, -k - 1j * k, k - 1j * k])
        got = np.array(res.vertices.as_tuple())
        err = min(np.max(np.abs(np.roll(got, -r) - target)) for r in range(4))
        assert err < 1e-10

    def test_rejects_bad_start(self, circle_problem):
        with pytest.raises(ValueError):
            newton_refine(circle_problem, [0.1, 0.2, 0.3])
        with pytest.raises(ValueError):
            newton_refine(circle_problem, [np.nan, 0.2, 0.3, 0.4])


class TestSolveAll:
    def test_circle_finds_family(self, circle_solutions):
        assert len(circle_solutions) >= 1
        for ins in circle_solutions:
            assert ins.converged
            assert ins.rank_deficient

    def test_results_are_sound(self, circle_problem, circle_solutions):
        tol = 1e-11 * circle_problem.diameter
        for ins in circle_solutions:
            assert ins.residual_norm < tol
            assert abs(ins.vertices.A - ins.vertices.C) > circle_problem.degen_tol_abs
            rec = params_from_vertices(ins.vertices, tol=1e-6)
            assert similarity_class_equal(circle_problem.params, rec, tol=1e-6)

    def test_results_sorted_and_separated(self, circle_solutions):
        keys = [ins.key() for ins in circle_solutions]
        assert keys == sorted(keys)
        X = np.array(keys)
        tol = 1e-4
        # spot check a sample of pairs for separation after dedup
        rng = np.random.default_rng(0)
        for _ in range(200):
            i, j = rng.integers(0, len(X), 2)
            if i == j:
                continue
            d = np.abs(X[i] - X[j]) % 1.0
            d = np.minimum(d, 1 - d)
            assert np.max(d) > tol

    def test_circle_family_rotation_property(self, circle_problem, circle_solutions):
        # re-seeding a found solution shifted along the diagonal reconverges
        for ins in circle_solutions[:: max(1, len(circle_solutions) // 10)]:
            for h in (0.1, 0.2, 0.3):
                res = newton_refine(circle_problem, (ins.x + h) % 1.0)
                assert isinstance(res, Inscription)
                assert res.residual_norm < 1e-11 * circle_problem.diameter

    def test_ellipse_square_found(self, ellipse_solutions):
        k = 2 / math.sqrt(5)
        target = np.array([k + 1j * k, -k + 1j * k, -k - 1j * k, k - 1j * k])
        best = math.inf
        for ins in ellipse_solutions:
            got = np.array(ins.vertices.as_tuple())
            for r in range(4):
                best = min(best, np.max(np.abs(np.roll(got, -r) - target)))
        assert best < 1e-8

    def test_ellipse_label_rotations_not_quotiented(self, ellipse_solutions):
        assert len(ellipse_solutions) == 4

    def test_random_instances_find_inscriptions(self):
        rng = np.random.default_rng(99)
        for seed in (31, 32):
            curve = random_curve(seed)
            q = CyclicQuadParams(rng.uniform(0.05, 0.5), rng.uniform(0.05, 0.5),
                                 rng.uniform(0.1, math.pi - 0.1))
            result = solve_all(InscriptionProblem(curve, q))
            assert result.found
            assert result.diagnostics.n_seeds > 0

    def test_workers_do_not_change_output(self):
        curve = random_curve(31)
        q = CyclicQuadParams(0.3, 0.42, 1.9)
        prob = InscriptionProblem(curve, q)
        r1 = solve_all(prob, workers=1)
        r2 = solve_all(prob, workers=3)
        assert [i.key() for i in r1] == [i.key() for i in r2]
        assert [i.residual_norm for i in r1] == [i.residual_norm for i in r2]

    def test_similarity_equivariance(self):
        # alpha * gamma + beta has the same inscription parameters
        q = CyclicQuadParams(0.28, 0.44, 2.1)
        base = random_curve(8, K=5)
        alpha, beta = 0.7 - 1.1j, 2.0 + 0.5j
        coeffs = alpha * base.coefficients.copy()
        coeffs[base.K] += beta
        moved = FourierCurve(coeffs)
        r1 = solve_all(InscriptionProblem(base, q))
        r2 = solve_all(InscriptionProblem(moved, q))
        assert r1.found and len(r1) == len(r2)
        X1 = np.array([i.key() for i in r1])
        X2 = np.array([i.key() for i in r2])
        d = np.abs(X1[:, None, :] - X2[None, :, :]) % 1.0
        d = np.minimum(d, 1 - d).max(axis=-1)
        assert np.max(np.min(d, axis=1)) < 1e-8
        assert np.max(np.min(d, axis=0)) < 1e-8

    def test_none_found_diagnostics(self):
        curve = random_curve(31)
        q = CyclicQuadParams(0.3, 0.42, 1.9)
        prob = InscriptionProblem(curve, q, SolverOptions(max_iter=1))
        result = solve_all(prob)
        assert not result.found
        assert result.diagnostics.n_no_convergence > 0
        assert "grid=12" in result.diagnostics.summary()

    def test_invalid_curve_rejected(self):
        fig8 = FourierCurve([1, 0, 0, 1, 0])
        with pytest.raises(CurveValidationError, match="embeddedness"):
            InscriptionProblem(fig8, SQUARE)

    def test_options_validation(self):
        with pytest.raises(ValueError):
            SolverOptions(grid=3)
        with pytest.raises(ValueError):
            SolverOptions(newton_tol=0.0)
        with pytest.raises(ValueError):
            SolverOptions(max_iter=0)


class TestDedupe:
    def _ins(self, x, rn=1e-13):
        pts = circle().eval(np.asarray(x))
        from quadpeg.quadrilateral import QuadVertices
        return Inscription(a=x[0], b=x[1], c=x[2], d=x[3],
                           vertices=QuadVertices(*(complex(p) for p in pts)),
                           residual_norm=rn, converged=True)

    def test_copies_collapse(self):
        a = self._ins([0.0, 0.25, 0.5, 0.75], rn=1e-13)
        b = self._ins([0.0, 0.25, 0.5, 0.75], rn=1e-12)
        out = dedupe([a, b], tol=1e-4)
        assert len(out) == 1
        assert out[0].residual_norm == 1e-13  # lowest residual survives

    def test_label_rotations_survive(self):
        a = self._ins([0.0, 0.25, 0.5, 0.75])
        b = self._ins([0.5, 0.75, 0.0, 0.25])
        assert len(dedupe([a, b], tol=1e-4)) == 2

    def test_empty(self):
        assert dedupe([], tol=1e-4) == []

    def test_idempotent(self):
        rng = np.random.default_rng(2)
        sols = [self._ins(list(rng.uniform(0, 1, 4)), rn=rng.uniform(0, 1e-12))
                for _ in range(50)]
        # add near-duplicates
        sols += [self._ins(list((s.x + 3e-5) % 1.0), rn=2e-12) for s in sols[:20]]
        once = dedupe(sols, tol=1e-4)
        twice = dedupe(once, tol=1e-4)
        assert [i.key() for i in once] == [i.key() for i in twice]

    def test_wraparound_duplicates_collapse(self):
        a = self._ins([0.999999, 0.25, 0.5, 0.75])
        b = self._ins([0.000001, 0.250002, 0.500002, 0.750002])
        assert len(dedupe([a, b], tol=1e-4)) == 1


class TestOracleGridSearch:
    def test_circle_family_on_grid(self, circle_problem):
        minima = oracle_grid_search(circle_problem, g=16)
        assert minima
        # exact zeros along (h, h+1/4, h+1/2, h+3/4) for h on the grid
        X = np.array([m.key() for m in minima])
        family = np.array([[h / 16, h / 16 + 0.25, h / 16 + 0.5, h / 16 + 0.75]
                           for h in range(16)]) % 1.0
        for fam in family:
            d = np.abs(X - fam) % 1.0
            d = np.minimum(d, 1 - d).max(axis=-1)
            assert np.min(d) < 1e-12

    def test_solver_agrees_with_oracle(self, ellipse_problem, ellipse_solutions):
        g = 24
        minima = oracle_grid_search(ellipse_problem, g=g)
        M = np.array([m.key() for m in minima])
        for ins in ellipse_solutions:
            d = np.abs(M - ins.x) % 1.0
            d = np.minimum(d, 1 - d).max(axis=-1)
            assert np.min(d) <= 2.0 / g

    def test_minimum_density(self, circle_problem):
        with pytest.raises(ValueError):
            oracle_grid_search(circle_problem, g=7)

    def test_g8_runs(self):
        prob = InscriptionProblem(random_curve(2), CyclicQuadParams(0.3, 0.3, 1.0))
        minima = oracle_grid_search(prob, g=8)
        assert isinstance(minima, list)
