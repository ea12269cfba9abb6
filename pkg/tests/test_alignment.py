import numpy as np
import pytest

import qloewner as ql
from qloewner.alignment import frechet_derivative, qme_value

from conftest import random_stable_quadratic


class TestObservability:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        sys1 = random_stable_quadratic(rng, 3, q_scale=0.2)
        R = rng.standard_normal((3, 3)) + 2 * np.eye(3)
        sys2 = ql.apply_transform(sys1, R)
        Psi = ql.observability_transform(sys1, sys2)
        assert np.abs(Psi - R).max() < 1e-9 * max(1, np.abs(R).max())

    def test_identity(self, lorenz20):
        Psi = ql.observability_transform(lorenz20, lorenz20)
        assert np.allclose(Psi, np.eye(3), atol=1e-10)

    def test_aligned_operators_match(self, lorenz20):
        rng = np.random.default_rng(1)
        R = rng.standard_normal((3, 3)) + 2 * np.eye(3)
        sys2 = ql.apply_transform(lorenz20, R)
        Psi = ql.observability_transform(sys2, lorenz20)
        back = ql.apply_transform(sys2, Psi)
        assert np.abs(back.A - lorenz20.A).max() < 1e-8
        assert np.abs(back.Q - lorenz20.Q).max() < 1e-8

    def test_unobservable_rejected(self):
        A = np.diag([-1.0, -2.0])
        sys1 = ql.QuadraticSystem(A, np.zeros((2, 4)), [1, 1], [1, 0])
        sys2 = ql.QuadraticSystem(A, np.zeros((2, 4)), [1, 1], [0, 0])
        with pytest.raises(np.linalg.LinAlgError):
            ql.observability_transform(sys1, sys2)


class TestFrechet:
    def test_derivative_matches_finite_differences(self):
        rng = np.random.default_rng(2)
        n = 3
        for _ in range(10):
            Q = ql.symmetrize_quadratic(rng.standard_normal((n, n * n)))
            U = rng.standard_normal((n, n * n))
            X = rng.standard_normal((n, n))
            N = rng.standard_normal((n, n))
            h = 1e-7
            fd = (qme_value(X + h * N, Q, U) - qme_value(X, Q, U)) / h
            an = frechet_derivative(X, N, Q, U)
            assert np.abs(fd - an).max() <= 1e-5 * max(1.0, np.abs(an).max())

    def test_fixed_point(self):
        rng = np.random.default_rng(3)
        n = 2
        sys1 = random_stable_quadratic(rng, n, q_scale=0.4)
        R = rng.standard_normal((n, n)) + 2 * np.eye(n)
        sys2 = ql.apply_transform(sys1, R)
        Q1 = np.asarray(sys1.Q)
        Q2 = np.asarray(sys2.Q)
        Xstar = np.linalg.inv(R)
        constraints = (sys1.B, sys2.B, sys1.C, sys2.C)
        assert np.abs(qme_value(Xstar, Q2, Q1)).max() < 1e-10
        Xnext = ql.frechet_step(Xstar, Q2, Q1, constraints)
        assert np.abs(Xnext - Xstar).max() < 1e-10

    def test_step_matches_brute_force_vec_linearization(self):
        # rebuild the stacked linear system by brute-force vectorization of
        # the matrix equation at n = 2 and compare the computed step
        rng = np.random.default_rng(4)
        n = 2
        Q = ql.symmetrize_quadratic(rng.standard_normal((n, n * n)))
        U = rng.standard_normal((n, n * n))
        Xp = rng.standard_normal((n, n))
        X = ql.frechet_step(Xp, Q, U, None)
        # Jacobian by finite differences on every unit direction
        h = 1e-8
        J = np.empty((n ** 3, n * n))
        F0 = qme_value(Xp, Q, U).reshape(-1, order="F")
        for j in range(n * n):
            N = np.zeros((n, n))
            N[j % n, j // n] = 1.0
            F1 = qme_value(Xp + h * N, Q, U).reshape(-1, order="F")
            J[:, j] = (F1 - F0) / h
        b = J @ Xp.reshape(-1, order="F") - F0
        xvec, *_ = np.linalg.lstsq(J, b, rcond=None)
        assert np.abs(X.reshape(-1, order="F") - xvec).max() < 1e-6

    def test_degenerate_zero_q(self):
        rng = np.random.default_rng(5)
        n = 2
        U = rng.standard_normal((n, n * n))
        B1, B2 = rng.standard_normal(n), rng.standard_normal(n)
        C1, C2 = rng.standard_normal(n), rng.standard_normal(n)
        X = ql.frechet_step(rng.standard_normal((n, n)), np.zeros((n, n * n)),
                            U, (B1, B2, C1, C2))
        # with Q = 0 the problem is linear: the result solves the
        # constrained linear system directly, independent of the seed
        X2 = ql.frechet_step(rng.standard_normal((n, n)), np.zeros((n, n * n)),
                             U, (B1, B2, C1, C2))
        assert np.abs(X - X2).max() < 1e-8


class TestAlignQbc:
    def test_round_trip_random_pair(self):
        rng = np.random.default_rng(6)
        sys1 = random_stable_quadratic(rng, 3, q_scale=0.4)
        R = rng.standard_normal((3, 3)) + 2 * np.eye(3)
        sys2 = ql.apply_transform(sys1, R)
        t1 = (sys1.Q, sys1.B, sys1.C)
        t2 = (sys2.Q, sys2.B, sys2.C)
        result = ql.align_qbc_newton(t1, t2, rng=0)
        assert result.residual <= 1e-8
        assert ql.triplet_residual(t1, t2, result.T) < 1e-8
        assert np.abs(result.T @ result.T_inv - np.eye(3)).max() < 1e-10

    def test_identical_triplets_fixed_point(self, lorenz20):
        t = (lorenz20.Q, lorenz20.B, lorenz20.C)
        result = ql.align_qbc_newton(t, t, T0=np.eye(3))
        assert result.iterations <= 1
        assert np.abs(result.T - np.eye(3)).max() < 1e-9

    def test_seed_independent_alignment(self):
        rng = np.random.default_rng(7)
        sys1 = random_stable_quadratic(rng, 2, q_scale=0.5)
        R = rng.standard_normal((2, 2)) + 2 * np.eye(2)
        sys2 = ql.apply_transform(sys1, R)
        t1 = (sys1.Q, sys1.B, sys1.C)
        t2 = (sys2.Q, sys2.B, sys2.C)
        residuals = []
        for seed in range(3):
            res = ql.align_qbc_newton(t1, t2, rng=seed)
            residuals.append(ql.triplet_residual(t1, t2, res.T))
        assert max(residuals) < 1e-7

    def test_lorenz_two_equilibria(self, lorenz20):
        # the two local models share (Q, B, C) up to coordinates
        rng = np.random.default_rng(8)
        R = rng.standard_normal((3, 3)) + 2 * np.eye(3)
        other = ql.apply_transform(lorenz20, R)
        t1 = (lorenz20.Q, lorenz20.B, lorenz20.C)
        t2 = (other.Q, other.B, other.C)
        result = ql.align_qbc_newton(t1, t2, rng=1)
        assert ql.triplet_residual(t1, t2, result.T) < 1e-6
