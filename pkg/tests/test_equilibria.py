import numpy as np
import pytest

import qloewner as ql
from qloewner.gfrf import GfrfEvaluator

from conftest import kernel_grids, random_stable_quadratic


class TestParameterize:
    def test_hand_case(self):
        fam = ql.parameterize_equilibrium([1.0, 1.0], 1.0)
        assert np.allclose(fam.p0, [0.5, 0.5])
        assert abs(abs(fam.basis[:, 0] @ np.array([1, -1]) / np.sqrt(2)) - 1) < 1e-12

    def test_zero_alpha(self):
        fam = ql.parameterize_equilibrium([2.0, 0.0, 1.0], 0.0)
        assert np.all(fam.p0 == 0.0)
        assert fam.basis.shape == (3, 2)

    def test_constraint_holds_for_random_coefficients(self):
        rng = np.random.default_rng(0)
        Chat = rng.standard_normal(4)
        fam = ql.parameterize_equilibrium(Chat, 2.5)
        for _ in range(100):
            x = fam.point(rng.standard_normal(3))
            assert Chat @ x == pytest.approx(2.5, abs=1e-12)

    def test_zero_c_with_nonzero_alpha(self):
        with pytest.raises(ValueError):
            ql.parameterize_equilibrium(np.zeros(2), 1.0)


class TestSolveEquilibrium:
    def test_toy_identified_coordinates(self, toy):
        # run on the true shifted system: same contract as the identified one
        sh = ql.shift_to_equilibrium(toy, [1.0, 0.0]).system
        sol = ql.recover_equilibrium(
            ql.QuadraticSystem(sh.A, sh.Q, sh.B, sh.C), 1.0)
        assert sol.dc == pytest.approx(1.0, abs=1e-12)
        assert np.allclose(np.sort(np.linalg.eigvals(sol.A_global).real),
                           [-2.0, 1.0], atol=1e-9)
        assert sol.residual < 1e-9

    def test_lorenz_global_eigenvalues(self, lorenz20):
        expected = np.sort(np.linalg.eigvals(lorenz20.A).real)
        for x_e in ql.lorenz_equilibria(rho=20.0):
            sh = ql.shift_to_equilibrium(lorenz20, x_e)
            local = ql.QuadraticSystem(sh.system.A, sh.system.Q,
                                       sh.system.B, sh.system.C)
            sol = ql.recover_equilibrium(local, sh.dc)
            got = np.sort(np.linalg.eigvals(sol.A_global).real)
            assert np.abs(got - expected).max() < 1e-8
            assert abs(sol.dc - sh.dc) < 1e-9

    def test_origin_case(self, lorenz_half):
        sol = ql.recover_equilibrium(lorenz_half, 0.0)
        assert np.abs(sol.x_e).max() < 1e-9
        assert np.allclose(sol.A_global, lorenz_half.A, atol=1e-9)

    def test_basis_invariance(self, lorenz20):
        x_e = ql.lorenz_equilibria(rho=20.0)[1]
        sh = ql.shift_to_equilibrium(lorenz20, x_e)
        fam = ql.parameterize_equilibrium(lorenz20.C, sh.dc)
        sol_a = ql.solve_equilibrium(sh.system.A, sh.system.Q, fam)
        # re-basis the kernel with a random rotation
        rng = np.random.default_rng(2)
        R, _ = np.linalg.qr(rng.standard_normal((2, 2)))
        fam_b = ql.AffineFamily(fam.p0, fam.basis @ R, fam.Chat, fam.alpha)
        sol_b = ql.solve_equilibrium(sh.system.A, sh.system.Q, fam_b)
        assert np.abs(sol_a.x_e - sol_b.x_e).max() < 1e-9

    def test_global_recovery_closure(self):
        # shift a random system to one of its equilibria, then recover it
        rng = np.random.default_rng(4)
        for _ in range(5):
            sys0 = random_stable_quadratic(rng, 3, q_scale=0.3)
            # find a nonzero equilibrium of x -> A x + Q(x kron x) by Newton
            x = rng.standard_normal(3)
            ok = False
            for _ in range(60):
                F = ql.equilibrium_residual(sys0, x)
                J = sys0.A + 2 * ql.quad_matrix(sys0.Q, x)
                try:
                    x = x - np.linalg.solve(J, F)
                except np.linalg.LinAlgError:
                    break
                if np.linalg.norm(ql.equilibrium_residual(sys0, x)) < 1e-12:
                    ok = np.linalg.norm(x) > 1e-3 and abs(sys0.C @ x) > 1e-3
                    break
            if not ok:
                continue
            sh = ql.shift_to_equilibrium(sys0, x)
            local = ql.QuadraticSystem(sh.system.A, sh.system.Q,
                                       sh.system.B, sh.system.C)
            sol = ql.recover_equilibrium(local, sh.dc)
            e0 = np.sort(np.linalg.eigvals(sys0.A).real)
            e1 = np.sort(np.linalg.eigvals(sol.A_global).real)
            assert np.abs(e0 - e1).max() < 1e-8


class TestInferX0:
    def _euler_transient(self, sys0, x0, dt, count):
        x = np.asarray(x0, dtype=float)
        out = []
        for k in range(1, count + 1):
            x = x + dt * (sys0.A @ x + ql.apply_quadratic(sys0.Q, x))
            out.append((k * dt, float(sys0.C @ x)))
        return out

    def test_zero_transient_gives_zero(self, toy):
        transient = [(k * 1e-3, 0.0) for k in range(1, 5)]
        x0 = ql.infer_x0_quadratic(toy, transient, y0=0.0, dt=1e-3)
        assert np.abs(x0).max() < 1e-9

    def test_toy_kappa_parameterization(self, toy):
        transient = self._euler_transient(toy, [0.5, 0.0], 1e-4, 6)
        x0 = ql.infer_x0_quadratic(toy, transient, y0=0.5, dt=1e-4)
        assert np.allclose(x0, [0.5, 0.0], atol=1e-8)

    def test_random_r2_heldout_euler(self):
        rng = np.random.default_rng(8)
        sys0 = random_stable_quadratic(rng, 2, q_scale=0.2)
        x_true = np.array([0.4, -0.3])
        dt = 1e-3
        data = self._euler_transient(sys0, x_true, dt, 12)
        x0 = ql.infer_x0_quadratic(sys0, data[:4], y0=float(sys0.C @ x_true),
                                   dt=dt)
        # held-out autonomous output matches
        x = x0.copy()
        for k, (tk, yk) in enumerate(data, start=1):
            x = x + dt * (sys0.A @ x + ql.apply_quadratic(sys0.Q, x))
            assert abs(float(sys0.C @ x) - yk) < 1e-8

    def test_off_grid_times_rejected(self, toy):
        with pytest.raises(ValueError, match="grid"):
            ql.infer_x0_quadratic(toy, [(0.00037, 0.1)], y0=0.5, dt=1e-3)
