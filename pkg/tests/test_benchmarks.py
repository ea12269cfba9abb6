import numpy as np
import pytest

import qloewner as ql
from qloewner.gfrf import GfrfEvaluator
from qloewner.system import kron_symmetry_defect


class TestOperatorsExact:
    def test_linear_intro_entries(self, linear_intro):
        assert np.array_equal(linear_intro.A, np.diag([-1.0, -2.0]))
        assert np.array_equal(linear_intro.B, [1.0, 1.0])
        assert np.array_equal(linear_intro.C, [1.0, 1.0])
        assert np.all(np.asarray(linear_intro.Q) == 0.0)
        assert np.array_equal(linear_intro.x0, [0.5, 0.0])

    def test_linear_intro_dc_gain(self, linear_intro):
        # H1(0) = 1/1 + 1/2
        assert ql.h1(linear_intro, 0.0) == pytest.approx(1.5)

    def test_quad_toy_entries(self, toy):
        assert np.array_equal(toy.A, np.diag([1.0, -2.0]))
        assert np.array_equal(np.asarray(toy.Q),
                              [[-1.0, 0, 0, 0], [0, 0, 0, 0]])
        assert np.array_equal(toy.x0, [0.5, 0.0])

    def test_toy_equilibrium_stable(self, toy):
        x_e = np.array([1.0, 0.0])
        assert np.linalg.norm(ql.equilibrium_residual(toy, x_e)) == 0.0
        sh = ql.shift_to_equilibrium(toy, x_e)
        assert np.all(np.linalg.eigvals(sh.system.A).real < 0)

    def test_lorenz_entries(self):
        lo = ql.make_lorenz(sigma=10.0, rho=28.0, beta=8.0 / 3.0)
        assert lo.A[0, 0] == -10.0 and lo.A[1, 0] == 28.0
        assert np.array_equal(lo.B, [1.0, 0.0, 1.0])
        assert np.array_equal(lo.C, [1.0, 0.0, 1.0])
        Q = np.asarray(lo.Q)
        assert Q[1, 2] == -0.5 and Q[1, 6] == -0.5
        assert Q[2, 1] == 0.5 and Q[2, 3] == 0.5
        assert np.abs(Q).sum() == 2.0

    def test_lorenz_eigenvalues_rho_half(self, lorenz_half):
        eig = np.sort(np.linalg.eigvals(lorenz_half.A).real)
        assert eig == pytest.approx([-10.52, -2.667, -0.4751], abs=5e-3)

    def test_lorenz_equilibria_dc(self, lorenz20):
        dcs = sorted(float(lorenz20.C @ xe)
                     for xe in ql.lorenz_equilibria(rho=20.0))
        assert dcs[0] == pytest.approx(11.8819, abs=1e-4)
        assert dcs[1] == pytest.approx(26.1181, abs=1e-4)


class TestBurgers:
    def test_mass_matrix_spd(self):
        bg = ql.make_burgers(n=33)
        assert np.all(np.linalg.eigvalsh(bg.E) > 0)

    def test_quadratic_symmetric(self):
        bg = ql.make_burgers(n=33)
        assert kron_symmetry_defect(bg.Q) == 0.0

    def test_dc_gain_analytic(self):
        # steady solution is linear in x: gain = 1/sigma1 + 1/(2 nu)
        for nu, s1 in ((0.5, 0.1), (1.0, 0.2)):
            bg = ql.make_burgers(nu=nu, sigma1=s1, n=65)
            ev = GfrfEvaluator(bg)
            assert ev.h1(1e-12).real == pytest.approx(1.0 / s1 + 0.5 / nu,
                                                      rel=1e-9)

    def test_output_is_trapezoid_quadrature(self):
        bg = ql.make_burgers(n=17)
        h = 1.0 / 16
        w = np.full(17, h)
        w[[0, -1]] = h / 2
        assert np.allclose(bg.C, w)

    def test_second_order_grid_convergence(self):
        vals = []
        for n in (65, 129, 257):
            ev = GfrfEvaluator(ql.make_burgers(n=n))
            vals.append(ev.h1(2j * np.pi))
        ratio = abs(vals[0] - vals[1]) / abs(vals[1] - vals[2])
        assert ratio == pytest.approx(4.0, abs=0.3)

    def test_zero_input_zero_output(self):
        bg = ql.make_burgers(n=33)
        tr = ql.simulate(bg, None, (0.0, 0.1), dt=1e-5)
        assert np.all(tr.y == 0.0)

    def test_loewner_order_six(self):
        bg = ql.make_burgers(n=129)
        grids = ql.paper_grids("burgers")
        ev = GfrfEvaluator(bg)
        samples = [(s, ev.h1(s)) for s in grids["h1"]]
        pen = ql.realify(ql.build_pencil(*ql.partition(
            ql.ensure_conjugate_closed(samples))))
        r, sv = ql.reveal_order(pen, tol=5e-11)
        assert r == 6
        assert sv[6] / sv[0] < 1e-8

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            ql.make_burgers(n=4)


class TestGrids:
    def test_lorenz_grid_sizes(self):
        g = ql.paper_grids("lorenz")
        assert len(g["h1"]) == 100
        assert len(g["h2"]) == 100
        assert len(g["h3"]) == 1000

    def test_burgers_grid_sizes(self):
        g = ql.paper_grids("burgers")
        assert len(g["h1"]) == 100
        assert len(g["h2"]) == 400
        assert len(g["h3"]) == 216

    def test_points_on_positive_imaginary_axis(self):
        for name in ("lorenz", "burgers"):
            g = ql.paper_grids(name)
            assert np.all(np.real(g["h1"]) == 0)
            assert np.all(np.imag(g["h1"]) > 0)
            for pt in g["h3"][:10]:
                assert all(s.real == 0 and s.imag > 0 for s in pt)

    def test_unknown_name(self):
        with pytest.raises(ValueError):
            ql.paper_grids("pendulum")
        with pytest.raises(ValueError):
            ql.BenchmarkSpec("pendulum")

    def test_spec_builds(self):
        spec = ql.BenchmarkSpec("lorenz", {"rho": 0.5})
        sys0 = spec.build()
        assert sys0.A[1, 0] == 0.5
