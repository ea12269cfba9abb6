import numpy as np
import pytest

import qloewner as ql
from qloewner.gfrf import GfrfEvaluator
from qloewner.loewner import ConjugateClosureError


def rational_samples(poles, residues, points):
    """Samples of g(s) = sum residues / (s - poles)."""
    return [(s, sum(r / (s - p) for p, r in zip(poles, residues)))
            for s in points]


class TestPartition:
    def test_block_split_six_points(self):
        pts = [(2j * np.pi * 5 * i, complex(i)) for i in range(1, 7)]
        left, right = ql.partition(pts, mode="block")
        got_l = sorted(round(s.imag / (2 * np.pi)) for s, _ in left)
        got_r = sorted(round(s.imag / (2 * np.pi)) for s, _ in right)
        assert got_l == [5, 10, 15] and got_r == [20, 25, 30]

    def test_two_points(self):
        left, right = ql.partition([(1j, 1.0), (2j, 2.0)])
        assert len(left) == 1 and len(right) == 1

    def test_interleaved_disjoint_halves(self):
        rng = np.random.default_rng(0)
        pts = [(complex(0, w), complex(w)) for w in rng.uniform(1, 50, 8)]
        left, right = ql.partition(pts)
        assert len(left) == 4 and len(right) == 4
        assert not set(s for s, _ in left) & set(s for s, _ in right)

    def test_conjugate_pairs_same_side(self):
        pts = []
        for w in (1.0, 2.0, 3.0, 4.0):
            pts.append((1j * w, complex(w)))
            pts.append((-1j * w, complex(w)))
        left, right = ql.partition(pts)
        for side in (left, right):
            freqs = sorted(s.imag for s, _ in side)
            assert freqs == sorted(-f for f in freqs)

    def test_duplicates_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            ql.partition([(1j, 1.0), (1j, 2.0)])


class TestBuildPencil:
    def test_single_pair_hand_arithmetic(self):
        pen = ql.build_pencil([(1.0, 2.0)], [(3.0, 4.0)])
        assert pen.L[0, 0] == pytest.approx(1.0)    # (2-4)/(1-3)
        assert pen.Ls[0, 0] == pytest.approx(5.0)   # (2-12)/(1-3)

    def test_constant_function_rank_zero(self):
        pts = [(complex(0, w), 3.0 + 0j) for w in range(1, 9)]
        pen = ql.build_pencil(*ql.partition(pts))
        assert np.abs(pen.L).max() == 0.0

    def test_first_order_rational_rank_one(self):
        pts = [1j * w for w in (1, 2, 3, 4, 5, 6, 7, 8)]
        pen = ql.build_pencil(*ql.partition(rational_samples(
            [-1.0], [1.0], pts)))
        sv = np.linalg.svd(pen.L, compute_uv=False)
        assert sv[1] / sv[0] < 1e-14

    def test_collision_rejected(self):
        with pytest.raises(ValueError, match="disjoint"):
            ql.build_pencil([(1j, 1.0)], [(1j, 2.0)])


class TestRankTheorem:
    @pytest.mark.parametrize("degree", [1, 2, 3, 5, 8])
    def test_rank_matches_mcmillan_degree(self, degree):
        # well-separated poles and bounded-away residues keep every mode
        # numerically visible, so the exact rank shows as a clean gap
        rng = np.random.default_rng(degree)
        poles = (-np.logspace(-0.5, 0.6, degree)
                 + 1j * (np.linspace(-3, 3, degree)
                         + 0.1 * rng.standard_normal(degree)))
        residues = ((0.5 + rng.uniform(0, 1.5, degree))
                    * np.exp(2j * np.pi * rng.uniform(0, 1, degree)))
        band = np.logspace(-1, 1.5, degree + 4)
        pts = 1j * np.concatenate([-band, band])
        pen = ql.build_pencil(*ql.partition(rational_samples(
            poles, residues, pts)))
        sv = np.linalg.svd(pen.L, compute_uv=False)
        logs = np.log10(sv / sv[0] + 1e-300)
        rank = int(np.argmax(logs[:-1] - logs[1:]) + 1)
        assert rank == degree
        assert sv[degree] / sv[0] < 1e-12


class TestRealify:
    def test_real_points_unchanged(self):
        pts = [(float(x), 1.0 / (x + 3.0)) for x in (1.0, 2.0, 4.0, 8.0)]
        pen = ql.build_pencil(*ql.partition(pts))
        out = ql.realify(pen)
        assert np.allclose(out.L, pen.L.real)
        assert np.allclose(out.V, np.asarray(pen.V).real)

    def test_imaginary_residue_small(self, linear_intro):
        ev = GfrfEvaluator(linear_intro)
        rng = np.random.default_rng(1)
        pts = 1j * 2 * np.pi * rng.uniform(0.5, 30.0, 5)
        samples = ql.ensure_conjugate_closed([(s, ev.h1(s)) for s in pts])
        pen = ql.build_pencil(*ql.partition(samples))
        out = ql.realify(pen)
        assert out.is_real
        # transfer preserved at all sample points
        model_c = ql.realize(pen, 2)
        model_r = ql.realize(out, 2)
        for s, v in samples:
            assert abs(model_r.transfer(s) - v) <= 1e-12 * abs(v)
            assert abs(model_c.transfer(s) - v) <= 1e-12 * abs(v)

    def test_not_closed_raises(self):
        with pytest.raises(ConjugateClosureError):
            ql.realify(ql.build_pencil([(1j, 1.0 + 1j)], [(2j, 2.0)]))


class TestRealize:
    def test_linear_intro_order_and_eigs(self, linear_intro):
        ev = GfrfEvaluator(linear_intro)
        pts = [2j * np.pi * 5 * i for i in range(1, 7)]
        samples = ql.ensure_conjugate_closed([(s, ev.h1(s)) for s in pts])
        pen = ql.realify(ql.build_pencil(*ql.partition(samples)))
        r, sv = ql.reveal_order(pen)
        assert r == 2
        assert sv[2] / sv[0] < 1e-12
        model = ql.realize(pen, 2)
        assert np.allclose(np.sort(model.poles().real), [-2.0, -1.0],
                           atol=1e-10)
        assert ql.interpolation_error(model, pen) < 1e-10

    def test_full_order_exact_interpolation(self, linear_intro):
        ev = GfrfEvaluator(linear_intro)
        pts = [1j * w for w in (1.0, 3.0, 9.0, 27.0)]
        pen = ql.build_pencil(*ql.partition([(s, ev.h1(s)) for s in pts]))
        model = ql.realize(pen, 2)
        assert ql.interpolation_error(model, pen) < 1e-10

    def test_random_rational_recovery(self):
        rng = np.random.default_rng(4)
        poles = np.array([-1.0, -2.5, -0.5 + 2j, -0.5 - 2j])
        residues = np.array([1.0, -0.7, 0.3 + 0.1j, 0.3 - 0.1j])
        pts = 1j * np.linspace(0.3, 25.0, 16)
        samples = ql.ensure_conjugate_closed(
            rational_samples(poles, residues, pts))
        pen = ql.realify(ql.build_pencil(*ql.partition(samples)))
        model = ql.realize(pen, 4)
        for w in rng.uniform(0.1, 30.0, 100):
            ref = sum(r / (1j * w - p) for p, r in zip(poles, residues))
            assert abs(model.transfer(1j * w) - ref) < 1e-8

    def test_eigenvalue_recovery_random_system(self):
        rng = np.random.default_rng(9)
        evals = -np.sort(rng.uniform(0.3, 6.0, 5))
        residues = 0.5 + rng.uniform(0.0, 1.5, 5)
        pts = 1j * np.linspace(0.2, 30.0, 14)
        pen = ql.realify(ql.build_pencil(*ql.partition(
            ql.ensure_conjugate_closed(rational_samples(evals, residues, pts)))))
        model = ql.realize(pen, 5)
        assert np.allclose(np.sort(model.poles().real), np.sort(evals),
                           atol=1e-8)


class TestInferX0:
    def test_zero_transient(self, linear_intro):
        ev = GfrfEvaluator(linear_intro)
        pts = [2j * np.pi * 5 * i for i in range(1, 7)]
        pen = ql.realify(ql.build_pencil(*ql.partition(
            ql.ensure_conjugate_closed([(s, ev.h1(s)) for s in pts]))))
        model = ql.realize(pen, 2)
        x0 = ql.infer_x0_linear(model, [(0.0, 0.0), (1.0, 0.0)])
        assert np.abs(x0).max() < 1e-12

    def test_linear_intro_alignment(self, linear_intro):
        ev = GfrfEvaluator(linear_intro)
        pts = [2j * np.pi * 5 * i for i in range(1, 7)]
        pen = ql.realify(ql.build_pencil(*ql.partition(
            ql.ensure_conjugate_closed([(s, ev.h1(s)) for s in pts]))))
        model = ql.realize(pen, 2)
        tr = ql.simulate(linear_intro, None, (0.0, 1.0), dt=1e-3)
        x0h = ql.infer_x0_linear(model, [(0.0, tr.y[0]), (1.0, tr.y[-1])])
        A, B, C = model.absorbed()
        sys_id = ql.QuadraticSystem(A, np.zeros((2, 4)), B, C, x0=x0h)
        Psi = ql.observability_transform(sys_id, linear_intro)
        assert np.allclose(np.linalg.solve(Psi, x0h), [0.5, 0.0], atol=1e-6)

    def test_heldout_prediction(self):
        rng = np.random.default_rng(12)
        evals = np.array([-0.8, -2.2, -4.0])
        residues = rng.standard_normal(3)
        pts = 1j * np.linspace(0.5, 20.0, 8)
        pen = ql.realify(ql.build_pencil(*ql.partition(
            ql.ensure_conjugate_closed(rational_samples(evals, residues, pts)))))
        model = ql.realize(pen, 3)
        A, B, C = model.absorbed()
        x0_true = rng.standard_normal(3)
        import scipy.linalg as sla
        y = lambda t: float(C @ sla.expm(A * t) @ x0_true)
        x0h = ql.infer_x0_linear(model, [(0.1, y(0.1)), (0.7, y(0.7)),
                                         (1.9, y(1.9))])
        for t in (0.4, 2.5, 3.3):
            assert abs(float(C @ sla.expm(A * t) @ x0h) - y(t)) < 1e-9
