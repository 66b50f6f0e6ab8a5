from fractions import Fraction

import numpy as np

from contexcert._simplex import phase1_dense, phase1_exact


def check_farkas(A, b, y, objective):
    """Farkas certificate: y.A <= 0 componentwise while y.b = objective > 0."""
    assert objective > 0
    assert np.all(y @ A <= 1e-9)
    assert np.isclose(y @ b, objective, atol=1e-9)


class TestPhase1Dense:
    def test_feasible_square(self):
        A = np.array([[1.0, 1.0], [1.0, -1.0]])
        b = np.array([1.0, 0.2])
        obj, x, _ = phase1_dense(A, b)
        assert obj < 1e-12
        assert np.allclose(A @ x, b, atol=1e-9)
        assert np.all(x >= 0)

    def test_infeasible_sign(self):
        # x1 + x2 = 1 and x1 + x2 = 2 cannot both hold
        A = np.array([[1.0, 1.0], [1.0, 1.0]])
        b = np.array([1.0, 2.0])
        obj, _, y = phase1_dense(A, b)
        assert obj > 0.5
        check_farkas(A, b, y, obj)

    def test_infeasible_negativity(self):
        # x >= 0 with x = -1
        A = np.array([[1.0]])
        b = np.array([-1.0])
        obj, _, y = phase1_dense(A, b)
        assert obj > 0.5
        check_farkas(A, b, y, obj)

    def test_redundant_rows_ok(self):
        A = np.array([[1.0, 1.0], [2.0, 2.0], [1.0, 0.0]])
        b = np.array([1.0, 2.0, 0.25])
        obj, x, _ = phase1_dense(A, b)
        assert obj < 1e-12
        assert np.allclose(A @ x, b, atol=1e-9)

    def test_random_feasible_systems(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            m, n = rng.integers(2, 8), rng.integers(3, 12)
            A = rng.normal(size=(m, n))
            x_true = rng.random(n)
            b = A @ x_true
            obj, x, _ = phase1_dense(A, b)
            assert obj < 1e-9
            assert np.allclose(A @ x, b, atol=1e-7)

    def test_random_verdicts_match_scipy_style_bruteforce(self):
        # tiny systems where feasibility is decidable by vertex enumeration:
        # {x >= 0, sum x = 1, c.x = t} is feasible iff min(c) <= t <= max(c)
        rng = np.random.default_rng(23)
        for _ in range(200):
            n = int(rng.integers(2, 6))
            c = rng.normal(size=n)
            t = float(rng.normal())
            A = np.vstack([np.ones(n), c])
            b = np.array([1.0, t])
            obj, x, y = phase1_dense(A, b)
            expected_feasible = c.min() - 1e-12 <= t <= c.max() + 1e-12
            if expected_feasible:
                assert obj < 1e-9
            else:
                assert obj > 1e-9
                check_farkas(A, b, y, obj)


class TestPhase1Exact:
    def test_feasible(self):
        A = [[Fraction(1), Fraction(1)], [Fraction(1), Fraction(-1)]]
        b = [Fraction(1), Fraction(1, 5)]
        obj, x, _ = phase1_exact(A, b)
        assert obj == 0
        assert x[0] + x[1] == 1
        assert x[0] - x[1] == Fraction(1, 5)

    def test_infeasible_exact_certificate(self):
        A = [[Fraction(1), Fraction(1)], [Fraction(1), Fraction(1)]]
        b = [Fraction(1), Fraction(2)]
        obj, _, y = phase1_exact(A, b)
        assert obj == 1
        # exact Farkas: y.A <= 0, y.b > 0
        for j in range(2):
            assert sum(y[i] * A[i][j] for i in range(2)) <= 0
        assert sum(yi * bi for yi, bi in zip(y, b)) == obj

    def test_agrees_with_dense_on_random_rationals(self):
        rng = np.random.default_rng(31)
        for _ in range(50):
            n = int(rng.integers(2, 5))
            c = [Fraction(int(v), 10) for v in rng.integers(-10, 11, size=n)]
            t = Fraction(int(rng.integers(-12, 13)), 10)
            A = [[Fraction(1)] * n, c]
            b = [Fraction(1), t]
            obj_e, _, _ = phase1_exact(A, b)
            obj_d, _, _ = phase1_dense(
                np.array(A, dtype=float), np.array(b, dtype=float)
            )
            assert (obj_e == 0) == (obj_d < 1e-9)
