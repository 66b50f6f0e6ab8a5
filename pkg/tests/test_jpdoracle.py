import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from contexcert.belltests import ChshInput, TripleInput, ZeroMeanViolated, chsh_max
from contexcert.errors import ContexcertError
from contexcert.jpdoracle import (
    InconsistentConstraints,
    MarginalConstraintSystem,
    TooManyVariables,
    fine_equivalence_check,
    jpd_feasible,
    pair_table_from_correlation,
    quadrupole_system_from_chsh,
    triple_jpd_feasible,
    triple_system_from_correlations,
)
from contexcert.scenario import CorrelationSet, ProbTable, marginalize


def chsh_input(c11, c12, c21, c22):
    return ChshInput(
        CorrelationSet(
            entries={
                frozenset(("A1", "B1")): c11,
                frozenset(("A1", "B2")): c12,
                frozenset(("A2", "B1")): c21,
                frozenset(("A2", "B2")): c22,
            }
        ),
        ("A1", "A2"),
        ("B1", "B2"),
    )


def triple_input(c12, c23, c13, tol=1e-9):
    return TripleInput(
        CorrelationSet(
            entries={
                frozenset(("X1", "X2")): c12,
                frozenset(("X2", "X3")): c23,
                frozenset(("X1", "X3")): c13,
            },
            means={"X1": 0.0, "X2": 0.0, "X3": 0.0},
        ),
        ("X1", "X2", "X3"),
        zero_mean_tolerance=tol,
    )


def brute_force_triple_feasible(c12, c23, c13, grid=21):
    """Independent oracle: scan product-of-weights parameterization.

    A triple JPD over 8 atoms with uniform single marginals and the given
    pair correlations exists iff the 8 atom equations admit a nonnegative
    solution; atoms are determined by one free parameter t = E[X1 X2 X3]:
    p(x) = (1 + c12 x1 x2 + c23 x2 x3 + c13 x1 x3 + t x1 x2 x3) / 8.
    """
    for t in np.linspace(-1, 1, grid):
        ok = True
        for x1, x2, x3 in product((1, -1), repeat=3):
            p = (1 + c12 * x1 * x2 + c23 * x2 * x3 + c13 * x1 * x3 + t * x1 * x2 * x3) / 8
            if p < -1e-12:
                ok = False
                break
        if ok:
            return True
    return False


class TestPairTable:
    def test_zero_mean_and_correlation(self):
        t = pair_table_from_correlation(("X", "Y"), 0.6)
        assert math.isclose(t.prob((1, 1)), 0.4)
        assert math.isclose(t.prob((1, -1)), 0.1)
        assert math.isclose(marginalize(t, ("X",)).prob((1,)), 0.5)

    def test_exact(self):
        t = pair_table_from_correlation(("X", "Y"), Fraction(3, 5), exact=True)
        assert t.is_exact
        assert t.prob((1, 1)) == Fraction(2, 5)

    def test_out_of_range(self):
        with pytest.raises(ContexcertError):
            pair_table_from_correlation(("X", "Y"), 1.5)


class TestJpdFeasible:
    def test_identity_pair_witness(self):
        table = pair_table_from_correlation(("A", "B"), 0.3)
        system = MarginalConstraintSystem(("A", "B"), ((("A", "B"), table),))
        res = jpd_feasible(system)
        assert res.feasible
        for cell in table.cells():
            assert math.isclose(res.witness.prob(cell), table.prob(cell), abs_tol=1e-9)

    def test_all_anticorrelated_triple_infeasible(self):
        res = jpd_feasible(triple_system_from_correlations(-1.0, -1.0, -1.0))
        assert res.status == "infeasible"
        # brute force over all 8 atoms confirms no solution exists
        assert not brute_force_triple_feasible(-1, -1, -1, grid=201)

    def test_tsirelson_quadrupole_infeasible(self):
        r = math.sqrt(2) / 2
        inp = chsh_input(-r, r, -r, -r)
        assert chsh_max(inp) > 2
        res = jpd_feasible(quadrupole_system_from_chsh(inp))
        assert res.status == "infeasible"
        assert res.certificate is not None

    def test_witness_soundness(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            c = rng.uniform(-0.4, 0.4, 4)  # comfortably feasible region
            inp = chsh_input(*c)
            system = quadrupole_system_from_chsh(inp)
            res = jpd_feasible(system)
            assert res.feasible
            for sup, table in system.constraints:
                marg = marginalize(res.witness, sup)
                for cell in table.cells():
                    assert abs(float(marg.prob(cell)) - float(table.prob(cell))) < 1e-9

    def test_certificate_soundness(self):
        rng = np.random.default_rng(13)
        found = 0
        while found < 20:
            c = rng.uniform(-1, 1, 4)
            inp = chsh_input(*c)
            if chsh_max(inp) <= 2.05:
                continue
            found += 1
            system = quadrupole_system_from_chsh(inp)
            res = jpd_feasible(system)
            assert res.status == "infeasible"
            cert = res.certificate
            # recompute value and bound independently from the system data
            value = float(cert.normalization_coeff)
            for ci, cell, coeff in cert.cell_coeffs:
                value += coeff * float(system.constraints[ci][1].prob(cell))
            bound = -math.inf
            for atom in product((1, -1), repeat=4):
                s = float(cert.normalization_coeff)
                for ci, cell, coeff in cert.cell_coeffs:
                    sup = system.constraints[ci][0]
                    idx = tuple(system.variables.index(o) for o in sup)
                    if tuple(atom[i] for i in idx) == cell:
                        s += coeff
                bound = max(bound, s)
            assert value - bound >= 1e-9
            assert math.isclose(value, cert.value, abs_tol=1e-9)
            assert math.isclose(bound, cert.bound, abs_tol=1e-9)

    def test_signaling_precheck(self):
        t1 = ProbTable(("A", "B"), {(1, 1): 0.5, (-1, -1): 0.5}, ((1, -1), (1, -1)))
        t2 = ProbTable(("A", "C"), {(1, 1): 0.8, (-1, -1): 0.2}, ((1, -1), (1, -1)))
        system = MarginalConstraintSystem(
            ("A", "B", "C"), ((("A", "B"), t1), (("A", "C"), t2))
        )
        with pytest.raises(InconsistentConstraints):
            jpd_feasible(system)

    def test_too_many_variables(self):
        ids = tuple(f"V{i}" for i in range(13))
        table = pair_table_from_correlation((ids[0], ids[1]), 0.0)
        system = MarginalConstraintSystem(ids, (((ids[0], ids[1]), table),))
        with pytest.raises(TooManyVariables):
            jpd_feasible(system)


class TestTripleJpd:
    def test_uncorrelated_feasible(self):
        # the uniform table is one witness; the solver may return any vertex,
        # so assert witness validity rather than a particular table
        res = triple_jpd_feasible(triple_input(0.0, 0.0, 0.0))
        assert res.feasible
        for pair in (("X1", "X2"), ("X2", "X3"), ("X1", "X3")):
            marg = marginalize(res.witness, pair)
            for cell in marg.cells():
                assert abs(float(marg.prob(cell)) - 0.25) < 1e-9

    def test_all_minus_one(self):
        assert triple_jpd_feasible(triple_input(-1.0, -1.0, -1.0)).status == "infeasible"

    def test_all_plus_one(self):
        res = triple_jpd_feasible(triple_input(1.0, 1.0, 1.0))
        assert res.feasible
        assert math.isclose(float(res.witness.prob((1, 1, 1))), 0.5, abs_tol=1e-9)
        assert math.isclose(float(res.witness.prob((-1, -1, -1))), 0.5, abs_tol=1e-9)

    def test_zero_mean_precondition(self):
        bad = TripleInput(
            CorrelationSet(
                entries={
                    frozenset(("X1", "X2")): 0.0,
                    frozenset(("X2", "X3")): 0.0,
                    frozenset(("X1", "X3")): 0.0,
                },
                means={"X1": 0.4, "X2": 0.0, "X3": 0.0},
            ),
            ("X1", "X2", "X3"),
            zero_mean_tolerance=0.01,
        )
        with pytest.raises(ZeroMeanViolated):
            triple_jpd_feasible(bad)

    def test_matches_bruteforce_on_random_triples(self):
        rng = np.random.default_rng(19)
        for _ in range(60):
            c = rng.uniform(-1, 1, 3)
            lp = triple_jpd_feasible(triple_input(*c)).feasible
            brute = brute_force_triple_feasible(*c, grid=4001)
            assert lp == brute, f"mismatch at {c}"


class TestFineEquivalence:
    def test_pr_box_point(self):
        inp = chsh_input(1.0, 1.0, 1.0, -1.0)
        assert chsh_max(inp) == 4.0
        assert fine_equivalence_check(inp)

    def test_origin(self):
        assert fine_equivalence_check(chsh_input(0.0, 0.0, 0.0, 0.0))

    def test_random_points(self):
        rng = np.random.default_rng(29)
        for _ in range(300):
            assert fine_equivalence_check(chsh_input(*rng.uniform(-1, 1, 4)))

    def test_monotone_scaling_preserves_feasibility(self):
        rng = np.random.default_rng(37)
        for _ in range(40):
            c = rng.uniform(-1, 1, 4)
            inp = chsh_input(*c)
            if not jpd_feasible(quadrupole_system_from_chsh(inp)).feasible:
                continue
            t = rng.random()
            shrunk = chsh_input(*(t * c))
            assert jpd_feasible(quadrupole_system_from_chsh(shrunk)).feasible


class TestExactMode:
    def test_exact_grid_spots(self):
        grid = [Fraction(k, 10) for k in range(-10, 11, 5)]
        for c11 in grid:
            for c12 in grid:
                inp_vals = (c11, c12, Fraction(1, 2), Fraction(-3, 10))
                system = MarginalConstraintSystem(
                    ("A1", "A2", "B1", "B2"),
                    tuple(
                        (pair, pair_table_from_correlation(pair, v, exact=True))
                        for pair, v in zip(
                            (("A1", "B1"), ("A1", "B2"), ("A2", "B1"), ("A2", "B2")),
                            inp_vals,
                        )
                    ),
                )
                res = jpd_feasible(system, exact=True)
                float_inp = chsh_input(*(float(v) for v in inp_vals))
                violated = chsh_max(float_inp) > 2
                assert res.feasible == (not violated)
                if res.feasible:
                    # exact witness marginals reproduce cells exactly
                    for sup, table in system.constraints:
                        marg = marginalize(res.witness, sup)
                        for cell in table.cells():
                            assert marg.prob(cell) == table.prob(cell)
