"""Decision procedure for global joint-distribution existence.

Given lower-order probability tables over subsets of n dichotomic (+-1)
observables, decide whether one global distribution over all 2^n outcome
atoms marginalizes to every table.  This is a pure linear feasibility
problem; it is solved directly (phase-1 simplex, no external solver) so that
the inequality tests elsewhere in the package can be cross-validated against
an independent ground truth.

A feasible system yields a witness table; an infeasible one yields a
separating linear functional over the constraint cells: the functional's
value on the supplied data exceeds its maximum over the marginal polytope
by the reported slack.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any

import numpy as np

from . import _simplex
from .belltests import ChshInput, TripleInput, ZeroMeanViolated, chsh_max
from .errors import ContexcertError
from .scenario import DICHOTOMIC, ProbTable

MAX_VARIABLES = 12
FEASIBILITY_TOL = 1e-9
SIGNALING_PRECHECK_TOL = 1e-9


class TooManyVariables(ContexcertError):
    """Atom count would exceed the 2^12 solver cap."""


class InconsistentConstraints(ContexcertError):
    """Constraint tables disagree on a shared marginal before the LP runs."""


@dataclass(frozen=True)
class MarginalConstraintSystem:
    """Target variables plus the tables a global JPD must marginalize to."""

    variables: tuple[str, ...]
    constraints: tuple[tuple[tuple[str, ...], ProbTable], ...]

    def __post_init__(self) -> None:
        variables = tuple(self.variables)
        object.__setattr__(self, "variables", variables)
        if len(set(variables)) != len(variables):
            raise ContexcertError("duplicate variables in constraint system")
        constraints = tuple((tuple(sup), table) for sup, table in self.constraints)
        object.__setattr__(self, "constraints", constraints)
        for sup, table in constraints:
            if tuple(table.support) != sup:
                raise ContexcertError(f"constraint support {sup} does not match its table")
            if not set(sup) <= set(variables):
                raise ContexcertError(f"constraint support {sup} not within variables")
            for alphabet in table.alphabets:
                if set(alphabet) != {1, -1}:
                    raise ContexcertError("oracle accepts only +-1 alphabets")


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Linear functional separating the data from the marginal polytope.

    ``value`` is the functional evaluated on the constraint cells,
    ``bound`` its maximum over all global JPDs (computed atom-wise), and
    ``value - bound > 0`` witnesses infeasibility.
    """

    normalization_coeff: Any
    cell_coeffs: tuple[tuple[int, tuple, Any], ...]
    value: Any
    bound: Any

    @property
    def slack(self) -> float:
        return float(self.value - self.bound)

    def to_json(self) -> dict:
        return {
            "normalization_coeff": float(self.normalization_coeff),
            "cell_coeffs": [
                {"constraint": ci, "outcomes": list(cell), "coeff": float(c)}
                for ci, cell, c in self.cell_coeffs
            ],
            "value": float(self.value),
            "bound": float(self.bound),
            "slack": self.slack,
        }


@dataclass(frozen=True)
class FeasibilityResult:
    status: str  # "feasible" | "infeasible"
    witness: ProbTable | None
    certificate: InfeasibilityCertificate | None
    slack: float

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    def to_json(self) -> dict:
        out: dict[str, Any] = {"status": self.status, "slack": self.slack}
        if self.witness is not None:
            out["witness"] = {
                "support": list(self.witness.support),
                "probs": {
                    ",".join(str(v) for v in cell): float(p)
                    for cell, p in sorted(self.witness.probs.items())
                },
            }
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        return out


@lru_cache(maxsize=128)
def _lp_pattern(n: int, supports: tuple[tuple[int, ...], ...]):
    """Constraint matrix skeleton for n variables and the given supports.

    Row 0 is normalization; every further row fixes one constraint cell.
    Atom j assigns +1 to variable i when bit (n-1-i) of j is 0.
    """
    n_atoms = 1 << n
    atoms = np.arange(n_atoms)
    bits = (atoms[None, :] >> (n - 1 - np.arange(n)[:, None])) & 1  # (n, n_atoms)
    rows = [np.ones(n_atoms)]
    row_cells: list[tuple[int, tuple] | None] = [None]
    for ci, sup in enumerate(supports):
        k = len(sup)
        cell_idx = np.zeros(n_atoms, dtype=np.int64)
        for i in sup:
            cell_idx = (cell_idx << 1) | bits[i]
        # The last cell of each table is implied by normalization plus the
        # other cells, so its row is omitted to keep the tableau small.
        for c in range((1 << k) - 1):
            rows.append((cell_idx == c).astype(np.float64))
            cell = tuple(1 if ((c >> (k - 1 - t)) & 1) == 0 else -1 for t in range(k))
            row_cells.append((ci, cell))
    A = np.asarray(rows)
    A.setflags(write=False)
    return A, tuple(row_cells)


def _atom_outcomes(n: int, j: int) -> tuple[int, ...]:
    return tuple(1 if ((j >> (n - 1 - i)) & 1) == 0 else -1 for i in range(n))


def _signaling_precheck(system: MarginalConstraintSystem, tol: float) -> None:
    # Direct marginal sums; building ProbTable objects here would dominate
    # the runtime of grid-scale feasibility sweeps.
    plus_marginals: dict[str, list[float]] = {}
    for sup, table in system.constraints:
        for pos, obs in enumerate(sup):
            p_plus = 0.0
            for cell, p in table.probs.items():
                if cell[pos] == 1:
                    p_plus += float(p)
            plus_marginals.setdefault(obs, []).append(p_plus)
    for obs, values in plus_marginals.items():
        if len(values) >= 2 and max(values) - min(values) > tol:
            raise InconsistentConstraints(
                f"constraint tables disagree on the marginal of {obs} "
                f"beyond {tol:g}; the system is signaling, not merely infeasible"
            )


def jpd_feasible(
    system: MarginalConstraintSystem,
    feasibility_tol: float = FEASIBILITY_TOL,
    signaling_tol: float = SIGNALING_PRECHECK_TOL,
    exact: bool = False,
) -> FeasibilityResult:
    """Decide global-JPD existence for the constraint system.

    ``feasibility_tol`` bounds the phase-1 objective (total residual mass)
    below which the system counts as feasible.  In ``exact`` mode every
    constraint table must carry Fraction/int probabilities and the decision
    is tolerance-free.
    """
    n = len(system.variables)
    if n > MAX_VARIABLES:
        raise TooManyVariables(f"{n} variables exceed the cap of {MAX_VARIABLES}")
    if n == 0 or not system.constraints:
        raise ContexcertError("constraint system is empty")
    _signaling_precheck(system, signaling_tol)

    var_index = {v: i for i, v in enumerate(system.variables)}
    supports = tuple(
        tuple(var_index[obs] for obs in sup) for sup, _ in system.constraints
    )
    A, row_cells = _lp_pattern(n, supports)

    if exact:
        return _solve_exact(system, A, row_cells)
    b = np.empty(A.shape[0])
    b[0] = 1.0
    for r, rc in enumerate(row_cells):
        if rc is None:
            continue
        ci, cell = rc
        b[r] = float(system.constraints[ci][1].prob(cell))
    objective, x, y = _simplex.phase1_dense(np.asarray(A), b)

    if objective <= feasibility_tol:
        probs = {
            _atom_outcomes(n, j): float(x[j])
            for j in range(1 << n)
            if x[j] > 0.0
        }
        witness = ProbTable(
            support=system.variables,
            probs=probs,
            alphabets=(DICHOTOMIC,) * n,
        )
        return FeasibilityResult("feasible", witness, None, slack=0.0)

    functional = y @ np.asarray(A)
    bound = float(functional.max())
    value = float(y @ b)
    certificate = InfeasibilityCertificate(
        normalization_coeff=float(y[0]),
        cell_coeffs=tuple(
            (rc[0], rc[1], float(y[r]))
            for r, rc in enumerate(row_cells)
            if rc is not None
        ),
        value=value,
        bound=bound,
    )
    return FeasibilityResult("infeasible", None, certificate, slack=certificate.slack)


def _solve_exact(system, A, row_cells) -> FeasibilityResult:
    n = len(system.variables)
    for _, table in system.constraints:
        if not table.is_exact:
            raise ContexcertError("exact mode requires Fraction-valued tables")
    A_frac = [[Fraction(int(v)) for v in row] for row in np.asarray(A, dtype=np.int64)]
    b = [Fraction(1)]
    for rc in row_cells[1:]:
        ci, cell = rc
        b.append(Fraction(system.constraints[ci][1].prob(cell)))
    objective, x, y = _simplex.phase1_exact(A_frac, b)

    if objective == 0:
        probs = {
            _atom_outcomes(n, j): x[j] for j in range(1 << n) if x[j] != 0
        }
        witness = ProbTable(
            support=system.variables,
            probs=probs,
            alphabets=(DICHOTOMIC,) * n,
        )
        return FeasibilityResult("feasible", witness, None, slack=0.0)

    functional = [
        sum(y[r] * A_frac[r][j] for r in range(len(A_frac))) for j in range(1 << n)
    ]
    bound = max(functional)
    value = sum(yi * bi for yi, bi in zip(y, b))
    certificate = InfeasibilityCertificate(
        normalization_coeff=y[0],
        cell_coeffs=tuple(
            (rc[0], rc[1], y[r]) for r, rc in enumerate(row_cells) if rc is not None
        ),
        value=value,
        bound=bound,
    )
    return FeasibilityResult("infeasible", None, certificate, slack=certificate.slack)


def pair_table_from_correlation(
    ids: tuple[str, str], corr, exact: bool = False
) -> ProbTable:
    """The unique zero-mean +-1 pair table with the given correlation.

    p(a, b) = (1 + a*b*corr) / 4.  With ``exact`` the correlation is taken
    as an exact rational and the cells stay Fractions.
    """
    c = Fraction(corr) if exact else float(corr)
    if abs(c) > 1:
        raise ContexcertError(f"correlation {corr!r} outside [-1, 1]")
    quarter = Fraction(1, 4) if exact else 0.25
    probs = {
        (a, b): quarter * (1 + a * b * c)
        for a in DICHOTOMIC
        for b in DICHOTOMIC
    }
    return ProbTable(support=tuple(ids), probs=probs, alphabets=(DICHOTOMIC, DICHOTOMIC))


def triple_system_from_correlations(
    c12, c23, c13, ids: tuple[str, str, str] = ("X1", "X2", "X3"), exact: bool = False
) -> MarginalConstraintSystem:
    x1, x2, x3 = ids
    return MarginalConstraintSystem(
        variables=ids,
        constraints=(
            ((x1, x2), pair_table_from_correlation((x1, x2), c12, exact)),
            ((x2, x3), pair_table_from_correlation((x2, x3), c23, exact)),
            ((x1, x3), pair_table_from_correlation((x1, x3), c13, exact)),
        ),
    )


def quadrupole_system_from_chsh(
    chsh: ChshInput, exact: bool = False
) -> MarginalConstraintSystem:
    """Zero-mean pair tables induced from the four CHSH correlations."""
    a1, a2 = chsh.a_block
    b1, b2 = chsh.b_block
    variables = (a1, a2, b1, b2)
    constraints = []
    for pair in ((a1, b1), (a1, b2), (a2, b1), (a2, b2)):
        corr = chsh.correlations.value(*pair)
        constraints.append((pair, pair_table_from_correlation(pair, corr, exact)))
    return MarginalConstraintSystem(variables=variables, constraints=tuple(constraints))


def triple_jpd_feasible(
    triple: TripleInput,
    feasibility_tol: float = FEASIBILITY_TOL,
    exact: bool = False,
) -> FeasibilityResult:
    """JPD existence for a zero-mean correlation triple via the induced tables."""
    worst = triple.correlations.max_abs_mean(triple.triple)
    if worst > triple.zero_mean_tolerance:
        raise ZeroMeanViolated(
            f"|mean| = {worst:g} exceeds the declared zero-mean tolerance "
            f"{triple.zero_mean_tolerance:g}"
        )
    x1, x2, x3 = triple.triple
    system = triple_system_from_correlations(
        triple.correlations.value(x1, x2),
        triple.correlations.value(x2, x3),
        triple.correlations.value(x1, x3),
        ids=triple.triple,
        exact=exact,
    )
    return jpd_feasible(system, feasibility_tol=feasibility_tol, exact=exact)


def fine_equivalence_check(chsh: ChshInput, tolerance: float = FEASIBILITY_TOL) -> bool:
    """True iff LP feasibility and the permutation-maximum inequality agree."""
    result = jpd_feasible(quadrupole_system_from_chsh(chsh), feasibility_tol=tolerance)
    violated = chsh_max(chsh) > 2 + tolerance
    return result.feasible != violated
