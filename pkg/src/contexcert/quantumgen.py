"""Ground-truth data generation on small Hilbert spaces.

Provides trace-rule probability tables for commuting projective observables,
the standard two-qubit singlet configuration with its -cos(a-b) pair
correlation, and local-hidden-variable samplers that realize a common
probability space by construction.

Sampling is deterministic: every setting draws from its own PCG64 stream
derived as SeedSequence(entropy=seed, spawn_key=(setting_index,)), and the
generator name plus derivation scheme are recorded in the dataset metadata
so runs can be reproduced bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, product
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ContexcertError
from .scenario import DICHOTOMIC, Dataset, Observable, ProbTable, Scenario

MAX_DIM = 16
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
PROJECTOR_TOL = 1e-10
COMMUTATOR_TOL = 1e-10

PRNG_NAME = "numpy-PCG64"
SUBSEED_SCHEME = "SeedSequence(entropy=seed, spawn_key=(setting_index,))"


class InvalidState(ContexcertError):
    """Matrix fails the density-operator requirements."""


class NonCommuting(ContexcertError):
    """Requested observables are incompatible; no joint table exists."""


@dataclass(frozen=True)
class DensityState:
    """A validated density operator on a Hilbert space of dimension <= 16."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidState("state matrix must be square")
        if m.shape[0] > MAX_DIM:
            raise InvalidState(f"dimension {m.shape[0]} exceeds cap {MAX_DIM}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise InvalidState("state matrix is not Hermitian")
        eigenvalues = np.linalg.eigvalsh(m)
        if eigenvalues.min() < -PSD_TOL:
            raise InvalidState(f"state has negative eigenvalue {eigenvalues.min():g}")
        if abs(m.trace() - 1.0) > HERMITIAN_TOL:
            raise InvalidState(f"state trace {m.trace():g} != 1")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class ProjectiveObservable:
    """A +-1 observable given by its two orthogonal eigenprojectors."""

    id: str
    projectors: Mapping[int, np.ndarray]

    def __post_init__(self) -> None:
        if not self.id:
            raise ContexcertError("observable id must be nonempty")
        projs = {int(k): np.array(v, dtype=complex) for k, v in dict(self.projectors).items()}
        if set(projs) != {1, -1}:
            raise ContexcertError(f"{self.id}: projector outcomes must be exactly +1 and -1")
        dims = {p.shape for p in projs.values()}
        if len(dims) != 1 or any(s[0] != s[1] for s in dims):
            raise ContexcertError(f"{self.id}: projectors must be square and same-dimension")
        for value, p in projs.items():
            if np.max(np.abs(p - p.conj().T)) > PROJECTOR_TOL:
                raise ContexcertError(f"{self.id}: projector for {value} not Hermitian")
            if np.max(np.abs(p @ p - p)) > PROJECTOR_TOL:
                raise ContexcertError(f"{self.id}: projector for {value} not idempotent")
        if np.max(np.abs(projs[1] @ projs[-1])) > PROJECTOR_TOL:
            raise ContexcertError(f"{self.id}: outcome projectors not orthogonal")
        dim = next(iter(dims))[0]
        if np.max(np.abs(projs[1] + projs[-1] - np.eye(dim))) > PROJECTOR_TOL:
            raise ContexcertError(f"{self.id}: projectors do not sum to identity")
        for p in projs.values():
            p.setflags(write=False)
        object.__setattr__(self, "projectors", projs)

    @property
    def dim(self) -> int:
        return self.projectors[1].shape[0]

    @property
    def alphabet(self) -> tuple:
        return DICHOTOMIC


def commute(x: ProjectiveObservable, y: ProjectiveObservable, tol: float = COMMUTATOR_TOL) -> bool:
    """Whether every projector of x commutes with every projector of y."""
    for p in x.projectors.values():
        for q in y.projectors.values():
            if np.max(np.abs(p @ q - q @ p)) > tol:
                return False
    return True


def born_table(state: DensityState, observables: Sequence[ProjectiveObservable]) -> ProbTable:
    """Joint outcome table Tr(rho P1 ... Pn) for commuting projector families.

    Incompatible (non-commuting) requests fail: a joint table is undefined
    for them by construction, not approximated.
    """
    observables = list(observables)
    if not observables:
        raise ContexcertError("need at least one observable")
    ids = [o.id for o in observables]
    if len(set(ids)) != len(ids):
        raise ContexcertError("duplicate observable ids in joint measurement")
    for o in observables:
        if o.dim != state.dim:
            raise InvalidState(f"{o.id}: dimension {o.dim} != state dimension {state.dim}")
    for x, y in combinations(observables, 2):
        if not commute(x, y):
            raise NonCommuting(f"observables {x.id} and {y.id} do not commute")

    probs: dict[tuple, float] = {}
    for outcomes in product(DICHOTOMIC, repeat=len(observables)):
        op = state.matrix
        for o, value in zip(observables, outcomes):
            op = op @ o.projectors[value]
        p = op.trace()
        if abs(p.imag) > PSD_TOL or p.real < -PSD_TOL:
            raise InvalidState(f"trace rule produced invalid probability {p!r}")
        probs[outcomes] = max(p.real, 0.0)
    total = math.fsum(probs.values())
    if abs(total - 1.0) > PSD_TOL:
        raise InvalidState(f"trace-rule table sums to {total!r}")
    probs = {k: v / total for k, v in probs.items()}
    return ProbTable(
        support=tuple(ids),
        probs=probs,
        alphabets=(DICHOTOMIC,) * len(ids),
    )


def singlet_state() -> DensityState:
    """Two-qubit singlet (|01> - |10>)/sqrt(2) as a density operator."""
    psi = np.zeros(4, dtype=complex)
    psi[1] = 1.0 / math.sqrt(2.0)
    psi[2] = -1.0 / math.sqrt(2.0)
    return DensityState(np.outer(psi, psi.conj()))


def planar_observable(obs_id: str, angle: float, qubit: int, n_qubits: int = 2) -> ProjectiveObservable:
    """Spin observable cos(angle)*sigma_z + sin(angle)*sigma_x on one qubit.

    All tests in this package need only angle differences within a fixed
    measurement plane, so the Bloch vector is restricted to the x-z circle.
    """
    return bloch_observable(obs_id, (math.sin(angle), 0.0, math.cos(angle)), qubit, n_qubits)


def bloch_observable(
    obs_id: str, direction: Sequence[float], qubit: int, n_qubits: int = 2
) -> ProjectiveObservable:
    """Spin observable n.sigma for a unit Bloch vector n, embedded on one qubit."""
    nx, ny, nz = (float(v) for v in direction)
    norm = math.sqrt(nx * nx + ny * ny + nz * nz)
    if abs(norm - 1.0) > 1e-9:
        raise ContexcertError(f"Bloch vector must be unit length, got norm {norm:g}")
    if not 0 <= qubit < n_qubits:
        raise ContexcertError(f"qubit index {qubit} outside 0..{n_qubits - 1}")
    sigma = np.array([[nz, nx - 1j * ny], [nx + 1j * ny, -nz]], dtype=complex)
    eye2 = np.eye(2, dtype=complex)
    plus = (eye2 + sigma) / 2.0
    minus = (eye2 - sigma) / 2.0

    def embed(p: np.ndarray) -> np.ndarray:
        out = np.array([[1.0 + 0j]])
        for q in range(n_qubits):
            out = np.kron(out, p if q == qubit else eye2)
        return out

    return ProjectiveObservable(obs_id, {1: embed(plus), -1: embed(minus)})


def singlet_correlation(angle_a: float, angle_b: float) -> float:
    """Closed-form singlet pair correlation -cos(angle_a - angle_b)."""
    return -math.cos(angle_a - angle_b)


def _setting_rng(seed: int, setting_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(setting_index,))
    return np.random.Generator(np.random.PCG64(ss))


def _sample_from_table(table: ProbTable, count: int, rng: np.random.Generator) -> np.ndarray:
    """Inverse-CDF draw over outcome tuples in lexicographic alphabet order."""
    cells = np.asarray(list(table.cells()), dtype=np.int64)
    probs = np.asarray([float(table.prob(tuple(c))) for c in cells.tolist()])
    cdf = np.cumsum(probs)
    idx = np.searchsorted(cdf, rng.random(count), side="right")
    np.clip(idx, 0, len(cells) - 1, out=idx)
    return cells[idx]


def _scenario_for_pairs(pair_ids: Sequence[tuple[str, str]]) -> Scenario:
    seen: dict[str, None] = {}
    for a, b in pair_ids:
        seen.setdefault(a)
        seen.setdefault(b)
    return Scenario(
        observables=tuple(Observable(i) for i in seen),
        compatible_sets=tuple(frozenset(p) for p in pair_ids),
    )


def sample_quantum_dataset(
    state: DensityState,
    settings: Sequence[tuple[tuple[ProjectiveObservable, ProjectiveObservable], int]],
    seed: int,
) -> Dataset:
    """Draw i.i.d. joint outcomes from the trace-rule table of each setting."""
    pair_ids = [(a.id, b.id) for (a, b), _ in settings]
    scenario = _scenario_for_pairs(pair_ids)
    blocks = []
    for index, ((obs_a, obs_b), count) in enumerate(settings):
        if count < 0:
            raise ContexcertError("sample count must be >= 0")
        if count == 0:
            continue
        table = born_table(state, (obs_a, obs_b))
        rng = _setting_rng(seed, index)
        blocks.append(((obs_a.id, obs_b.id), _sample_from_table(table, count, rng)))
    meta = {
        "source": "quantum",
        "prng": PRNG_NAME,
        "seed": seed,
        "subseed_scheme": SUBSEED_SCHEME,
        "state_dim": state.dim,
        "settings": [{"pair": [a, b], "count": c} for (a, b), c in zip(pair_ids, (c for _, c in settings))],
    }
    return Dataset.from_blocks(scenario, blocks, meta)


@dataclass(frozen=True)
class LhvModel:
    """Common-probability-space sampler: hidden values plus response functions.

    ``lambda_sampler(rng, n)`` draws n hidden values; ``response(obs_id,
    lambdas)`` maps them to +-1 outcomes elementwise.  The response never
    sees which partner observable is co-measured, so every dataset the model
    generates admits a global joint distribution by construction.
    """

    lambda_sampler: Callable[[np.random.Generator, int], np.ndarray]
    response: Callable[[str, np.ndarray], np.ndarray]
    description: str = "lhv"


def sphere_lhv_model(axes: Mapping[str, Sequence[float]]) -> LhvModel:
    """Hidden unit vector on the sphere, outcome sign(lambda . axis)."""
    unit_axes = {}
    for obs_id, axis in axes.items():
        v = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise ContexcertError(f"axis for {obs_id} must be nonzero")
        unit_axes[obs_id] = v / norm

    def sample(rng: np.random.Generator, n: int) -> np.ndarray:
        v = rng.normal(size=(n, 3))
        return v / np.linalg.norm(v, axis=1, keepdims=True)

    def respond(obs_id: str, lambdas: np.ndarray) -> np.ndarray:
        axis = unit_axes[obs_id]
        out = np.where(np.asarray(lambdas) @ axis >= 0.0, 1, -1)
        return out.astype(np.int64)

    return LhvModel(sample, respond, description="sphere")


def sample_lhv_dataset(
    model: LhvModel,
    settings: Sequence[tuple[tuple[str, str], int]],
    seed: int,
) -> Dataset:
    """One hidden draw per record, evaluated for both observables of the setting."""
    pair_ids = [tuple(pair) for pair, _ in settings]
    scenario = _scenario_for_pairs(pair_ids)
    blocks = []
    for index, (pair, count) in enumerate(settings):
        if count < 0:
            raise ContexcertError("sample count must be >= 0")
        if count == 0:
            continue
        a, b = pair
        rng = _setting_rng(seed, index)
        lambdas = model.lambda_sampler(rng, count)
        col_a = np.asarray(model.response(a, lambdas), dtype=np.int64)
        col_b = np.asarray(model.response(b, lambdas), dtype=np.int64)
        if col_a.shape != (count,) or col_b.shape != (count,):
            raise ContexcertError("response must return one value per hidden draw")
        blocks.append(((a, b), np.column_stack([col_a, col_b])))
    meta = {
        "source": f"lhv:{model.description}",
        "prng": PRNG_NAME,
        "seed": seed,
        "subseed_scheme": SUBSEED_SCHEME,
        "settings": [{"pair": list(p), "count": c} for p, c in zip(pair_ids, (c for _, c in settings))],
    }
    return Dataset.from_blocks(scenario, blocks, meta)


def random_density_state(dim: int, rng: np.random.Generator) -> DensityState:
    """Haar-ish random mixed state G G^dagger / Tr, for property tests."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return DensityState(m / m.trace())
