"""Observables, compatibility structure, outcome datasets, and empirical tables.

The model is deliberately small: observables carry a finite outcome alphabet
(by default the dichotomic values +1/-1), a scenario declares which subsets
of observables are jointly measurable, and a dataset is an ordered list of
joint-outcome records.  Probability tables are estimated by plain counting
and manipulated only through marginalization and pair correlations.

All types are immutable after construction and all operations are pure
functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ContexcertError

DICHOTOMIC = (1, -1)

NORMALIZATION_TOL = 1e-12


class UnknownObservable(ContexcertError):
    """An observable id does not appear in the scenario."""


class UnknownSetting(ContexcertError):
    """No records exist for the requested setting."""


class IncompatibleSetting(ContexcertError):
    """The requested setting is not declared jointly measurable."""


class NotSubset(ContexcertError):
    """Marginalization target is not a subset of the table support."""


class WrongArity(ContexcertError):
    """Operation requires a table over exactly two observables."""


class NonDichotomous(ContexcertError):
    """Operation requires +-1 outcome alphabets."""


@dataclass(frozen=True)
class Observable:
    """A labelled observable with a finite outcome alphabet.

    The alphabet order is part of the contract: it fixes the enumeration
    order of outcome tuples everywhere (tables, inverse-CDF sampling).
    """

    id: str
    alphabet: tuple = DICHOTOMIC

    def __post_init__(self) -> None:
        if not self.id or not isinstance(self.id, str):
            raise ContexcertError("observable id must be a nonempty string")
        object.__setattr__(self, "alphabet", tuple(self.alphabet))
        if len(self.alphabet) == 0:
            raise ContexcertError(f"observable {self.id}: empty alphabet")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ContexcertError(f"observable {self.id}: alphabet values must be distinct")

    @property
    def is_dichotomic(self) -> bool:
        return set(self.alphabet) == {1, -1}


@dataclass(frozen=True)
class Scenario:
    """Observables plus the subsets declared jointly measurable.

    Singletons are implicitly compatible and compatibility is closed under
    taking subsets, so membership tests go through :meth:`is_compatible`
    rather than raw set lookup.
    """

    observables: tuple[Observable, ...]
    compatible_sets: tuple[frozenset[str], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "observables", tuple(self.observables))
        ids = [o.id for o in self.observables]
        if len(set(ids)) != len(ids):
            raise ContexcertError("duplicate observable ids in scenario")
        sets = tuple(frozenset(s) for s in self.compatible_sets)
        object.__setattr__(self, "compatible_sets", sets)
        known = set(ids)
        for s in sets:
            unknown = s - known
            if unknown:
                raise UnknownObservable(
                    f"compatible set {sorted(s)} refers to undeclared ids {sorted(unknown)}"
                )

    @cached_property
    def _index(self) -> dict[str, int]:
        return {o.id: i for i, o in enumerate(self.observables)}

    @cached_property
    def _by_id(self) -> dict[str, Observable]:
        return {o.id: o for o in self.observables}

    def observable(self, obs_id: str) -> Observable:
        try:
            return self._by_id[obs_id]
        except KeyError:
            raise UnknownObservable(f"unknown observable {obs_id!r}") from None

    def is_compatible(self, ids: Iterable[str]) -> bool:
        s = frozenset(ids)
        if not s <= set(self._index):
            return False
        if len(s) <= 1:
            return True
        return any(s <= declared for declared in self.compatible_sets)

    def canonical_setting(self, ids: Iterable[str]) -> tuple[str, ...]:
        """Order ids by declaration order; unknown ids raise."""
        ids = tuple(ids)
        for i in ids:
            self.observable(i)
        if len(set(ids)) != len(ids):
            raise ContexcertError(f"setting {ids} repeats an observable")
        return tuple(sorted(ids, key=self._index.__getitem__))

    def alphabets(self, ids: Sequence[str]) -> tuple[tuple, ...]:
        return tuple(self.observable(i).alphabet for i in ids)


@dataclass(frozen=True)
class OutcomeRecord:
    """One joint measurement: an ordered setting and its outcome values."""

    setting: tuple[str, ...]
    outcomes: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "setting", tuple(self.setting))
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if len(self.setting) != len(self.outcomes):
            raise ContexcertError("setting and outcomes lengths differ")

    def validate(self, scenario: Scenario) -> None:
        if len(set(self.setting)) != len(self.setting):
            raise ContexcertError(f"setting {self.setting} repeats an observable")
        if not scenario.is_compatible(self.setting):
            raise IncompatibleSetting(f"setting {self.setting} is not jointly measurable")
        for obs_id, value in zip(self.setting, self.outcomes):
            if value not in scenario.observable(obs_id).alphabet:
                raise ContexcertError(
                    f"outcome {value!r} not in alphabet of {obs_id}"
                )


class Dataset:
    """Ordered joint-outcome records over one scenario.

    Records are stored in contiguous per-setting blocks (a numpy matrix per
    block when the alphabet is numeric) so that large synthetic datasets stay
    cheap to count over; iteration still yields individual
    :class:`OutcomeRecord` values in acquisition order.
    """

    def __init__(
        self,
        scenario: Scenario,
        records: Iterable[OutcomeRecord] = (),
        meta: Mapping[str, Any] | None = None,
    ) -> None:
        self.scenario = scenario
        self.meta: dict[str, Any] = dict(meta or {})
        blocks: list[tuple[tuple[str, ...], list[tuple]]] = []
        for rec in records:
            rec.validate(scenario)
            if blocks and blocks[-1][0] == rec.setting:
                blocks[-1][1].append(rec.outcomes)
            else:
                blocks.append((rec.setting, [rec.outcomes]))
        self._blocks: list[tuple[tuple[str, ...], Any]] = [
            (setting, _pack_outcomes(rows)) for setting, rows in blocks
        ]

    @classmethod
    def from_blocks(
        cls,
        scenario: Scenario,
        blocks: Iterable[tuple[Sequence[str], Any]],
        meta: Mapping[str, Any] | None = None,
    ) -> "Dataset":
        """Build directly from (setting, outcome-matrix) blocks.

        Each matrix row is one record; values are validated against the
        scenario's alphabets.
        """
        ds = cls(scenario, (), meta)
        for setting, rows in blocks:
            setting = tuple(setting)
            if len(set(setting)) != len(setting):
                raise ContexcertError(f"setting {setting} repeats an observable")
            if not scenario.is_compatible(setting):
                raise IncompatibleSetting(f"setting {setting} is not jointly measurable")
            alphabets = scenario.alphabets(setting)
            if isinstance(rows, np.ndarray):
                packed: Any = np.asarray(rows, dtype=np.int64)
                if packed.ndim != 2 or packed.shape[1] != len(setting):
                    raise ContexcertError("outcome matrix shape does not match setting")
                for obs, col, alphabet in zip(setting, packed.T, alphabets):
                    if not np.isin(col, np.asarray(alphabet, dtype=np.int64)).all():
                        raise ContexcertError(f"outcome outside alphabet of {obs}")
            else:
                packed = _pack_outcomes([tuple(r) for r in rows])
                for row in _iter_rows(packed):
                    if len(row) != len(setting):
                        raise ContexcertError("outcome row width does not match setting")
                    for obs, value, alphabet in zip(setting, row, alphabets):
                        if value not in alphabet:
                            raise ContexcertError(f"outcome {value!r} not in alphabet of {obs}")
            if len(packed) > 0:
                ds._blocks.append((setting, packed))
        return ds

    def __len__(self) -> int:
        return sum(len(rows) for _, rows in self._blocks)

    def __iter__(self) -> Iterator[OutcomeRecord]:
        for setting, rows in self._blocks:
            for row in _iter_rows(rows):
                yield OutcomeRecord(setting, row)

    @property
    def records(self) -> tuple[OutcomeRecord, ...]:
        return tuple(self)

    def blocks(self) -> Iterator[tuple[tuple[str, ...], Any]]:
        return iter(self._blocks)

    def settings(self) -> tuple[tuple[str, ...], ...]:
        """Distinct canonical settings in first-appearance order."""
        seen: dict[tuple[str, ...], None] = {}
        for setting, _ in self._blocks:
            seen.setdefault(self.scenario.canonical_setting(setting), None)
        return tuple(seen)

    def count_for(self, setting: Iterable[str]) -> int:
        target = frozenset(setting)
        return sum(len(rows) for s, rows in self._blocks if frozenset(s) == target)


def _pack_outcomes(rows: list[tuple]) -> Any:
    """Store outcome rows as an int matrix when possible, else a tuple list."""
    if rows and all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in rows[0]):
        return np.asarray(rows, dtype=np.int64)
    return list(rows)


def _iter_rows(rows: Any) -> Iterator[tuple]:
    if isinstance(rows, np.ndarray):
        for row in rows:
            yield tuple(int(v) for v in row)
    else:
        yield from rows


@dataclass(frozen=True)
class ProbTable:
    """Normalized probability table over an ordered observable subset.

    Keys of ``probs`` are outcome tuples positionally matching ``support``;
    cells missing from the mapping are implied zeros.  Values may be floats
    or exact :class:`fractions.Fraction` entries; exact tables stay exact
    under marginalization and correlation.
    """

    support: tuple[str, ...]
    probs: Mapping[tuple, Any]
    alphabets: tuple[tuple, ...]
    sample_size: int | None = None

    def __post_init__(self) -> None:
        support = tuple(self.support)
        object.__setattr__(self, "support", support)
        alphabets = tuple(tuple(a) for a in self.alphabets)
        object.__setattr__(self, "alphabets", alphabets)
        if not support:
            raise ContexcertError("table support must be nonempty")
        if len(set(support)) != len(support):
            raise ContexcertError("table support repeats an observable")
        if len(alphabets) != len(support):
            raise ContexcertError("alphabets must match support positionally")
        cells = set(product(*alphabets))
        probs = {tuple(k): v for k, v in dict(self.probs).items()}
        object.__setattr__(self, "probs", probs)
        for key, value in probs.items():
            if key not in cells:
                raise ContexcertError(f"outcome tuple {key} outside alphabet product")
            if value < 0:
                raise ContexcertError(f"negative probability {value!r} at {key}")
        total = _accurate_sum(probs.values())
        if abs(total - 1) > NORMALIZATION_TOL:
            raise ContexcertError(f"table not normalized: sum = {total!r}")

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, (Fraction, int)) for v in self.probs.values())

    def prob(self, outcome: tuple) -> Any:
        return self.probs.get(tuple(outcome), 0)

    def cells(self) -> Iterator[tuple]:
        """All outcome tuples in lexicographic (alphabet-declared) order."""
        return product(*self.alphabets)

    def alphabet_of(self, obs_id: str) -> tuple:
        try:
            return self.alphabets[self.support.index(obs_id)]
        except ValueError:
            raise UnknownObservable(f"{obs_id!r} not in table support") from None

    def mean(self, obs_id: str) -> float:
        """Expectation of a numeric observable under this table's marginal."""
        marg = marginalize(self, (obs_id,))
        return _maybe_float(sum(v * p for (v,), p in marg.probs.items()))


def _accurate_sum(values: Iterable) -> Any:
    values = list(values)
    if all(isinstance(v, (Fraction, int)) for v in values):
        return sum(values, start=Fraction(0))
    return math.fsum(values)


def _maybe_float(value: Any) -> Any:
    return value if isinstance(value, Fraction) else float(value)


def estimate_table(dataset: Dataset, setting: Sequence[str]) -> ProbTable:
    """Empirical joint table for one setting: cell counts over matching records.

    Matching is order-insensitive; outcome tuples are canonicalized to the
    scenario's declared observable order, so differently-ordered records
    produce identical tables.  Settings with zero matching records raise
    :class:`UnknownSetting` rather than returning a degenerate table.
    """
    scenario = dataset.scenario
    canonical = scenario.canonical_setting(setting)
    if not scenario.is_compatible(canonical):
        raise IncompatibleSetting(f"setting {tuple(setting)} is not jointly measurable")
    target = frozenset(canonical)

    counts: Counter = Counter()
    total = 0
    for block_setting, rows in dataset.blocks():
        if frozenset(block_setting) != target:
            continue
        perm = [block_setting.index(obs) for obs in canonical]
        if isinstance(rows, np.ndarray):
            arr = rows[:, perm]
            uniq, cnt = np.unique(arr, axis=0, return_counts=True)
            for row, c in zip(uniq, cnt):
                counts[tuple(int(v) for v in row)] += int(c)
            total += arr.shape[0]
        else:
            for row in rows:
                counts[tuple(row[p] for p in perm)] += 1
                total += 1
    if total == 0:
        raise UnknownSetting(f"no records for setting {tuple(setting)}")

    probs = {cell: count / total for cell, count in counts.items()}
    return ProbTable(
        support=canonical,
        probs=probs,
        alphabets=scenario.alphabets(canonical),
        sample_size=total,
    )


def marginalize(table: ProbTable, keep: Sequence[str]) -> ProbTable:
    """Sum out every observable not in ``keep``; support order follows ``keep``."""
    keep = tuple(keep)
    if not keep:
        raise NotSubset("keep list must be nonempty")
    if len(set(keep)) != len(keep):
        raise NotSubset("keep list repeats an observable")
    missing = set(keep) - set(table.support)
    if missing:
        raise NotSubset(f"{sorted(missing)} not in table support {table.support}")
    if keep == table.support:
        return table

    positions = [table.support.index(obs) for obs in keep]
    exact = table.is_exact
    acc: dict[tuple, Any] = {}
    for cell, p in table.probs.items():
        key = tuple(cell[i] for i in positions)
        if exact:
            acc[key] = acc.get(key, Fraction(0)) + p
        else:
            acc[key] = acc.get(key, 0.0) + p
    return ProbTable(
        support=keep,
        probs=acc,
        alphabets=tuple(table.alphabets[i] for i in positions),
        sample_size=table.sample_size,
    )


def correlation(table: ProbTable) -> float:
    """Product expectation sum_{a,b} a*b*p(a,b) for a two-observable +-1 table."""
    if len(table.support) != 2:
        raise WrongArity(f"correlation needs a pair table, got support {table.support}")
    for obs, alphabet in zip(table.support, table.alphabets):
        if set(alphabet) != {1, -1}:
            raise NonDichotomous(f"{obs} has alphabet {alphabet}, need (+1, -1)")
    value = sum(a * b * p for (a, b), p in table.probs.items())
    if isinstance(value, Fraction):
        return value
    return float(min(max(value, -1.0), 1.0))


def pair_key(a: str, b: str) -> frozenset:
    if a == b:
        raise ContexcertError(f"correlation pair must join two distinct observables, got {a!r} twice")
    return frozenset((a, b))


@dataclass(frozen=True)
class CorrelationSet:
    """Pairwise +-1 correlations plus per-observable means.

    ``means`` keeps the first marginal encountered per observable;
    ``mean_candidates`` keeps every (pair table, mean) candidate so that
    cross-context discrepancies can be handed to the signaling test instead
    of being silently averaged.
    """

    entries: Mapping[frozenset, float]
    means: Mapping[str, float] = field(default_factory=dict)
    sample_sizes: Mapping[frozenset, int] = field(default_factory=dict)
    mean_candidates: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self) -> None:
        entries = {frozenset(k): v for k, v in dict(self.entries).items()}
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "means", dict(self.means))
        object.__setattr__(self, "sample_sizes", {frozenset(k): int(v) for k, v in dict(self.sample_sizes).items()})
        object.__setattr__(self, "mean_candidates", {k: tuple(v) for k, v in dict(self.mean_candidates).items()})
        for key, value in entries.items():
            if len(key) != 2:
                raise ContexcertError(f"correlation key {set(key)} must contain two observables")
            if abs(value) > 1 + 1e-12:
                raise ContexcertError(f"correlation {value!r} outside [-1, 1]")
        for obs, m in self.means.items():
            if abs(m) > 1 + 1e-12:
                raise ContexcertError(f"mean {m!r} of {obs} outside [-1, 1]")

    def value(self, a: str, b: str) -> float:
        try:
            return self.entries[pair_key(a, b)]
        except KeyError:
            raise ContexcertError(f"no correlation recorded for pair ({a}, {b})") from None

    def has_pair(self, a: str, b: str) -> bool:
        return pair_key(a, b) in self.entries

    def sample_size(self, a: str, b: str) -> int | None:
        return self.sample_sizes.get(pair_key(a, b))

    def max_abs_mean(self, ids: Iterable[str] | None = None) -> float:
        ids = tuple(ids) if ids is not None else tuple(self.means)
        return max((abs(self.means.get(i, 0.0)) for i in ids), default=0.0)

    def is_zero_mean(self, tolerance: float) -> bool:
        return self.max_abs_mean() <= tolerance


def correlation_set(dataset: Dataset, pairs: Sequence[tuple[str, str]]) -> CorrelationSet:
    """Estimate every requested pair correlation from the dataset.

    Means come from single-observable marginals of the pair tables; the first
    table encountered per observable wins, and all candidates are retained for
    the signaling check.
    """
    entries: dict[frozenset, float] = {}
    means: dict[str, float] = {}
    sample_sizes: dict[frozenset, int] = {}
    candidates: dict[str, list] = {}
    for a, b in pairs:
        key = pair_key(a, b)
        table = estimate_table(dataset, (a, b))
        entries[key] = correlation(table)
        sample_sizes[key] = table.sample_size or 0
        for obs in table.support:
            m = table.mean(obs)
            candidates.setdefault(obs, []).append((key, m))
            means.setdefault(obs, m)
    return CorrelationSet(
        entries=entries,
        means=means,
        sample_sizes=sample_sizes,
        mean_candidates={k: tuple(v) for k, v in candidates.items()},
    )
