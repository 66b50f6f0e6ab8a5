"""File formats: dataset CSV, scenario JSON, constraint systems, label streams.

Dataset CSV carries one joint measurement per row, ``setting;outcomes`` with
the setting a '+'-joined id list and the outcomes comma-separated values,
e.g. ``A1+B2;1,-1``.  The header row ``setting;outcomes`` is required.  The
scenario lives in a JSON sidecar:
``{"observables": [{"id", "alphabet"}], "compatible": [[ids...]]}``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .errors import ContexcertError
from .jpdoracle import MarginalConstraintSystem
from .randomtests import LabelSequence
from .scenario import (
    DICHOTOMIC,
    Dataset,
    Observable,
    ProbTable,
    Scenario,
)

CSV_HEADER = "setting;outcomes"


class ParseError(ContexcertError):
    """Malformed file content; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message if line is None else f"line {line}: {message}")


class ValidationError(ContexcertError):
    """A parsed record violates the scenario; carries the record index."""

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        super().__init__(message if index is None else f"record {index}: {message}")


def _parse_value(token: str):
    token = token.strip()
    try:
        return int(token)
    except ValueError:
        return token


def read_scenario_json(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid scenario JSON: {exc}") from None
    try:
        observables = tuple(
            Observable(entry["id"], tuple(entry.get("alphabet", DICHOTOMIC)))
            for entry in data["observables"]
        )
        compatible = tuple(frozenset(s) for s in data.get("compatible", []))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"scenario JSON missing field: {exc}") from None
    return Scenario(observables=observables, compatible_sets=compatible)


def write_scenario_json(scenario: Scenario, path: str | Path) -> None:
    data = {
        "observables": [
            {"id": o.id, "alphabet": list(o.alphabet)} for o in scenario.observables
        ],
        "compatible": [sorted(s) for s in scenario.compatible_sets],
    }
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_dataset_csv(dataset: Dataset, path: str | Path) -> None:
    lines = [CSV_HEADER]
    for setting, rows in dataset.blocks():
        prefix = "+".join(setting)
        if isinstance(rows, np.ndarray):
            for row in rows:
                lines.append(f"{prefix};{','.join(str(int(v)) for v in row)}")
        else:
            for row in rows:
                lines.append(f"{prefix};{','.join(str(v) for v in row)}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_dataset_csv(path: str | Path, scenario: Scenario) -> Dataset:
    """Parse and validate a dataset CSV; errors carry line numbers."""
    text = Path(path).read_text()
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty file", line=1)
    if lines[0].strip() != CSV_HEADER:
        raise ParseError(f"expected header {CSV_HEADER!r}, got {lines[0]!r}", line=1)

    blocks: list[tuple[tuple[str, ...], list[tuple]]] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(";")
        if len(parts) != 2:
            raise ParseError("expected exactly one ';' separator", line=lineno)
        setting = tuple(tok.strip() for tok in parts[0].split("+"))
        outcomes = tuple(_parse_value(tok) for tok in parts[1].split(","))
        if len(setting) != len(outcomes):
            raise ParseError(
                f"{len(setting)} setting ids but {len(outcomes)} outcomes", line=lineno
            )
        try:
            for obs_id, value in zip(setting, outcomes):
                if value not in scenario.observable(obs_id).alphabet:
                    raise ContexcertError(f"outcome {value!r} not in alphabet of {obs_id}")
            if not scenario.is_compatible(setting):
                raise ContexcertError(f"setting {setting} is not jointly measurable")
        except ContexcertError as exc:
            raise ValidationError(str(exc), index=lineno - 2) from None
        if blocks and blocks[-1][0] == setting:
            blocks[-1][1].append(outcomes)
        else:
            blocks.append((setting, [outcomes]))
    return Dataset.from_blocks(scenario, blocks)


def ingest(csv_path: str | Path, scenario_json_path: str | Path) -> Dataset:
    """Load a scenario sidecar plus its dataset CSV into a validated Dataset."""
    scenario = read_scenario_json(scenario_json_path)
    dataset = read_dataset_csv(csv_path, scenario)
    dataset.meta["source"] = str(csv_path)
    dataset.meta["scenario_file"] = str(scenario_json_path)
    return dataset


def read_label_stream(path: str | Path, labels: Iterable | None = None) -> LabelSequence:
    """One symbol per line; integers are parsed, anything else stays a string."""
    values = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        token = raw.strip()
        if token:
            values.append(_parse_value(token))
    if not values:
        raise ParseError("stream contains no symbols", line=1)
    return LabelSequence.from_values(values, tuple(labels) if labels is not None else None)


def probtable_from_json(data: dict, exact: bool = False) -> ProbTable:
    support = tuple(data["support"])
    alphabets = tuple(
        tuple(a) for a in data.get("alphabets", [list(DICHOTOMIC)] * len(support))
    )
    probs = {}
    exact = exact or bool(data.get("exact"))
    for key, p in data["probs"].items():
        cell = tuple(_parse_value(tok) for tok in str(key).split(","))
        # Fraction(str(p)) reads the decimal literal exactly (0.1 -> 1/10),
        # which is what exact mode needs from hand-written JSON
        probs[cell] = Fraction(str(p)) if exact else float(p)
    return ProbTable(
        support=support,
        probs=probs,
        alphabets=alphabets,
        sample_size=data.get("sample_size"),
    )


def read_constraint_system(path: str | Path, exact: bool = False) -> MarginalConstraintSystem:
    """JSON schema: {"variables": [...], "constraints": [{support, probs}]}"""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid constraint JSON: {exc}") from None
    try:
        variables = tuple(data["variables"])
        constraints = []
        for entry in data["constraints"]:
            table = probtable_from_json(entry, exact=exact)
            constraints.append((table.support, table))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"constraint JSON missing field: {exc}") from None
    return MarginalConstraintSystem(variables=variables, constraints=tuple(constraints))


def dumps_json(obj: Any) -> str:
    """Canonical JSON used across the CLI: sorted keys, stable layout."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
