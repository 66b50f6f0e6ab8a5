"""Command-line front door.

Subcommands: generate (singlet | lhv | state-file), test (chsh | sz |
bell-original), oracle, randomness, full-suite.  JSON is the canonical
output; the text format is a projection of the same data.  Exit status
signals operational failure only (I/O, parsing, bad arguments) - scientific
verdicts are data and always exit 0.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from itertools import combinations
from pathlib import Path

import numpy as np

from . import __version__
from .belltests import (
    ChshInput,
    TripleInput,
    chsh_ksigma,
    chsh_test,
    original_bell_ksigma,
    original_bell_test,
    sz_ksigma,
    sz_test,
)
from .dataio import (
    dumps_json,
    ingest,
    read_constraint_system,
    read_label_stream,
    write_dataset_csv,
    write_scenario_json,
)
from .errors import ContexcertError
from .jpdoracle import jpd_feasible
from .quantumgen import (
    DensityState,
    ProjectiveObservable,
    planar_observable,
    sample_lhv_dataset,
    sample_quantum_dataset,
    singlet_state,
    sphere_lhv_model,
)
from .randomtests import PlaceSelection, randomness_test
from .scenario import correlation_set
from .suite import (
    MissingSettings,
    RunConfig,
    find_quadrupole,
    find_triangle,
    run_full_suite,
)
from .tolerances import FixedTolerance, parse_policy

SEED_ENV = "CONTEXCERT_SEED"


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get(SEED_ENV)
    if env is None:
        raise ContexcertError(
            f"a seed is required: pass --seed or set {SEED_ENV}"
        )
    return int(env)


def _emit(payload: dict, args) -> None:
    if getattr(args, "format", "json") == "text":
        text = _render_text(payload)
    else:
        text = dumps_json(payload)
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _print_summary(payload: dict, args) -> None:
    # generate commands use --out for the dataset itself; their run summary
    # always goes to stdout
    if getattr(args, "format", "json") == "text":
        sys.stdout.write(_render_text(payload))
    else:
        sys.stdout.write(dumps_json(payload))


def _render_text(payload: dict, indent: int = 0) -> str:
    lines = []
    pad = "  " * indent
    for key in sorted(payload) if isinstance(payload, dict) else []:
        value = payload[key]
        if isinstance(value, dict):
            lines.append(f"{pad}{key}:")
            lines.append(_render_text(value, indent + 1))
        elif isinstance(value, list):
            lines.append(f"{pad}{key}: {json.dumps(value)}")
        else:
            lines.append(f"{pad}{key}: {value}")
    return "\n".join(line for line in lines if line) + ("\n" if indent == 0 else "")


def _scenario_out_path(args) -> Path:
    if args.scenario_out:
        return Path(args.scenario_out)
    return Path(args.out).with_suffix(".scenario.json")


def _parse_angles(text: str) -> tuple[float, float, float, float]:
    parts = [float(tok) for tok in text.split(",")]
    if len(parts) != 4:
        raise ContexcertError("--angles needs four comma-separated values a1,a2,b1,b2")
    return tuple(parts)


def cmd_generate_singlet(args) -> None:
    seed = _resolve_seed(args.seed)
    a1, a2, b1, b2 = _parse_angles(args.angles)
    state = singlet_state()
    obs = {
        "A1": planar_observable("A1", a1, qubit=0),
        "A2": planar_observable("A2", a2, qubit=0),
        "B1": planar_observable("B1", b1, qubit=1),
        "B2": planar_observable("B2", b2, qubit=1),
    }
    settings = [
        ((obs[x], obs[y]), args.n)
        for x in ("A1", "A2")
        for y in ("B1", "B2")
    ]
    dataset = sample_quantum_dataset(state, settings, seed)
    dataset.meta["angles"] = {"A1": a1, "A2": a2, "B1": b1, "B2": b2}
    write_dataset_csv(dataset, args.out)
    write_scenario_json(dataset.scenario, _scenario_out_path(args))
    _print_summary({"written": str(args.out), "records": len(dataset), "seed": seed}, args)


def _parse_axes(text: str) -> dict[str, tuple[float, float, float]]:
    axes = {}
    for item in text.split(","):
        obs_id, sep, angle = item.partition(":")
        if not sep:
            raise ContexcertError("--axes format is ID:angle,ID:angle,...")
        theta = float(angle)
        axes[obs_id.strip()] = (math.sin(theta), 0.0, math.cos(theta))
    return axes


def cmd_generate_lhv(args) -> None:
    seed = _resolve_seed(args.seed)
    if args.model != "sphere":
        raise ContexcertError(f"unknown LHV model {args.model!r}")
    axes = _parse_axes(args.axes)
    ids = list(axes)
    if len(ids) != 4:
        raise ContexcertError("sphere model expects four observables (two per side)")
    model = sphere_lhv_model(axes)
    pairs = [(ids[0], ids[2]), (ids[0], ids[3]), (ids[1], ids[2]), (ids[1], ids[3])]
    dataset = sample_lhv_dataset(model, [(p, args.n) for p in pairs], seed)
    write_dataset_csv(dataset, args.out)
    write_scenario_json(dataset.scenario, _scenario_out_path(args))
    _print_summary({"written": str(args.out), "records": len(dataset), "seed": seed}, args)


def _complex_matrix(data) -> np.ndarray:
    rows = []
    for row in data:
        entries = []
        for cell in row:
            if isinstance(cell, (list, tuple)):
                entries.append(complex(cell[0], cell[1]))
            else:
                entries.append(complex(cell))
        rows.append(entries)
    return np.asarray(rows, dtype=complex)


def _load_observable(entry: dict, dim: int) -> ProjectiveObservable:
    if "angle" in entry:
        n_qubits = int(round(math.log2(dim)))
        return planar_observable(
            entry["id"], float(entry["angle"]), qubit=int(entry.get("qubit", 0)),
            n_qubits=n_qubits,
        )
    projectors = {
        int(value): _complex_matrix(matrix)
        for value, matrix in entry["projectors"].items()
    }
    return ProjectiveObservable(entry["id"], projectors)


def cmd_generate_state_file(args) -> None:
    seed = _resolve_seed(args.seed)
    state_data = json.loads(Path(args.state).read_text())
    state = DensityState(_complex_matrix(state_data["matrix"]))
    obs_data = json.loads(Path(args.observables).read_text())
    observables = {o["id"]: _load_observable(o, state.dim) for o in obs_data}
    settings = []
    for item in args.pairs.split(","):
        pair, sep, count = item.rpartition(":")
        if not sep:
            raise ContexcertError("--pairs format is A+B:count,...")
        x, _, y = pair.partition("+")
        settings.append(((observables[x.strip()], observables[y.strip()]), int(count)))
    dataset = sample_quantum_dataset(state, settings, seed)
    write_dataset_csv(dataset, args.out)
    write_scenario_json(dataset.scenario, _scenario_out_path(args))
    _print_summary({"written": str(args.out), "records": len(dataset), "seed": seed}, args)


def _tolerance_for(policy, ksigma_fn) -> float:
    if isinstance(policy, FixedTolerance):
        return policy.epsilon
    return ksigma_fn(policy.k)


def cmd_test(args) -> None:
    dataset = ingest(args.data, args.scenario)
    policy = parse_policy(args.tolerance_policy)

    if args.which == "chsh":
        quad = find_quadrupole(dataset)
        if quad is None:
            raise MissingSettings("chsh needs four observables with all cross pairs measured")
        a_block, b_block = quad
        corr = correlation_set(dataset, [(x, y) for x in a_block for y in b_block])
        chsh_input = ChshInput(corr, a_block, b_block)
        tol = _tolerance_for(policy, lambda k: chsh_ksigma(chsh_input, k))
        verdict = chsh_test(chsh_input, tol)
    elif args.which == "sz":
        triple = find_triangle(dataset)
        if triple is None:
            raise MissingSettings("sz needs three observables with all pairwise settings measured")
        corr = correlation_set(dataset, list(combinations(triple, 2)))
        triple_input = TripleInput(corr, triple, args.zero_mean_tolerance)
        tol = _tolerance_for(policy, lambda k: sz_ksigma(triple_input, k))
        verdict = sz_test(triple_input, tol)
    else:  # bell-original
        quad = find_quadrupole(dataset)
        if quad is None:
            raise MissingSettings(
                "bell-original needs four observables with all cross pairs measured"
            )
        a_block, b_block = quad
        cross = [(x, y) for x in a_block for y in b_block]
        corr = correlation_set(dataset, cross)
        if args.constraint_pair:
            a2, _, b1 = args.constraint_pair.partition("+")
            if a2 in b_block:  # accept either order
                a2, b1 = b1, a2
            if a2 not in a_block or b1 not in b_block:
                raise ContexcertError(
                    f"--constraint-pair {args.constraint_pair} does not name one "
                    f"observable from each detected block {a_block} / {b_block}"
                )
        else:
            a2, b1 = max(cross, key=lambda p: (abs(corr.value(*p)), p))
        a1 = a_block[0] if a_block[1] == a2 else a_block[1]
        b2 = b_block[0] if b_block[1] == b1 else b_block[1]
        tol = _tolerance_for(policy, lambda k: original_bell_ksigma(corr, a1, a2, b1, b2, k))
        verdict = original_bell_test(
            corr, a1=a1, a2=a2, b1=b1, b2=b2, delta=args.delta, tolerance=tol
        )
    _emit(verdict.to_json(), args)


def cmd_oracle(args) -> None:
    system = read_constraint_system(args.constraints, exact=args.exact)
    result = jpd_feasible(system, feasibility_tol=args.tolerance, exact=args.exact)
    _emit(result.to_json(), args)


def _parse_selections(text: str, seed: int) -> list[PlaceSelection]:
    selections = []
    for token in text.split(","):
        token = token.strip()
        if token == "prime":
            selections.append(PlaceSelection.prime_index())
        elif token.startswith("after:"):
            pattern = tuple(_symbol(ch) for ch in token[len("after:"):])
            selections.append(PlaceSelection.after_pattern(pattern))
        elif token.startswith("mod:"):
            _, m, r = token.split(":")
            selections.append(PlaceSelection.index_arithmetic(int(m), int(r)))
        elif token == "coin" or token.startswith("coin:"):
            parts = token.split(":")
            coin_seed = int(parts[1]) if len(parts) > 1 else seed
            bias = float(parts[2]) if len(parts) > 2 else 0.5
            selections.append(PlaceSelection.external_coin(coin_seed, bias))
        else:
            raise ContexcertError(f"unknown selection token {token!r}")
    return selections


def _symbol(ch: str):
    try:
        return int(ch)
    except ValueError:
        return ch


def cmd_randomness(args) -> None:
    if args.stream:
        seq = read_label_stream(args.stream)
    elif args.data and args.scenario and args.setting and args.observable:
        from .suite import extract_streams

        dataset = ingest(args.data, args.scenario)
        canonical = dataset.scenario.canonical_setting(args.setting.split("+"))
        key = f"{args.observable}@{'+'.join(canonical)}"
        streams = extract_streams(dataset)
        if key not in streams:
            raise ContexcertError(f"stream {key} not present in the dataset")
        seq = streams[key]
    else:
        raise ContexcertError(
            "provide --stream, or --data/--scenario/--setting/--observable"
        )
    seed = args.seed if args.seed is not None else int(os.environ.get(SEED_ENV, "0"))
    selections = _parse_selections(args.selections, seed)
    policy = parse_policy(args.policy)
    report = randomness_test(seq, selections, policy, args.min_retained)
    _emit(report.to_json(), args)


def cmd_full_suite(args) -> None:
    dataset = ingest(args.data, args.scenario)
    config = RunConfig(
        tolerance_policy=parse_policy(args.tolerance_policy),
        randomness_policy=parse_policy(args.randomness_policy),
        seed=args.seed if args.seed is not None else int(os.environ.get(SEED_ENV, "0")),
        delta=args.delta,
        zero_mean_tolerance=args.zero_mean_tolerance,
        min_retained=args.min_retained,
    )
    report = run_full_suite(dataset, config)
    _emit(report.to_json(), args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contexcert",
        description="certification tests for contextuality and randomness",
    )
    parser.add_argument("--version", action="version", version=f"contexcert {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="synthesize datasets")
    gen_sub = gen.add_subparsers(dest="generator", required=True)

    g_singlet = gen_sub.add_parser("singlet", help="two-qubit singlet sampler")
    g_singlet.add_argument("--angles", required=True, help="a1,a2,b1,b2 in radians")
    g_singlet.add_argument("--n", type=int, required=True, help="records per pair")
    g_singlet.add_argument("--seed", type=int)
    g_singlet.add_argument("--out", required=True)
    g_singlet.add_argument("--scenario-out")
    g_singlet.add_argument("--format", choices=("json", "text"), default="json")
    g_singlet.set_defaults(func=cmd_generate_singlet)

    g_lhv = gen_sub.add_parser("lhv", help="local hidden-variable sampler")
    g_lhv.add_argument("--model", default="sphere")
    g_lhv.add_argument(
        "--axes",
        default="A1:0,A2:1.5707963,B1:0.7853982,B2:2.3561945",
        help="ID:planar-angle list; first two ids form the A side",
    )
    g_lhv.add_argument("--n", type=int, required=True)
    g_lhv.add_argument("--seed", type=int)
    g_lhv.add_argument("--out", required=True)
    g_lhv.add_argument("--scenario-out")
    g_lhv.add_argument("--format", choices=("json", "text"), default="json")
    g_lhv.set_defaults(func=cmd_generate_lhv)

    g_state = gen_sub.add_parser("state-file", help="sample from a state JSON file")
    g_state.add_argument("--state", required=True)
    g_state.add_argument("--observables", required=True)
    g_state.add_argument("--pairs", required=True, help="A+B:count,...")
    g_state.add_argument("--seed", type=int)
    g_state.add_argument("--out", required=True)
    g_state.add_argument("--scenario-out")
    g_state.add_argument("--format", choices=("json", "text"), default="json")
    g_state.set_defaults(func=cmd_generate_state_file)

    test = sub.add_parser("test", help="run one inequality test")
    test.add_argument("which", choices=("chsh", "sz", "bell-original"))
    test.add_argument("--data", required=True)
    test.add_argument("--scenario", required=True)
    test.add_argument("--tolerance-policy", default="k-sigma:3")
    test.add_argument("--delta", type=float, default=0.01)
    test.add_argument("--zero-mean-tolerance", type=float, default=0.05)
    test.add_argument("--constraint-pair", help="e.g. A2+B1 (bell-original only)")
    test.add_argument("--out")
    test.add_argument("--format", choices=("json", "text"), default="json")
    test.set_defaults(func=cmd_test)

    oracle = sub.add_parser("oracle", help="joint-distribution feasibility")
    oracle.add_argument("--constraints", required=True)
    oracle.add_argument("--tolerance", type=float, default=1e-9)
    oracle.add_argument("--exact", action="store_true")
    oracle.add_argument("--out")
    oracle.add_argument("--format", choices=("json", "text"), default="json")
    oracle.set_defaults(func=cmd_oracle)

    rand = sub.add_parser("randomness", help="place-selection battery")
    rand.add_argument("--stream", help="text file, one symbol per line")
    rand.add_argument("--data")
    rand.add_argument("--scenario")
    rand.add_argument("--setting", help="e.g. A1+B1")
    rand.add_argument("--observable")
    rand.add_argument("--selections", default="prime,mod:2:0,coin")
    rand.add_argument("--policy", default="k-sigma:4")
    rand.add_argument("--min-retained", type=int, default=30)
    rand.add_argument("--seed", type=int)
    rand.add_argument("--out")
    rand.add_argument("--format", choices=("json", "text"), default="json")
    rand.set_defaults(func=cmd_randomness)

    full = sub.add_parser("full-suite", help="signaling + tests + oracle + randomness")
    full.add_argument("--data", required=True)
    full.add_argument("--scenario", required=True)
    full.add_argument("--tolerance-policy", default="k-sigma:3")
    full.add_argument("--randomness-policy", default="k-sigma:4")
    full.add_argument("--delta", type=float, default=0.01)
    full.add_argument("--zero-mean-tolerance", type=float, default=0.05)
    full.add_argument("--min-retained", type=int, default=30)
    full.add_argument("--seed", type=int)
    full.add_argument("--out")
    full.add_argument("--format", choices=("json", "text"), default="json")
    full.set_defaults(func=cmd_full_suite)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (ContexcertError, OSError, json.JSONDecodeError) as exc:
        print(f"contexcert: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
