"""Command-line surface: fixed-point, table1, run, sample, validate.

All commands emit machine-readable output.  CSV uses one fixed column schema
(``scheme,n,k,epsilon,round,outcome,probability,trials,value``) in long
format; JSON mirrors the same data as structured objects with stable key
order.  Floats are written with 17 significant digits so identical seeds
reproduce identical bytes.

Exit codes: 0 success, 2 usage or domain error, 3 validation failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import oracle
from .hbac_core import build_transfer, fixed_point, hbac_round
from .register import (
    DiagonalState,
    ReducedState,
    make_thermal_params,
    reset,
    thermal_full,
    thermal_reduced,
    uniform_full,
    uniform_reduced,
)
from .schemes import (
    BATH_SCHEMES,
    HBAC,
    HBAC_ICO,
    HBAC_KICO,
    ICO_TREE_SORT,
    PAIR_CHOICES,
    SCHEMES,
    MaxAttemptsError,
    SchemeConfig,
    Trajectory,
    plus_weight_vector,
    run_round,
    run_scheme,
    sample_batch,
    success_probability,
)
from .switch import branch_transfer, standard_pair, switch_branches, tree_pair

CSV_COLUMNS = ("scheme", "n", "k", "epsilon", "round", "outcome", "probability", "trials", "value")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4

FORMATS = ("csv", "json")
INITIAL_SELECTORS = ("uniform", "thermal", "fixed-point")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def _join_state(vector) -> str:
    return "|".join(format(float(x), ".17g") for x in vector)


def _json_float(value):
    value = float(value)
    return value if math.isfinite(value) else None


def _render_csv(rows) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer)  # RFC-4180: CRLF line endings, quoting as needed
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(column)) for column in CSV_COLUMNS])
    return buffer.getvalue()


def _render_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _write_text(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
        return
    with open(output, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def _emit(rows, obj, fmt: str, output: str | None) -> None:
    text = _render_csv(rows) if fmt == "csv" else _render_json(obj)
    _write_text(text, output)


# ---------------------------------------------------------------------------
# run specifications
# ---------------------------------------------------------------------------

_RUNSPEC_TYPES = {
    "scheme": str,
    "n": int,
    "k": int,
    "epsilon": (int, float),
    "initial": (str, list),
    "trials": int,
    "seed": int,
    "output": str,
    "format": str,
    "pair": str,
    "level": int,
    "nondemolition": bool,
    "repump_rounds": int,
    "max_attempts": int,
    "desired_success": (int, float),
    "workers": int,
}

_RUNSPEC_DEFAULTS = {
    "trials": 1,
    "seed": 0,
    "format": "csv",
    "pair": "standard",
    "level": 0,
    "nondemolition": False,
    "repump_rounds": 0,
    "max_attempts": 100_000,
    "workers": 1,
}


def validate_runspec(raw: dict) -> dict:
    """Check key names and value types of a run specification."""
    if not isinstance(raw, dict):
        raise UsageError("run specification must be a JSON object")
    unknown = sorted(set(raw) - set(_RUNSPEC_TYPES))
    if unknown:
        raise UsageError(f"unknown run specification keys: {unknown}")
    for key, value in raw.items():
        expected = _RUNSPEC_TYPES[key]
        if isinstance(value, bool) and expected is not bool:
            raise UsageError(f"run specification key {key!r} has wrong type bool")
        if not isinstance(value, expected):
            raise UsageError(
                f"run specification key {key!r} expects {expected}, got {type(value).__name__}"
            )
    if "format" in raw and raw["format"] not in FORMATS:
        raise UsageError(f"format must be one of {FORMATS}, got {raw['format']!r}")
    if "scheme" in raw and raw["scheme"] not in SCHEMES:
        raise UsageError(f"scheme must be one of {SCHEMES}, got {raw['scheme']!r}")
    if "initial" in raw and isinstance(raw["initial"], str):
        if raw["initial"] not in INITIAL_SELECTORS:
            raise UsageError(
                f"initial selector must be one of {INITIAL_SELECTORS} or an explicit vector"
            )
    return dict(raw)


def load_runspec(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path}: {exc}") from exc
    return validate_runspec(raw)


_FLAG_KEYS = (
    "scheme",
    "n",
    "k",
    "epsilon",
    "initial",
    "trials",
    "seed",
    "output",
    "format",
    "pair",
    "level",
    "nondemolition",
    "repump_rounds",
    "max_attempts",
    "desired_success",
    "workers",
)


def _merge_runspec(args) -> dict:
    spec = dict(_RUNSPEC_DEFAULTS)
    if getattr(args, "config", None):
        spec.update(load_runspec(args.config))
    for key in _FLAG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            spec[key] = value
    if "scheme" not in spec:
        raise UsageError("a scheme is required (flag --scheme or config key 'scheme')")
    if "n" not in spec:
        raise UsageError("a register exponent is required (flag --n or config key 'n')")
    return validate_runspec(spec)


def _resolve_initial(selector, scheme: str, n: int, params):
    if selector is None:
        return None
    bath = scheme in BATH_SCHEMES
    if isinstance(selector, str):
        if selector == "uniform":
            return uniform_reduced(n) if bath else uniform_full(n)
        if selector == "thermal":
            if params is None:
                raise UsageError("a thermal initial state needs epsilon")
            return thermal_reduced(n, params) if bath else thermal_full(n, params)
        if selector == "fixed-point":
            if params is None:
                raise UsageError("a fixed-point initial state needs epsilon")
            profile = fixed_point(n, params)
            return profile if bath else reset(profile, params)
        raise UsageError(f"unknown initial selector {selector!r}")
    vector = np.asarray(selector, dtype=float)
    expected = 2**n if bath else 2 ** (n + 1)
    if vector.size != expected:
        raise UsageError(
            f"explicit initial vector must have length {expected} for this scheme, got {vector.size}"
        )
    return ReducedState.from_vector(vector) if bath else DiagonalState.from_vector(vector)


def _config_from_runspec(spec: dict) -> SchemeConfig:
    epsilon = spec.get("epsilon")
    params = make_thermal_params(epsilon) if epsilon is not None else None
    initial = _resolve_initial(spec.get("initial"), spec["scheme"], spec["n"], params)
    return SchemeConfig(
        scheme=spec["scheme"],
        n=spec["n"],
        epsilon=epsilon,
        k=spec.get("k"),
        initial=initial,
        desired_success=spec.get("desired_success"),
        seed=spec.get("seed", 0),
        pair=spec.get("pair", "standard"),
        level=spec.get("level", 0),
        nondemolition=spec.get("nondemolition", False),
        repump_rounds=spec.get("repump_rounds", 0),
        max_attempts=spec.get("max_attempts", 100_000),
    )


def _echo_runspec(spec: dict) -> dict:
    echo = {}
    for key in _FLAG_KEYS:
        if key in spec:
            value = spec[key]
            if isinstance(value, np.ndarray):
                value = [float(x) for x in value]
            echo[key] = value
    return echo


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_fixed_point(args) -> int:
    params = make_thermal_params(args.epsilon)
    profile = fixed_point(args.n, params)
    residual = float(
        np.abs(hbac_round(profile, params).populations - profile.populations).sum()
    )
    rows = []
    for i, value in enumerate(profile.populations):
        rows.append(
            {
                "scheme": HBAC,
                "n": args.n,
                "epsilon": args.epsilon,
                "round": i + 1,
                "outcome": "fixed-point",
                "value": float(value),
            }
        )
    rows.append(
        {
            "scheme": HBAC,
            "n": args.n,
            "epsilon": args.epsilon,
            "outcome": "residual",
            "value": residual,
        }
    )
    obj = {
        "command": "fixed-point",
        "n": args.n,
        "epsilon": args.epsilon,
        "fixed_point": [float(x) for x in profile.populations],
        "residual_l1": residual,
    }
    _emit(rows, obj, args.format, args.output)
    return EXIT_OK


_TABLE_QUANTITIES = (
    "bath",
    "input-pure-qubits",
    "output-pure-qubits",
    "success-probability",
    "expected-trials",
)


def cmd_table1(args) -> int:
    make_thermal_params(args.epsilon)
    rows = []
    json_rows = []
    for scheme in SCHEMES:
        config = SchemeConfig(
            scheme=scheme,
            n=args.n,
            epsilon=args.epsilon,
            k=args.k if scheme == HBAC_KICO else None,
            nondemolition=args.nondemolition,
        )
        report = run_scheme(config)
        values = {
            "bath": args.epsilon if report.bath_used else "none",
            "input-pure-qubits": report.input_pure_qubits,
            "output-pure-qubits": report.output_pure_qubits,
            "success-probability": report.success_probability,
            "expected-trials": report.expected_trials,
        }
        for quantity in _TABLE_QUANTITIES:
            rows.append(
                {
                    "scheme": scheme,
                    "n": args.n,
                    "k": config.k,
                    "epsilon": args.epsilon,
                    "outcome": quantity,
                    "probability": report.success_probability,
                    "value": values[quantity],
                }
            )
        json_rows.append(
            {
                "scheme": scheme,
                "bath": args.epsilon if report.bath_used else None,
                "input_pure_qubits": report.input_pure_qubits,
                "output_pure_qubits": report.output_pure_qubits,
                "success_probability": report.success_probability,
                "expected_trials": _json_float(report.expected_trials),
            }
        )
    obj = {
        "command": "table1",
        "n": args.n,
        "epsilon": args.epsilon,
        "k": args.k,
        "nondemolition": args.nondemolition,
        "rows": json_rows,
    }
    _emit(rows, obj, args.format, args.output)
    return EXIT_OK


def cmd_run(args) -> int:
    spec = _merge_runspec(args)
    config = _config_from_runspec(spec)
    report = run_scheme(config)
    base = {"scheme": config.scheme, "n": config.n, "k": config.k, "epsilon": config.epsilon}
    rows = []
    quantities = [
        ("success-probability", report.success_probability),
        ("expected-trials", report.expected_trials),
        ("input-pure-qubits", report.input_pure_qubits),
        ("output-pure-qubits", report.output_pure_qubits),
        ("bath-used", report.bath_used),
    ]
    if report.trials_for_desired is not None:
        quantities.append(("trials-for-desired", report.trials_for_desired))
    for name, value in quantities:
        rows.append(dict(base, outcome=name, probability=report.success_probability, value=value))
    for i, value in enumerate(report.final_state.populations):
        rows.append(dict(base, round=i + 1, outcome="final-state", value=float(value)))
    obj = {
        "command": "run",
        "runspec": _echo_runspec(spec),
        "report": {
            "success_probability": report.success_probability,
            "expected_trials": _json_float(report.expected_trials),
            "input_pure_qubits": report.input_pure_qubits,
            "output_pure_qubits": report.output_pure_qubits,
            "bath_used": report.bath_used,
            "trials_for_desired": report.trials_for_desired,
            "final_state_qubits": report.final_state.n + 1,
            "final_state": [float(x) for x in report.final_state.populations],
        },
    }
    _emit(rows, obj, spec["format"], spec.get("output"))
    return EXIT_OK


def _sample_chunk(payload):
    config, start, count = payload
    return sample_batch(config, count, start_index=start)


def _collect_trajectories(config: SchemeConfig, trials: int, workers: int) -> list[Trajectory]:
    if workers <= 1 or trials < 2:
        return sample_batch(config, trials)
    chunk = -(-trials // workers)
    payloads = [
        (config, start, min(chunk, trials - start)) for start in range(0, trials, chunk)
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_sample_chunk, payloads))
    return [trajectory for part in parts for trajectory in part]


def _attempt_probability(config: SchemeConfig, state, round_index: int) -> float:
    if config.scheme == ICO_TREE_SORT:
        spec = tree_pair(config.n, round_index - 1)
        plus, _minus = switch_branches(state, spec)
        return plus.probability / state.norm
    if config.scheme == HBAC:
        return 1.0
    weights = plus_weight_vector(config)
    return float(weights @ state.populations) / state.norm


def cmd_sample(args) -> int:
    spec = _merge_runspec(args)
    config = _config_from_runspec(spec)
    trials = spec["trials"]
    if trials < 1:
        raise UsageError(f"trials must be >= 1, got {trials}")
    workers = spec["workers"]
    if workers < 1:
        raise UsageError(f"workers must be >= 1, got {workers}")
    trajectories = _collect_trajectories(config, trials, workers)
    base = {"scheme": config.scheme, "n": config.n, "k": config.k, "epsilon": config.epsilon}
    want_json = spec["format"] == "json"
    # retry-chain states are shared across trajectories, so per-state work
    # (probability, serialized form) is cached by identity
    probability_cache: dict[tuple[int, int], float] = {}
    joined_cache: dict[int, str] = {}

    def probability_for(state, round_index: int) -> float:
        key = (id(state), round_index)
        cached = probability_cache.get(key)
        if cached is None:
            cached = _attempt_probability(config, state, round_index)
            probability_cache[key] = cached
        return cached

    def joined_for(state) -> str:
        cached = joined_cache.get(id(state))
        if cached is None:
            cached = _join_state(state.populations)
            joined_cache[id(state)] = cached
        return cached

    rows = []
    json_trajectories = []
    total_trials = 0
    for index, trajectory in enumerate(trajectories, start=1):
        total_trials += trajectory.trials_used
        attempts_json = [] if want_json else None
        for round_index, (state, outcome) in enumerate(trajectory.attempts, start=1):
            probability = probability_for(state, round_index)
            rows.append(
                dict(
                    base,
                    round=round_index,
                    outcome=outcome,
                    probability=probability,
                    trials=index,
                    value=joined_for(state),
                )
            )
            if want_json:
                attempts_json.append(
                    {
                        "round": round_index,
                        "outcome": outcome,
                        "probability": probability,
                        "state": [float(x) for x in state.populations],
                    }
                )
        if want_json:
            json_trajectories.append(
                {
                    "index": index,
                    "trials_used": trajectory.trials_used,
                    "terminal": trajectory.terminal,
                    "attempts": attempts_json,
                }
            )
    mean_trials = total_trials / len(trajectories)
    analytic = success_probability(config)
    expected = math.inf if analytic == 0.0 else 1.0 / analytic
    summary_rows = [
        dict(base, outcome="trajectories", value=len(trajectories)),
        dict(base, outcome="mean-trials", value=mean_trials),
        dict(base, outcome="expected-trials", value=expected),
    ]
    rows.extend(summary_rows)
    obj = {
        "command": "sample",
        "runspec": _echo_runspec(spec),
        "summary": {
            "trajectories": len(trajectories),
            "mean_trials": mean_trials,
            "expected_trials": _json_float(expected),
        },
        "trajectories": json_trajectories,
    }
    _emit(rows, obj, spec["format"], spec.get("output"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# validation battery
# ---------------------------------------------------------------------------


def _validation_checks(nmax: int, trials: int, seed: int):
    """Oracle equivalence plus the structural invariants, as (name, ok, detail)."""
    checks = []
    epsilons = (0.1, 0.5, 1.0)

    report = oracle.compare(nmax=nmax, trials=trials, seed=seed)
    for (family, sign), deviation in sorted(report.by_case.items()):
        checks.append(
            (f"oracle diagonal [{family} {sign}]", deviation < 1e-12, f"max dev {deviation:.3e}")
        )
    checks.append(
        (
            "oracle off-diagonals vanish",
            report.max_offdiagonal < 1e-12,
            f"max off-diag {report.max_offdiagonal:.3e}",
        )
    )

    worst = 0.0
    for eps in epsilons:
        params = make_thermal_params(eps)
        for n in range(1, min(nmax + 3, 7)):
            transfer = build_transfer(n, params)
            worst = max(worst, float(np.abs(transfer.entries.sum(axis=0) - 1.0).max()))
    checks.append(("transfer columns sum to one", worst < 1e-12, f"max dev {worst:.3e}"))

    worst = 0.0
    for eps in epsilons:
        params = make_thermal_params(eps)
        for n in range(1, min(nmax + 3, 7)):
            spec = standard_pair(n)
            total = (
                branch_transfer(n, params, spec, "+").entries
                + branch_transfer(n, params, spec, "-").entries
            )
            worst = max(worst, float(np.abs(total - build_transfer(n, params).entries).max()))
    checks.append(("branch matrices sum to transfer", worst < 1e-14, f"max dev {worst:.3e}"))

    worst = 0.0
    for eps in epsilons:
        params = make_thermal_params(eps)
        for n in range(1, 9):
            profile = fixed_point(n, params)
            worst = max(
                worst,
                float(np.abs(hbac_round(profile, params).populations - profile.populations).sum()),
            )
    checks.append(("fixed point is stationary", worst < 1e-12, f"max L1 residual {worst:.3e}"))

    rng = np.random.default_rng(seed)
    worst = 0.0
    for eps in epsilons:
        params = make_thermal_params(eps)
        for n in range(1, 7):
            transfer = build_transfer(n, params)
            vec = rng.random(2**n)
            vec /= vec.sum()
            state = ReducedState.from_vector(vec)
            direct = transfer.apply(state).populations
            matrix_free = hbac_round(state, params).populations
            worst = max(worst, float(np.abs(direct - matrix_free).max()))
    checks.append(("matrix-free round matches matrix", worst < 1e-13, f"max dev {worst:.3e}"))

    worst = 0.0
    for eps in epsilons:
        params = make_thermal_params(eps)
        config = SchemeConfig(scheme=HBAC_ICO, n=10, epsilon=eps)
        closed = success_probability(config)
        plus, _minus = run_round(fixed_point(10, params), config)
        worst = max(worst, abs(closed - plus.probability))
        for n in range(2, min(nmax + 4, 9)):
            for k in range(1, n + 1):
                config = SchemeConfig(scheme=HBAC_KICO, n=n, epsilon=eps, k=k)
                closed = success_probability(config)
                plus, _minus = run_round(fixed_point(n, params), config)
                worst = max(worst, abs(closed - plus.probability))
    checks.append(
        ("closed-form success matches branch norm", worst < 1e-12, f"max dev {worst:.3e}")
    )

    return checks


def cmd_validate(args) -> int:
    checks = _validation_checks(args.nmax, args.trials, args.seed)
    lines = []
    all_ok = True
    for name, ok, detail in checks:
        all_ok &= ok
        lines.append(f"{'ok  ' if ok else 'FAIL'} {name}: {detail}")
    lines.append(f"{'ok  ' if all_ok else 'FAIL'} overall: {sum(ok for _, ok, _ in checks)}/{len(checks)} checks passed")
    text = "\n".join(lines) + "\n"
    _write_text(text, args.output)
    return EXIT_OK if all_ok else EXIT_VALIDATION


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_runspec_flags(parser, include_trials: bool) -> None:
    parser.add_argument("--config", help="JSON run specification; flags override its keys")
    parser.add_argument("--scheme", choices=SCHEMES)
    parser.add_argument("--n", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument("--eps", "--epsilon", dest="epsilon", type=float)
    parser.add_argument(
        "--initial",
        choices=INITIAL_SELECTORS,
        help="initial-state selector; explicit vectors go in the config file",
    )
    parser.add_argument("--seed", type=int)
    parser.add_argument("--desired-success", dest="desired_success", type=float)
    parser.add_argument("--pair", choices=PAIR_CHOICES)
    parser.add_argument("--level", type=int)
    parser.add_argument("--nondemolition", action="store_const", const=True, default=None)
    parser.add_argument("--repump-rounds", dest="repump_rounds", type=int)
    parser.add_argument("--max-attempts", dest="max_attempts", type=int)
    if include_trials:
        parser.add_argument("--trials", type=int)
        parser.add_argument("--workers", type=int)
    parser.add_argument("--format", choices=FORMATS)
    parser.add_argument("--output")


def build_parser() -> _Parser:
    parser = _Parser(
        prog="ico-hbac",
        description="Register cooling schemes with and without switch-heralded purification.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    fp = sub.add_parser("fixed-point", help="stationary cooling profile and its residual")
    fp.add_argument("--n", type=int, required=True)
    fp.add_argument("--eps", "--epsilon", dest="epsilon", type=float, required=True)
    fp.add_argument("--format", choices=FORMATS, default="csv")
    fp.add_argument("--output")
    fp.set_defaults(func=cmd_fixed_point)

    t1 = sub.add_parser("table1", help="resource comparison of the five schemes")
    t1.add_argument("--n", type=int, required=True)
    t1.add_argument("--eps", "--epsilon", dest="epsilon", type=float, required=True)
    t1.add_argument("--k", type=int, default=1)
    t1.add_argument("--nondemolition", action="store_true")
    t1.add_argument("--format", choices=FORMATS, default="csv")
    t1.add_argument("--output")
    t1.set_defaults(func=cmd_table1)

    run_p = sub.add_parser("run", help="evaluate one scheme configuration")
    _add_runspec_flags(run_p, include_trials=False)
    run_p.set_defaults(func=cmd_run)

    sample_p = sub.add_parser("sample", help="Monte Carlo trajectory batches")
    _add_runspec_flags(sample_p, include_trials=True)
    sample_p.set_defaults(func=cmd_sample)

    val = sub.add_parser("validate", help="oracle equivalence and invariant battery")
    val.add_argument("--nmax", type=int, default=3)
    val.add_argument("--trials", type=int, default=100)
    val.add_argument("--seed", type=int, default=7)
    val.add_argument("--output")
    val.set_defaults(func=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, TypeError, MaxAttemptsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
