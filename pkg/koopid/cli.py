"""Command-line front end.

    koopid simulate vdp --seed 7 --out data/
    koopid identify data/dataset.csv --truth data/truth.json --out fit/
    koopid benchmark vdp --runs 10 --jobs 4
    koopid roc fit/result.json data/truth.json
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path
from typing import Any, Callable, Final, Sequence

from . import __version__
from .benchmark import BENCHMARKS, run_benchmark, summarize
from .config import IdentificationConfig
from .const import (
    DEFAULT_LINK_THRESHOLD,
    DEFAULT_OUTPUT_DIR,
    EXIT_IO,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    INPUT_SIGNALS,
    OUTPUT_DIR_ENV,
    RESULT_FILE,
    ROC_FILE,
    RUNS_FILE,
    SCATTER_FILE,
    SUMMARY_FILE,
    TRUTH_FILE,
)
from .dynamics import SYSTEMS, SimulationProtocol, builtin_system, simulate
from .error import ConfigurationError, KoopidError, NegativeRealEigenvalueError, NumericalError
from .identify import identify
from .metrics import coefficient_error, coefficient_scatter, link_score, reconstruct_links, roc_sweep
from .storage import (
    RunManifest,
    read_dataset,
    read_field,
    read_json,
    write_csv,
    write_dataset,
    write_field,
    write_json,
)

_LOGGER: Final = logging.getLogger(__name__)

_LOG_LEVELS: Final = (logging.WARNING, logging.INFO, logging.DEBUG)


def _output_dir(args: argparse.Namespace) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


def _snapshot(args: argparse.Namespace) -> dict[str, Any]:
    return {
        key: str(value) if isinstance(value, Path) else value
        for key, value in sorted(vars(args).items())
        if key not in ("handler", "verbose")
    }


def _protocol_overrides(args: argparse.Namespace) -> dict[str, Any]:
    overrides = {
        "trajectories": args.trajectories,
        "substeps": args.substeps,
        "sigma_meas": args.sigma_meas,
        "sigma_proc": args.sigma_proc,
        "input_signal": args.input,
        "seed": args.seed,
    }
    if args.noisy_initial:
        overrides["noisy_initial"] = True
    return {key: value for key, value in overrides.items() if value is not None}


def cmd_simulate(args: argparse.Namespace, manifest: RunManifest) -> int:
    out = _output_dir(args)
    adjacency = None
    name = args.system

    if args.field is not None:
        vector_field, adjacency = read_field(args.field)
        manifest.inputs.append(str(args.field))
        protocol_source = args.protocol
        if protocol_source is None:
            protocol_data = read_json(args.field).get("protocol")
        else:
            protocol_data = read_json(protocol_source)
            manifest.inputs.append(str(protocol_source))
        if protocol_data is None:
            raise ConfigurationError(
                f"{args.field} has no protocol; pass one with --protocol"
            )
        protocol = SimulationProtocol.from_dict(protocol_data)
    else:
        system = builtin_system(name, args.seed if args.seed is not None else 0)
        vector_field, protocol, adjacency = system.field, system.protocol, system.adjacency

    protocol = protocol.with_options(_protocol_overrides(args))
    manifest.seed = protocol.seed
    manifest.config["protocol"] = protocol.to_dict()

    dataset = simulate(vector_field, protocol)
    manifest.add_outputs(
        write_dataset(out, dataset, seed=protocol.seed, protocol=protocol.to_dict())
    )

    extra: dict[str, Any] = {"system": name, "protocol": protocol.to_dict()}
    if adjacency is not None:
        extra["adjacency"] = adjacency.tolist()
    manifest.add_outputs([write_field(out / TRUTH_FILE, vector_field, extra)])

    print(f"Wrote {len(dataset)} snapshot pairs (T_s={dataset.sampling_period:g}) to {out}")
    return EXIT_OK


def cmd_identify(args: argparse.Namespace, manifest: RunManifest) -> int:
    out = _output_dir(args)
    config = IdentificationConfig.from_options(
        {
            "m1": args.m1,
            "m_f": args.m_f,
            "rcond": args.rcond,
            "estimate_diffusion": args.diffusion,
            "input_dim": args.input_dim,
            "rescale": args.rescale,
        }
    )
    manifest.config["identification"] = config.to_dict()

    dataset = read_dataset(args.dataset, args.sidecar)
    manifest.inputs.append(str(args.dataset))
    result = identify(dataset, config)
    payload = result.to_dict()

    if args.truth is not None:
        manifest.inputs.append(str(args.truth))
        exact, adjacency = read_field(args.truth)
        error = coefficient_error(result.field, exact)
        payload["error"] = error.to_dict()
        print(f"RMSE={error.rmse:.6g} NRMSE={error.nrmse:.6g}")
        if adjacency is not None:
            score = link_score(reconstruct_links(result.field, args.threshold), adjacency)
            payload["links"] = {"threshold": args.threshold, **score.to_dict()}
            print(f"TPR={score.tpr} FPR={score.fpr} (threshold {args.threshold:g})")
        manifest.add_outputs(
            [write_csv(out / SCATTER_FILE, coefficient_scatter(result.field, exact))]
        )

    if result.sigma_proc_hat is not None:
        print(f"sigma_proc={result.sigma_proc_hat:.6g}")
    manifest.add_outputs([write_json(out / RESULT_FILE, payload)])
    return EXIT_OK


def cmd_benchmark(args: argparse.Namespace, manifest: RunManifest) -> int:
    out = _output_dir(args)
    manifest.seed = args.seed

    runs = run_benchmark(
        args.name,
        args.runs,
        seed=args.seed,
        jobs=args.jobs,
        trajectories=args.trajectories,
        threshold=args.threshold,
    )
    summary = summarize(runs)
    manifest.add_outputs(
        [write_csv(out / RUNS_FILE, runs), write_csv(out / SUMMARY_FILE, summary)]
    )

    failed = int((runs["status"] != "ok").sum())
    if failed:
        _LOGGER.warning("%d of %d run(s) failed and are excluded from the means", failed, len(runs))
    print(summary.to_string(index=False))
    return EXIT_OK


def cmd_roc(args: argparse.Namespace, manifest: RunManifest) -> int:
    out = _output_dir(args)
    estimated, _ = read_field(args.result)
    _, adjacency = read_field(args.truth)
    manifest.inputs.extend([str(args.result), str(args.truth)])
    if adjacency is None:
        raise ConfigurationError(f"{args.truth} records no adjacency")

    table = roc_sweep(estimated, adjacency, args.thresholds)
    manifest.add_outputs([write_csv(out / ROC_FILE, table)])
    print(f"Wrote {len(table)} ROC points to {out / ROC_FILE}")
    return EXIT_OK


def _positive_int(value: str) -> int:
    number = int(value)
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return number


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="koopid",
        description="Identify polynomial vector fields from snapshot data with the Koopman generator.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def add_out(sub: argparse.ArgumentParser) -> None:
        sub.add_argument(
            "--out", type=Path, help=f"output directory (default ${OUTPUT_DIR_ENV} or {DEFAULT_OUTPUT_DIR})"
        )

    simulate_parser = commands.add_parser("simulate", help="generate a snapshot dataset")
    simulate_parser.add_argument(
        "system", nargs="?", help=f"built-in system: {', '.join(SYSTEMS)}"
    )
    simulate_parser.add_argument("--field", type=Path, help="vector field JSON instead of a built-in")
    simulate_parser.add_argument("--protocol", type=Path, help="protocol JSON for --field")
    simulate_parser.add_argument("--seed", type=int)
    simulate_parser.add_argument("--trajectories", type=_positive_int)
    simulate_parser.add_argument("--substeps", type=_positive_int)
    simulate_parser.add_argument("--sigma-meas", type=float)
    simulate_parser.add_argument("--sigma-proc", type=float)
    simulate_parser.add_argument("--input", choices=INPUT_SIGNALS)
    simulate_parser.add_argument(
        "--noisy-initial", action="store_true", help="apply measurement noise to x_k too"
    )
    add_out(simulate_parser)
    simulate_parser.set_defaults(handler=cmd_simulate)

    identify_parser = commands.add_parser("identify", help="identify a vector field from a dataset")
    identify_parser.add_argument("dataset", type=Path, help="dataset CSV")
    identify_parser.add_argument("--sidecar", type=Path, help="dataset JSON (default next to the CSV)")
    identify_parser.add_argument("--m1", type=_positive_int, default=1)
    identify_parser.add_argument("--mF", dest="m_f", type=_positive_int, default=3)
    identify_parser.add_argument("--rcond", type=float)
    identify_parser.add_argument(
        "--diffusion", action="store_true", help="also estimate the process noise intensity"
    )
    identify_parser.add_argument("--input-dim", type=int)
    identify_parser.add_argument(
        "--rescale", action="store_true", help="divide the data by max |state| before fitting"
    )
    identify_parser.add_argument("--truth", type=Path, help="exact field JSON to score against")
    identify_parser.add_argument("--threshold", type=float, default=DEFAULT_LINK_THRESHOLD)
    add_out(identify_parser)
    identify_parser.set_defaults(handler=cmd_identify)

    benchmark_parser = commands.add_parser("benchmark", help="repeat simulate + identify")
    benchmark_parser.add_argument("name", help=f"benchmark: {', '.join(BENCHMARKS)}")
    benchmark_parser.add_argument("--runs", type=int, default=10)
    benchmark_parser.add_argument("--seed", type=int, default=0)
    benchmark_parser.add_argument("--jobs", type=int, default=1)
    benchmark_parser.add_argument("--trajectories", type=_positive_int)
    benchmark_parser.add_argument("--threshold", type=float, default=DEFAULT_LINK_THRESHOLD)
    add_out(benchmark_parser)
    benchmark_parser.set_defaults(handler=cmd_benchmark)

    roc_parser = commands.add_parser("roc", help="link detection rates over thresholds")
    roc_parser.add_argument("result", type=Path, help="identified field JSON")
    roc_parser.add_argument("truth", type=Path, help="truth JSON with an adjacency")
    roc_parser.add_argument("--thresholds", type=float, nargs="+")
    add_out(roc_parser)
    roc_parser.set_defaults(handler=cmd_roc)

    return parser


def _check(parser: argparse.ArgumentParser, args: argparse.Namespace) -> None:
    """Validation argparse cannot express; exits with status 2."""
    if args.command == "simulate":
        if (args.system is None) == (args.field is None):
            parser.error("simulate needs exactly one of SYSTEM or --field")
        if args.system is not None and args.system not in SYSTEMS:
            parser.error(f"unknown system {args.system!r}, choose one of: {', '.join(SYSTEMS)}")
    elif args.command == "benchmark":
        if args.name not in BENCHMARKS:
            parser.error(f"unknown benchmark {args.name!r}, choose one of: {', '.join(BENCHMARKS)}")
        if args.runs < 1:
            parser.error(f"--runs must be at least 1, got {args.runs}")
        if args.jobs == 0:
            parser.error("--jobs must not be 0")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _check(parser, args)

    logging.basicConfig(
        level=_LOG_LEVELS[min(args.verbose, len(_LOG_LEVELS) - 1)],
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    handler: Callable[[argparse.Namespace, RunManifest], int] = args.handler
    manifest = RunManifest(
        command=args.command,
        config=_snapshot(args),
        seed=getattr(args, "seed", None),
        version=__version__,
    )

    started = time.perf_counter()
    try:
        status = handler(args, manifest)
    except NegativeRealEigenvalueError as err:
        _LOGGER.error("%s", err)
        if err.hint:
            _LOGGER.error("Hint: %s", err.hint)
        return EXIT_NUMERICAL
    except NumericalError as err:
        _LOGGER.error("%s", err)
        return EXIT_NUMERICAL
    except KoopidError as err:
        _LOGGER.error("%s", err)
        return EXIT_USAGE
    except OSError as err:
        _LOGGER.error("I/O failure: %s", err)
        return EXIT_IO

    manifest.duration = time.perf_counter() - started
    try:
        manifest.write(_output_dir(args))
    except OSError as err:
        _LOGGER.error("I/O failure: %s", err)
        return EXIT_IO
    return status


if __name__ == "__main__":
    sys.exit(main())
