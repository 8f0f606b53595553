import argparse
import json
import sys
from typing import Any, Dict, List, Optional

from .. import chains
from ..lib import __format_version__, __version__
from ..lib.analytics import cftp_runtime_law, fmmr_runtime_law, law_record
from ..lib.chain import ChainModel, make_chain
from ..lib.config import ExperimentConfig, ExperimentSpec, get_run_options
from ..lib.errors import (
    InvalidInputError,
    PerfectSamplingError,
    ResourceBudgetError,
    UnsupportedModelError,
    WindowTimeout,
)
from ..lib.experiment import ExperimentResult, run_experiment, write_csv, write_json, write_results
from ..lib.init_helper import get_logger, init_logging, load_modules
from ..lib.kernel import build_kernel, cftp_conditional_prob, exact_coalescence_prob
from ..lib.samplers import Algorithm
from ..lib.stats import StatReport
from ..lib.table import DEFAULT_FAMILIES, DEFAULT_SIZES, scaling_table, write_table_csv
from ..lib.verify import verify_suite

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3

DEFAULT_DIST_HORIZON = 8
DEFAULT_MIXTURE_HORIZON = 1000


def parse_param(text: str):
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise InvalidInputError(f"chain parameter must be KEY=VALUE, got {text!r}")
    for cast in (int, float):
        try:
            return key, cast(value)
        except ValueError:
            pass
    return key, value


def chain_params(args) -> Dict[str, Any]:
    params = dict(parse_param(p) for p in args.param or [])
    if args.n is not None:
        params["n"] = args.n
    if args.weights is not None:
        params["weights"] = args.weights
    return params


def write_result(result: ExperimentResult, output: Optional[str], output_dir: str):
    if output == "-":
        if result.spec.format == "json":
            write_json(result, sys.stdout)
        else:
            write_csv(result, sys.stdout)
        return
    path = output or result.spec.output_path(output_dir)
    write_results(result, path)
    get_logger().info(f"results: {path}")


def check_result(result: ExperimentResult) -> int:
    if not result.completed:
        get_logger().error(f"{result.spec.id}: every replication timed out")
        return EXIT_RESOURCE
    return EXIT_OK


def run_sample(args, run_options: Dict[str, Any]) -> int:
    spec = ExperimentSpec(
        id=f"{args.chain}-{args.algorithm}",
        chain=args.chain,
        algorithm=Algorithm(args.algorithm),
        params=chain_params(args),
        replications=args.reps,
        seed=args.seed,
        max_window=args.max_window,
        start=args.start,
        target=args.target,
        doubling=args.doubling,
        format=args.format,
    )
    result = run_experiment(spec, args.workers)
    if args.output != "-":
        get_logger().info(json.dumps(result.summary(), sort_keys=True))
    write_result(result, args.output, run_options["output_dir"])
    return check_result(result)


def run_config(args, run_options: Dict[str, Any]) -> int:
    run_options["replications"] = args.reps or run_options["replications"]
    if args.seed is not None:
        run_options["seed"] = args.seed
    config = ExperimentConfig(run_options)
    config.load_json_file(args.config)
    status = EXIT_OK
    for spec in config.experiments:
        result = run_experiment(spec, args.workers)
        write_result(result, None, run_options["output_dir"])
        status = max(status, check_result(result))
    return status


def dist_report(
    model: ChainModel,
    start: Optional[str] = None,
    cftp: bool = False,
    horizon: Optional[int] = None,
) -> Dict[str, Any]:
    """
    Exact running-time laws. On move-to-front these come from the geometric
    convolution; on other enumerable chains from exhaustive enumeration of
    innovation sequences up to `horizon`.
    """
    report: Dict[str, Any] = {"format_version": __format_version__, "chain": model.name}
    weights = getattr(model, "weights", None)
    if weights is not None:
        report["weights"] = weights.tolist()
        if start is not None:
            z = model.parse_state(start)
            report["start"] = model.encode(z)
            report["fmmr"] = law_record(fmmr_runtime_law(weights, z))
        if cftp:
            mixture = cftp_runtime_law(weights, horizon or DEFAULT_MIXTURE_HORIZON)
            report["cftp"] = law_record(mixture)
        return report

    if not model.enumerable:
        raise UnsupportedModelError(f"{model.name}: exact laws need an enumerable chain")
    horizon = horizon or DEFAULT_DIST_HORIZON
    kernel = build_kernel(model)
    report["stationary"] = {model.encode(x): kernel.pi(x) for x in kernel.states}
    if cftp:
        report["cftp_cdf"] = [
            exact_coalescence_prob(model, t) for t in range(1, horizon + 1)
        ]
    if start is not None:
        z = model.parse_state(start)
        report["start"] = model.encode(z)
        # FMMR accepts window t from z with the CFTP conditional coalescence
        # probability given output z.
        report["fmmr_cdf"] = [
            cftp_conditional_prob(model, t, kernel)[z] for t in range(1, horizon + 1)
        ]
    return report


def run_dist(args, run_options: Dict[str, Any]) -> int:
    model = make_chain(args.chain, **chain_params(args))
    report = dist_report(model, args.start, args.cftp, args.horizon)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def verify_document(reports: List[StatReport]) -> Dict[str, Any]:
    return {
        "format_version": __format_version__,
        "reports": [r.to_dict() for r in reports],
    }


def run_verify(args, run_options: Dict[str, Any]) -> int:
    reports = verify_suite(
        args.level, args.seed, args.workers, args.significance
    )
    for r in reports:
        print(r)
    if args.output:
        with open(args.output, "w") as out_file:
            json.dump(verify_document(reports), out_file, indent=2, sort_keys=True)
    failed = [r for r in reports if not r.ok]
    print(f"{len(reports) - len(failed)}/{len(reports)} checks passed")
    return EXIT_FAILED if failed else EXIT_OK


def split_list(text: str) -> List[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def run_table(args, run_options: Dict[str, Any]) -> int:
    families = split_list(args.families) if args.families else DEFAULT_FAMILIES
    try:
        sizes = [int(v) for v in split_list(args.sizes)] if args.sizes else DEFAULT_SIZES
    except ValueError:
        raise InvalidInputError(f"sizes must be integers, got {args.sizes!r}") from None
    rows = scaling_table(families, sizes)
    if args.output and args.output != "-":
        with open(args.output, "w", newline="") as out_file:
            write_table_csv(rows, out_file)
    else:
        write_table_csv(rows, sys.stdout)
    return EXIT_OK


def add_chain_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("chain", type=str, help="Chain name (mtf, three-state, spin).")
    parser.add_argument("--n", type=int, default=None, help="Chain size.")
    parser.add_argument(
        "--weights",
        type=str,
        default=None,
        help="MTF weights: family[:param] or a comma separated list.",
    )
    parser.add_argument(
        "-p",
        "--param",
        action="append",
        help="Extra chain parameter KEY=VALUE, e.g. epsilon=0.2. Repeatable.",
    )
    parser.add_argument(
        "--start",
        type=str,
        default=None,
        help="FMMR start state: id, rev, bottom, top or an explicit state.",
    )


def make_parser(run_options: Dict[str, Any]) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Perfect sampling experiments")
    parser.add_argument(
        "-l", "--log-level", default="INFO", help="Log output verbosity."
    )
    parser.add_argument("--version", action="store_true", help="Print version.")
    sub = parser.add_subparsers(dest="command")

    sample = sub.add_parser("sample", help="Run replicated sampler runs.")
    add_chain_arguments(sample)
    sample.add_argument(
        "algorithm", choices=[a.value for a in Algorithm], help="Sampler."
    )
    sample.add_argument(
        "--target",
        type=str,
        default=None,
        help="fmmr_set target set: all, downset:<perm> or front:<label>.",
    )
    sample.add_argument(
        "--reps", type=int, default=run_options["replications"], help="Replications."
    )
    sample.add_argument("--seed", type=int, default=run_options["seed"], help="Master seed.")
    sample.add_argument(
        "--max-window",
        type=int,
        default=run_options["max_window"],
        help="Largest window tried before a run times out.",
    )
    sample.add_argument(
        "--doubling", action="store_true", help="Double the window instead of t+1."
    )
    sample.add_argument(
        "--format",
        default=run_options["format"],
        choices=["csv", "json"],
        help="Result file format.",
    )
    sample.add_argument(
        "-o", "--output", type=str, default=None, help="Result file, - for stdout."
    )

    dist = sub.add_parser("dist", help="Print exact running-time laws.")
    add_chain_arguments(dist)
    dist.add_argument(
        "--cftp", action="store_true", help="Include the CFTP running-time law."
    )
    dist.add_argument(
        "--horizon",
        type=int,
        default=None,
        help=f"Largest window for enumerated laws (default {DEFAULT_DIST_HORIZON}) "
        f"and the CFTP mixture (default {DEFAULT_MIXTURE_HORIZON}).",
    )

    experiment = sub.add_parser("experiment", help="Run experiments from a JSON file.")
    experiment.add_argument("config", type=str, help="Experiment config file.")
    experiment.add_argument("--reps", type=int, default=None, help="Replications.")
    experiment.add_argument("--seed", type=int, default=None, help="Master seed.")

    verify = sub.add_parser("verify", help="Run the verification suite.")
    verify.add_argument(
        "--level", default="quick", choices=["quick", "full"], help="Suite size."
    )
    verify.add_argument("--seed", type=int, default=0, help="Master seed.")
    verify.add_argument(
        "--significance",
        type=float,
        default=run_options["significance"],
        help="Suite-level significance, Bonferroni corrected per test.",
    )
    verify.add_argument(
        "-o", "--output", type=str, default=None, help="JSON file for the reports."
    )

    table = sub.add_parser("table", help="Exact scaling table of FMMR running times.")
    table.add_argument(
        "--families", type=str, default=None, help="Comma separated weight families."
    )
    table.add_argument("--sizes", type=str, default=None, help="Comma separated sizes.")
    table.add_argument(
        "-o", "--output", type=str, default=None, help="CSV file, stdout by default."
    )

    for p in (sample, experiment, verify):
        p.add_argument(
            "-w",
            "--workers",
            type=int,
            default=run_options["workers"],
            help="Worker processes for replications.",
        )
    return parser


COMMANDS = {
    "sample": run_sample,
    "dist": run_dist,
    "experiment": run_config,
    "verify": run_verify,
    "table": run_table,
}


def main(argv: Optional[List[str]] = None) -> int:
    run_options = get_run_options()
    parser = make_parser(run_options)
    args = parser.parse_args(argv)

    logger = init_logging(args.log_level)

    if args.version:
        logger.info(f"perfect_bench version: {__version__}")
        return EXIT_OK
    elif not args.command:
        parser.print_usage()
        return EXIT_USAGE

    # Load chain implementations; each registers itself on import.
    logger.debug(f"chain modules: {load_modules(chains)}")

    try:
        return COMMANDS[args.command](args, run_options)
    except (InvalidInputError, UnsupportedModelError) as error:
        logger.error(str(error))
        return EXIT_USAGE
    except (ResourceBudgetError, WindowTimeout) as error:
        logger.error(str(error))
        return EXIT_RESOURCE
    except PerfectSamplingError as error:
        logger.error(f"{type(error).__name__}: {error}")
        return EXIT_FAILED
    except OSError as error:
        logger.error(str(error))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
