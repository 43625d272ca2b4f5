#!/usr/bin/env python3
import argparse
import itertools
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence, Union

from rich.console import Console
from rich.logging import RichHandler

from dataset_io import DatasetFormatError, Sidecar, read_mebd, save_sidecar, write_mebd
from evaluate import summarize
from harness import ALGORITHMS, REFERENCE_MODES, ExperimentPlan, LoadedInstance, open_dataset, run_plan
from outliers import OutlierConfig
from reports import TrialReport, read_reports, write_reports
from stability import FAMILIES, InstanceSpec, family_beta_hint, generate
from sublinear import AlgoConfig
from summary_view import build_table, render_malformed

logger = logging.getLogger("meb_cli")

FAMILY_ALIASES = {"simplex": "regular-simplex", "ball": "uniform-ball", "planted": "planted-outliers"}
EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2


def setup_logging(verbosity: int) -> None:
    level = logging.WARNING if verbosity <= 0 else logging.INFO if verbosity == 1 else logging.DEBUG
    handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=False)
    logging.basicConfig(level=level, format="%(message)s", datefmt="[%X]", handlers=[handler], force=True)


def _family(text: str) -> str:
    name = FAMILY_ALIASES.get(text, text)
    if name not in FAMILIES:
        raise argparse.ArgumentTypeError(f"unknown family {text!r} (choose from {', '.join(FAMILIES)})")
    return name


def _add_algo_args(p: argparse.ArgumentParser, *, sweep: bool) -> None:
    many = "+" if sweep else None
    p.add_argument("--dataset", type=str, required=True, help="Dataset path (.mebd binary or .csv)")
    p.add_argument("--algorithm", choices=ALGORITHMS, default="alg2", help="Algorithm to run (default alg2)")
    p.add_argument("--epsilon", type=float, nargs=many, default=[0.1] if sweep else 0.1, help="Approximation parameter (default 0.1)")
    p.add_argument(
        "--beta",
        type=float,
        nargs=many,
        default=None,
        help="Stability lower bound; defaults to the dataset's stored hint when present",
    )
    p.add_argument("--gamma", type=float, nargs=many, default=None, help="Outlier fraction (outlier algorithm only)")
    p.add_argument("--eta", type=float, default=0.1, help="Failure probability (default 0.1)")
    p.add_argument("--eta0", type=float, default=0.1, help="Overall failure probability of alg2 (default 0.1)")
    p.add_argument("--s", type=float, default=1.0 / 3.0, help="Center tolerance split (default 1/3)")
    p.add_argument("--c-net", type=float, default=1.0, help="Constant in the epsilon-net sample size (default 1)")
    p.add_argument("--c-hit", type=float, default=1.0, help="Constant in the hitting sample sizes (default 1)")
    p.add_argument("--c-out", type=float, default=1.0, help="Constant in the outlier sample size (default 1)")
    p.add_argument(
        "--center-step",
        choices=["line-search", "harmonic"],
        default="line-search",
        help="Step rule of the approximate center routine (default line-search)",
    )
    p.add_argument("--max-sample", type=int, default=5_000_000, help="Hard cap on any single sample (default 5,000,000)")
    p.add_argument("--trials", type=int, default=1, help="Number of trials (default 1)")
    p.add_argument("--seed", type=int, default=0, help="Base seed; trial i uses stream id seed+i (default 0)")
    p.add_argument(
        "--reference",
        choices=("auto",) + REFERENCE_MODES,
        default="auto",
        help="Reference radius for ratio checks (default auto: ground-truth for the outlier algorithm when inliers are known, else coreset-highprec)",
    )
    p.add_argument("--threads", type=int, default=None, help="Worker threads (default STABLE_MEB_THREADS or CPU count)")
    p.add_argument("--out", type=str, default=None, help="Write report lines to this file instead of stdout")


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        description="Sub-linear minimum enclosing ball experiments on stable instances."
    )
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="Generate a dataset file and its sidecar")
    gen.add_argument("--family", type=_family, required=True, help=f"One of {', '.join(FAMILIES)} (alias: simplex)")
    gen.add_argument("--n", type=int, default=1000, help="Number of points (ignored for regular-simplex; default 1000)")
    gen.add_argument("--d", type=int, default=2, help="Dimension (default 2)")
    gen.add_argument("--gamma", type=float, default=0.0, help="Outlier fraction for planted-outliers (default 0)")
    gen.add_argument("--spread", type=float, default=10.0, help="Outlier sphere radius for planted-outliers (default 10)")
    gen.add_argument("--seed", type=int, default=0, help="Generator seed (default 0)")
    gen.add_argument("--epsilon", type=float, default=0.1, help="Epsilon for the stored stability hint (default 0.1)")
    gen.add_argument("--out", type=str, required=True, help="Output dataset path")

    run = sub.add_parser("run", help="Run trials of one algorithm and emit JSON-lines reports")
    _add_algo_args(run, sweep=False)

    ev = sub.add_parser("eval", help="Summarize reports and check success frequencies")
    ev.add_argument("reports", type=str, help="JSON-lines report file")
    ev.add_argument("--min-success", type=float, default=None, help="Override the per-algorithm success threshold")
    ev.add_argument("--out", type=str, default=None, help="Write the summary JSON to this file")
    ev.add_argument("--json", action="store_true", help="Print the summary JSON instead of the table")

    sw = sub.add_parser("sweep", help="Run every epsilon/beta/gamma combination")
    _add_algo_args(sw, sweep=True)
    sw.add_argument("--min-success", type=float, default=None, help="Override the per-algorithm success threshold")

    return parser.parse_args(argv)


def _config(
    args: argparse.Namespace, sidecar: Sidecar, epsilon: float, beta: Optional[float], gamma: Optional[float]
) -> Union[AlgoConfig, OutlierConfig]:
    if beta is None:
        beta = sidecar.beta_hint
    if beta is None:
        if args.algorithm != "coreset":
            raise ValueError("--beta is required (the dataset has no stored stability hint)")
        # the full-pass core-set never reads beta
        beta = 0.5
    if args.algorithm == "outlier":
        if gamma is None:
            gamma = sidecar.spec.get("gamma") or None
        if gamma is None:
            raise ValueError("--gamma is required for the outlier algorithm")
        return OutlierConfig(
            gamma=gamma, beta=beta, epsilon=epsilon, eta=args.eta, c_out=args.c_out, max_sample=args.max_sample
        )
    return AlgoConfig(
        epsilon=epsilon,
        beta=beta,
        eta=args.eta,
        eta0=args.eta0,
        s=args.s,
        c_net=args.c_net,
        c_hit=args.c_hit,
        center_step=args.center_step,
        max_sample=args.max_sample,
    )


def _reference_mode(args: argparse.Namespace, sidecar: Sidecar) -> str:
    if args.reference != "auto":
        return args.reference
    if args.algorithm == "outlier" and sidecar.inliers is not None:
        return "ground-truth"
    return "coreset-highprec"


def _emit(reports: List[TrialReport], out: Optional[str]) -> None:
    if out is None:
        write_reports(sys.stdout, reports)
        return
    with open(out, "w", encoding="utf-8") as f:
        count = write_reports(f, reports)
    logger.info("wrote %d report lines to %s", count, out)


def cmd_gen(args: argparse.Namespace) -> int:
    spec = InstanceSpec(
        family=args.family, n=args.n, d=args.d, gamma=args.gamma, outlier_spread=args.spread, seed=args.seed
    )
    points, inliers = generate(spec)
    write_mebd(args.out, points)
    sidecar = Sidecar(spec=spec.to_dict(), inliers=inliers, beta_hint=family_beta_hint(spec.family, spec.d, args.epsilon))
    save_sidecar(args.out, sidecar)
    # re-read so a bad write surfaces here rather than in a later run
    check = read_mebd(args.out)
    logger.info("wrote %s: n=%d d=%d family=%s", args.out, check.n, check.d, spec.family)
    return EXIT_OK


def _plan(args: argparse.Namespace, inst: LoadedInstance, epsilon: float, beta: Optional[float], gamma: Optional[float], combo: Optional[Dict[str, Any]]) -> ExperimentPlan:
    return ExperimentPlan(
        algorithm=args.algorithm,
        cfg=_config(args, inst.sidecar, epsilon, beta, gamma),
        trials=args.trials,
        base_seed=args.seed,
        reference_mode=_reference_mode(args, inst.sidecar),
        dataset=args.dataset,
        threads=args.threads,
        combo=combo,
    )


def cmd_run(args: argparse.Namespace) -> int:
    inst = open_dataset(args.dataset)
    plan = _plan(args, inst, args.epsilon, args.beta, args.gamma, None)
    reports = run_plan(plan, inst)
    _emit(reports, args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    inst = open_dataset(args.dataset)
    betas: List[Optional[float]] = list(args.beta) if args.beta else [None]
    gammas: List[Optional[float]] = list(args.gamma) if args.gamma else [None]
    reports: List[TrialReport] = []
    for epsilon, beta, gamma in itertools.product(args.epsilon, betas, gammas):
        combo: Dict[str, Any] = {"epsilon": epsilon}
        if beta is not None:
            combo["beta"] = beta
        if gamma is not None:
            combo["gamma"] = gamma
        plan = _plan(args, inst, epsilon, beta, gamma, combo)
        logger.info("sweep combination %s", combo)
        reports.extend(run_plan(plan, inst))
    _emit(reports, args.out)
    # the table goes to stderr when stdout carries the report lines
    console = Console(stderr=args.out is None)
    console.print(build_table(summarize(reports, min_success=args.min_success), title="Sweep summary"))
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    reports, malformed = read_reports(args.reports)
    result = summarize(reports, min_success=args.min_success, malformed=malformed)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(result.to_dict(), f, indent=2, sort_keys=True)
    if malformed:
        err = Console(stderr=True)
        err.print(f"{len(malformed)} malformed line(s):")
        render_malformed(err, result)
    if result.trials == 0:
        print("no trials", file=sys.stderr)
        return EXIT_FAILED
    if args.json:
        print(json.dumps(result.to_dict(), indent=2, sort_keys=True))
    else:
        Console().print(build_table(result, title=f"Trial summary: {args.reports}"))
    return EXIT_OK if result.passed else EXIT_FAILED


COMMANDS = {"gen": cmd_gen, "run": cmd_run, "eval": cmd_eval, "sweep": cmd_sweep}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    setup_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except (ValueError, DatasetFormatError, OSError) as e:
        print(str(e), file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
