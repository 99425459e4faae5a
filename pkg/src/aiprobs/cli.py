"""Command line entry point: ``aiprobs {run,matrix,represent,split}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from pathlib import Path

from .dhc import export_representations, representations
from .diffusion import METRICS
from .experiment import MODELS, ComparisonTable, RunConfig, combination_grid, run_experiment, run_matrix
from .graph import build_graph, export_split, load_interactions, split


def _ratios(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated ratios, e.g. 0.8,0.1,0.1")
    return tuple(parts)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("dataset", help="interaction file (user item [flag] lines, or a typed .inter file)")
    p.add_argument("--seed", type=int, default=None, help="base seed (env AIPROBS_SEED; default 0)")
    p.add_argument("--realizations", type=int, default=30)
    p.add_argument("--ratios", type=_ratios, default=(0.8, 0.1, 0.1), help="train,eval,test")
    p.add_argument("-N", "--top-n", dest="n", type=int, default=10)
    p.add_argument("--representation", choices=("method-one", "method-two"), default="method-one")
    p.add_argument("--mode", dest="method_two_mode", choices=("weighted", "raw"), default="weighted")
    p.add_argument("--truncation", type=int, default=None, help="keep k eigenpairs (method two, approximate)")
    p.add_argument("--scope", choices=("full", "observed"), default="full",
                   help="lines used for max-min and proportioning")
    p.add_argument("--mask-train-only", dest="exclude_eval", action="store_false",
                   help="mask only training items at test time (default masks train and eval)")
    p.add_argument("--by-user", dest="by_user_split", action="store_true", help="split inside each user's edges")
    p.add_argument("--output-dir", default=None, help="report directory (env AIPROBS_OUTPUT_DIR)")
    p.add_argument("--workers", type=int, default=1)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aiprobs", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="evaluate one model over all realizations")
    _common(run)
    run.add_argument("--model", choices=MODELS, default="aiprobs")
    run.add_argument("--metric", choices=METRICS, default="cosine")
    run.add_argument("--normalization", choices=("maxmin", "none"), default="maxmin")
    run.add_argument("--proportioning", choices=("share", "literal", "none"), default="share")

    matrix = sub.add_parser("matrix", help="compare several models on shared realizations")
    _common(matrix)
    matrix.add_argument("--grid", action="store_true",
                        help="the 15 similarity x {M-M + P, M-M, bare} variants instead of the model comparison")

    rep = sub.add_parser("represent", help="write user and item representations of a dataset")
    rep.add_argument("dataset")
    rep.add_argument("output_dir")
    rep.add_argument("--representation", choices=("method-one", "method-two"), default="method-one")
    rep.add_argument("--mode", choices=("weighted", "raw"), default="weighted")
    rep.add_argument("--truncation", type=int, default=None)
    rep.add_argument("--seed", type=int, default=None, help="represent this realization's training graph")

    sp_ = sub.add_parser("split", help="write one realization as train/eval/test files")
    sp_.add_argument("dataset")
    sp_.add_argument("output_dir")
    sp_.add_argument("--seed", type=int, default=None)
    sp_.add_argument("--ratios", type=_ratios, default=(0.8, 0.1, 0.1))
    sp_.add_argument("--by-user", action="store_true")
    return parser


def _env_seed(value):
    if value is not None:
        return value
    return int(os.environ.get("AIPROBS_SEED", 0))


def _config(args, **extra) -> RunConfig:
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    kwargs = {k: v for k, v in vars(args).items() if k in fields}
    kwargs["base_seed"] = _env_seed(args.seed)
    kwargs["output_dir"] = args.output_dir or os.environ.get("AIPROBS_OUTPUT_DIR")
    kwargs.update(extra)
    return RunConfig(**kwargs)


def _cmd_run(args) -> int:
    config = _config(args)
    report = run_experiment(config)
    sys.stdout.write(ComparisonTable([report]).render())
    return 0


def _cmd_matrix(args) -> int:
    base = _config(args)
    if args.grid:
        configs = combination_grid(base)
    else:
        configs = [dataclasses.replace(base, model=m) for m in ("probs", "aiprobs", "pure-dhc")]
    sys.stdout.write(run_matrix(configs).render())
    return 0


def _cmd_represent(args) -> int:
    graph = build_graph(load_interactions(args.dataset))
    if args.seed is not None:
        graph = split(graph, args.seed).train
    kwargs = {}
    if args.representation == "method-two":
        kwargs = {"mode": args.mode, "truncation": args.truncation}
    f_u, f_i = representations(graph, args.representation, **kwargs)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_representations(out / "users.tsv", graph.user_keys, f_u)
    export_representations(out / "items.tsv", graph.item_keys, f_i)
    print(f"wrote {f_u.shape[0]} user and {f_i.shape[0]} item rows of width {f_u.shape[1]} to {out}")
    return 0


def _cmd_split(args) -> int:
    graph = build_graph(load_interactions(args.dataset))
    paths = export_split(split(graph, _env_seed(args.seed), args.ratios, by_user=args.by_user), args.output_dir)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return 0


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"run": _cmd_run, "matrix": _cmd_matrix, "represent": _cmd_represent, "split": _cmd_split}
    try:
        return handler[args.command](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"aiprobs: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
