"""Command-line front end.

Subcommands: ``sample``, ``estimate``, ``divergence``, ``experiment`` and
``model-info``.  Machine-readable output goes to files or stdout; human
messages go to stderr.  Exit codes: 0 on success, 1 on domain or
validation errors, 2 when a request exceeds exact-computation limits.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import divergence as div
from . import experiments as exp
from .estimators import estimate_full
from .model import BlockPartition, MallowsBlockModel
from .permutations import read_rankings, write_rankings
from .validation import CapabilityError, check_permutation

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_CAPABILITY = 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the CLI contract reserves 2
    # for capability errors, so downgrade usage problems to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(self._domain_exit(message))

    def _domain_exit(self, message) -> int:
        print(f"error: {message}", file=sys.stderr)
        return EXIT_DOMAIN


def _load_model(path) -> MallowsBlockModel:
    return MallowsBlockModel.from_json(path)


def _load_partition(path) -> BlockPartition:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValueError(f"{path}: not valid JSON ({err})") from err
    if "blocks" not in doc:
        raise ValueError(f"{path}: partition document is missing field 'blocks'")
    return BlockPartition(doc["blocks"])


def _emit_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_sample(args) -> int:
    model = _load_model(args.model)
    X = model.sample(args.n, random_state=args.seed)
    if args.out:
        write_rankings(X, args.out)
    else:
        for row in X:
            sys.stdout.write(" ".join(str(int(r)) for r in row) + "\n")
    return EXIT_OK


def _cmd_estimate(args) -> int:
    X = read_rankings(args.samples)
    if X.shape[0] == 0:
        raise ValueError(f"{args.samples}: no rankings found")
    partition = _load_partition(args.partition)
    center = None
    if args.pi0:
        rows = read_rankings(args.pi0)
        if rows.shape[0] != 1:
            raise ValueError(f"{args.pi0}: expected exactly one ranking")
        center = check_permutation(rows[0], m=partition.m, name="pi0")
    report = estimate_full(X, partition, center=center, split=args.split)
    _emit_json(report.to_dict(), args.out)
    return EXIT_OK


def _cmd_divergence(args) -> int:
    model_a = _load_model(args.a)
    model_b = _load_model(args.b)
    same_center = bool(np.array_equal(model_a.center, model_b.center))
    method = args.method
    if method == "auto":
        if args.kind == "kl":
            method = "exact" if same_center or model_a.m <= div.ENUMERATION_LIMIT else "mc"
        else:
            method = "exact" if model_a.m <= div.ENUMERATION_LIMIT else "mc"
    if args.kind == "kl":
        if method != "exact":
            raise CapabilityError(
                "KL is only available exactly (closed form or enumeration); "
                "differing centers beyond the enumeration limit are unsupported"
            )
        result = div.kl(model_a, model_b)
    elif method == "exact":
        result = div.tv_exact(model_a, model_b)
    elif method == "mc":
        result = div.tv_monte_carlo(model_a, model_b, args.draws, random_state=args.seed)
    elif method == "sumstat":
        result = div.tv_sum_stats(model_a, model_b, args.block)
    elif method == "bound":
        result = div.tv_coordinatewise_bound(model_a, model_b)
    else:
        raise ValueError(f"method '{method}' does not apply to kind '{args.kind}'")
    doc = {"kind": args.kind, "value": result.value, "method": result.method}
    if result.error_bar is not None:
        doc["error_bar"] = result.error_bar
    _emit_json(doc, args.out)
    return EXIT_OK


def _cmd_experiment(args) -> int:
    cfg = exp.default_config(args.kind, master_seed=args.seed, trials=args.trials)
    report = exp.run_experiment(cfg)
    if args.out:
        csv_path, json_path = exp.write_report(report, args.out)
        print(f"wrote {csv_path} and {json_path}", file=sys.stderr)
    else:
        _emit_json({k: v for k, v in report.items() if k != "models"}, None)
    return EXIT_OK


def _cmd_model_info(args) -> int:
    model = _load_model(args.model)
    diag = exp.mad_vs_std_diagnostic(model)
    doc = model.to_dict()
    doc["log_partition"] = model.log_partition()
    doc["block_sizes"] = [len(b) for b in model.partition.blocks]
    doc["statistic_dispersion"] = diag["rows"]
    _emit_json(doc, args.out)
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="mallows", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw rankings from a model JSON file")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--n", type=int, default=1, help="number of rankings to draw")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output rankings file (default: stdout)")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("estimate", help="estimate parameters from a rankings file")
    p.add_argument("--samples", required=True, help="rankings text file")
    p.add_argument("--partition", required=True, help="partition JSON file ({'blocks': [[...]]})")
    p.add_argument("--pi0", help="known center rankings file (skips ranking estimation)")
    p.add_argument("--split", action="store_true", help="hold out half the batch for the center")
    p.add_argument("--out", help="report JSON file (default: stdout)")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("divergence", help="divergence between two model JSON files")
    p.add_argument("-a", required=True, help="first model JSON file")
    p.add_argument("-b", required=True, help="second model JSON file")
    p.add_argument("--kind", choices=("kl", "tv"), default="kl")
    p.add_argument(
        "--method", choices=("auto", "exact", "mc", "sumstat", "bound"), default="auto"
    )
    p.add_argument("--draws", type=int, default=100_000, help="Monte Carlo sample size")
    p.add_argument("--block", type=int, default=0, help="block index for --method sumstat")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="result JSON file (default: stdout)")
    p.set_defaults(func=_cmd_divergence)

    p = sub.add_parser("experiment", help="run a verification experiment")
    p.add_argument("--kind", choices=exp.EXPERIMENT_KINDS, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=None, help="override the preset trial count")
    p.add_argument("--out", help="output prefix for <prefix>.csv and <prefix>.json")
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("model-info", help="validate a model file and summarize it")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--out", help="summary JSON file (default: stdout)")
    p.set_defaults(func=_cmd_model_info)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CapabilityError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CAPABILITY
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
