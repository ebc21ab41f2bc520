"""Command line interface: ``smsrank {register,list,rank,evaluate,inspect}``."""

import argparse
import json
import logging
import sys
from pathlib import Path

from . import dataio, pipeline
from .errors import InputError, ParseError, SMSError
from .modeldb import KINDS, ModelCandidate, list_models, open_database, register_model

log = logging.getLogger("smsrank")


def _metadata(pairs):
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise InputError(f"metadata must be KEY=VALUE, got {item!r}")
        out[key] = value
    return out


def cmd_register(args):
    db = open_database(args.db, create=True)
    cand = ModelCandidate(args.id, args.output_dim, args.kind, str(args.file), _metadata(args.meta))
    db = register_model(db, cand)
    print(f"registered {cand.id} ({len(db)} candidates in {db.root})")


def cmd_list(args):
    for c in list_models(open_database(args.db)):
        print(f"{c.id}\t{c.kind}\t{c.output_dim}\t{c.path}")


def _config(args):
    return pipeline.RunConfig(
        task=args.task, metric=args.metric, temperature=args.temperature, top_k=args.topk,
        projection_dim=args.proj_dim, sample_rate=args.sample_rate, seed=args.seed,
        epsilon=args.epsilon, p=args.p, bins=args.bins, threads=args.threads)


def cmd_rank(args):
    config = _config(args)
    db = open_database(args.db)
    labels = dataio.load_labels(args.labels, config.task)
    features = dataio.load_features(args.features) if args.features else None
    report = pipeline.rank_database(db, labels, config, features,
                                    args.target_dist, args.source_dist_dir)
    for r in report["candidates"]:
        if r["note"]:
            log.info("%s: %s", r["model_id"], r["note"])
    if args.out:
        summary = pipeline.write_report(report, args.out)
        print(f"wrote {args.out} and {summary}")
    else:
        json.dump(report, sys.stdout, indent=2)
        print()
    for r in report["candidates"][:config.top_k]:
        print(f"{r['rank']:>4}  {r['model_id']}  {r['raw_metric']:.6g}", file=sys.stderr)


def cmd_evaluate(args):
    path = Path(args.report)
    try:
        report = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    acc = dataio.load_accuracies(args.accuracies)
    report, res = pipeline.evaluate_report(report, acc, args.topk, args.lower_is_better)
    out = Path(args.out) if args.out else path
    out.write_text(json.dumps(report, indent=2) + "\n")
    plot = pipeline.write_plot_data(report, acc, out.with_name(out.stem + ".plot.csv"))
    print(f"PCC {res.pcc:.4f}  trendline slope {res.slope:.4f} intercept {res.intercept:.4f}")
    label = "highest loss" if args.lower_is_better else "lowest accuracy"
    for k, v in res.topk_curve:
        print(f"  top-{k} {label}: {v:.4f}")
    print(f"wrote {out} and {plot}")


def cmd_inspect(args):
    config = _config(args)
    db = open_database(args.db)
    labels = dataio.load_labels(args.labels, config.task)
    features = dataio.load_features(args.features) if args.features else None
    info = pipeline.inspect_candidate(db, args.id, labels, config, features)
    for w in info["warnings"]:
        log.warning(w)
    text = json.dumps(info, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


def _run_flags(p):
    p.add_argument("--db", required=True, type=Path)
    p.add_argument("--labels", required=True, type=Path)
    p.add_argument("--task", choices=["classification", "regression"], default="classification")
    p.add_argument("--metric", choices=pipeline.METRICS, default="sms")
    p.add_argument("--temperature", type=float, default=2.0)
    p.add_argument("--topk", type=int, default=5)
    p.add_argument("--proj-dim", type=int, default=25)
    p.add_argument("--sample-rate", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--p", type=float, default=2.0, help="regression weight exponent")
    p.add_argument("--bins", type=int, default=10, help="regression label bins")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--features", type=Path, help="target features for predictor candidates")
    p.add_argument("--out", type=Path)


def build_parser():
    parser = argparse.ArgumentParser(prog="smsrank", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("register", help="add a candidate model to a database")
    p.add_argument("--db", required=True, type=Path)
    p.add_argument("--id", required=True)
    p.add_argument("--kind", choices=KINDS, default="logits-file")
    p.add_argument("--file", required=True, type=Path)
    p.add_argument("--output-dim", required=True, type=int)
    p.add_argument("--meta", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_register)

    p = sub.add_parser("list", help="list registered candidates")
    p.add_argument("--db", required=True, type=Path)
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("rank", help="rank all candidates on a target dataset")
    _run_flags(p)
    p.add_argument("--target-dist", type=Path, help="target distribution (kld/jsd)")
    p.add_argument("--source-dist-dir", type=Path, help="directory of <id>.csv distributions (kld/jsd)")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("evaluate", help="score a rank report against ground truth")
    p.add_argument("--report", required=True, type=Path)
    p.add_argument("--accuracies", required=True, type=Path)
    p.add_argument("--topk", type=int, default=None)
    p.add_argument("--lower-is-better", action="store_true",
                   help="ground truth is a loss (regression)")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("inspect", help="pair separation table for one candidate")
    _run_flags(p)
    p.add_argument("--id", required=True)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        args.func(args)
    except SMSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
