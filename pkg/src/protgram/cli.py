"""Command-line entry point: ``protgram <subcommand>``.

Global flags may go before or after the subcommand::

    protgram --config run.cfg --out-dir runs/a build-graphs --fasta corpus.fa --max-n 3
    protgram --out-dir runs/a train
    protgram --print-config
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__, pipeline
from .config import ConfigError, format_config, load_config
from .directgcn import GATE_MODES
from .directgcn.training import TrainingError
from .ngram import format_stats

logger = logging.getLogger("protgram")


GLOBAL_DEFAULTS = {"config": None, "seed": None, "out_dir": None, "print_config": False, "force": False,
                   "log_level": "INFO"}


def _global_flags(ap, default) -> None:
    """Global flags, accepted before or after the subcommand."""
    ap.add_argument("--config", default=default, help="sectioned key=value config file")
    ap.add_argument("--seed", type=int, default=default, help="override run.seed")
    ap.add_argument("--out-dir", default=default, help="run directory (overrides paths.out_dir)")
    ap.add_argument("--print-config", action="store_true", default=default,
                    help="print the effective config and exit")
    ap.add_argument("--force", action="store_true", default=default,
                    help="rerun stages even when inputs are unchanged")
    ap.add_argument("--log-level", default=default, choices=("DEBUG", "INFO", "WARNING", "ERROR"))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="protgram", description="n-gram graph embeddings for proteins")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    _global_flags(ap, argparse.SUPPRESS)
    ap.set_defaults(**GLOBAL_DEFAULTS)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, argparse.SUPPRESS)
    sub = ap.add_subparsers(dest="command", metavar="command")

    def command(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, help=help, parents=[common])

    p = command("build-graphs", "count n-gram transitions and write graph files")
    p.add_argument("--fasta")
    p.add_argument("--max-n", type=int)
    p.add_argument("--split-at-separator", action="store_true", default=None)

    p = command("train", "train DirectGCN level by level and export n-gram embeddings")
    p.add_argument("--max-n", type=int)
    p.add_argument("--gate-mode", choices=GATE_MODES)
    p.add_argument("--epochs", type=int)

    p = command("embed", "pool n-gram embeddings into protein vectors")
    p.add_argument("--fasta")
    p.add_argument("--max-n", type=int)
    p.add_argument("--pca-dim", type=int)

    p = command("ppi-eval", "k-fold link prediction on protein embeddings")
    p.add_argument("--positives")
    p.add_argument("--negatives")
    p.add_argument("--k", type=int)
    p.add_argument("--shuffle-labels", action="store_true", help="permutation null: shuffle pair labels")

    p = command("bench", "node classification benchmark (Karate Club or a dataset directory)")
    p.add_argument("--dataset", help="'karate' or a directory with edges.tsv and labels.tsv")
    p.add_argument("--repeats", type=int)

    p = command("ablate", "n-gram level x gate mode grid, written as CSV")
    p.add_argument("--fasta")
    p.add_argument("--positives")
    p.add_argument("--negatives")
    p.add_argument("--max-n", type=int)

    command("stats", "print per-level node and edge counts of the run's graphs")
    return ap


# commands that read graphs from the run directory follow what build-graphs wrote there
INHERITS_BUILD = {"train": ("run.max_n",), "embed": ("run.max_n", "paths.fasta")}


def effective_config(args):
    cfg = load_config(args.config)
    get = lambda name: getattr(args, name, None)  # noqa: E731
    out_dir = args.out_dir or cfg.paths.out_dir
    built = pipeline.built_graph_settings(out_dir)
    inherited = {}
    for key in INHERITS_BUILD.get(args.command, ()):
        section, name = key.split(".")
        current = getattr(getattr(cfg, section), name)
        if get(name) is not None or key not in built or (key == "paths.fasta" and current):
            continue
        if current != built[key]:
            logger.info("%s = %s, taken from the build-graphs manifest", key, built[key])
        inherited[key] = built[key]
    cfg = cfg.with_overrides(**inherited)
    return cfg.with_overrides(**{
        "run.seed": args.seed,
        "run.max_n": get("max_n"),
        "run.gate_mode": get("gate_mode"),
        "run.split_at_separator": get("split_at_separator"),
        "train.epochs": get("epochs"),
        "pooling.pca_dim": get("pca_dim"),
        "ppi.k": get("k"),
        "bench.dataset": get("dataset"),
        "bench.repeats": get("repeats"),
        "paths.fasta": get("fasta"),
        "paths.positives": get("positives"),
        "paths.negatives": get("negatives"),
        "paths.out_dir": args.out_dir,
    })


def _report(outcome) -> None:
    state = "skipped (unchanged)" if outcome.skipped else "done"
    print(f"{outcome.stage}: {state}")
    by_dir: dict[str, list[str]] = {}
    for p in outcome.outputs:
        by_dir.setdefault(os.path.dirname(p), []).append(os.path.basename(p))
    for d, names in by_dir.items():
        shown = names if len(names) <= 6 else names[:3] + [f"... {len(names) - 3} more"]
        print(f"  {d}/: {', '.join(shown)}")


def run_command(args, cfg) -> None:
    run_dir = cfg.paths.out_dir
    cmd = args.command
    if cmd == "build-graphs":
        out = pipeline.build_graphs_stage(cfg, run_dir, force=args.force)
        _report(out)
        with open(os.path.join(run_dir, "graphs", "stats.txt")) as fh:
            print(fh.read(), end="")
    elif cmd == "train":
        _report(pipeline.train_stage(cfg, run_dir, force=args.force))
    elif cmd == "embed":
        _report(pipeline.embed_stage(cfg, run_dir, force=args.force))
    elif cmd == "ppi-eval":
        out = pipeline.ppi_stage(cfg, run_dir, force=args.force, shuffle_labels=args.shuffle_labels)
        _report(out)
        folds = next(p for p in out.outputs if os.path.basename(p).startswith("ppi_folds"))
        summary = pipeline.read_summary_row(folds)
        print("  ".join(f"{k.upper()} {v}" for k, v in summary.items()))
    elif cmd == "bench":
        out = pipeline.bench_stage(cfg, run_dir, force=args.force)
        _report(out)
        with open(out.outputs[0]) as fh:
            print(fh.read(), end="")
    elif cmd == "ablate":
        out = pipeline.ablate_stage(cfg, run_dir, force=args.force)
        _report(out)
        with open(out.outputs[0]) as fh:
            print(fh.read(), end="")
    elif cmd == "stats":
        print(format_stats(pipeline.load_run_graphs(run_dir, _available_levels(run_dir))))


def _available_levels(run_dir) -> int:
    n = 0
    while all(os.path.exists(p) for p in pipeline.graph_files(run_dir, n + 1)):
        n += 1
    if n == 0:
        raise pipeline.MissingArtifactError(
            f"missing upstream artifact: {pipeline.graph_files(run_dir, 1)[0]} (run build-graphs first)"
        )
    return n


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = effective_config(args)
        if args.print_config:
            print(format_config(cfg), end="")
            return 0
        if not args.command:
            ap.print_usage(sys.stderr)
            print("protgram: error: a subcommand is required", file=sys.stderr)
            return 2
        run_command(args, cfg)
    except (ConfigError, FileNotFoundError, KeyError, ValueError, TrainingError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"protgram: error: {msg}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
