"""Pipeline stages that read inputs from disk and write artifacts plus a manifest into a run directory.

Run directory layout::

    graphs/       G{n}.nodes.tsv, G{n}.edges.tsv, stats.txt
    checkpoints/  level{n}/ parameter matrices, manifest.txt, losses.tsv
    embeddings/   ngram_level{n}.tsv, proteins.tsv, pca.*.txt
    results/      attention.csv, ppi_folds.csv, ppi_roc.csv, bench.csv, ablation.csv
    manifests/    <stage>.json

A stage whose config snapshot and input hashes match its manifest, and
whose recorded outputs are intact, is skipped unless forced.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import shutil
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import RunConfig
from .corpus import read_sequences, tokens_from_sequences
from .directgcn import GATE_MODES, EmbeddingTable, save_checkpoint, train_hierarchy
from .ngram import build_hierarchy, format_stats, load_graph, save_graph
from .nodebench import karate_club, load_dataset, run_benchmark, write_bench_csv
from .numcore import seeded_rng
from .pooling import (
    embed_corpus,
    export_attention_heatmap_data,
    read_protein_embeddings,
    save_pca,
    write_attention_csv,
    write_protein_embeddings,
)
from .ppi import LabeledPair, load_pairs, train_and_eval, write_fold_results, write_roc_csv

logger = logging.getLogger(__name__)

SUBDIRS = ("graphs", "checkpoints", "embeddings", "results", "manifests")


class MissingArtifactError(FileNotFoundError):
    pass


@dataclass
class StageOutcome:
    stage: str
    skipped: bool
    outputs: list[str]
    manifest: dict = field(default_factory=dict)
    result: object = None


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def graph_prefix(run_dir, n: int) -> str:
    return os.path.join(run_dir, "graphs", f"G{n}")


def graph_files(run_dir, n: int) -> list[str]:
    p = graph_prefix(run_dir, n)
    return [p + ".nodes.tsv", p + ".edges.tsv"]


def ngram_table_path(run_dir, n: int) -> str:
    return os.path.join(run_dir, "embeddings", f"ngram_level{n}.tsv")


def protein_embeddings_path(run_dir) -> str:
    return os.path.join(run_dir, "embeddings", "proteins.tsv")


def _rel(path, run_dir) -> str:
    path, run_dir = os.path.abspath(path), os.path.abspath(run_dir)
    if os.path.commonpath([path, run_dir]) == run_dir:
        return os.path.relpath(path, run_dir)
    return os.path.basename(path)


def require(path, hint: str = "") -> str:
    if not path:
        raise MissingArtifactError(f"missing input: {hint or 'path not configured'}")
    if not os.path.exists(path):
        extra = f" ({hint})" if hint else ""
        raise MissingArtifactError(f"missing upstream artifact: {path}{extra}")
    return os.fspath(path)


def _manifest_path(run_dir, stage: str) -> str:
    return os.path.join(run_dir, "manifests", f"{stage}.json")


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, ValueError):
        return None


def run_stage(run_dir, stage: str, snapshot: dict, inputs: dict[str, str], action, force: bool = False,
              validate=None) -> StageOutcome:
    """Run ``action()`` (which returns output paths) unless the manifest shows nothing changed."""
    run_dir = os.fspath(run_dir)
    snapshot = json.loads(json.dumps(snapshot, sort_keys=True))  # tuples become lists, as on reload
    for sub in SUBDIRS:
        os.makedirs(os.path.join(run_dir, sub), exist_ok=True)
    input_hashes = {label: {"file": _rel(p, run_dir), "sha256": file_sha256(p)} for label, p in inputs.items()}
    mpath = _manifest_path(run_dir, stage)
    old = _read_json(mpath)
    if not force and old and old.get("config") == snapshot and old.get("inputs") == input_hashes:
        recorded = old.get("outputs", {})
        intact = all(
            os.path.exists(os.path.join(run_dir, rel)) and file_sha256(os.path.join(run_dir, rel)) == sha
            for rel, sha in recorded.items()
        )
        if recorded and intact:
            logger.info("%s: inputs unchanged, skipping (use --force to rerun)", stage)
            return StageOutcome(stage, True, [os.path.join(run_dir, r) for r in recorded], old)
    produced = action()
    result = None
    if isinstance(produced, tuple):
        produced, result = produced
    for p in produced:
        if not os.path.exists(p) or os.path.getsize(p) == 0:
            raise RuntimeError(f"{stage}: expected output {p} was not written")
    if validate is not None:
        validate(produced)
    manifest = {
        "stage": stage,
        "config": snapshot,
        "inputs": input_hashes,
        "sources": {label: os.path.abspath(p) for label, p in inputs.items()},  # informational only
        "outputs": {_rel(p, run_dir): file_sha256(p) for p in sorted(produced)},
    }
    with open(mpath, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return StageOutcome(stage, False, sorted(produced), manifest, result)


def build_graphs_stage(cfg: RunConfig, run_dir, fasta=None, force: bool = False) -> StageOutcome:
    fasta = require(fasta or cfg.paths.fasta, "pass --fasta or set paths.fasta")
    snapshot = {"run": asdict(cfg.run) | {"seed": None}}

    def action():
        seqs = read_sequences(fasta, cfg.run.max_length)
        if not seqs:
            raise ValueError(f"{fasta}: no usable sequences")
        graphs = build_hierarchy(list(tokens_from_sequences(seqs)), cfg.run.max_n, cfg.run.split_at_separator)
        out = []
        for g in graphs:
            out.extend(save_graph(g, graph_prefix(run_dir, g.level)))
        stats = os.path.join(run_dir, "graphs", "stats.txt")
        with open(stats, "w") as fh:
            fh.write(format_stats(graphs) + "\n")
        return out + [stats]

    def validate(paths):
        for n in range(1, cfg.run.max_n + 1):
            load_graph(graph_prefix(run_dir, n))

    return run_stage(run_dir, "build-graphs", snapshot, {"fasta": fasta}, action, force, validate)


def built_graph_settings(run_dir) -> dict[str, object]:
    """``max_n`` and FASTA path recorded by the last build-graphs run, as ``section.key`` overrides."""
    old = _read_json(_manifest_path(os.fspath(run_dir), "build-graphs"))
    if not old:
        return {}
    out = {"run.max_n": old.get("config", {}).get("run", {}).get("max_n")}
    out["paths.fasta"] = old.get("sources", {}).get("fasta")
    return {k: v for k, v in out.items() if v is not None}


def load_run_graphs(run_dir, max_n: int):
    graphs = []
    for n in range(1, max_n + 1):
        for p in graph_files(run_dir, n):
            require(p, "run build-graphs first")
        graphs.append(load_graph(graph_prefix(run_dir, n)))
    return graphs


def _write_losses(path, result) -> None:
    with open(path, "w") as fh:
        fh.write("epoch\tloss\teval_loss\n")
        evals = result.eval_losses or [float("nan")] * len(result.losses)
        for i, (a, b) in enumerate(zip(result.losses, evals)):
            fh.write(f"{i}\t{a!r}\t{b!r}\n")


def train_stage(cfg: RunConfig, run_dir, force: bool = False) -> StageOutcome:
    max_n = cfg.run.max_n
    inputs = {}
    for n in range(1, max_n + 1):
        for p in graph_files(run_dir, n):
            inputs[os.path.basename(p)] = require(p, "run build-graphs first")
    snapshot = {
        "run": {"seed": cfg.run.seed, "max_n": max_n, "gate_mode": cfg.run.gate_mode},
        "train": asdict(cfg.train),
        "levels": {str(k): v for k, v in cfg.level_overrides().items()},
    }

    def action():
        graphs = load_run_graphs(run_dir, max_n)
        results = train_hierarchy(graphs, cfg.train_config(), cfg.level_overrides())
        out = []
        for res in results:
            ck = os.path.join(run_dir, "checkpoints", f"level{res.level}")
            if os.path.isdir(ck):
                shutil.rmtree(ck)
            save_checkpoint(res, ck)
            losses = os.path.join(ck, "losses.tsv")
            _write_losses(losses, res)
            table = ngram_table_path(run_dir, res.level)
            res.embeddings.to_tsv(table)
            out.extend(os.path.join(ck, f) for f in sorted(os.listdir(ck)))
            out.append(table)
        return out, results

    def validate(paths):
        for n in range(1, max_n + 1):
            EmbeddingTable.from_tsv(ngram_table_path(run_dir, n))

    return run_stage(run_dir, "train", snapshot, inputs, action, force, validate)


def embed_stage(cfg: RunConfig, run_dir, fasta=None, force: bool = False) -> StageOutcome:
    n = cfg.run.max_n
    table_path = require(ngram_table_path(run_dir, n), "run train first")
    fasta = require(fasta or cfg.paths.fasta, "pass --fasta or set paths.fasta")
    snapshot = {"run": {"max_n": n, "max_length": cfg.run.max_length}, "pooling": asdict(cfg.pooling)}

    def action():
        table = EmbeddingTable.from_tsv(table_path)
        emb = embed_corpus(read_sequences(fasta, cfg.run.max_length), table, cfg.pooling.pca_dim)
        out = protein_embeddings_path(run_dir)
        write_protein_embeddings(out, emb.ids, emb.vectors)
        prefix = os.path.join(run_dir, "embeddings", "pca")
        save_pca(emb.pca, prefix)
        attn = os.path.join(run_dir, "results", "attention.csv")
        write_attention_csv(attn, export_attention_heatmap_data(emb.records, cfg.pooling.top_k_variance))
        pca_files = [prefix + s for s in (".components.txt", ".mean.txt", ".variance.txt")]
        return [out, attn, *pca_files], emb

    def validate(paths):
        read_protein_embeddings(protein_embeddings_path(run_dir))

    return run_stage(run_dir, "embed", snapshot, {"table": table_path, "fasta": fasta}, action, force, validate)


def shuffle_pair_labels(pairs, seed: int) -> list[LabeledPair]:
    """Same pairs with labels permuted, as a permutation null."""
    rng = seeded_rng(seed, "ppi.shuffle")
    labels = rng.permutation([p.label for p in pairs])
    return [LabeledPair(p.id_a, p.id_b, int(y)) for p, y in zip(pairs, labels)]


def ppi_stage(cfg: RunConfig, run_dir, positives=None, negatives=None, force: bool = False,
              shuffle_labels: bool = False) -> StageOutcome:
    emb_path = require(protein_embeddings_path(run_dir), "run embed first")
    pos = require(positives or cfg.paths.positives, "pass --positives or set paths.positives")
    neg = require(negatives or cfg.paths.negatives, "pass --negatives or set paths.negatives")
    suffix = "_shuffled" if shuffle_labels else ""
    snapshot = {"seed": cfg.run.seed, "ppi": asdict(cfg.ppi), "shuffle_labels": shuffle_labels}

    def action():
        pairs = load_pairs(pos, neg)
        if shuffle_labels:
            pairs = shuffle_pair_labels(pairs, cfg.run.seed)
        result = train_and_eval(pairs, read_protein_embeddings(emb_path), cfg.mlp_config(), cfg.ppi.k)
        folds = os.path.join(run_dir, "results", f"ppi_folds{suffix}.csv")
        roc = os.path.join(run_dir, "results", f"ppi_roc{suffix}.csv")
        write_fold_results(folds, result)
        write_roc_csv(roc, result)
        return [folds, roc], result

    inputs = {"embeddings": emb_path, "positives": pos, "negatives": neg}
    return run_stage(run_dir, "ppi-eval" + suffix, snapshot, inputs, action, force)


def bench_stage(cfg: RunConfig, run_dir, dataset=None, force: bool = False) -> StageOutcome:
    dataset = dataset or cfg.bench.dataset
    inputs = {}
    if dataset != "karate":
        require(dataset, "bench dataset directory")
        for name in ("edges.tsv", "labels.tsv", "features.tsv", "splits.tsv"):
            p = os.path.join(dataset, name)
            if os.path.exists(p):
                inputs[name] = p
    snapshot = {"seed": cfg.run.seed, "bench": asdict(cfg.bench) | {"dataset": os.path.basename(dataset)},
                "train": asdict(cfg.train), "gate_mode": cfg.run.gate_mode}

    def action():
        ds = karate_club(cfg.run.seed) if dataset == "karate" else load_dataset(dataset, cfg.run.seed)
        seeds = [cfg.run.seed + i for i in range(cfg.bench.repeats)]
        result = run_benchmark(ds, cfg.bench_config(), seeds=seeds)
        out = os.path.join(run_dir, "results", "bench.csv")
        write_bench_csv(out, [result])
        runs = os.path.join(run_dir, "results", "bench_runs.csv")
        with open(runs, "w", newline="") as fh:
            writer = csv.writer(fh)
            keys = ("seed", "accuracy", "f1_macro", "precision_macro", "recall_macro")
            writer.writerow(keys)
            for r in result.runs:
                writer.writerow([r[k] if k == "seed" else repr(float(r[k])) for k in keys])
        return [out, runs], result

    return run_stage(run_dir, "bench", snapshot, inputs, action, force)


ABLATION_COLUMNS = ("n", "gate_mode", "auc", "auc_std", "f1", "f1_std")


def ablate_stage(cfg: RunConfig, run_dir, fasta=None, positives=None, negatives=None,
                 force: bool = False) -> StageOutcome:
    """Evaluate every (n, gate mode) pair for n in 1..max_n, each with its own hierarchy."""
    fasta = require(fasta or cfg.paths.fasta, "pass --fasta or set paths.fasta")
    pos = require(positives or cfg.paths.positives, "pass --positives or set paths.positives")
    neg = require(negatives or cfg.paths.negatives, "pass --negatives or set paths.negatives")
    snapshot = {
        "run": asdict(cfg.run),
        "train": asdict(cfg.train),
        "levels": {str(k): v for k, v in cfg.level_overrides().items()},
        "pooling": asdict(cfg.pooling),
        "ppi": asdict(cfg.ppi),
    }

    def action():
        seqs = read_sequences(fasta, cfg.run.max_length)
        graphs = build_hierarchy(list(tokens_from_sequences(seqs)), cfg.run.max_n, cfg.run.split_at_separator)
        pairs = load_pairs(pos, neg)
        rows = []
        for n in range(1, cfg.run.max_n + 1):
            for mode in GATE_MODES:
                results = train_hierarchy(graphs[:n], cfg.train_config(gate_mode=mode), cfg.level_overrides())
                emb = embed_corpus(seqs, results[-1].embeddings, cfg.pooling.pca_dim, keep_attention=False)
                s = train_and_eval(pairs, emb.as_dict(), cfg.mlp_config(), cfg.ppi.k).summary()
                logger.info("ablation n=%d gate=%s: AUC %.4f F1 %.4f", n, mode, s["auc"][0], s["f1"][0])
                rows.append((n, mode, s["auc"][0], s["auc"][1], s["f1"][0], s["f1"][1]))
        out = os.path.join(run_dir, "results", "ablation.csv")
        with open(out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(ABLATION_COLUMNS)
            for n, mode, *vals in rows:
                writer.writerow([n, mode, *(repr(float(v)) for v in vals)])
        return [out], rows

    return run_stage(run_dir, "ablate", snapshot, {"fasta": fasta, "positives": pos, "negatives": neg}, action,
                     force)


def read_summary_row(path) -> dict[str, str]:
    """The trailing mean±std row of a fold results CSV, keyed by metric."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, last = rows[0], rows[-1]
    if last[0] != "summary":
        raise ValueError(f"{path}: no summary row")
    return dict(zip(header[1:], last[1:]))


def full_pipeline(cfg: RunConfig, run_dir, force: bool = False) -> dict[str, StageOutcome]:
    """build-graphs, train, embed and ppi-eval in order."""
    out = {}
    out["build-graphs"] = build_graphs_stage(cfg, run_dir, force=force)
    out["train"] = train_stage(cfg, run_dir, force=force)
    out["embed"] = embed_stage(cfg, run_dir, force=force)
    out["ppi-eval"] = ppi_stage(cfg, run_dir, force=force)
    return out


def level_losses(run_dir, n: int) -> np.ndarray:
    """``(epochs, 2)`` array of the training and eval loss traces saved for level ``n``."""
    path = require(os.path.join(run_dir, "checkpoints", f"level{n}", "losses.tsv"), "run train first")
    return np.loadtxt(path, skiprows=1, usecols=(1, 2), ndmin=2)
