"""Run configuration: one sectioned key=value file, validated before any stage runs.

Sections and keys (all optional; defaults via ``protgram --print-config``)::

    [run]      seed, max_n, gate_mode, split_at_separator, max_length
    [train]    epochs, lr, hidden_dim, n_layers, dropout, leaky_slope, layer_norm, max_nodes
    [level.N]  epochs, lr, hidden_dim   (overrides for level N)
    [pooling]  pca_dim, top_k_variance
    [ppi]      k, epochs, lr, hidden, dropout, batch_size, threshold, augment_flipped
    [bench]    dataset, repeats, epochs, lr
    [paths]    fasta, positives, negatives, out_dir
"""

from __future__ import annotations

import configparser
import io
import os
from dataclasses import asdict, dataclass, field, fields, replace

from .directgcn import GATE_MODES, TrainConfig
from .ngram import MAX_LEVEL
from .ppi import MLPConfig


class ConfigError(ValueError):
    pass


@dataclass
class RunSection:
    seed: int = 0
    max_n: int = 3
    gate_mode: str = "vector"
    split_at_separator: bool = False
    max_length: int = 10_000


@dataclass
class TrainSection:
    epochs: int = 300
    lr: float = 1e-3
    hidden_dim: int = 64
    n_layers: int = 2
    dropout: float = 0.5
    leaky_slope: float = 0.01
    layer_norm: bool = False
    max_nodes: int = 6000


@dataclass
class LevelSection:
    epochs: int | None = None
    lr: float | None = None
    hidden_dim: int | None = None


@dataclass
class PoolingSection:
    pca_dim: int = 64
    top_k_variance: int = 20


@dataclass
class PPISection:
    k: int = 5
    epochs: int = 100
    lr: float = 1e-3
    hidden: tuple[int, ...] = (128, 64)
    dropout: float = 0.3
    batch_size: int = 64
    threshold: float = 0.5
    augment_flipped: bool = False


@dataclass
class BenchSection:
    dataset: str = "karate"
    repeats: int = 5
    epochs: int = 300
    lr: float = 0.01


@dataclass
class PathsSection:
    fasta: str = ""
    positives: str = ""
    negatives: str = ""
    out_dir: str = "run"


SECTIONS = {
    "run": RunSection,
    "train": TrainSection,
    "pooling": PoolingSection,
    "ppi": PPISection,
    "bench": BenchSection,
    "paths": PathsSection,
}


@dataclass
class RunConfig:
    run: RunSection = field(default_factory=RunSection)
    train: TrainSection = field(default_factory=TrainSection)
    levels: dict[int, LevelSection] = field(default_factory=dict)
    pooling: PoolingSection = field(default_factory=PoolingSection)
    ppi: PPISection = field(default_factory=PPISection)
    bench: BenchSection = field(default_factory=BenchSection)
    paths: PathsSection = field(default_factory=PathsSection)

    def validate(self) -> "RunConfig":
        r = self.run
        if not 1 <= r.max_n <= MAX_LEVEL:
            raise ConfigError(f"run.max_n must be in 1..{MAX_LEVEL}, got {r.max_n}")
        if r.gate_mode not in GATE_MODES:
            raise ConfigError(f"run.gate_mode must be one of {GATE_MODES}, got {r.gate_mode!r}")
        if r.max_length < 1:
            raise ConfigError("run.max_length must be positive")
        t = self.train
        if t.epochs < 0 or t.n_layers < 1 or t.hidden_dim < 1 or t.lr <= 0:
            raise ConfigError("train: epochs >= 0, n_layers >= 1, hidden_dim >= 1 and lr > 0 required")
        if not 0 <= t.dropout < 1:
            raise ConfigError(f"train.dropout must be in [0, 1), got {t.dropout}")
        for level in self.levels:
            if not 1 <= level <= MAX_LEVEL:
                raise ConfigError(f"[level.{level}] is outside 1..{MAX_LEVEL}")
        if self.pooling.pca_dim < 1:
            raise ConfigError("pooling.pca_dim must be positive")
        p = self.ppi
        if p.k < 2 or p.batch_size < 1 or p.epochs < 0 or not 0 <= p.dropout < 1 or not p.hidden:
            raise ConfigError("ppi: k >= 2, batch_size >= 1, epochs >= 0, dropout in [0, 1), non-empty hidden required")
        if self.bench.repeats < 1:
            raise ConfigError("bench.repeats must be positive")
        return self

    def train_config(self, gate_mode: str | None = None) -> TrainConfig:
        t = self.train
        return TrainConfig(
            epochs=t.epochs,
            lr=t.lr,
            hidden_dim=t.hidden_dim,
            n_layers=t.n_layers,
            dropout=t.dropout,
            gate_mode=gate_mode or self.run.gate_mode,
            leaky_slope=t.leaky_slope,
            layer_norm=t.layer_norm,
            max_nodes=t.max_nodes,
            seed=self.run.seed,
        )

    def level_overrides(self) -> dict[int, dict]:
        return {
            level: {k: v for k, v in asdict(sec).items() if v is not None} for level, sec in self.levels.items()
        }

    def mlp_config(self) -> MLPConfig:
        p = self.ppi
        return MLPConfig(
            hidden=tuple(p.hidden),
            dropout=p.dropout,
            epochs=p.epochs,
            lr=p.lr,
            batch_size=p.batch_size,
            seed=self.run.seed,
            threshold=p.threshold,
            augment_flipped=p.augment_flipped,
        )

    def bench_config(self) -> TrainConfig:
        return replace(self.train_config(), epochs=self.bench.epochs, lr=self.bench.lr)

    def with_overrides(self, **kw) -> "RunConfig":
        """Copy with ``section.key`` style overrides; ``None`` values are ignored."""
        out = replace(self, levels=dict(self.levels))
        for dotted, value in kw.items():
            if value is None:
                continue
            section, key = dotted.split(".")
            setattr(out, section, replace(getattr(out, section), **{key: value}))
        return out.validate()


def _format(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def _parse(raw: str, typ, where: str):
    raw = raw.strip()
    try:
        if typ is bool or typ == "bool":
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if "tuple" in str(typ):
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if "int" in str(typ):
            return int(raw)
        if "float" in str(typ):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {typ}") from None
    return raw


def _load_section(cls, items, where: str):
    known = {f.name: f.type for f in fields(cls)}
    kw = {}
    for key, raw in items:
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in [{where}]; expected one of {sorted(known)}")
        kw[key] = _parse(raw, known[key], f"[{where}] {key}")
    return cls(**kw)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__")
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    cfg = RunConfig()
    for name in cp.sections():
        items = cp.items(name)
        if name.startswith("level."):
            try:
                level = int(name.split(".", 1)[1])
            except ValueError:
                raise ConfigError(f"{source}: bad section name [{name}]") from None
            cfg.levels[level] = _load_section(LevelSection, items, name)
        elif name in SECTIONS:
            setattr(cfg, name, _load_section(SECTIONS[name], items, name))
        else:
            raise ConfigError(f"{source}: unknown section [{name}]")
    return cfg.validate()


def load_config(path=None) -> RunConfig:
    if path is None:
        return RunConfig().validate()
    path = os.fspath(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"config file not found: {path}")
    with open(path) as fh:
        return parse_config(fh.read(), source=path)


def format_config(cfg: RunConfig) -> str:
    """Render ``cfg`` in the same format :func:`parse_config` reads."""
    buf = io.StringIO()
    for name in SECTIONS:
        sec = getattr(cfg, name)
        buf.write(f"[{name}]\n")
        for f in fields(sec):
            buf.write(f"{f.name} = {_format(getattr(sec, f.name))}\n")
        buf.write("\n")
    for level in sorted(cfg.levels):
        buf.write(f"[level.{level}]\n")
        for key, value in asdict(cfg.levels[level]).items():
            if value is not None:
                buf.write(f"{key} = {_format(value)}\n")
        buf.write("\n")
    return buf.getvalue().rstrip("\n") + "\n"
