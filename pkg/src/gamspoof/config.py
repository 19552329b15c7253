"""Experiment configuration: TOML text <-> ExperimentConfig.

Grammar (TOML 1.0; every table except [data] is optional)::

    seed = 0
    fit_length = 64600            # training length in samples

    [data]
    train = "train.tsv"           # manifests, relative to the config file
    dev = "dev.tsv"
    eval = "eval.tsv"             # optional
    rir_bank = "rir"              # optional directory of kernel WAVs

    [policy]
    preset = "rir_timemask"       # a named preset, or an explicit tree:
    # mode = "cascade"
    # [[policy.stages]]
    # mode = "single"
    # transforms = [{ kind = "rir", intensity = [0.2, 0.8] }]

    [model]
    widths = [64, 64, 32, 2]      # widths[0] is the number of feature bands
    leaky_slope = 0.01

    [optimizer]
    name = "adam"                 # or "adam+gam"
    rho = 0.05                    # omitted -> 0.05 * (1 + ||theta_0||)
    alpha = 0.3
    xi = 1e-12
    rho_decay = false

    [schedule]
    eta0 = 5e-6
    eta_min = 1e-8
    max_epochs = 100
    patience = 10
    batch_size = 32

    [mixup]
    enabled = false
    sigma = 1.0

    [flatness]
    probes = 0                    # 0 disables the per-epoch probe
    rho = 0.05
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from .augment import PRESETS, AugmentPolicy, ConfigurationError, TransformSpec
from .diffnet import ModelSpec
from .optim import ETA_0, ETA_MIN, TrainConfig

STANDARD_LENGTHS = (64600, 96000, 128000)


class ConfigError(ValueError):
    """Schema or syntax problem, with a ``path:line`` prefix when the location is known."""


@dataclass(frozen=True)
class ExperimentConfig:
    train: str
    dev: str
    eval: str | None = None
    rir_bank: str | None = None
    seed: int = 0
    fit_length: int = 64600
    preset: str | None = "none"
    policy: AugmentPolicy = PRESETS["none"]
    widths: tuple[int, ...] = (64, 64, 32, 2)
    leaky_slope: float = 0.01
    optimizer: str = "adam"
    gam_rho: float | None = None
    gam_alpha: float = 0.3
    gam_xi: float = 1e-12
    gam_rho_decay: bool = False
    eta0: float = ETA_0
    eta_min: float = ETA_MIN
    max_epochs: int = 100
    patience: int = 10
    batch_size: int = 32
    mixup: bool = False
    mixup_sigma: float = 1.0
    flatness_probes: int = 0
    flatness_rho: float = 0.05
    base_dir: Path = field(default=Path("."), compare=False)

    def path(self, name: str) -> Path | None:
        value = getattr(self, name)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            seed=self.seed, n_bins=self.widths[0], model=ModelSpec(self.widths, self.leaky_slope),
            policy=self.policy, mixup=self.mixup, mixup_sigma=self.mixup_sigma,
            optimizer=self.optimizer, gam_rho=self.gam_rho, gam_alpha=self.gam_alpha,
            gam_xi=self.gam_xi, gam_rho_decay=self.gam_rho_decay, batch_size=self.batch_size,
            eta0=self.eta0, eta_min=self.eta_min, max_epochs=self.max_epochs,
            patience=self.patience, flatness_probes=self.flatness_probes,
            flatness_rho=self.flatness_rho)

    def resolved(self) -> "ExperimentConfig":
        """Copy with every file reference made absolute."""
        kw = {k: str(self.path(k).resolve()) for k in ("train", "dev", "eval", "rir_bank")
              if getattr(self, k) is not None}
        return replace(self, **kw)


# -- policy <-> plain data -----------------------------------------------------

def policy_to_data(p: AugmentPolicy) -> dict:
    if p.policy == "none":
        return {"mode": "none"}
    if p.policy == "cascade":
        return {"mode": "cascade", "stages": [policy_to_data(s) for s in p.stages]}
    return {"mode": p.policy,
            "transforms": [{"kind": s.kind, **{k: list(v) if isinstance(v, tuple) else v
                                               for k, v in s.params.items()}}
                           for s in p.stages]}


def policy_from_data(d: dict) -> AugmentPolicy:
    mode = d.get("mode")
    if mode == "cascade":
        return AugmentPolicy("cascade", tuple(policy_from_data(s) for s in d.get("stages", [])))
    if mode == "none":
        return AugmentPolicy("none")
    specs = []
    for t in d.get("transforms", []):
        t = dict(t)
        if "kind" not in t:
            raise ConfigurationError("transform entry without 'kind'")
        kind = t.pop("kind")
        specs.append(TransformSpec(kind, t))
    return AugmentPolicy(mode, tuple(specs))


# -- parsing -------------------------------------------------------------------

_SCHEMA: dict[str, dict[str, tuple[str, type | tuple]]] = {
    "": {"seed": ("seed", int), "fit_length": ("fit_length", int)},
    "data": {"train": ("train", str), "dev": ("dev", str), "eval": ("eval", str),
             "rir_bank": ("rir_bank", str)},
    "model": {"widths": ("widths", list), "leaky_slope": ("leaky_slope", (int, float))},
    "optimizer": {"name": ("optimizer", str), "rho": ("gam_rho", (int, float)),
                  "alpha": ("gam_alpha", (int, float)), "xi": ("gam_xi", (int, float)),
                  "rho_decay": ("gam_rho_decay", bool)},
    "schedule": {"eta0": ("eta0", (int, float)), "eta_min": ("eta_min", (int, float)),
                 "max_epochs": ("max_epochs", int), "patience": ("patience", int),
                 "batch_size": ("batch_size", int)},
    "mixup": {"enabled": ("mixup", bool), "sigma": ("mixup_sigma", (int, float))},
    "flatness": {"probes": ("flatness_probes", int), "rho": ("flatness_rho", (int, float))},
}


def _line_of(text: str, table: str, key: str | None) -> int | None:
    """1-based line of ``key`` inside ``[table]`` (or of the header if key is None)."""
    current = ""
    for n, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"^\[\[?\s*([^\]]+?)\s*\]\]?", s)
        if m:
            current = m.group(1)
            if key is None and current == table:
                return n
            continue
        if key is not None and current == table and re.match(rf"^{re.escape(key)}\s*=", s):
            return n
    return None


def loads(text: str, source: str = "<config>", base_dir: Path | str = ".",
          check_files: bool = True) -> ExperimentConfig:
    def fail(msg: str, table: str = "", key: str | None = None):
        line = _line_of(text, table, key)
        loc = f"{source}:{line}" if line else source
        raise ConfigError(f"{loc}: {msg}")

    try:
        doc = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{source}: {exc}") from None

    kw: dict[str, Any] = {}
    for table, keys in _SCHEMA.items():
        section = doc if table == "" else doc.get(table, {})
        if not isinstance(section, dict):
            fail(f"[{table}] must be a table")
        for key, value in section.items():
            if table == "" and isinstance(value, dict):
                if key not in _SCHEMA and key != "policy":
                    fail(f"unknown table [{key}]", key, None)
                continue
            if key not in keys:
                fail(f"unknown key {key!r}" + (f" in [{table}]" if table else ""), table, key)
            name, typ = keys[key]
            ok = isinstance(value, typ) and not (typ is int and isinstance(value, bool))
            if (isinstance(typ, tuple) and isinstance(value, bool)):
                ok = False
            if not ok:
                fail(f"{key}: wrong type {type(value).__name__}", table, key)
            kw[name] = float(value) if isinstance(typ, tuple) else value

    for req in ("train", "dev"):
        if req not in kw:
            fail(f"[data] needs '{req}'", "data", None)
    if "widths" in kw:
        if not all(isinstance(w, int) and not isinstance(w, bool) for w in kw["widths"]):
            fail("widths must be integers", "model", "widths")
        kw["widths"] = tuple(kw["widths"])

    pol = doc.get("policy", {"preset": "none"})
    try:
        if "preset" in pol:
            if set(pol) != {"preset"}:
                fail("[policy] takes either 'preset' or an explicit tree, not both", "policy", None)
            if pol["preset"] not in PRESETS:
                fail(f"unknown preset {pol['preset']!r} (known: {', '.join(PRESETS)})",
                     "policy", "preset")
            kw["preset"], kw["policy"] = pol["preset"], PRESETS[pol["preset"]]
        else:
            kw["preset"], kw["policy"] = None, policy_from_data(pol)
    except ConfigurationError as exc:
        fail(f"policy: {exc}", "policy", None)

    try:
        cfg = ExperimentConfig(base_dir=Path(base_dir), **kw)
        ModelSpec(cfg.widths, cfg.leaky_slope)
        cfg.train_config()
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{source}: {exc}") from None
    if cfg.fit_length < 256:
        fail("fit_length must be at least 256 samples", "", "fit_length")
    if cfg.gam_rho is not None and not cfg.gam_rho > 0:
        fail("rho must be > 0", "optimizer", "rho")

    if check_files:
        for name, table in (("train", "data"), ("dev", "data"), ("eval", "data"),
                            ("rir_bank", "data")):
            p = cfg.path(name)
            if p is not None and not p.exists():
                fail(f"{name}: no such file or directory: {p}", table, name)
    return cfg


def load(path, check_files: bool = True) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return loads(text, str(path), path.parent, check_files)


def to_data(cfg: ExperimentConfig) -> dict:
    data = {k: getattr(cfg, k) for k in ("train", "dev", "eval", "rir_bank")
            if getattr(cfg, k) is not None}
    opt: dict[str, Any] = {"name": cfg.optimizer}
    if cfg.gam_rho is not None:
        opt["rho"] = cfg.gam_rho
    opt.update(alpha=cfg.gam_alpha, xi=cfg.gam_xi, rho_decay=cfg.gam_rho_decay)
    return {
        "seed": cfg.seed,
        "fit_length": cfg.fit_length,
        "data": data,
        "policy": {"preset": cfg.preset} if cfg.preset else policy_to_data(cfg.policy),
        "model": {"widths": list(cfg.widths), "leaky_slope": cfg.leaky_slope},
        "optimizer": opt,
        "schedule": {"eta0": cfg.eta0, "eta_min": cfg.eta_min, "max_epochs": cfg.max_epochs,
                     "patience": cfg.patience, "batch_size": cfg.batch_size},
        "mixup": {"enabled": cfg.mixup, "sigma": cfg.mixup_sigma},
        "flatness": {"probes": cfg.flatness_probes, "rho": cfg.flatness_rho},
    }


def dumps(cfg: ExperimentConfig) -> str:
    return tomli_w.dumps(to_data(cfg))


def dump(cfg: ExperimentConfig, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(cfg), encoding="utf-8")


__all__ = ["ConfigError", "ExperimentConfig", "STANDARD_LENGTHS", "dump", "dumps", "load", "loads",
           "policy_from_data", "policy_to_data"]
