"""Single / random / cascade composition of catalog transforms."""
from __future__ import annotations

import inspect
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from ..waveio import Waveform
from .primitives import CATALOG, TRANSFORMS, AugmentContext, ConfigurationError

POLICIES = ("none", "single", "random", "cascade")


def _validate_param(kind: str, name: str, value: Any) -> None:
    if isinstance(value, (tuple, list)):
        if len(value) != 2:
            raise ConfigurationError(f"{kind}.{name}: range must have two bounds")
        lo, hi = value
        if not lo <= hi:
            raise ConfigurationError(f"{kind}.{name}: empty range [{lo}, {hi}]")


@dataclass(frozen=True)
class TransformSpec:
    kind: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CATALOG:
            raise ConfigurationError(f"unknown transform kind {self.kind!r}")
        sig = inspect.signature(TRANSFORMS[self.kind])
        allowed = set(sig.parameters) - {"w", "rng", "bank", "partner"}
        for name, value in self.params.items():
            if name not in allowed:
                raise ConfigurationError(
                    f"{self.kind}: unknown parameter {name!r} (allowed: {sorted(allowed)})")
            _validate_param(self.kind, name, value)
        object.__setattr__(self, "params", {
            k: tuple(v) if isinstance(v, list) else v for k, v in self.params.items()})

    def __call__(self, w: Waveform, rng: np.random.Generator,
                 ctx: AugmentContext | None = None) -> Waveform:
        return CATALOG[self.kind](w, rng, ctx, **self.params)


@dataclass(frozen=True)
class AugmentPolicy:
    """``single``: one spec; ``random``: uniform pick from a set of specs;
    ``cascade``: ordered list of single/random sub-policies."""

    policy: str
    stages: tuple = ()

    def __post_init__(self):
        stages = tuple(self.stages)
        object.__setattr__(self, "stages", stages)
        if self.policy not in POLICIES:
            raise ConfigurationError(f"unknown policy {self.policy!r}")
        if self.policy == "none":
            if stages:
                raise ConfigurationError("policy 'none' takes no stages")
        elif self.policy == "single":
            if len(stages) != 1 or not isinstance(stages[0], TransformSpec):
                raise ConfigurationError("single policy needs exactly one TransformSpec")
        elif self.policy == "random":
            if len(stages) < 1 or not all(isinstance(s, TransformSpec) for s in stages):
                raise ConfigurationError("random policy needs a non-empty set of TransformSpecs")
        else:
            if len(stages) < 2:
                raise ConfigurationError("cascade policy needs at least two stages")
            for s in stages:
                if not isinstance(s, AugmentPolicy) or s.policy not in ("single", "random"):
                    raise ConfigurationError("cascade stages must be single or random policies")

    @property
    def kinds(self) -> set[str]:
        if self.policy == "cascade":
            return set().union(*(s.kinds for s in self.stages))
        return {s.kind for s in self.stages}


def apply_policy(policy: AugmentPolicy, w: Waveform, rng: np.random.Generator,
                 ctx: AugmentContext | None = None) -> Waveform:
    if policy.policy == "none":
        return w
    if policy.policy == "single":
        return policy.stages[0](w, rng, ctx)
    if policy.policy == "random":
        spec = policy.stages[int(rng.integers(len(policy.stages)))]
        return spec(w, rng, ctx)
    for stage in policy.stages:
        w = apply_policy(stage, w, rng, ctx)
    return w


def utterance_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for (seed, keys...), e.g. (seed, epoch, utterance)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


# -- named policies ------------------------------------------------------------

def single(kind: str, **params) -> AugmentPolicy:
    return AugmentPolicy("single", (TransformSpec(kind, params),))


def random_set(*kinds: str) -> AugmentPolicy:
    return AugmentPolicy("random", tuple(TransformSpec(k) for k in kinds))


def cascade(*stages: AugmentPolicy) -> AugmentPolicy:
    return AugmentPolicy("cascade", stages)


NOISE_SET = ("add_color_noise", "add_gaussian_noise", "add_gaussian_snr")
FILTER_SET = (
    "band_pass_filter",
    "band_stop_filter",
    "high_pass_filter",
    "high_shelf_filter",
    "low_pass_filter",
    "low_shelf_filter",
    "peaking_filter",
)
MIX_SET = (
    "add_gaussian_noise",
    "air_absorption",
    "aliasing",
    "band_pass_filter",
    "shift",
    "pitch_shift",
    "high_pass_filter",
    "low_pass_filter",
    "polarity_inversion",
    "peaking_filter",
    "time_stretch",
    "time_mask",
    "tanh_distortion",
)

PRESETS: dict[str, AugmentPolicy] = {
    "none": AugmentPolicy("none"),
    "rir": single("rir"),
    "lnl": single("lnl"),
    "ssi": single("ssi"),
    "isd": single("isd"),
    "compand": random_set("a_law", "mu_law"),
    "time_mask": single("time_mask"),
    "amplitude": single("amplitude"),
    "noise_set": random_set(*NOISE_SET),
    "filter_set": random_set(*FILTER_SET),
    "mix_set": random_set(*MIX_SET),
    "rir_timemask": cascade(single("rir"), single("time_mask")),
    "lnl_isd": cascade(single("lnl"), single("isd")),
    "noise_filter": cascade(random_set(*NOISE_SET), random_set(*FILTER_SET)),
    "rir_mix": cascade(single("rir"), random_set(*MIX_SET)),
    "rir_noise_filter": cascade(single("rir"), random_set(*NOISE_SET), random_set(*FILTER_SET)),
}
