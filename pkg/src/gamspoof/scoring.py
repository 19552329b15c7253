"""Countermeasure metrics (EER, DCF family, Cllr) and average score fusion.

Scores follow one polarity throughout: higher means more bona fide.  A trial
is accepted as bona fide when ``score >= threshold``.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

LN2 = math.log(2.0)


class ScoreError(ValueError):
    pass


@dataclass(frozen=True)
class TrialScore:
    trial_id: str
    label: str
    score: float

    def __post_init__(self):
        if self.label not in ("bonafide", "spoof"):
            raise ScoreError(f"trial {self.trial_id}: bad label {self.label!r}")
        if not math.isfinite(self.score):
            raise ScoreError(f"trial {self.trial_id}: non-finite score")


@dataclass(frozen=True)
class ScoreSet:
    trials: tuple[TrialScore, ...]
    bona: np.ndarray = field(init=False, repr=False, compare=False)
    spoof: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        trials = tuple(self.trials)
        ids = [t.trial_id for t in trials]
        if len(set(ids)) != len(ids):
            raise ScoreError("duplicate trial ids in score set")
        object.__setattr__(self, "trials", trials)
        object.__setattr__(self, "bona", np.array([t.score for t in trials if t.label == "bonafide"]))
        object.__setattr__(self, "spoof", np.array([t.score for t in trials if t.label == "spoof"]))

    @classmethod
    def from_arrays(cls, bona: Sequence[float], spoof: Sequence[float]) -> "ScoreSet":
        trials = [TrialScore(f"b{i:06d}", "bonafide", float(s)) for i, s in enumerate(bona)]
        trials += [TrialScore(f"s{i:06d}", "spoof", float(s)) for i, s in enumerate(spoof)]
        return cls(tuple(trials))

    def __len__(self) -> int:
        return len(self.trials)

    def by_id(self) -> dict[str, TrialScore]:
        return {t.trial_id: t for t in self.trials}


@dataclass(frozen=True)
class DcfParams:
    c_miss: float = 1.0
    c_fa: float = 10.0
    p_spoof: float = 0.05

    @property
    def beta(self) -> float:
        # one rounding per product keeps the defaults at the double nearest 1.9
        return self.c_miss * (1.0 - self.p_spoof) / (self.c_fa * self.p_spoof)


DEFAULT_DCF = DcfParams()


def _split(s: ScoreSet) -> tuple[np.ndarray, np.ndarray]:
    if s.bona.size == 0 or s.spoof.size == 0:
        raise ScoreError("need at least one bonafide and one spoof trial")
    return s.bona, s.spoof


def error_rates(s: ScoreSet, threshold: float) -> tuple[float, float]:
    bona, spoof = _split(s)
    p_miss = np.count_nonzero(bona < threshold) / bona.size
    p_fa = np.count_nonzero(spoof >= threshold) / spoof.size
    return float(p_miss), float(p_fa)


def dcf(s: ScoreSet, threshold: float, p: DcfParams = DEFAULT_DCF) -> float:
    p_miss, p_fa = error_rates(s, threshold)
    return p.beta * p_miss + p_fa


def _operating_points(s: ScoreSet):
    """Error rates at every distinct score used as threshold, then at +inf.

    These are the n+1 distinct decision regions; rates are exact count ratios.
    """
    bona, spoof = _split(s)
    thr = np.unique(np.concatenate([bona, spoof]))
    bs, ss = np.sort(bona), np.sort(spoof)
    miss = np.searchsorted(bs, thr, side="left")
    fa = ss.size - np.searchsorted(ss, thr, side="left")
    thr = np.append(thr, np.inf)
    miss = np.append(miss, bs.size) / bs.size
    fa = np.append(fa, 0) / ss.size
    return thr, miss, fa


def min_dcf(s: ScoreSet, p: DcfParams = DEFAULT_DCF) -> tuple[float, float]:
    """Minimum normalized DCF over thresholds and the smallest threshold attaining it."""
    thr, miss, fa = _operating_points(s)
    costs = p.beta * miss + fa
    k = int(np.argmin(costs))
    return float(costs[k]), float(thr[k])


def act_dcf(s: ScoreSet, p: DcfParams = DEFAULT_DCF) -> float:
    """DCF at the Bayes threshold ln(beta), reading scores as log-likelihood ratios."""
    return dcf(s, math.log(p.beta), p)


def cllr(s: ScoreSet) -> float:
    bona, spoof = _split(s)
    c_bona = np.mean(np.logaddexp(0.0, -bona)) / LN2
    c_spoof = np.mean(np.logaddexp(0.0, spoof)) / LN2
    return float(0.5 * (c_bona + c_spoof))


def eer(s: ScoreSet) -> tuple[float, float]:
    """Equal error rate by linear interpolation at the sign change of P_miss - P_fa."""
    thr, miss, fa = _operating_points(s)
    d = miss - fa
    k = int(np.argmax(d >= 0))  # d ends at +1, so a crossing exists
    if d[k] == 0 or k == 0:
        return float(miss[k]), float(thr[k])
    w = -d[k - 1] / (d[k] - d[k - 1])
    value = miss[k - 1] + w * (miss[k] - miss[k - 1])
    hi = thr[k] if np.isfinite(thr[k]) else thr[k - 1]
    return float(value), float(thr[k - 1] + w * (hi - thr[k - 1]))


def fuse_average(sets: Sequence[ScoreSet]) -> ScoreSet:
    """Per-trial arithmetic mean of scores; trial ids and labels must agree."""
    if not sets:
        raise ScoreError("nothing to fuse")
    maps = [s.by_id() for s in sets]
    ids = sorted(maps[0])
    for i, m in enumerate(maps[1:], start=2):
        if set(m) != set(ids):
            raise ScoreError(f"score set {i} covers different trials")
    fused = []
    for tid in ids:
        labels = {m[tid].label for m in maps}
        if len(labels) != 1:
            raise ScoreError(f"trial {tid}: label disagreement {sorted(labels)}")
        fused.append(TrialScore(tid, labels.pop(), float(np.mean([m[tid].score for m in maps]))))
    return ScoreSet(tuple(fused))


# -- files ---------------------------------------------------------------------

def write_scores(scores: Mapping[str, float] | Iterable[tuple[str, float]], path) -> None:
    """``trial_id<TAB>score`` lines sorted by trial id; scores in round-trip repr."""
    items = sorted(dict(scores).items())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        for tid, sc in items:
            fh.write(f"{tid}\t{float(sc)!r}\n")
    os.replace(tmp, path)


def read_scores(path) -> dict[str, float]:
    out: dict[str, float] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), start=1):
            if not row:
                continue
            if len(row) != 2:
                raise ScoreError(f"{path}:{lineno}: expected 'trial_id<TAB>score'")
            try:
                val = float(row[1])
            except ValueError:
                raise ScoreError(f"{path}:{lineno}: bad score {row[1]!r}") from None
            if row[0] in out:
                raise ScoreError(f"{path}:{lineno}: duplicate trial {row[0]!r}")
            out[row[0]] = val
    return out


def join_labels(scores: Mapping[str, float], labels: Mapping[str, str]) -> ScoreSet:
    missing = sorted(set(scores) - set(labels))
    if missing:
        raise ScoreError(f"{len(missing)} scored trials have no label, e.g. {missing[0]!r}")
    return ScoreSet(tuple(TrialScore(t, labels[t], s) for t, s in sorted(scores.items())))


REPORT_COLUMNS = ("minDCF", "actDCF", "Cllr", "EER", "n_bona", "n_spoof")


@dataclass(frozen=True)
class MetricReport:
    min_dcf: float
    act_dcf: float
    cllr: float
    eer: float
    n_bona: int
    n_spoof: int
    params: DcfParams = DEFAULT_DCF

    @classmethod
    def compute(cls, s: ScoreSet, p: DcfParams = DEFAULT_DCF) -> "MetricReport":
        return cls(min_dcf(s, p)[0], act_dcf(s, p), cllr(s), eer(s)[0],
                   int(s.bona.size), int(s.spoof.size), p)

    def tsv(self) -> str:
        vals = (self.min_dcf, self.act_dcf, self.cllr, self.eer, self.n_bona, self.n_spoof)
        return "\t".join(REPORT_COLUMNS) + "\n" + "\t".join(
            f"{v:.6f}" if isinstance(v, float) else str(v) for v in vals) + "\n"

    def text(self) -> str:
        p = self.params
        return (
            f"# C_miss={p.c_miss:g} C_fa={p.c_fa:g} pi_spoof={p.p_spoof:g} beta={p.beta:.6g}\n"
            f"# actDCF: DCF at threshold ln(beta)={math.log(p.beta):.6f} on raw scores read as LLRs\n"
            f"# Cllr: 0.5*[mean log2(1+e^-s) over bonafide + mean log2(1+e^s) over spoof]\n"
            f"minDCF  {self.min_dcf:.4f}\n"
            f"actDCF  {self.act_dcf:.4f}\n"
            f"Cllr    {self.cllr:.4f} bits\n"
            f"EER     {100.0 * self.eer:.2f} %\n"
            f"trials  {self.n_bona} bonafide / {self.n_spoof} spoof\n"
        )
