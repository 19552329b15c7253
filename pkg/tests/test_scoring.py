import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gamspoof.scoring import (DEFAULT_DCF, DcfParams, MetricReport, ScoreError, ScoreSet,
                              TrialScore, act_dcf, cllr, dcf, eer, error_rates, fuse_average,
                              join_labels, min_dcf, read_scores, write_scores)

S = ScoreSet.from_arrays


def brute_min_dcf(bona, spoof, beta=1.9):
    pts = np.unique(np.concatenate([bona, spoof]))
    cands = np.concatenate([[-np.inf], (pts[:-1] + pts[1:]) / 2, [np.inf]])
    best = np.inf
    for t in cands:
        pm = sum(b < t for b in bona) / len(bona)
        pf = sum(s >= t for s in spoof) / len(spoof)
        best = min(best, beta * pm + pf)
    return best


def brute_eer(bona, spoof):
    thr = sorted(set(bona) | set(spoof)) + [math.inf]
    pts = [(sum(b < t for b in bona) / len(bona), sum(s >= t for s in spoof) / len(spoof))
           for t in thr]
    prev = None
    for pm, pf in pts:
        if pm - pf >= 0:
            if prev is None or pm - pf == 0:
                return pm
            d0, d1 = prev[0] - prev[1], pm - pf
            w = -d0 / (d1 - d0)
            return prev[0] + w * (pm - prev[0])
        prev = (pm, pf)


def test_beta_and_bounds():
    assert DEFAULT_DCF.beta == pytest.approx(1.9, abs=1e-12)
    assert (1 / 10) * (0.95 / 0.05) == pytest.approx(DEFAULT_DCF.beta, abs=1e-12)
    s = S([0.9, 0.2], [0.1, 0.8])
    assert error_rates(s, -10) == (0.0, 1.0)
    assert error_rates(s, 10) == (1.0, 0.0)
    assert error_rates(s, 0.5) == (0.5, 0.5)
    assert dcf(s, -10) == 1.0
    assert dcf(s, 10) == pytest.approx(1.9)
    assert dcf(s, 0.5) == pytest.approx(1.45)


def test_min_dcf_examples():
    assert min_dcf(S([2, 3], [0, 1]))[0] == 0.0
    assert min_dcf(S([0.5] * 4, [0.5] * 3))[0] == 1.0
    v, t = min_dcf(S([0.9, 0.2], [0.1, 0.8]))
    assert dcf(S([0.9, 0.2], [0.1, 0.8]), t) == v


def test_min_dcf_tie_smallest_threshold():
    # thresholds 1 and 3 both give the same cost; the smaller must win
    s = S([1.0, 3.0], [0.0, 2.0])
    v, t = min_dcf(s, DcfParams(c_miss=1, c_fa=1, p_spoof=0.5))
    assert v == pytest.approx(0.5) and t == 1.0


def test_act_dcf_examples():
    lb = math.log(1.9)
    assert act_dcf(S([lb, lb + 1], [lb - 0.1])) == 0.0
    assert act_dcf(S([lb - 1, lb - 2], [lb - 3])) == pytest.approx(1.9)
    s = S(np.random.default_rng(0).normal(1, 1, 50), np.random.default_rng(1).normal(-1, 1, 50))
    assert act_dcf(s) == dcf(s, math.log(1.9))


def test_cllr_examples():
    assert cllr(S([0.0], [0.0])) == pytest.approx(1.0, abs=1e-15)
    assert cllr(S([100.0], [-100.0])) <= 1e-12
    mpmath.mp.dps = 30
    ref = 0.5 * (mpmath.log(1 + mpmath.e ** -1, 2) + mpmath.log(1 + mpmath.e ** -0.5, 2))
    assert cllr(S([1.0], [-0.5])) == pytest.approx(float(ref), rel=1e-12)
    assert math.isfinite(cllr(S([-1000.0], [1000.0])))


def test_eer_examples():
    assert eer(S([2, 3], [0, 1]))[0] == 0.0
    assert eer(S([0, 1], [2, 3]))[0] == 1.0
    b, s = [0.9, 0.8, 0.3], [0.1, 0.7, 0.75]
    assert eer(S(b, s))[0] == pytest.approx(brute_eer(b, s), abs=1e-12)
    assert eer(S(b, s))[0] == pytest.approx(1 / 3)


def test_requires_both_classes():
    with pytest.raises(ScoreError):
        eer(S([1.0], []))
    with pytest.raises(ScoreError):
        TrialScore("x", "bonafide", float("nan"))
    with pytest.raises(ScoreError):
        ScoreSet((TrialScore("x", "spoof", 0.0), TrialScore("x", "spoof", 1.0)))


scores = st.lists(st.integers(-20, 20).map(lambda v: v / 4), min_size=1, max_size=25)


@settings(max_examples=300, deadline=None)
@given(scores, scores)
def test_sweep_matches_brute_force(bona, spoof):
    s = S(bona, spoof)
    assert min_dcf(s)[0] == pytest.approx(brute_min_dcf(bona, spoof), abs=1e-12)
    e = eer(s)[0]
    assert e == pytest.approx(brute_eer(bona, spoof), abs=1e-9)
    assert 0 <= e <= 1
    assert 0 <= min_dcf(s)[0] <= min(1.0, DEFAULT_DCF.beta)
    assert cllr(s) >= 0


@settings(max_examples=100, deadline=None)
@given(scores, scores, st.sampled_from([np.exp, lambda v: 3 * v - 7, np.arctan]))
def test_monotone_transform_invariance(bona, spoof, f):
    a, b = S(bona, spoof), S(f(np.array(bona)), f(np.array(spoof)))
    assert min_dcf(a)[0] == pytest.approx(min_dcf(b)[0], abs=1e-12)
    assert eer(a)[0] == pytest.approx(eer(b)[0], abs=1e-12)


def test_fusion_basics():
    rng = np.random.default_rng(5)
    a = S(rng.normal(1, 1, 30), rng.normal(-1, 1, 30))
    b = S(rng.normal(1, 1, 30), rng.normal(-1, 1, 30))
    assert fuse_average([a]) == a
    aa = fuse_average([a, a])
    assert [t.score for t in aa.trials] == [t.score for t in sorted(a.trials, key=lambda t: t.trial_id)]
    assert min_dcf(aa) == min_dcf(a) and eer(aa) == eer(a)
    ab, ba = fuse_average([a, b]), fuse_average([b, a])
    assert ab == ba
    for t in ab.trials:
        assert t.score == pytest.approx((a.by_id()[t.trial_id].score + b.by_id()[t.trial_id].score) / 2)


def test_fusion_errors():
    a = S([1.0], [0.0])
    b = ScoreSet((TrialScore("b000000", "spoof", 1.0), TrialScore("s000000", "spoof", 0.0)))
    with pytest.raises(ScoreError):
        fuse_average([a, b])
    with pytest.raises(ScoreError):
        fuse_average([a, S([1.0, 2.0], [0.0])])
    with pytest.raises(ScoreError):
        fuse_average([])


def test_score_file_round_trip(tmp_path):
    sc = {"t2": 0.1 + 0.2, "t1": -3.5e-17, "t10": 12.0}
    write_scores(sc, tmp_path / "s.tsv")
    lines = (tmp_path / "s.tsv").read_text().splitlines()
    assert [ln.split("\t")[0] for ln in lines] == ["t1", "t10", "t2"]
    assert read_scores(tmp_path / "s.tsv") == sc
    (tmp_path / "bad.tsv").write_text("t1\tx\n")
    with pytest.raises(ScoreError):
        read_scores(tmp_path / "bad.tsv")
    with pytest.raises(ScoreError):
        join_labels({"zz": 1.0}, {"t1": "bonafide"})


def test_report_text():
    r = MetricReport.compute(S([1.0, 2.0], [-1.0, 0.5]))
    head, row = r.tsv().splitlines()
    assert head.split("\t") == ["minDCF", "actDCF", "Cllr", "EER", "n_bona", "n_spoof"]
    assert row.split("\t")[-2:] == ["2", "2"]
    assert "ln(beta)" in r.text() and "beta=1.9" in r.text()
