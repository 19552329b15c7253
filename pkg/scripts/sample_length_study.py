"""Train at each standard length, score at each length (train vs inference asymmetry).

    python3 scripts/sample_length_study.py --work lengths --epochs 20
"""
import argparse
import re
import shutil
from pathlib import Path

from gamspoof import cli
from gamspoof.config import STANDARD_LENGTHS
from gamspoof.scoring import MetricReport, join_labels, read_scores
from gamspoof.waveio import read_manifest


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--work", default="lengths")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-per-class", type=int, default=100)
    ap.add_argument("--duration", type=float, default=2.0, help="seconds of synthetic audio per trial")
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--lengths", type=int, nargs="+", default=list(STANDARD_LENGTHS))
    args = ap.parse_args(argv)

    work = Path(args.work)
    shutil.rmtree(work, ignore_errors=True)
    corpus = work / "corpus"
    assert cli.main(["synth", "--n-per-class", str(args.n_per_class), "--duration", str(args.duration),
                     "--seed", str(args.seed), "--out", str(corpus)]) == 0
    base = (corpus / "config.toml").read_text().replace("max_epochs = 50", f"max_epochs = {args.epochs}")
    dev = corpus / "dev.tsv"
    labels = read_manifest(dev).labels()

    table = {}
    for n_train in args.lengths:
        cfg = corpus / f"train_{n_train}.toml"
        cfg.write_text(re.sub(r"^fit_length = \d+", f"fit_length = {n_train}", base, flags=re.M))
        out = work / f"train_{n_train}"
        assert cli.main(["train", str(cfg), "--out", str(out)]) == 0
        for n_score in args.lengths:
            sc = out / f"scores_{n_score}.tsv"
            assert cli.main(["score", "--checkpoint", str(out / "checkpoint.bin"), "--manifest", str(dev),
                             "--fit-length", str(n_score), "--out", str(sc)]) == 0
            table[n_train, n_score] = MetricReport.compute(join_labels(read_scores(sc), labels))

    print("dev EER % / minDCF  (rows: training length, columns: inference length)")
    print(f"{'':>8}" + "".join(f"{n:>18}" for n in args.lengths))
    for a in args.lengths:
        cells = "".join(f"{100 * table[a, b].eer:>10.2f} / {table[a, b].min_dcf:.3f}" for b in args.lengths)
        print(f"{a:>8}{cells}")


if __name__ == "__main__":
    main()
