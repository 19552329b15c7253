"""Synthetic corpus -> Adam and Adam+GAM training -> scores -> metrics -> fusion.

    python3 scripts/desk_run.py --work desk --seed 0
"""
import argparse
import shutil
from pathlib import Path

from gamspoof import cli
from gamspoof.scoring import MetricReport, join_labels, read_scores
from gamspoof.waveio import read_manifest


def run(argv):
    code = cli.main(argv)
    if code:
        raise SystemExit(f"step failed ({code}): gamspoof {' '.join(argv)}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--work", default="desk", help="working directory (recreated)")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n-per-class", type=int, default=200)
    ap.add_argument("--epochs", type=int, default=50)
    ap.add_argument("--alpha", type=float, default=0.3)
    ap.add_argument("--rho", type=float, default=0.05)
    ap.add_argument("--probes", type=int, default=10, help="flatness probes per epoch")
    args = ap.parse_args(argv)

    work = Path(args.work)
    shutil.rmtree(work, ignore_errors=True)
    corpus = work / "corpus"
    run(["synth", "--n-per-class", str(args.n_per_class), "--seed", str(args.seed), "--out", str(corpus)])

    base = (corpus / "config.toml").read_text().replace("max_epochs = 50", f"max_epochs = {args.epochs}")
    flat = f"\n[flatness]\nprobes = {args.probes}\nrho = 0.05\n"
    configs = {
        "adam": base + flat,
        "adam_gam": base.replace('name = "adam"', f'name = "adam+gam"\nrho = {args.rho}\nalpha = {args.alpha}') + flat,
    }
    dev = corpus / "dev.tsv"
    scores = {}
    for name, text in configs.items():
        cfg = corpus / f"{name}.toml"
        cfg.write_text(text)
        out = work / name
        run(["train", str(cfg), "--out", str(out)])
        run(["score", "--checkpoint", str(out / "checkpoint.bin"), "--manifest", str(dev),
             "--out", str(out / "scores.tsv")])
        scores[name] = out / "scores.tsv"
    run(["fuse", *map(str, scores.values()), "--manifest", str(dev), "--out", str(work / "fused.tsv")])
    scores["fused"] = work / "fused.tsv"

    labels = read_manifest(dev).labels()
    print(f"{'system':<10}{'minDCF':>9}{'actDCF':>9}{'Cllr':>9}{'EER %':>8}")
    for name, path in scores.items():
        r = MetricReport.compute(join_labels(read_scores(path), labels))
        print(f"{name:<10}{r.min_dcf:>9.4f}{r.act_dcf:>9.4f}{r.cllr:>9.4f}{100 * r.eer:>8.2f}")


if __name__ == "__main__":
    main()
