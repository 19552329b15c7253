"""gamspoof command line: synth, train, score, eval, fuse.

Exit codes: 0 success, 1 usage/config error, 2 data error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import config as cfgmod
from .augment import ConfigurationError, RirBank
from .diffnet import MLP, CheckpointError, featurize, load_checkpoint, save_checkpoint
from .optim import Dataset, TrainingError, train, write_log
from .scoring import (MetricReport, ScoreError, ScoreSet, TrialScore, fuse_average, join_labels,
                      read_scores, write_scores)
from .synth import SynthConfig, synthesize
from .waveio import ManifestError, WavFormatError, fit_length, read_manifest, read_wav

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

log = logging.getLogger("gamspoof")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _out(args, default: str) -> Path:
    return Path(args.out or default)


def cmd_synth(args) -> int:
    out = _out(args, "synth")
    parts = synthesize(out, SynthConfig(n_per_class=args.n_per_class, n_speakers=args.speakers,
                                        seed=args.seed or 0, duration=args.duration))
    print(f"wrote {len(parts['all'])} trials ({len(parts['train'])} train / "
          f"{len(parts['dev'])} dev) to {out}")
    return EXIT_OK


def _load_config(args) -> cfgmod.ExperimentConfig:
    path = args.config_path or args.config
    if not path:
        raise UsageError("train needs a config file (positional or --config)")
    cfg = cfgmod.load(path)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = _out(args, "run")
    try:
        tr = Dataset.load(read_manifest(cfg.path("train")), cfg.fit_length)
        dv = Dataset.load(read_manifest(cfg.path("dev")), cfg.fit_length)
    except FileNotFoundError as exc:
        raise DataError(f"missing audio: {exc.filename}") from None
    bank = RirBank.from_dir(cfg.path("rir_bank")) if cfg.rir_bank else None
    if bank is None and "rir" in cfg.policy.kinds:
        raise UsageError("policy uses 'rir' but [data] has no rir_bank")
    result = train(cfg.train_config(), tr, dv, bank)
    save_checkpoint(out / "checkpoint.bin", result.theta, result.spec,
                    {"seed": cfg.seed, "fit_length": cfg.fit_length, "best_epoch": result.best_epoch})
    write_log(result, out / "train_log.tsv")
    cfgmod.dump(cfg.resolved(), out / "config.resolved.toml")
    last = result.records[-1] if result.records else None
    summary = f"; best epoch {result.best_epoch}, last dev EER {100 * last.dev_eer:.2f} %" if last else ""
    print(f"trained {len(result.records)} epochs{summary}; outputs in {out}")
    return EXIT_OK


def score_manifest(checkpoint, manifest_path, n: int) -> tuple[dict[str, float], list[str]]:
    theta, spec, _ = load_checkpoint(checkpoint)
    model = MLP(spec)
    manifest = read_manifest(manifest_path)
    scores, errors = {}, []
    for e in manifest:
        try:
            w = fit_length(read_wav(manifest.resolve(e)), n)
        except FileNotFoundError:
            errors.append(f"{e.trial_id}: missing audio {manifest.resolve(e)}")
            continue
        except (WavFormatError, ValueError) as exc:
            errors.append(f"{e.trial_id}: {exc}")
            continue
        x = featurize(w, spec.widths[0])[None, :]
        scores[e.trial_id] = float(model.scores(theta, x)[0])
    return scores, errors


def cmd_score(args) -> int:
    n = args.fit_length
    if n is None:
        _, _, meta = load_checkpoint(args.checkpoint)
        n = int(meta.get("fit_length", 64600))
    scores, errors = score_manifest(args.checkpoint, args.manifest, n)
    out = _out(args, "scores.tsv")
    write_scores(scores, out)
    for e in errors:
        print(f"error: {e}", file=sys.stderr)
    print(f"scored {len(scores)} trials at {n} samples -> {out}")
    return EXIT_DATA if errors else EXIT_OK


def cmd_eval(args) -> int:
    labels = read_manifest(args.manifest).labels()
    report = MetricReport.compute(join_labels(read_scores(args.scores), labels))
    text = report.tsv() + "\n" + report.text()
    if args.out:
        Path(args.out).write_text(report.tsv(), encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_fuse(args) -> int:
    if args.manifest:
        labels = read_manifest(args.manifest).labels()
        sets = [join_labels(read_scores(f), labels) for f in args.scores]
        fused = {t.trial_id: t.score for t in fuse_average(sets).trials}
    else:
        # labels are not needed to average; tag everything bonafide for the id/label checks
        sets = [ScoreSet(tuple(TrialScore(t, "bonafide", s) for t, s in read_scores(f).items()))
                for f in args.scores]
        fused = {t.trial_id: t.score for t in fuse_average(sets).trials}
    out = _out(args, "fused.tsv")
    write_scores(fused, out)
    print(f"fused {len(args.scores)} files over {len(fused)} trials -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    def flags(default):
        g = _Parser(add_help=False)
        g.add_argument("--seed", type=int, default=default, help="master seed (overrides config)")
        g.add_argument("--config", default=default, help="experiment config (TOML)")
        g.add_argument("--out", default=default, help="output file or directory")
        g.add_argument("-v", "--verbose", action="store_true", default=default or False)
        return g

    # global flags may sit before or after the subcommand; the subcommand copy
    # must not clobber values given before it
    p = _Parser(prog="gamspoof", description=__doc__.splitlines()[0], parents=[flags(None)])
    common = flags(argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic corpus")
    s.add_argument("--n-per-class", type=int, default=200)
    s.add_argument("--speakers", type=int, default=10)
    s.add_argument("--duration", type=float, default=1.0, help="seconds per trial")
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("train", parents=[common], help="train from a config")
    t.add_argument("config_path", nargs="?", help="config file (same as --config)")
    t.set_defaults(func=cmd_train)

    sc = sub.add_parser("score", parents=[common], help="score a manifest with a checkpoint")
    sc.add_argument("--checkpoint", required=True)
    sc.add_argument("--manifest", required=True)
    sc.add_argument("--fit-length", type=int, default=None,
                    help="samples per trial at inference (default: training length)")
    sc.set_defaults(func=cmd_score)

    e = sub.add_parser("eval", parents=[common], help="metrics for a score file")
    e.add_argument("scores")
    e.add_argument("manifest")
    e.set_defaults(func=cmd_eval)

    f = sub.add_parser("fuse", parents=[common], help="average several score files")
    f.add_argument("scores", nargs="+")
    f.add_argument("--manifest", default=None, help="check labels against this manifest")
    f.set_defaults(func=cmd_fuse)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"gamspoof: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, cfgmod.ConfigError, ConfigurationError) as exc:
        print(f"gamspoof: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ManifestError, ScoreError, CheckpointError, WavFormatError,
            TrainingError, FileNotFoundError) as exc:
        msg = f"{exc.filename}: {exc.strerror}" if isinstance(exc, FileNotFoundError) else exc
        print(f"gamspoof: data error: {msg}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
