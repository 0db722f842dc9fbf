"""Command-line surface.

Subcommands: ``synth`` (generate a texture corpus), ``glcm`` (images to
feature CSV), ``pca-spectrum`` (feature CSV to eigenvalue CSV), ``train``
(manifest to serialized models), ``score`` (models + images to label CSV),
and ``experiment`` (manifest to a repeated-split score report).

Exit codes: 0 success, 1 usage error, 2 data or parse error.  All
randomness hangs off --seed.  Option values resolve as: explicit flag,
then --config file (flat ``key=value`` lines), then built-in default.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import backend
from . import forest as forest_mod
from . import pca as pca_mod
from . import pipeline
from .autoencoder import TrainConfig
from .autoencoder import load_model as load_ae
from .autoencoder import save_model as save_ae
from .datasets import ManifestError, load_images, load_manifest
from .forest import ForestConfig, LabeledDataset
from .pgm import PgmParseError, load_pgm
from .synth import SynthSpec, write_dataset
from .texture import DIRECTIONS, SpatialRelationship

META_MAGIC = "texscore-meta"
META_VERSION = 1
SCALER_MAGIC = "texscore-scaler"


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _fraction(text):
    value = float(text)
    if not (0.0 < value < 1.0):
        raise argparse.ArgumentTypeError(f"expected a fraction in (0, 1), got {text}")
    return value


def build_parser() -> _Parser:
    parser = _Parser(prog="texscore", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--threads", type=_positive_int, default=None,
                       help="worker cap (default: TEXSCORE_THREADS or 1)")

    p = sub.add_parser("synth", help="generate a synthetic 4-class texture corpus")
    common(p)
    p.add_argument("--per-class", type=_positive_int, default=None)
    p.add_argument("--size", type=_positive_int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("glcm", help="extract co-occurrence feature rows to CSV")
    common(p)
    p.add_argument("images", nargs="*", help="PGM files (or use --manifest)")
    p.add_argument("--manifest", default=None)
    p.add_argument("--direction", choices=DIRECTIONS, default=None)
    p.add_argument("--distance", type=_positive_int, default=None)
    p.add_argument("--levels", type=_positive_int, default=None)
    p.add_argument("--raw-counts", action="store_true", default=None)
    p.add_argument("--output", default=None, help="output CSV path (default stdout)")

    p = sub.add_parser("pca-spectrum", help="eigenvalue spectrum of a feature CSV")
    common(p)
    p.add_argument("features", help="feature CSV (one row per image)")
    p.add_argument("--components", type=_positive_int, default=None)
    p.add_argument("--output", default=None, help="output CSV path (default stdout)")

    p = sub.add_parser("train", help="fit models on a labeled manifest")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=pipeline.MODE_KINDS, required=True)
    p.add_argument("--dim", type=_positive_int, default=None,
                   help="manifold dimension (hidden units / components)")
    p.add_argument("--k", type=_positive_int, default=None,
                   help="alias for --dim in the pc modes")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=None)
    _feature_flags(p)
    _model_flags(p)

    p = sub.add_parser("score", help="label images with previously trained models")
    common(p)
    p.add_argument("images", nargs="*", help="PGM files (or use --manifest)")
    p.add_argument("--manifest", default=None)
    p.add_argument("--models", required=True, help="directory written by 'train'")
    p.add_argument("--output", default=None, help="label CSV path (default stdout)")

    p = sub.add_parser("experiment", help="repeated random-split scoring protocol")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=pipeline.MODE_KINDS, default=None)
    p.add_argument("--dim", type=_positive_int, default=None)
    p.add_argument("--k", type=_positive_int, default=None)
    p.add_argument("--runs", type=_positive_int, default=None)
    p.add_argument("--train-fraction", type=_fraction, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--inductive", action="store_true", default=None,
                   help="fit manifold features on training rows only")
    p.add_argument("--share-manifold", action="store_true", default=None,
                   help="fit manifold features once instead of per run")
    p.add_argument("--out", default=None, help="also write the report CSV here")
    _feature_flags(p)
    _model_flags(p)

    return parser


def _feature_flags(p):
    p.add_argument("--direction", choices=DIRECTIONS, default=None)
    p.add_argument("--distance", type=_positive_int, default=None)
    p.add_argument("--levels", type=_positive_int, default=None)
    p.add_argument("--raw-counts", action="store_true", default=None)
    p.add_argument("--pixel-grid", type=_positive_int, default=None)


def _model_flags(p):
    p.add_argument("--epochs", type=_positive_int, default=None)
    p.add_argument("--learning-rate", type=float, default=None)
    p.add_argument("--batch-size", type=_positive_int, default=None)
    p.add_argument("--weight-penalty", type=float, default=None)
    p.add_argument("--trees", type=_positive_int, default=None)
    p.add_argument("--mtry", type=_positive_int, default=None)
    p.add_argument("--min-leaf", type=_positive_int, default=None)


# --------------------------------------------------------------------------
# configuration resolution
# --------------------------------------------------------------------------


def _load_config_file(path) -> dict[str, str]:
    values = {}
    for line_number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{line_number}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


class _Settings:
    """flag > config file > default, with typed conversion."""

    def __init__(self, args):
        self.args = args
        self.file = _load_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, name, default, convert=None):
        value = getattr(self.args, name, None)
        if value is None and name in self.file:
            raw = self.file[name]
            if convert is bool:
                return raw.lower() in ("1", "true", "yes", "on")
            value = (convert or str)(raw)
        if value is None:
            return default
        return value

    def get_bool(self, name, default=False):
        value = getattr(self.args, name, None)
        if value is None and name in self.file:
            return self.file[name].lower() in ("1", "true", "yes", "on")
        return default if value is None else bool(value)


def _relationship(settings) -> SpatialRelationship:
    return SpatialRelationship(
        direction=settings.get("direction", "ne"),
        distance=settings.get("distance", 3, int),
    )


def _experiment_config(settings, mode) -> pipeline.ExperimentConfig:
    seed = settings.get("seed", 0, int)
    ae = TrainConfig(
        learning_rate=settings.get("learning_rate", 0.1, float),
        epochs=settings.get("epochs", 200, int),
        batch_size=settings.get("batch_size", 32, int),
        weight_penalty=settings.get("weight_penalty", 1e-4, float),
        seed=seed,
    )
    rf = ForestConfig(
        n_trees=settings.get("trees", 500, int),
        mtry=settings.get("mtry", None, int),
        min_leaf=settings.get("min_leaf", 1, int),
        seed=seed,
    )
    return pipeline.ExperimentConfig(
        mode=mode,
        runs=settings.get("runs", 100, int),
        train_fraction=settings.get("train_fraction", 0.5, float),
        master_seed=seed,
        ae_config=ae,
        rf_config=rf,
        relationship=_relationship(settings),
        levels=settings.get("levels", 51, int),
        raw_counts=settings.get_bool("raw_counts"),
        pixel_grid=settings.get("pixel_grid", 64, int),
        inductive=settings.get_bool("inductive"),
        share_manifold=settings.get_bool("share_manifold"),
        threads=backend.resolve_threads(settings.get("threads", None, int)),
    )


def _mode_from(settings, required=True) -> pipeline.FeatureMode | None:
    kind = settings.get("mode", "glcm" if not required else None)
    if kind is None:
        raise _UsageError("texscore: error: --mode is required")
    dim = settings.get("dim", None, int)
    if dim is None:
        dim = settings.get("k", None, int)
    if kind != "glcm" and dim is None:
        raise _UsageError(
            f"texscore: error: mode {kind!r} needs --dim (or --k for pc modes)"
        )
    return pipeline.FeatureMode(kind=kind, dim=None if kind == "glcm" else dim)


def _gather_images(args, threads):
    if args.manifest:
        entries = load_manifest(args.manifest)
        return [str(e.path) for e in entries], load_images(entries, threads)
    if not args.images:
        raise _UsageError("texscore: error: provide image paths or --manifest")
    return list(args.images), [load_pgm(p) for p in args.images]


def _open_out(path):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline="", encoding="ascii"), True


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _cmd_synth(args) -> int:
    settings = _Settings(args)
    spec = SynthSpec(
        per_class=settings.get("per_class", 25, int),
        size=settings.get("size", 96, int),
        seed=settings.get("seed", 0, int),
    )
    out_dir = settings.get("out_dir", "synth_data")
    manifest = write_dataset(spec, out_dir)
    print(f"wrote {spec.per_class * len(spec.classes)} images and {manifest}")
    return 0


def _cmd_glcm(args) -> int:
    settings = _Settings(args)
    threads = backend.resolve_threads(settings.get("threads", None, int))
    _, images = _gather_images(args, threads)
    matrix = pipeline.glcm_feature_matrix(
        images,
        levels=settings.get("levels", 51, int),
        rel=_relationship(settings),
        raw_counts=settings.get_bool("raw_counts"),
        threads=threads,
    )
    fh, close = _open_out(settings.get("output", None))
    try:
        for row in matrix:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    finally:
        if close:
            fh.close()
    return 0


def _cmd_pca_spectrum(args) -> int:
    settings = _Settings(args)
    matrix = np.loadtxt(args.features, delimiter=",", ndmin=2)
    if matrix.shape[0] < 2:
        raise ValueError("need at least two feature rows for a spectrum")
    k = settings.get("components", min(matrix.shape), int)
    model = pca_mod.fit_pca(matrix, k)
    fh, close = _open_out(settings.get("output", None))
    try:
        fh.write("index,eigenvalue\n")
        for i, value in enumerate(model.eigenvalues, start=1):
            fh.write(f"{i},{value:.17g}\n")
    finally:
        if close:
            fh.close()
    return 0


def _write_scaler(scaler, path) -> None:
    mins, maxs = scaler
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{SCALER_MAGIC} 1 {mins.size}\n")
        fh.write(" ".join(f"{v:.17g}" for v in mins) + "\n")
        fh.write(" ".join(f"{v:.17g}" for v in maxs) + "\n")


def _read_scaler(path):
    with open(path, encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != SCALER_MAGIC:
            raise ValueError(f"not a {SCALER_MAGIC} file: {path}")
        p = int(header[2])
        mins = np.array([float(v) for v in fh.readline().split()])
        maxs = np.array([float(v) for v in fh.readline().split()])
    if mins.size != p or maxs.size != p:
        raise ValueError(f"scaler rows must have {p} entries")
    return mins, maxs


def _cmd_train(args) -> int:
    settings = _Settings(args)
    mode = _mode_from(settings)
    config = _experiment_config(settings, mode)
    entries = [e for e in load_manifest(args.manifest) if e.label is not None]
    if not entries:
        raise ValueError(f"{args.manifest}: no labeled rows to train on")
    images = load_images(entries, config.threads)
    labels = np.array([e.label for e in entries], dtype=np.int64)
    features, artifacts = pipeline.build_features(
        images, mode, config, return_artifacts=True
    )
    model = forest_mod.train_forest(
        LabeledDataset(features, labels), config.rf_config, threads=config.threads
    )

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    forest_mod.save_model(model, out / "forest.txt")
    if "pca" in artifacts:
        pca_mod.save_model(artifacts["pca"], out / "pca.txt")
    if "ae" in artifacts:
        save_ae(artifacts["ae"], out / "autoencoder.txt")
        _write_scaler(artifacts["scaler"], out / "scaler.txt")
    with open(out / "meta.txt", "w", encoding="ascii") as fh:
        fh.write(f"format={META_MAGIC} {META_VERSION}\n")
        fh.write(f"mode={mode.kind}\n")
        fh.write(f"dim={'' if mode.dim is None else mode.dim}\n")
        fh.write(f"levels={config.levels}\n")
        fh.write(f"direction={config.relationship.direction}\n")
        fh.write(f"distance={config.relationship.distance}\n")
        fh.write(f"raw_counts={int(config.raw_counts)}\n")
        fh.write(f"pixel_grid={config.pixel_grid}\n")
    print(f"wrote models to {out}")
    return 0


def _load_meta(path) -> dict[str, str]:
    meta = {}
    for line in Path(path).read_text(encoding="ascii").splitlines():
        if not line.strip():
            continue
        key, value = line.split("=", 1)
        meta[key] = value
    if meta.get("format") != f"{META_MAGIC} {META_VERSION}":
        raise ValueError(f"not a {META_MAGIC} v{META_VERSION} file: {path}")
    return meta


def _cmd_score(args) -> int:
    settings = _Settings(args)
    threads = backend.resolve_threads(settings.get("threads", None, int))
    model_dir = Path(args.models)
    meta = _load_meta(model_dir / "meta.txt")
    mode = pipeline.FeatureMode(
        kind=meta["mode"], dim=int(meta["dim"]) if meta["dim"] else None
    )
    config = pipeline.ExperimentConfig(
        mode=mode,
        runs=1,
        master_seed=0,
        relationship=SpatialRelationship(meta["direction"], int(meta["distance"])),
        levels=int(meta["levels"]),
        raw_counts=bool(int(meta["raw_counts"])),
        pixel_grid=int(meta["pixel_grid"]),
        threads=threads,
    )
    artifacts = {}
    if (model_dir / "pca.txt").is_file():
        artifacts["pca"] = pca_mod.load_model(model_dir / "pca.txt")
    if (model_dir / "autoencoder.txt").is_file():
        artifacts["ae"] = load_ae(model_dir / "autoencoder.txt")
        artifacts["scaler"] = _read_scaler(model_dir / "scaler.txt")
    forest = forest_mod.load_model(model_dir / "forest.txt")

    paths, images = _gather_images(args, threads)
    features = pipeline.build_features(images, mode, config, artifacts=artifacts)
    predictions = forest_mod.predict_batch(forest, features)
    fh, close = _open_out(settings.get("output", None))
    try:
        writer = csv.writer(fh)
        writer.writerow(["path", "label"])
        for path, label in zip(paths, predictions):
            writer.writerow([path, int(label)])
    finally:
        if close:
            fh.close()
    return 0


def _cmd_experiment(args) -> int:
    settings = _Settings(args)
    mode = _mode_from(settings, required=False)
    config = _experiment_config(settings, mode)
    entries = load_manifest(args.manifest)
    unlabeled = [str(e.path) for e in entries if e.label is None]
    if unlabeled:
        raise ValueError(
            f"experiment needs labels for every image; missing for: {unlabeled[:3]}"
        )
    images = load_images(entries, config.threads)
    labels = [e.label for e in entries]
    report = pipeline.run_experiment(images, labels, config)
    print(pipeline.format_report_table([report]))
    print(f"(std {100 * report.std_error:.2f}% over {report.runs} runs)")
    out = settings.get("out", None)
    if out:
        pipeline.report_to_csv(report, out)
    return 0


_COMMANDS = {
    "synth": _cmd_synth,
    "glcm": _cmd_glcm,
    "pca-spectrum": _cmd_pca_spectrum,
    "train": _cmd_train,
    "score": _cmd_score,
    "experiment": _cmd_experiment,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_usage(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (ManifestError, PgmParseError) as exc:
        print(f"texscore: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"texscore: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    raise SystemExit(cli_main())
