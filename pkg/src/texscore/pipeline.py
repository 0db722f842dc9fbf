"""Feature assembly, transductive scoring, and the repeated-split protocol.

The scoring flow: convert every image (train and test alike) to its base
features, learn a low-dimensional manifold representation over all N
instances, append those columns as regularizing features, train the forest
on the labeled training rows only, and predict the rest.  Fitting the
manifold on train+test jointly is intentional (transductive, like the
protocol this reproduces) and can be switched off per config for a
conventional inductive variant.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from . import forest as forest_mod
from . import pca as pca_mod
from .autoencoder import TrainConfig, encode, train as train_ae
from .forest import ForestConfig, LabeledDataset
from .texture import (
    DEFAULT_LEVELS,
    DEFAULT_RELATIONSHIP,
    GrayImage,
    SpatialRelationship,
    image_feature_vector,
)

MODE_KINDS = (
    "glcm",
    "pc-only",
    "glcm+pc",
    "image+ae-image",
    "glcm+ae-image",
    "glcm+ae-glcm",
)

_PC_KINDS = {"pc-only", "glcm+pc"}
_AE_KINDS = {"image+ae-image", "glcm+ae-image", "glcm+ae-glcm"}

_DISPLAY_NAMES = {
    "glcm": "GLCM",
    "pc-only": "PC features only",
    "glcm+pc": "GLCM + PC features",
    "image+ae-image": "Image + AE image features",
    "glcm+ae-image": "GLCM + AE image features",
    "glcm+ae-glcm": "GLCM + AE GLCM features",
}


@dataclass(frozen=True)
class FeatureMode:
    """Which base features to use and which manifold columns to append.

    ``dim`` is the number of principal components for the pc modes and the
    hidden-layer width for the ae modes; the plain "glcm" mode has none.
    """

    kind: str
    dim: int | None = None

    def __post_init__(self):
        if self.kind not in MODE_KINDS:
            raise ValueError(f"unknown mode {self.kind!r}; expected one of {MODE_KINDS}")
        if self.kind == "glcm":
            if self.dim is not None:
                raise ValueError("mode 'glcm' takes no manifold dimension")
        elif self.dim is None or self.dim < 1:
            raise ValueError(f"mode {self.kind!r} needs a manifold dimension >= 1")

    @property
    def display_name(self) -> str:
        return _DISPLAY_NAMES[self.kind]


@dataclass(frozen=True)
class ExperimentConfig:
    mode: FeatureMode
    runs: int = 100
    train_fraction: float = 0.5
    master_seed: int = 0
    ae_config: TrainConfig = field(default_factory=TrainConfig)
    rf_config: ForestConfig = field(default_factory=ForestConfig)
    relationship: SpatialRelationship = DEFAULT_RELATIONSHIP
    levels: int = DEFAULT_LEVELS
    raw_counts: bool = False
    pixel_grid: int = 64
    inductive: bool = False
    share_manifold: bool = False
    threads: int = 1

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must lie strictly between 0 and 1")


@dataclass(frozen=True)
class ScoreReport:
    mode: FeatureMode
    per_run_errors: tuple[float, ...]
    runs: int
    train_fraction: float
    master_seed: int
    mean_error: float = field(init=False)
    std_error: float = field(init=False)

    def __post_init__(self):
        errors = np.asarray(self.per_run_errors, dtype=np.float64)
        if errors.size != self.runs:
            raise ValueError("one error per run required")
        if errors.min() < 0.0 or errors.max() > 1.0:
            raise ValueError("error rates must lie in [0, 1]")
        object.__setattr__(self, "mean_error", float(errors.mean()))
        std = float(errors.std(ddof=1)) if errors.size > 1 else 0.0
        object.__setattr__(self, "std_error", std)


# --------------------------------------------------------------------------
# feature construction
# --------------------------------------------------------------------------


def glcm_feature_matrix(
    images: list[GrayImage],
    levels: int = DEFAULT_LEVELS,
    rel: SpatialRelationship = DEFAULT_RELATIONSHIP,
    raw_counts: bool = False,
    threads: int = 1,
) -> np.ndarray:
    """One co-occurrence feature row per image."""
    if not images:
        raise ValueError("need at least one image")
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(
                pool.map(
                    lambda im: image_feature_vector(im, levels, rel, raw_counts), images
                )
            )
    else:
        rows = [image_feature_vector(im, levels, rel, raw_counts) for im in images]
    return np.vstack(rows)


def pixel_feature_matrix(images: list[GrayImage], grid: int = 64) -> np.ndarray:
    """Mean-pooled raw pixels on a ``grid x grid`` lattice (clamped to image size).

    All images must share one size; raw pixel features are not comparable
    across differing geometries.
    """
    if not images:
        raise ValueError("need at least one image")
    shapes = {(im.height, im.width) for im in images}
    if len(shapes) > 1:
        raise ValueError(f"pixel-feature modes need uniform image sizes, got {shapes}")
    h, w = shapes.pop()
    gh, gw = min(grid, h), min(grid, w)
    row_bounds = (np.arange(gh) * h) // gh
    col_bounds = (np.arange(gw) * w) // gw
    row_sizes = np.diff(np.append(row_bounds, h)).astype(np.float64)
    col_sizes = np.diff(np.append(col_bounds, w)).astype(np.float64)
    area = np.outer(row_sizes, col_sizes)
    rows = []
    for image in images:
        px = image.pixels.astype(np.float64)
        pooled = np.add.reduceat(np.add.reduceat(px, row_bounds, axis=0), col_bounds, axis=1)
        rows.append((pooled / area).reshape(-1))
    return np.vstack(rows)


def minmax_scale(matrix: np.ndarray, fit_rows=None):
    """Scale each column to [0, 1] using extrema over ``fit_rows`` (default: all).

    Returns (scaled, (mins, maxs)); constant columns map to 0 and values
    outside the fitted range clip, so the output always suits a sigmoid
    reconstruction target.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    sub = matrix if fit_rows is None else matrix[fit_rows]
    mins = sub.min(axis=0)
    maxs = sub.max(axis=0)
    span = maxs - mins
    safe_span = np.where(span == 0, 1.0, span)
    scaled = np.clip((matrix - mins) / safe_span, 0.0, 1.0)
    return scaled, (mins, maxs)


def apply_minmax(matrix: np.ndarray, scaler) -> np.ndarray:
    mins, maxs = scaler
    span = maxs - mins
    safe_span = np.where(span == 0, 1.0, span)
    return np.clip((np.asarray(matrix, dtype=np.float64) - mins) / safe_span, 0.0, 1.0)


def feature_dim(
    mode: FeatureMode,
    levels: int = DEFAULT_LEVELS,
    pixel_grid: int = 64,
    image_shape: tuple[int, int] | None = None,
) -> int:
    """Column count produced by :func:`build_features` for this mode."""
    glcm_dim = levels * levels
    if mode.kind == "glcm":
        return glcm_dim
    if mode.kind == "pc-only":
        return mode.dim
    if mode.kind == "glcm+pc":
        return glcm_dim + mode.dim
    if mode.kind in ("glcm+ae-glcm", "glcm+ae-image"):
        return glcm_dim + mode.dim
    # image+ae-image
    if image_shape is None:
        return pixel_grid * pixel_grid + mode.dim
    h, w = image_shape
    return min(pixel_grid, h) * min(pixel_grid, w) + mode.dim


def build_features(
    images: list[GrayImage],
    mode: FeatureMode,
    config: ExperimentConfig,
    fit_rows=None,
    artifacts: dict | None = None,
    return_artifacts: bool = False,
):
    """N x d feature matrix for the given mode.

    Base features are per-image; manifold columns (principal components or
    autoencoder activations) are fitted over the rows in ``fit_rows`` (all
    rows when None, the transductive default) and evaluated for every row.
    Pre-fitted models can be supplied via ``artifacts`` to skip refitting.
    """
    if not images:
        raise ValueError("need at least one image")
    kind = mode.kind
    artifacts = dict(artifacts) if artifacts else {}

    glcm_X = None
    if kind in ("glcm", "glcm+pc", "glcm+ae-glcm", "glcm+ae-image", "pc-only"):
        glcm_X = glcm_feature_matrix(
            images, config.levels, config.relationship, config.raw_counts, config.threads
        )
    pixel_X = None
    if kind in ("image+ae-image", "glcm+ae-image"):
        pixel_X = pixel_feature_matrix(images, config.pixel_grid)

    if kind == "glcm":
        result = glcm_X
    elif kind in _PC_KINDS:
        model = artifacts.get("pca")
        if model is None:
            model = pca_mod.fit_pca(
                glcm_X if fit_rows is None else glcm_X[fit_rows], mode.dim
            )
            artifacts["pca"] = model
        coords = pca_mod.project(model, glcm_X)
        result = coords if kind == "pc-only" else np.hstack([glcm_X, coords])
    else:
        source = glcm_X if kind == "glcm+ae-glcm" else pixel_X
        scaler = artifacts.get("scaler")
        if scaler is None:
            _, scaler = minmax_scale(source, fit_rows)
            artifacts["scaler"] = scaler
        scaled = apply_minmax(source, scaler)
        model = artifacts.get("ae")
        if model is None:
            fit_data = scaled if fit_rows is None else scaled[fit_rows]
            model = train_ae(fit_data, mode.dim, config.ae_config)
            artifacts["ae"] = model
        manifold = encode(model, scaled)
        base = pixel_X if kind == "image+ae-image" else glcm_X
        result = np.hstack([base, manifold])

    if return_artifacts:
        return result, artifacts
    return result


# --------------------------------------------------------------------------
# scoring and the repeated-split experiment
# --------------------------------------------------------------------------


def score_images(
    train_images: list[GrayImage],
    train_labels,
    test_images: list[GrayImage],
    config: ExperimentConfig,
) -> np.ndarray:
    """Train on the labeled images and return predicted labels for the rest.

    Features (including manifold columns) are built over the union of both
    image lists; the forest itself sees only the training rows.
    """
    if not train_images:
        raise ValueError("need at least one training image")
    train_labels = np.asarray(train_labels, dtype=np.int64)
    if train_labels.shape != (len(train_images),):
        raise ValueError("one label per training image required")
    images = list(train_images) + list(test_images)
    n = len(train_images)
    fit_rows = np.arange(n) if config.inductive else None
    features = build_features(images, config.mode, config, fit_rows=fit_rows)
    dataset = LabeledDataset(features[:n], train_labels)
    model = forest_mod.train_forest(dataset, config.rf_config, threads=config.threads)
    if not test_images:
        return np.empty(0, dtype=np.int64)
    return forest_mod.predict_batch(model, features[n:])


def _run_seeds(master_seed: int, runs: int):
    """Per-run (split_rng, ae_seed, rf_seed) triples, independent of mode."""
    out = []
    for seq in np.random.SeedSequence(master_seed).spawn(runs):
        split_seq, ae_seq, rf_seq = seq.spawn(3)
        out.append(
            (
                np.random.default_rng(split_seq),
                int(ae_seq.generate_state(1)[0]),
                int(rf_seq.generate_state(1)[0]),
            )
        )
    return out


def draw_split(rng, n_items: int, train_fraction: float):
    """Unstratified random split; returns sorted (train_idx, test_idx)."""
    n_train = int(round(train_fraction * n_items))
    n_train = min(max(n_train, 1), n_items - 1)
    perm = rng.permutation(n_items)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def run_experiment(images: list[GrayImage], labels, config: ExperimentConfig) -> ScoreReport:
    """Repeated random-split scoring; deterministic given ``master_seed``.

    Each run derives its own split and model seeds from the master seed, so
    reports are reproducible and two modes run under the same master seed
    see identical splits.  The autoencoder retrains per run by default;
    ``share_manifold`` fits the full feature matrix once and reuses it.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (len(images),):
        raise ValueError("one label per image required")
    if len(images) < 2 or np.unique(labels).size < 2:
        raise ValueError("need at least two examples of at least two classes")

    seeds = _run_seeds(config.master_seed, config.runs)
    shared_features = None
    if config.share_manifold and not config.inductive:
        shared_seed = int(np.random.SeedSequence(config.master_seed).generate_state(1)[0])
        shared_config = replace(
            config, ae_config=replace(config.ae_config, seed=shared_seed)
        )
        shared_features = build_features(images, config.mode, shared_config)

    errors = []
    for split_rng, ae_seed, rf_seed in seeds:
        train_idx, test_idx = draw_split(split_rng, len(images), config.train_fraction)
        rf_config = replace(config.rf_config, seed=rf_seed)
        if shared_features is not None:
            dataset = LabeledDataset(shared_features[train_idx], labels[train_idx])
            model = forest_mod.train_forest(dataset, rf_config, threads=config.threads)
            predictions = forest_mod.predict_batch(model, shared_features[test_idx])
        else:
            run_config = replace(
                config,
                ae_config=replace(config.ae_config, seed=ae_seed),
                rf_config=rf_config,
            )
            predictions = score_images(
                [images[i] for i in train_idx],
                labels[train_idx],
                [images[i] for i in test_idx],
                run_config,
            )
        errors.append(float(np.mean(predictions != labels[test_idx])))

    return ScoreReport(
        mode=config.mode,
        per_run_errors=tuple(errors),
        runs=config.runs,
        train_fraction=config.train_fraction,
        master_seed=config.master_seed,
    )


def pca_sweep(images, labels, k_list, sole: bool, config: ExperimentConfig):
    """Mean error per principal-component count, on identical splits.

    ``sole=True`` scores the component coordinates alone; otherwise they are
    appended to the co-occurrence features as regularizers.
    """
    if not k_list:
        raise ValueError("k_list must be nonempty")
    kind = "pc-only" if sole else "glcm+pc"
    results = []
    for k in k_list:
        mode = FeatureMode(kind=kind, dim=int(k))
        report = run_experiment(images, labels, replace(config, mode=mode))
        results.append((int(k), report.mean_error))
    return results


# --------------------------------------------------------------------------
# report output
# --------------------------------------------------------------------------


def report_to_csv(report: ScoreReport, path) -> None:
    """Machine-readable report: one row per run plus mean and std rows."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["features", "manifold_dim", "runs", "train_fraction", "master_seed", "row", "error"]
        )
        prefix = [
            report.mode.kind,
            "" if report.mode.dim is None else report.mode.dim,
            report.runs,
            f"{report.train_fraction:.17g}",
            report.master_seed,
        ]
        for i, err in enumerate(report.per_run_errors, start=1):
            writer.writerow(prefix + [i, f"{err:.17g}"])
        writer.writerow(prefix + ["mean", f"{report.mean_error:.17g}"])
        writer.writerow(prefix + ["std", f"{report.std_error:.17g}"])


def report_from_csv(path) -> ScoreReport:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "features":
            raise ValueError(f"not a score report CSV: {path}")
        errors = {}
        meta = None
        for row in reader:
            kind, dim, runs, fraction, seed, tag, err = row
            meta = (kind, dim, int(runs), float(fraction), int(seed))
            if tag not in ("mean", "std"):
                errors[int(tag)] = float(err)
    if meta is None:
        raise ValueError(f"empty score report CSV: {path}")
    kind, dim, runs, fraction, seed = meta
    mode = FeatureMode(kind=kind, dim=int(dim) if dim else None)
    per_run = tuple(errors[i] for i in sorted(errors))
    return ScoreReport(
        mode=mode,
        per_run_errors=per_run,
        runs=runs,
        train_fraction=fraction,
        master_seed=seed,
    )


def format_report_table(reports: list[ScoreReport]) -> str:
    """Three-column human-readable summary (features, manifold dim, error)."""
    rows = [("Features", "Dim. of manifold", "Error rate")]
    for report in reports:
        dim = "---" if report.mode.dim is None else str(report.mode.dim)
        rows.append((report.mode.display_name, dim, f"{100 * report.mean_error:.2f}%"))
    widths = [max(len(row[i]) for row in rows) for i in range(3)]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("  ".join("-" * widths[j] for j in range(3)))
    return "\n".join(lines)
