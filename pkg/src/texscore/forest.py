"""Random-forest classifier: bagged CART trees with per-split feature subsampling.

Every source of randomness is an explicit seeded generator, and all
tie-breaking is deterministic (splits prefer the lowest feature index then
the lowest threshold; leaf majorities and ensemble votes prefer the
smallest label), so a (dataset, config) pair fully determines the model.
Per-tree seeds are spawned up front from the master seed, which makes
parallel and serial training produce identical forests.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import backend

FORMAT_MAGIC = "texscore-forest"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class LabeledDataset:
    """Feature rows plus one integer label per row."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels)
        if features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {features.shape}")
        if labels.shape != (features.shape[0],):
            raise ValueError("labels length must equal number of feature rows")
        if not np.issubdtype(labels.dtype, np.integer):
            if np.any(labels != labels.astype(np.int64)):
                raise ValueError("labels must be integers")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels.astype(np.int64))

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ForestConfig:
    """Training knobs; ``mtry=None`` resolves to floor(sqrt(p)) at fit time."""

    n_trees: int = 500
    mtry: int | None = None
    min_leaf: int = 1
    seed: int = 0
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.mtry is not None and self.mtry < 1:
            raise ValueError("mtry must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")


@dataclass(frozen=True)
class DecisionTree:
    """Binary tree in preorder arrays; feature == -1 marks a leaf.

    Internal nodes carry (feature, threshold, left, right); rows with
    ``x[feature] <= threshold`` descend left.  Leaves carry a class code
    into the owning forest's sorted ``classes`` array.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.size


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[DecisionTree, ...]
    classes: np.ndarray
    n_features: int
    config: ForestConfig = field(repr=False)


def gini_impurity(label_counts) -> float:
    """1 - sum((n_c / n)^2); 0 for pure nodes, approaching 1 for uniform mixes."""
    counts = np.asarray(label_counts, dtype=np.int64)
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    n = counts.sum()
    if n < 1:
        raise ValueError("at least one labeled example required")
    return 1.0 - float((counts**2).sum()) / (int(n) * int(n))


# --------------------------------------------------------------------------
# split-scan kernels
#
# Both variants score a candidate split by g = (sum_c nL_c^2)/nL +
# (sum_c nR_c^2)/nR, which orders splits identically to the weighted Gini
# decrease: decrease = (g - (sum_c n_c^2)/n) / n.  The squared counts stay
# in exact int64 arithmetic until the two final divisions, so the numba and
# numpy paths pick bit-identical splits.
# --------------------------------------------------------------------------

if backend.HAVE_NUMBA:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _split_scan_jit(X, codes, rows, feats, n_classes):  # pragma: no cover
        n = rows.size
        total = np.zeros(n_classes, dtype=np.int64)
        for i in range(n):
            total[codes[rows[i]]] += 1
        parent_sq = np.int64(0)
        for c in range(n_classes):
            parent_sq += total[c] * total[c]
        best_score = parent_sq / n
        best_feat = -1
        best_thr = 0.0
        vals = np.empty(n, dtype=np.float64)
        svals = np.empty(n, dtype=np.float64)
        scodes = np.empty(n, dtype=np.int64)
        left = np.zeros(n_classes, dtype=np.int64)
        for fi in range(feats.size):
            f = feats[fi]
            for i in range(n):
                vals[i] = X[rows[i], f]
            order = np.argsort(vals)
            for i in range(n):
                svals[i] = vals[order[i]]
                scodes[i] = codes[rows[order[i]]]
            for c in range(n_classes):
                left[c] = 0
            lsq = np.int64(0)
            rsq = parent_sq
            for i in range(n - 1):
                c = scodes[i]
                lsq += 2 * left[c] + 1
                rsq -= 2 * (total[c] - left[c]) - 1
                left[c] += 1
                if svals[i] != svals[i + 1]:
                    n_left = i + 1
                    score = lsq / n_left + rsq / (n - n_left)
                    if score > best_score:
                        best_score = score
                        best_feat = f
                        best_thr = (svals[i] + svals[i + 1]) / 2.0
        return best_feat, best_thr

    @njit(cache=True, nogil=True)
    def _traverse_jit(feature, threshold, left, right, label, X, out):  # pragma: no cover
        for i in range(X.shape[0]):
            node = 0
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] = label[node]

else:  # pragma: no cover - numba-less installs only
    _split_scan_jit = None
    _traverse_jit = None


def _split_scan_numpy(X, codes, rows, feats, n_classes):
    y = codes[rows]
    n = y.size
    total = np.bincount(y, minlength=n_classes).astype(np.int64)
    parent_sq = int((total**2).sum())
    best_score = parent_sq / n
    best_feat, best_thr = -1, 0.0
    for f in feats:
        vals = X[rows, f]
        order = np.argsort(vals)
        svals = vals[order]
        scodes = y[order]
        cut = np.nonzero(svals[:-1] != svals[1:])[0]
        if cut.size == 0:
            continue
        onehot = np.zeros((n, n_classes), dtype=np.int64)
        onehot[np.arange(n), scodes] = 1
        prefix = np.cumsum(onehot, axis=0)
        n_left = cut + 1
        left_counts = prefix[cut]
        right_counts = total[None, :] - left_counts
        scores = (left_counts**2).sum(axis=1) / n_left + (right_counts**2).sum(
            axis=1
        ) / (n - n_left)
        j = int(np.argmax(scores))  # first max == lowest threshold
        if scores[j] > best_score:
            best_score = float(scores[j])
            best_feat = int(f)
            best_thr = (svals[cut[j]] + svals[cut[j] + 1]) / 2.0
    return best_feat, best_thr


def _scan(X, codes, rows, feats, n_classes):
    if backend.use_numba():
        return _split_scan_jit(X, codes, rows, feats, n_classes)
    return _split_scan_numpy(X, codes, rows, feats, n_classes)


def best_split(features, labels, feature_subset=None):
    """Best (feature_index, threshold) by weighted Gini decrease, or None.

    Scans the given features (all of them by default) over midpoints of
    consecutive distinct sorted values; ties break toward the lower feature
    index, then the lower threshold.  Returns None when no split strictly
    reduces impurity.
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise ValueError("need a 2-D matrix with at least 2 rows")
    labels = np.asarray(labels)
    classes, codes = np.unique(labels, return_inverse=True)
    if feature_subset is None:
        feats = np.arange(features.shape[1], dtype=np.int64)
    else:
        feats = np.sort(np.asarray(feature_subset, dtype=np.int64))
    rows = np.arange(features.shape[0], dtype=np.int64)
    f, thr = _scan(features, codes.astype(np.int64), rows, feats, classes.size)
    if f < 0:
        return None
    return int(f), float(thr)


class _TreeBuilder:
    def __init__(self, X, codes, classes, mtry, min_leaf, rng):
        self.X = X
        self.codes = codes
        self.classes = classes
        self.mtry = mtry
        self.min_leaf = min_leaf
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.label: list[int] = []

    def _add_node(self):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.label.append(-1)
        return len(self.feature) - 1

    def _majority(self, rows):
        counts = np.bincount(self.codes[rows], minlength=self.classes.size)
        return int(self.classes[np.argmax(counts)])  # first max == smallest label

    def build(self, rows):
        idx = self._add_node()
        first = self.codes[rows[0]]
        if np.all(self.codes[rows] == first):
            self.label[idx] = int(self.classes[first])
            return idx
        if rows.size < 2 * self.min_leaf:
            self.label[idx] = self._majority(rows)
            return idx
        feats = np.sort(
            self.rng.choice(self.X.shape[1], size=self.mtry, replace=False)
        ).astype(np.int64)
        f, thr = _scan(self.X, self.codes, rows, feats, self.classes.size)
        if f < 0:
            self.label[idx] = self._majority(rows)
            return idx
        mask = self.X[rows, f] <= thr
        self.feature[idx] = int(f)
        self.threshold[idx] = float(thr)
        self.left[idx] = self.build(rows[mask])
        self.right[idx] = self.build(rows[~mask])
        return idx

    def finish(self) -> DecisionTree:
        return DecisionTree(
            feature=np.array(self.feature, dtype=np.int64),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int64),
            right=np.array(self.right, dtype=np.int64),
            label=np.array(self.label, dtype=np.int64),
        )


def train_tree(dataset: LabeledDataset, mtry: int, min_leaf: int, rng) -> DecisionTree:
    """Recursive CART on the given rows; ``rng`` drives feature subsampling.

    Splitting stops on purity, on nodes smaller than ``2 * min_leaf`` rows,
    or when no candidate strictly reduces impurity; leaves carry the
    majority label with ties resolved to the smallest label.
    """
    if dataset.n_rows == 0:
        raise ValueError("dataset must be nonempty")
    if not (1 <= mtry <= dataset.n_features):
        raise ValueError(f"mtry must be in [1, {dataset.n_features}], got {mtry}")
    classes, codes = np.unique(dataset.labels, return_inverse=True)
    builder = _TreeBuilder(
        dataset.features, codes.astype(np.int64), classes, mtry, min_leaf, rng
    )
    builder.build(np.arange(dataset.n_rows, dtype=np.int64))
    return builder.finish()


def train_forest(
    dataset: LabeledDataset, config: ForestConfig, threads: int = 1
) -> ForestModel:
    """Bagged ensemble; each tree gets an independently spawned seed stream.

    Tree t trains on a with-replacement bootstrap of the rows (unless
    ``config.bootstrap`` is off) using its own generator, so the result is
    identical whether trees are built serially or across ``threads`` workers.
    """
    if dataset.n_rows == 0:
        raise ValueError("dataset must be nonempty")
    classes, codes = np.unique(dataset.labels, return_inverse=True)
    codes = codes.astype(np.int64)
    p = dataset.n_features
    mtry = config.mtry if config.mtry is not None else max(1, int(math.isqrt(p)))
    if not (1 <= mtry <= p):
        raise ValueError(f"mtry must be in [1, {p}], got {mtry}")
    n = dataset.n_rows
    X = dataset.features
    seeds = np.random.SeedSequence(config.seed).spawn(config.n_trees)

    def build_one(t: int) -> DecisionTree:
        rng = np.random.default_rng(seeds[t])
        if config.bootstrap:
            rows = rng.integers(0, n, size=n).astype(np.int64)
        else:
            rows = np.arange(n, dtype=np.int64)
        builder = _TreeBuilder(X, codes, classes, mtry, config.min_leaf, rng)
        builder.build(rows)
        return builder.finish()

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = tuple(pool.map(build_one, range(config.n_trees)))
    else:
        trees = tuple(build_one(t) for t in range(config.n_trees))
    resolved = ForestConfig(
        n_trees=config.n_trees,
        mtry=mtry,
        min_leaf=config.min_leaf,
        seed=config.seed,
        bootstrap=config.bootstrap,
    )
    return ForestModel(trees=trees, classes=classes, n_features=p, config=resolved)


def tree_predict(tree: DecisionTree, X) -> np.ndarray:
    """Leaf labels reached by each row of X."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    out = np.empty(X.shape[0], dtype=np.int64)
    if backend.use_numba():
        _traverse_jit(tree.feature, tree.threshold, tree.left, tree.right, tree.label, X, out)
        return out
    node = np.zeros(X.shape[0], dtype=np.int64)
    active = np.nonzero(tree.feature[node] >= 0)[0]
    while active.size:
        current = node[active]
        feats = tree.feature[current]
        go_left = X[active, feats] <= tree.threshold[current]
        node[active] = np.where(go_left, tree.left[current], tree.right[current])
        active = active[tree.feature[node[active]] >= 0]
    out[:] = tree.label[node]
    return out


def predict_batch(model: ForestModel, X) -> np.ndarray:
    """Majority vote across trees for each row; ties go to the smallest label."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ValueError(
            f"expected {model.n_features} features, got {X.shape[1]}"
        )
    votes = np.zeros((X.shape[0], model.classes.size), dtype=np.int64)
    for tree in model.trees:
        codes = np.searchsorted(model.classes, tree_predict(tree, X))
        votes[np.arange(X.shape[0]), codes] += 1
    return model.classes[np.argmax(votes, axis=1)]


def predict(model: ForestModel, x) -> int:
    """Single-row :func:`predict_batch`."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict takes a single feature vector")
    return int(predict_batch(model, x[None, :])[0])


def error_rate(model: ForestModel, testset: LabeledDataset) -> float:
    """Fraction of mispredicted rows, in [0, 1]."""
    if testset.n_rows == 0:
        raise ValueError("test set must be nonempty")
    predictions = predict_batch(model, testset.features)
    return float(np.mean(predictions != testset.labels))


def save_model(model: ForestModel, path) -> None:
    """Versioned flat text, one preorder block per tree; round-trips exactly."""
    cfg = model.config
    with open(path, "w", encoding="ascii") as fh:
        fh.write(
            f"{FORMAT_MAGIC} {FORMAT_VERSION} {cfg.n_trees} {model.n_features} "
            f"{cfg.mtry} {cfg.min_leaf} {cfg.seed} {int(cfg.bootstrap)}\n"
        )
        fh.write("classes " + " ".join(str(c) for c in model.classes) + "\n")
        for t, tree in enumerate(model.trees):
            fh.write(f"tree {t} {tree.n_nodes}\n")
            for i in range(tree.n_nodes):
                if tree.feature[i] >= 0:
                    fh.write(f"S {tree.feature[i]} {tree.threshold[i]:.17g}\n")
                else:
                    fh.write(f"L {tree.label[i]}\n")


def load_model(path) -> ForestModel:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 8 or header[0] != FORMAT_MAGIC or header[1] != str(FORMAT_VERSION):
            raise ValueError(f"not a {FORMAT_MAGIC} v{FORMAT_VERSION} file: {path}")
        n_trees, n_features, mtry, min_leaf, seed, bootstrap = map(int, header[2:])
        class_line = fh.readline().split()
        if not class_line or class_line[0] != "classes":
            raise ValueError("missing classes line")
        classes = np.array([int(c) for c in class_line[1:]], dtype=np.int64)
        trees = []
        for t in range(n_trees):
            tree_header = fh.readline().split()
            if len(tree_header) != 3 or tree_header[0] != "tree":
                raise ValueError(f"missing tree header for tree {t}")
            n_nodes = int(tree_header[2])
            feature = np.full(n_nodes, -1, dtype=np.int64)
            threshold = np.zeros(n_nodes, dtype=np.float64)
            left = np.full(n_nodes, -1, dtype=np.int64)
            right = np.full(n_nodes, -1, dtype=np.int64)
            label = np.full(n_nodes, -1, dtype=np.int64)
            lines = [fh.readline().split() for _ in range(n_nodes)]

            pos = 0

            def read_subtree():
                nonlocal pos
                idx = pos
                parts = lines[pos]
                pos += 1
                if parts[0] == "L":
                    label[idx] = int(parts[1])
                elif parts[0] == "S":
                    feature[idx] = int(parts[1])
                    threshold[idx] = float(parts[2])
                    left[idx] = read_subtree()
                    right[idx] = read_subtree()
                else:
                    raise ValueError(f"bad node line in tree {t}: {parts}")
                return idx

            read_subtree()
            if pos != n_nodes:
                raise ValueError(f"tree {t} has {n_nodes} nodes but {pos} were parsed")
            trees.append(
                DecisionTree(
                    feature=feature, threshold=threshold, left=left, right=right, label=label
                )
            )
    config = ForestConfig(
        n_trees=n_trees,
        mtry=mtry,
        min_leaf=min_leaf,
        seed=seed,
        bootstrap=bool(bootstrap),
    )
    return ForestModel(
        trees=tuple(trees), classes=classes, n_features=n_features, config=config
    )
