"""Principal components of a feature matrix.

Used two ways: as a spectrum-decay diagnostic (eigenvalues exported to CSV
for plotting) and as linear manifold features, either on their own or
appended to the base features as regularizers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FORMAT_MAGIC = "texscore-pca"
FORMAT_VERSION = 1

_EIGENVALUE_CLAMP = -1e-10


@dataclass(frozen=True)
class PcaModel:
    """Column means plus the top-k orthonormal components and eigenvalues."""

    mean: np.ndarray
    components: np.ndarray  # k x p, rows orthonormal
    eigenvalues: np.ndarray  # length k, non-increasing, >= 0

    def __post_init__(self):
        k, p = self.components.shape
        if self.mean.shape != (p,):
            raise ValueError("mean length must match component width")
        if self.eigenvalues.shape != (k,):
            raise ValueError("one eigenvalue per component required")
        gram = self.components @ self.components.T
        if not np.allclose(gram, np.eye(k), atol=1e-8):
            raise ValueError("component rows must be orthonormal")
        if np.any(np.diff(self.eigenvalues) > 1e-10) or np.any(self.eigenvalues < 0):
            raise ValueError("eigenvalues must be non-increasing and non-negative")


def _fix_signs(components: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude coordinate is positive."""
    out = components.copy()
    for i, row in enumerate(out):
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            out[i] = -row
    return out


def _complete_basis(components: np.ndarray, needed: int, p: int) -> np.ndarray:
    """Extend a partial orthonormal row basis with canonical directions.

    Only reached when the data rank is below the requested k (zero
    eigenvalues); the completion is deterministic and orthonormal but
    otherwise arbitrary, matching the documented all-identical-rows case.
    """
    rows = [row for row in components]
    for j in range(p):
        if len(rows) >= needed:
            break
        candidate = np.zeros(p)
        candidate[j] = 1.0
        for row in rows:
            candidate -= np.dot(candidate, row) * row
        norm = np.linalg.norm(candidate)
        if norm > 1e-8:
            rows.append(candidate / norm)
    return np.array(rows)


def fit_pca(data: np.ndarray, k: int) -> PcaModel:
    """Top-k eigenpairs of the sample covariance (divisor N-1).

    The decomposition runs on the p x p covariance when p <= N and on the
    N x N Gram matrix otherwise; the two give identical spectra.  Component
    signs are fixed by forcing each row's largest-magnitude coordinate
    positive, so repeat fits are bit-identical.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"data must be 2-D, got shape {data.shape}")
    n, p = data.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows, got {n}")
    if not (1 <= k <= min(n, p)):
        raise ValueError(f"k must be in [1, {min(n, p)}], got {k}")

    mean = data.mean(axis=0)
    centered = data - mean

    if p <= n:
        cov = centered.T @ centered / (n - 1)
        eigenvalues, eigenvectors = np.linalg.eigh(cov)
        order = np.argsort(eigenvalues, kind="stable")[::-1][:k]
        values = eigenvalues[order]
        components = eigenvectors[:, order].T
    else:
        gram = centered @ centered.T / (n - 1)
        eigenvalues, eigenvectors = np.linalg.eigh(gram)
        order = np.argsort(eigenvalues, kind="stable")[::-1][:k]
        values = eigenvalues[order]
        # Map Gram eigenvectors back to feature space, then re-orthonormalize;
        # directions whose variance is at float noise level fall through to a
        # deterministic canonical completion.
        scale = max(1.0, float(np.sqrt((centered**2).sum())))
        rows = []
        for idx in order:
            candidate = centered.T @ eigenvectors[:, idx]
            for row in rows:
                candidate -= np.dot(candidate, row) * row
            norm = np.linalg.norm(candidate)
            if norm > 1e-10 * scale:
                rows.append(candidate / norm)
        components = np.array(rows) if rows else np.empty((0, p))
        if components.shape[0] < k:
            components = _complete_basis(components, k, p)

    if np.any(values < _EIGENVALUE_CLAMP):
        raise ValueError("covariance produced a significantly negative eigenvalue")
    values = np.clip(values, 0.0, None)
    return PcaModel(mean=mean, components=_fix_signs(components), eigenvalues=values)


def project(model: PcaModel, x: np.ndarray) -> np.ndarray:
    """Coordinates of x (vector, or matrix of rows) in the component basis."""
    x = np.asarray(x, dtype=np.float64)
    p = model.mean.size
    if x.shape[-1] != p:
        raise ValueError(f"expected length-{p} input, got shape {x.shape}")
    return (x - model.mean) @ model.components.T


def reconstruct(model: PcaModel, coords: np.ndarray) -> np.ndarray:
    """Inverse of :func:`project` on the span of the fitted components."""
    coords = np.asarray(coords, dtype=np.float64)
    return coords @ model.components + model.mean


def explained_spectrum(model: PcaModel) -> np.ndarray:
    """Eigenvalues in fitted (non-increasing) order."""
    return model.eigenvalues.copy()


def write_spectrum_csv(model_or_eigenvalues, path) -> None:
    """Two-column CSV ("index,eigenvalue"), 1-based index, for plotting."""
    if isinstance(model_or_eigenvalues, PcaModel):
        values = model_or_eigenvalues.eigenvalues
    else:
        values = np.asarray(model_or_eigenvalues)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("index,eigenvalue\n")
        for i, value in enumerate(values, start=1):
            fh.write(f"{i},{value:.17g}\n")


def save_model(model: PcaModel, path) -> None:
    """Versioned flat-text serialization; round-trips exactly."""
    k, p = model.components.shape
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{FORMAT_MAGIC} {FORMAT_VERSION} {p} {k}\n")
        fh.write(_row(model.mean))
        fh.write(_row(model.eigenvalues))
        for row in model.components:
            fh.write(_row(row))


def load_model(path) -> PcaModel:
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != FORMAT_MAGIC or header[1] != str(FORMAT_VERSION):
            raise ValueError(f"not a {FORMAT_MAGIC} v{FORMAT_VERSION} file: {path}")
        p, k = int(header[2]), int(header[3])
        mean = _parse_row(fh.readline(), p)
        eigenvalues = _parse_row(fh.readline(), k)
        components = np.array([_parse_row(fh.readline(), p) for _ in range(k)])
    return PcaModel(mean=mean, components=components, eigenvalues=eigenvalues)


def _row(values: np.ndarray) -> str:
    return " ".join(f"{v:.17g}" for v in values) + "\n"


def _parse_row(line: str, expected: int) -> np.ndarray:
    parts = line.split()
    if len(parts) != expected:
        raise ValueError(f"expected {expected} values per row, got {len(parts)}")
    return np.array([float(v) for v in parts])
