"""Gray-level co-occurrence matrices for 8-bit grayscale rasters.

Pixels are quantized uniformly onto ``levels`` gray bins (1-based), then
pairs of pixels related by a compass direction and a pixel distance are
tallied into a ``levels x levels`` count matrix.  Counts are directed
(ordered pairs, no symmetrization); opposite directions therefore produce
transposed matrices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend

#: Compass direction names, with arrow aliases accepted by :func:`direction_offset`.
DIRECTIONS = ("e", "w", "s", "n", "ne", "se", "nw", "sw")

_ARROW_ALIASES = {
    "→": "e",
    "←": "w",
    "↓": "s",
    "↑": "n",
    "↗": "ne",
    "↘": "se",
    "↖": "nw",
    "↙": "sw",
}

# Unit row/column steps per direction; rows grow downward, columns rightward.
_UNIT_OFFSETS = {
    "e": (0, 1),
    "w": (0, -1),
    "s": (1, 0),
    "n": (-1, 0),
    "ne": (-1, 1),
    "se": (1, 1),
    "nw": (-1, -1),
    "sw": (1, -1),
}


@dataclass(frozen=True)
class GrayImage:
    """8-bit grayscale raster stored as a (height, width) uint8 array."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 2:
            raise ValueError(f"pixels must be a 2-D array, got shape {px.shape}")
        if px.size == 0:
            raise ValueError("image must contain at least one pixel")
        if px.dtype != np.uint8:
            if np.issubdtype(px.dtype, np.integer) and px.min() >= 0 and px.max() <= 255:
                px = px.astype(np.uint8)
            else:
                raise ValueError("pixel values must be integers in [0, 255]")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class QuantizedImage:
    """Raster whose values lie in {1, ..., levels}."""

    values: np.ndarray
    levels: int

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 2:
            raise ValueError(f"values must be a 2-D array, got shape {vals.shape}")
        if not (1 <= self.levels <= 256):
            raise ValueError(f"levels must be in [1, 256], got {self.levels}")
        if vals.dtype != np.int32:
            vals = vals.astype(np.int32)
        if vals.min() < 1 or vals.max() > self.levels:
            raise ValueError(f"values must lie in [1, {self.levels}]")
        object.__setattr__(self, "values", vals)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class SpatialRelationship:
    """Pixel-pair offset: a compass direction plus a distance in pixels."""

    direction: str
    distance: int = 1

    def __post_init__(self):
        name = _ARROW_ALIASES.get(self.direction, self.direction)
        if name not in _UNIT_OFFSETS:
            raise ValueError(
                f"unknown direction {self.direction!r}; expected one of {DIRECTIONS}"
            )
        if self.distance < 1:
            raise ValueError(f"distance must be >= 1, got {self.distance}")
        object.__setattr__(self, "direction", name)

    def offset(self) -> tuple[int, int]:
        return direction_offset(self.direction, self.distance)


#: The relationship with the greatest discriminating power for ER/breast-cancer
#: staining textures: up-right diagonal at distance 3.
DEFAULT_RELATIONSHIP = SpatialRelationship("ne", 3)

#: Default number of quantization bins.
DEFAULT_LEVELS = 51


@dataclass(frozen=True)
class Glcm:
    """Directed co-occurrence counts for one image and one relationship."""

    counts: np.ndarray
    levels: int
    relationship: SpatialRelationship
    total: int = field(init=False)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.shape != (self.levels, self.levels):
            raise ValueError(
                f"counts must be {self.levels}x{self.levels}, got {counts.shape}"
            )
        if counts.dtype != np.int64:
            counts = counts.astype(np.int64)
        if counts.min() < 0:
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "total", int(counts.sum()))


def quantize(image: GrayImage, levels: int) -> QuantizedImage:
    """Uniformly quantize 256 gray values onto ``levels`` 1-based bins.

    A gray value g maps to ``floor(g * levels / 256) + 1``, which is monotone
    in g and reaches every bin in {1, ..., levels}.
    """
    if not (1 <= levels <= 256):
        raise ValueError(f"levels must be in [1, 256], got {levels}")
    scaled = (image.pixels.astype(np.int32) * levels) // 256 + 1
    return QuantizedImage(values=scaled, levels=levels)


def direction_offset(direction: str, distance: int) -> tuple[int, int]:
    """(row, column) step for a compass direction scaled by ``distance``.

    Rows increase downward and columns increase rightward, so "n" moves to
    smaller row indices and "e" to larger column indices.
    """
    if distance < 1:
        raise ValueError(f"distance must be >= 1, got {distance}")
    name = _ARROW_ALIASES.get(direction, direction)
    if name not in _UNIT_OFFSETS:
        raise ValueError(f"unknown direction {direction!r}; expected one of {DIRECTIONS}")
    dr, dc = _UNIT_OFFSETS[name]
    return dr * distance, dc * distance


if backend.HAVE_NUMBA:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _count_pairs_jit(values, levels, dr, dc):  # pragma: no cover - jitted
        h, w = values.shape
        counts = np.zeros((levels, levels), dtype=np.int64)
        r0 = max(0, -dr)
        r1 = h - max(0, dr)
        c0 = max(0, -dc)
        c1 = w - max(0, dc)
        for r in range(r0, r1):
            for c in range(c0, c1):
                a = values[r, c] - 1
                b = values[r + dr, c + dc] - 1
                counts[a, b] += 1
        return counts

else:  # pragma: no cover - numba-less installs only
    _count_pairs_jit = None


def _count_pairs_numpy(values: np.ndarray, levels: int, dr: int, dc: int) -> np.ndarray:
    h, w = values.shape
    r0, r1 = max(0, -dr), h - max(0, dr)
    c0, c1 = max(0, -dc), w - max(0, dc)
    first = values[r0:r1, c0:c1].astype(np.int64) - 1
    second = values[r0 + dr : r1 + dr, c0 + dc : c1 + dc].astype(np.int64) - 1
    flat = first.ravel() * levels + second.ravel()
    return np.bincount(flat, minlength=levels * levels).reshape(levels, levels)


def compute_glcm(qimage: QuantizedImage, rel: SpatialRelationship) -> Glcm:
    """Tally directed co-occurrences of gray bins under ``rel``.

    Entry (a, b) counts positions p with value a whose neighbor at the
    relationship offset has value b and lies in bounds; the grand total is
    exactly ``(height - |dr|) * (width - |dc|)``.
    """
    if rel.distance >= min(qimage.width, qimage.height):
        raise ValueError(
            f"distance {rel.distance} too large for a "
            f"{qimage.height}x{qimage.width} image"
        )
    dr, dc = rel.offset()
    if backend.use_numba():
        counts = _count_pairs_jit(qimage.values, qimage.levels, dr, dc)
    else:
        counts = _count_pairs_numpy(qimage.values, qimage.levels, dr, dc)
    return Glcm(counts=counts, levels=qimage.levels, relationship=rel)


def normalize_glcm(glcm: Glcm) -> np.ndarray:
    """Counts divided by their total; entries sum to 1."""
    if glcm.total == 0:
        raise ValueError("cannot normalize a GLCM with zero total count")
    return glcm.counts.astype(np.float64) / glcm.total


def glcm_to_feature_vector(glcm: Glcm | np.ndarray) -> np.ndarray:
    """Row-major flattening; length is levels**2 (2601 at 51 levels)."""
    matrix = glcm.counts if isinstance(glcm, Glcm) else np.asarray(glcm)
    return matrix.reshape(-1).copy()


def image_feature_vector(
    image: GrayImage,
    levels: int = DEFAULT_LEVELS,
    rel: SpatialRelationship = DEFAULT_RELATIONSHIP,
    raw_counts: bool = False,
) -> np.ndarray:
    """quantize -> compute_glcm -> (normalize) -> flatten, in one call.

    Normalized frequencies are the default so images of differing sizes are
    comparable; pass ``raw_counts=True`` for the untouched tallies.
    """
    glcm = compute_glcm(quantize(image, levels), rel)
    if raw_counts:
        return glcm_to_feature_vector(glcm).astype(np.float64)
    return glcm_to_feature_vector(normalize_glcm(glcm))
