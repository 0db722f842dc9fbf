"""Synthetic 4-class texture corpus for desk-scale experiments.

Each class is a smoothed-noise process: white noise convolved with a
class-specific box kernel, thresholded at a class-specific density into a
low and a high intensity level, plus small per-pixel jitter so each level
occupies a band of neighboring gray bins.  The four archetypes differ in
correlation length, intensity placement, and blob density, which makes
their co-occurrence statistics separable without being trivial.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import uniform_filter

from .datasets import ManifestEntry, write_manifest
from .pgm import write_pgm
from .texture import GrayImage


@dataclass(frozen=True)
class TextureClass:
    """Parameters of one texture archetype."""

    correlation_length: int  # box kernel size in pixels
    low: int  # background intensity level
    high: int  # blob intensity level
    density: float  # fraction of pixels raised to the high level
    jitter: int = 10  # uniform per-pixel intensity wobble, +/- this value


DEFAULT_CLASSES = (
    TextureClass(correlation_length=1, low=50, high=140, density=0.35),
    TextureClass(correlation_length=3, low=70, high=160, density=0.45),
    TextureClass(correlation_length=7, low=90, high=180, density=0.55),
    TextureClass(correlation_length=13, low=110, high=200, density=0.65),
)


@dataclass(frozen=True)
class SynthSpec:
    per_class: int
    size: int = 96
    seed: int = 0
    classes: tuple[TextureClass, ...] = DEFAULT_CLASSES

    def __post_init__(self):
        if self.per_class < 1:
            raise ValueError("per_class must be >= 1")
        if self.size < 8:
            raise ValueError("size must be >= 8")
        if len(self.classes) < 2:
            raise ValueError("need at least two texture classes")


def _render(params: TextureClass, size: int, rng: np.random.Generator) -> GrayImage:
    noise = rng.random((size, size))
    if params.correlation_length > 1:
        field = uniform_filter(noise, size=params.correlation_length, mode="reflect")
    else:
        field = noise
    threshold = np.quantile(field, 1.0 - params.density)
    base = np.where(field > threshold, params.high, params.low)
    jitter = rng.integers(-params.jitter, params.jitter + 1, size=(size, size))
    pixels = np.clip(base + jitter, 0, 255).astype(np.uint8)
    return GrayImage(pixels=pixels)


def generate(spec: SynthSpec) -> tuple[list[GrayImage], list[int]]:
    """Deterministic image/label lists: all of class 0, then class 1, ..."""
    rng = np.random.default_rng(spec.seed)
    images: list[GrayImage] = []
    labels: list[int] = []
    for label, params in enumerate(spec.classes):
        for _ in range(spec.per_class):
            images.append(_render(params, spec.size, rng))
            labels.append(label)
    return images, labels


def write_dataset(spec: SynthSpec, out_dir) -> Path:
    """Render the corpus to PGM files plus a ``manifest.csv``; returns its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    images, labels = generate(spec)
    entries = []
    index_width = len(str(spec.per_class - 1))
    counters = [0] * len(spec.classes)
    for image, label in zip(images, labels):
        name = f"class{label}_{counters[label]:0{index_width}d}.pgm"
        counters[label] += 1
        write_pgm(image, out / name)
        entries.append(ManifestEntry(path=out / name, label=label))
    manifest_path = out / "manifest.csv"
    write_manifest(entries, manifest_path)
    return manifest_path
