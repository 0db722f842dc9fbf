"""Manifest-driven dataset bookkeeping.

A manifest is a CSV file with header ``path,label``; the label field may be
empty for unlabeled images.  Relative paths resolve against the manifest's
own directory.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .pgm import load_pgm
from .texture import GrayImage

DEFAULT_LABEL_SET = (0, 1, 2, 3)


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    label: int | None


def load_manifest(path, label_set=DEFAULT_LABEL_SET) -> list[ManifestEntry]:
    """Parse a ``path,label`` CSV; order is preserved, paths must be unique."""
    manifest_path = Path(path)
    base = manifest_path.parent
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    allowed = set(label_set)
    with open(manifest_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["path", "label"]:
            raise ManifestError(
                f"{manifest_path}: expected header 'path,label', got {header}"
            )
        for row_number, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 1:
                raise ManifestError(f"{manifest_path}: row {row_number} is empty")
            raw_path = row[0].strip()
            if not raw_path:
                raise ManifestError(f"{manifest_path}: row {row_number} has no path")
            if raw_path in seen:
                raise ManifestError(
                    f"{manifest_path}: duplicate path {raw_path!r} at row {row_number}"
                )
            seen.add(raw_path)
            label: int | None = None
            raw_label = row[1].strip() if len(row) > 1 else ""
            if raw_label:
                try:
                    label = int(raw_label)
                except ValueError:
                    raise ManifestError(
                        f"{manifest_path}: row {row_number} has non-integer label "
                        f"{raw_label!r}"
                    ) from None
                if label not in allowed:
                    raise ManifestError(
                        f"{manifest_path}: row {row_number} label {label} outside "
                        f"label set {sorted(allowed)}"
                    )
            resolved = Path(raw_path)
            if not resolved.is_absolute():
                resolved = base / resolved
            entries.append(ManifestEntry(path=resolved, label=label))
    return entries


def write_manifest(entries: list[ManifestEntry], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["path", "label"])
        base = Path(path).parent
        for entry in entries:
            try:
                rel = entry.path.relative_to(base)
            except ValueError:
                rel = entry.path
            writer.writerow([str(rel), "" if entry.label is None else entry.label])


def load_images(entries: list[ManifestEntry], threads: int = 1) -> list[GrayImage]:
    """Load every referenced PGM, preserving manifest order."""
    paths = [entry.path for entry in entries]
    missing = [str(p) for p in paths if not p.is_file()]
    if missing:
        raise ManifestError(f"missing image files: {', '.join(missing)}")
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(load_pgm, paths))
    return [load_pgm(p) for p in paths]


def labeled_entries(entries: list[ManifestEntry]) -> list[ManifestEntry]:
    return [entry for entry in entries if entry.label is not None]
