import numpy as np
import pytest

from texscore.datasets import (
    ManifestEntry,
    ManifestError,
    labeled_entries,
    load_images,
    load_manifest,
    write_manifest,
)
from texscore.pgm import write_pgm
from texscore.texture import GrayImage


def make_images(tmp_path, names):
    rng = np.random.default_rng(0)
    for name in names:
        write_pgm(GrayImage(rng.integers(0, 256, size=(8, 8)).astype(np.uint8)), tmp_path / name)


class TestLoadManifest:
    def test_three_rows_in_order(self, tmp_path):
        make_images(tmp_path, ["a.pgm", "b.pgm", "c.pgm"])
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("path,label\na.pgm,0\nb.pgm,3\nc.pgm,1\n")
        entries = load_manifest(manifest)
        assert [e.path.name for e in entries] == ["a.pgm", "b.pgm", "c.pgm"]
        assert [e.label for e in entries] == [0, 3, 1]

    def test_empty_label_is_unlabeled(self, tmp_path):
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("path,label\na.pgm,\nb.pgm,2\n")
        entries = load_manifest(manifest)
        assert entries[0].label is None
        assert entries[1].label == 2
        assert [e.label for e in labeled_entries(entries)] == [2]

    def test_relative_paths_resolve_against_manifest_dir(self, tmp_path):
        sub = tmp_path / "nested"
        sub.mkdir()
        manifest = sub / "manifest.csv"
        manifest.write_text("path,label\nimg.pgm,1\n")
        entries = load_manifest(manifest)
        assert entries[0].path == sub / "img.pgm"

    def test_label_outside_set_names_row(self, tmp_path):
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("path,label\na.pgm,0\nb.pgm,4\n")
        with pytest.raises(ManifestError) as info:
            load_manifest(manifest)
        assert "row 3" in str(info.value)
        assert "4" in str(info.value)

    def test_duplicate_path_rejected(self, tmp_path):
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("path,label\na.pgm,0\na.pgm,1\n")
        with pytest.raises(ManifestError) as info:
            load_manifest(manifest)
        assert "duplicate" in str(info.value)

    def test_bad_header_rejected(self, tmp_path):
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("file,score\na.pgm,0\n")
        with pytest.raises(ManifestError):
            load_manifest(manifest)

    def test_non_integer_label(self, tmp_path):
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("path,label\na.pgm,high\n")
        with pytest.raises(ManifestError) as info:
            load_manifest(manifest)
        assert "row 2" in str(info.value)

    def test_custom_label_set(self, tmp_path):
        manifest = tmp_path / "manifest.csv"
        manifest.write_text("path,label\na.pgm,7\n")
        entries = load_manifest(manifest, label_set=(5, 7))
        assert entries[0].label == 7


class TestLoadImages:
    def test_loads_in_manifest_order(self, tmp_path):
        make_images(tmp_path, ["x.pgm", "y.pgm"])
        entries = [
            ManifestEntry(tmp_path / "y.pgm", 0),
            ManifestEntry(tmp_path / "x.pgm", 1),
        ]
        images = load_images(entries)
        assert len(images) == 2
        threaded = load_images(entries, threads=3)
        for a, b in zip(images, threaded):
            np.testing.assert_array_equal(a.pixels, b.pixels)

    def test_missing_file_is_descriptive(self, tmp_path):
        entries = [ManifestEntry(tmp_path / "ghost.pgm", 0)]
        with pytest.raises(ManifestError) as info:
            load_images(entries)
        assert "ghost.pgm" in str(info.value)


class TestWriteManifest:
    def test_round_trip(self, tmp_path):
        make_images(tmp_path, ["a.pgm", "b.pgm"])
        entries = [
            ManifestEntry(tmp_path / "a.pgm", 2),
            ManifestEntry(tmp_path / "b.pgm", None),
        ]
        path = tmp_path / "manifest.csv"
        write_manifest(entries, path)
        loaded = load_manifest(path)
        assert [e.path for e in loaded] == [e.path for e in entries]
        assert [e.label for e in loaded] == [2, None]
