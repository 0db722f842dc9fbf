"""Binary PGM ("P5", maxval 255) reader and writer.

The only raster format the package ingests; other sources must be converted
externally.  Parsing is strict and every rejection reports the byte offset
where the problem was found.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .texture import GrayImage

_WHITESPACE = b" \t\n\r\v\f"
_MAX_DIMENSION = 1 << 20


class PgmParseError(ValueError):
    """Malformed PGM input; ``offset`` is the byte position of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.message = message
        self.offset = offset


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def skip_separators(self, context: str) -> None:
        """Advance over whitespace and '#' comments; at least one required."""
        start = self.pos
        while self.pos < len(self.data):
            byte = self.data[self.pos]
            if byte == 0x23:  # '#'
                end = self.data.find(b"\n", self.pos)
                if end < 0:
                    raise PgmParseError("comment is not terminated by newline", self.pos)
                self.pos = end + 1
            elif byte in _WHITESPACE:
                self.pos += 1
            else:
                break
        if self.pos == start:
            raise PgmParseError(f"expected whitespace before {context}", self.pos)

    def read_int(self, context: str) -> int:
        start = self.pos
        while self.pos < len(self.data) and 48 <= self.data[self.pos] <= 57:
            self.pos += 1
        if self.pos == start:
            raise PgmParseError(f"expected digits for {context}", start)
        return int(self.data[start : self.pos])


def parse_pgm(data: bytes) -> GrayImage:
    """Decode the bytes of a binary PGM file."""
    cursor = _Cursor(data)
    if len(data) < 2 or data[:2] in (b"P2",):
        raise PgmParseError("ASCII PGM (P2) is not supported, expected binary P5", 0)
    if data[:2] != b"P5":
        raise PgmParseError("bad magic, expected P5", 0)
    cursor.pos = 2
    cursor.skip_separators("width")
    width = cursor.read_int("width")
    cursor.skip_separators("height")
    height = cursor.read_int("height")
    cursor.skip_separators("maxval")
    maxval_at = cursor.pos
    maxval = cursor.read_int("maxval")
    if maxval != 255:
        raise PgmParseError(f"unsupported maxval {maxval}, expected 255", maxval_at)
    if width < 1 or height < 1 or width > _MAX_DIMENSION or height > _MAX_DIMENSION:
        raise PgmParseError(f"bad dimensions {width}x{height}", 2)
    if cursor.pos >= len(data):
        raise PgmParseError("missing whitespace after maxval", cursor.pos)
    if data[cursor.pos] not in _WHITESPACE:
        raise PgmParseError("expected single whitespace byte after maxval", cursor.pos)
    cursor.pos += 1
    expected = width * height
    payload = data[cursor.pos :]
    if len(payload) < expected:
        raise PgmParseError(
            f"truncated payload: expected {expected} bytes, found {len(payload)}",
            cursor.pos + len(payload),
        )
    if len(payload) > expected:
        raise PgmParseError(
            f"trailing bytes after payload: expected {expected}, found {len(payload)}",
            cursor.pos + expected,
        )
    pixels = np.frombuffer(payload, dtype=np.uint8).reshape(height, width)
    return GrayImage(pixels=pixels.copy())


def load_pgm(path) -> GrayImage:
    """Read one image; raises :class:`PgmParseError` on malformed input."""
    data = Path(path).read_bytes()
    try:
        return parse_pgm(data)
    except PgmParseError as exc:
        raise PgmParseError(f"{path}: {exc.message}", exc.offset) from None


def encode_pgm(image: GrayImage) -> bytes:
    """Canonical encoding: ``P5\\n<w> <h>\\n255\\n`` followed by raw rows."""
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    return header + image.pixels.tobytes()


def write_pgm(image: GrayImage, path) -> None:
    Path(path).write_bytes(encode_pgm(image))
