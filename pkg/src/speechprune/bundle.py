"""The .spb bundle: one pruning problem instance and its binary container.

SPB1 layout (all integers little-endian):

    magic            4 bytes  b"SPB1"
    version          u32      1
    matrix count     u32
    per matrix:
        name length  u16
        name         UTF-8 bytes
        rows         u32
        cols         u32
        data         rows*cols float32, row-major
    metadata length  u32
    metadata         UTF-8 JSON object

Required matrix names: "speech", "text", "wq", "wk". The metadata object
carries the required integer key "tokens_per_second" plus the optional keys
"needle_start"/"needle_length" (integers, both or neither) and "label"
(string). Unknown matrix names and unknown metadata keys are preserved on
read and ignored by the engine.
"""

from __future__ import annotations

import io
import json
import os
import struct
from dataclasses import dataclass, field
from typing import BinaryIO, NamedTuple

import numpy as np

from .errors import BundleError, ValidationError
from .ops import as_matrix

MAGIC = b"SPB1"
VERSION = 1

_REQUIRED = ("speech", "text", "wq", "wk")
_META_KEYS = ("tokens_per_second", "needle_start", "needle_length", "label")


class NeedleSpan(NamedTuple):
    start: int
    length: int


@dataclass(eq=False)
class EmbeddingBundle:
    """Speech/text embeddings plus first-layer Q/K weights and frame metadata.

    Shapes: speech (N, D), text (L, D), wq (D, Dk), wk (D, Dk).
    """

    speech: np.ndarray
    text: np.ndarray
    wq: np.ndarray
    wk: np.ndarray
    tokens_per_second: int
    needle: NeedleSpan | None = None
    label: str | None = None
    extra_matrices: dict[str, np.ndarray] = field(default_factory=dict)
    extra_metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.speech = as_matrix(self.speech, "speech")
        self.text = as_matrix(self.text, "text")
        self.wq = as_matrix(self.wq, "wq")
        self.wk = as_matrix(self.wk, "wk")
        self.extra_matrices = {
            name: as_matrix(m, name) for name, m in self.extra_matrices.items()
        }
        if self.needle is not None and not isinstance(self.needle, NeedleSpan):
            self.needle = NeedleSpan(*self.needle)

    @property
    def n_tokens(self) -> int:
        return self.speech.shape[0]

    def validate(self) -> None:
        """Raise ValidationError unless every bundle invariant holds."""
        n, d = self.speech.shape
        l, d_text = self.text.shape
        if n < 1:
            raise ValidationError("speech must contain at least one token")
        if l < 1:
            raise ValidationError("text must contain at least one token")
        if d < 1:
            raise ValidationError("embedding width must be at least 1")
        if d_text != d:
            raise ValidationError(
                f"text width {d_text} does not match speech width {d}"
            )
        if self.wq.shape[0] != d or self.wk.shape[0] != d:
            raise ValidationError(
                f"projection input width {self.wq.shape[0]}x{self.wk.shape[0]} "
                f"does not match embedding width {d}"
            )
        if self.wq.shape[1] != self.wk.shape[1]:
            raise ValidationError(
                f"wq and wk projection widths differ: "
                f"{self.wq.shape[1]} vs {self.wk.shape[1]}"
            )
        if self.wq.shape[1] < 1:
            raise ValidationError("projection width must be at least 1")
        if int(self.tokens_per_second) < 1:
            raise ValidationError(
                f"tokens_per_second must be >= 1, got {self.tokens_per_second}"
            )
        if self.needle is not None:
            start, length = self.needle
            if length < 1:
                raise ValidationError(f"needle length must be >= 1, got {length}")
            if start < 0 or start + length > n:
                raise ValidationError(
                    f"needle [{start}, {start + length}) out of range for {n} tokens"
                )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingBundle):
            return NotImplemented
        if set(self.extra_matrices) != set(other.extra_matrices):
            return False
        return (
            np.array_equal(self.speech, other.speech)
            and np.array_equal(self.text, other.text)
            and np.array_equal(self.wq, other.wq)
            and np.array_equal(self.wk, other.wk)
            and int(self.tokens_per_second) == int(other.tokens_per_second)
            and self.needle == other.needle
            and self.label == other.label
            and all(
                np.array_equal(m, other.extra_matrices[k])
                for k, m in self.extra_matrices.items()
            )
            and self.extra_metadata == other.extra_metadata
        )


def write_bundle(bundle: EmbeddingBundle, destination) -> int:
    """Serialize a validated bundle as SPB1. Returns the byte count written.

    ``destination`` may be a path or a writable binary file object.
    """
    bundle.validate()
    payload = _encode(bundle)
    if hasattr(destination, "write"):
        destination.write(payload)
    else:
        with open(destination, "wb") as fh:
            fh.write(payload)
    return len(payload)


def read_bundle(source) -> EmbeddingBundle:
    """Parse and validate an SPB1 bundle from a path, file object, or bytes."""
    data = _read_all(source)
    return _decode(data)


def _encode(bundle: EmbeddingBundle) -> bytes:
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", VERSION))

    named = [(name, getattr(bundle, name)) for name in _REQUIRED]
    named += sorted(bundle.extra_matrices.items())
    out.write(struct.pack("<I", len(named)))
    for name, matrix in named:
        raw = name.encode("utf-8")
        out.write(struct.pack("<H", len(raw)))
        out.write(raw)
        rows, cols = matrix.shape
        out.write(struct.pack("<II", rows, cols))
        out.write(matrix.astype("<f4", copy=False).tobytes(order="C"))

    meta: dict = {"tokens_per_second": int(bundle.tokens_per_second)}
    if bundle.needle is not None:
        meta["needle_start"] = int(bundle.needle.start)
        meta["needle_length"] = int(bundle.needle.length)
    if bundle.label is not None:
        meta["label"] = bundle.label
    meta.update(bundle.extra_metadata)
    blob = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    out.write(struct.pack("<I", len(blob)))
    out.write(blob)
    return out.getvalue()


class _Cursor:
    """Bounds-checked reader over an in-memory byte buffer."""

    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise BundleError(
                "truncated",
                f"expected {n} bytes for {what}, {len(self.data) - self.pos} remain",
                self.pos,
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def _read_all(source) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    if hasattr(source, "read"):
        return source.read()
    with open(source, "rb") as fh:
        return fh.read()


def _decode(data: bytes) -> EmbeddingBundle:
    cur = _Cursor(data)
    magic = cur.take(4, "magic")
    if magic != MAGIC:
        raise BundleError("bad-magic", f"expected {MAGIC!r}, got {magic!r}", 0)
    version = cur.u32("version")
    if version != VERSION:
        raise BundleError("unsupported-version", f"version {version} not supported", 4)

    count = cur.u32("matrix count")
    matrices: dict[str, np.ndarray] = {}
    for _ in range(count):
        name_at = cur.pos
        name_len = cur.u16("matrix name length")
        raw = cur.take(name_len, "matrix name")
        try:
            name = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BundleError("bad-name", f"matrix name is not UTF-8: {exc}", name_at)
        if name in matrices:
            raise BundleError("duplicate-matrix", f"matrix {name!r} appears twice", name_at)
        rows = cur.u32(f"{name} rows")
        cols = cur.u32(f"{name} cols")
        payload_at = cur.pos
        n_bytes = rows * cols * 4
        raw = cur.take(n_bytes, f"{name} payload ({rows}x{cols})")
        matrices[name] = (
            np.frombuffer(raw, dtype="<f4").reshape(rows, cols).astype(np.float32)
        )
        del payload_at

    meta_at = cur.pos
    meta_len = cur.u32("metadata length")
    blob = cur.take(meta_len, "metadata")
    if cur.pos != len(data):
        raise BundleError(
            "trailing-bytes", f"{len(data) - cur.pos} bytes after metadata", cur.pos
        )
    try:
        meta = json.loads(blob.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise BundleError("bad-metadata", f"metadata is not valid JSON: {exc}", meta_at)
    if not isinstance(meta, dict):
        raise BundleError("bad-metadata", "metadata must be a JSON object", meta_at)

    for name in _REQUIRED:
        if name not in matrices:
            raise BundleError("missing-matrix", f"required matrix {name!r} absent")

    tps = meta.get("tokens_per_second")
    if not isinstance(tps, int) or isinstance(tps, bool):
        raise BundleError(
            "bad-metadata", f"tokens_per_second must be an integer, got {tps!r}", meta_at
        )

    needle = None
    has_start = "needle_start" in meta
    has_length = "needle_length" in meta
    if has_start != has_length:
        raise BundleError(
            "bad-metadata", "needle_start and needle_length must appear together", meta_at
        )
    if has_start:
        start, length = meta["needle_start"], meta["needle_length"]
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in (start, length)):
            raise BundleError("bad-metadata", "needle fields must be integers", meta_at)
        needle = NeedleSpan(start, length)

    label = meta.get("label")
    if label is not None and not isinstance(label, str):
        raise BundleError("bad-metadata", f"label must be a string, got {label!r}", meta_at)

    extra_meta = {k: v for k, v in meta.items() if k not in _META_KEYS}
    extra_matrices = {k: v for k, v in matrices.items() if k not in _REQUIRED}

    bundle = EmbeddingBundle(
        speech=matrices["speech"],
        text=matrices["text"],
        wq=matrices["wq"],
        wk=matrices["wk"],
        tokens_per_second=tps,
        needle=needle,
        label=label,
        extra_matrices=extra_matrices,
        extra_metadata=extra_meta,
    )
    try:
        bundle.validate()
    except ValidationError as exc:
        kind = "needle-out-of-range" if "needle" in str(exc) else "shape-mismatch"
        raise BundleError(kind, str(exc))
    return bundle


def write_bundle_atomic(bundle: EmbeddingBundle, path: str) -> int:
    """Write via a temp file in the same directory, then rename into place."""
    directory = os.path.dirname(os.path.abspath(path))
    tmp = os.path.join(directory, f".{os.path.basename(path)}.tmp.{os.getpid()}")
    try:
        n = write_bundle(bundle, tmp)
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)
    return n
