#!/usr/bin/env python3
"""Tour of the .spb bundle container.

An .spb file carries one pruning problem: the speech and text embedding
matrices, the first-layer Q/K projection weights, and frame metadata.
The format is little-endian, fully validatable, and round-trips
bit-exactly.
"""

import io

import numpy as np

from speechprune import (
    BundleError,
    EmbeddingBundle,
    NeedleSpan,
    read_bundle,
    write_bundle,
)

rng = np.random.default_rng(0)
bundle = EmbeddingBundle(
    speech=rng.standard_normal((120, 24)).astype(np.float32),
    text=rng.standard_normal((6, 24)).astype(np.float32),
    wq=rng.standard_normal((24, 12)).astype(np.float32),
    wk=rng.standard_normal((24, 12)).astype(np.float32),
    tokens_per_second=25,
    needle=NeedleSpan(40, 10),
    label="demo",
    extra_metadata={"source": "bundle_container demo"},
)

buf = io.BytesIO()
n_bytes = write_bundle(bundle, buf)
data = buf.getvalue()
print(f"serialized {n_bytes} bytes; magic={data[:4]!r}")

back = read_bundle(data)
print(f"round-trip equal: {back == bundle}")
print(f"needle survives: {back.needle}, label={back.label!r}")
print(f"unknown metadata preserved: {back.extra_metadata}")

# Corruptions surface as structured errors with a kind and byte offset,
# never as crashes.
for label, mutate in [
    ("wrong magic", lambda d: b"SPBX" + d[4:]),
    ("future version", lambda d: d[:4] + b"\x09\x00\x00\x00" + d[8:]),
    ("truncated payload", lambda d: d[: len(d) // 2]),
    ("trailing junk", lambda d: d + b"zz"),
]:
    try:
        read_bundle(mutate(data))
    except BundleError as err:
        print(f"{label:>18}: kind={err.kind!r} offset={err.offset}")
