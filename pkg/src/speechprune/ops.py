"""Dense matrix kernels shared by every stage of the pruning engine.

Matrices are 2-D float32 arrays in row-major order. Accumulations (dot
products, norms, softmax sums, means) run in float64 and are rounded back
to float32 where a matrix is produced, which keeps results stable against
naive-loop reference implementations.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError, ValidationError

# Top-k tie policy: equal scores resolve to the earlier index, preserving
# temporal order. The only supported policy, named so callers and tests can
# state it explicitly.
TIE_LOW_INDEX = "low-index"


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """Coerce ``data`` to a contiguous 2-D float32 array."""
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got {arr.ndim}-D", arr.shape)
    return np.ascontiguousarray(arr)


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with float64 accumulation, rounded to float32."""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError("matmul dimension mismatch", a.shape, b.shape)
    return (a.astype(np.float64) @ b.astype(np.float64)).astype(np.float32)


def l2_normalize_rows(m: np.ndarray, eps: float = 1e-12) -> np.ndarray:
    """Divide each row by max(row L2 norm, eps). Zero rows stay zero."""
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    m = as_matrix(m)
    norms = np.linalg.norm(m.astype(np.float64), axis=1, keepdims=True)
    return (m.astype(np.float64) / np.maximum(norms, eps)).astype(np.float32)


def softmax(v: np.ndarray) -> np.ndarray:
    """Numerically stable softmax of a 1-D vector (max-subtraction)."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ShapeError("softmax expects a 1-D vector", v.shape)
    if v.size == 0:
        raise ValidationError("softmax of an empty vector is undefined")
    if not np.all(np.isfinite(v)):
        raise ValidationError("softmax input must be finite")
    e = np.exp(v - v.max())
    return e / e.sum()


def topk_indices(scores: np.ndarray, k: int, tie_break: str = TIE_LOW_INDEX) -> np.ndarray:
    """Indices of the k largest scores, returned in ascending index order.

    Equal scores resolve to the lower index first (the ``TIE_LOW_INDEX``
    policy, the only one supported).
    """
    if tie_break != TIE_LOW_INDEX:
        raise ValidationError(f"unknown tie-break policy: {tie_break!r}")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        raise ShapeError("topk_indices expects a 1-D vector", scores.shape)
    if not 0 <= k <= scores.size:
        raise ValidationError(f"k={k} out of range for {scores.size} scores")
    # Stable sort on negated scores keeps the original (ascending-index)
    # order among equal values.
    order = np.argsort(-scores, kind="stable")
    return np.sort(order[:k]).astype(np.int64)


def sign_binarize(m: np.ndarray) -> np.ndarray:
    """Entry-wise sign with sign(0) := +1; output entries are +/-1."""
    m = as_matrix(m)
    if not np.all(np.isfinite(m)):
        raise ValidationError("sign_binarize input must be finite")
    return np.where(m >= 0, np.float32(1.0), np.float32(-1.0))


def mean_axis(m: np.ndarray, axis: str) -> np.ndarray:
    """Arithmetic mean reducing the named dimension of a 2-D matrix.

    ``axis="cols"`` averages each row across its columns (length-rows
    result); ``axis="rows"`` averages each column down its rows
    (length-cols result). Computed in float64.
    """
    m = as_matrix(m)
    if axis == "cols":
        if m.shape[1] == 0:
            raise ShapeError("cannot average over zero columns", m.shape)
        return m.astype(np.float64).mean(axis=1)
    if axis == "rows":
        if m.shape[0] == 0:
            raise ShapeError("cannot average over zero rows", m.shape)
        return m.astype(np.float64).mean(axis=0)
    raise ValidationError(f"axis must be 'rows' or 'cols', got {axis!r}")
