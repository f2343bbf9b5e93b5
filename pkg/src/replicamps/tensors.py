"""Dense tensor primitives: contraction, truncated SVD, QR orthonormalization.

All higher-level code funnels its linear algebra through these three routines so
that truncation policy, tie-breaking and phase conventions are fixed in exactly
one place.

Conventions:
    * tensors are ``numpy.ndarray`` of complex128,
    * a "split" designates which axes form the row group of the matricization,
      either as an integer (the first ``split`` axes) or an explicit axis list,
    * singular values are returned unabsorbed; callers decide which factor eats
      them,
    * every left singular vector is rotated so its largest-magnitude entry is
      real and positive, which makes repeated factorizations reproducible,
    * discarded weight is the *relative* discarded squared singular value,
      ``sum(s_cut**2) / sum(s_all**2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

__all__ = [
    "TruncationSpec",
    "FactorResult",
    "ShapeError",
    "FactorizationError",
    "UNRESTRICTED",
    "contract",
    "svd_truncate",
    "qr_orthonormalize",
]

# Relative spread below which singular values count as degenerate at the
# truncation boundary.
DEGENERACY_RTOL = 1e-12


class ShapeError(ValueError):
    """Raised when tensor dimensions are inconsistent with the request."""


class FactorizationError(RuntimeError):
    """Raised when a matrix factorization fails; carries the offending shape."""

    def __init__(self, message: str, shape: tuple[int, ...]):
        super().__init__(f"{message} (shape {shape})")
        self.shape = shape


@dataclass(frozen=True)
class TruncationSpec:
    """Rank cap and relative discarded-weight cutoff for truncated SVDs.

    ``max_rank=None`` means unrestricted rank. ``weight_cutoff`` is the largest
    relative squared singular-value weight a truncation is allowed to discard.
    """

    max_rank: int | None = None
    weight_cutoff: float = 0.0

    def __post_init__(self) -> None:
        if self.max_rank is not None and self.max_rank < 1:
            raise ValueError(f"max_rank must be positive, got {self.max_rank}")
        if not 0.0 <= self.weight_cutoff < 1.0:
            raise ValueError(
                f"weight_cutoff must lie in [0, 1), got {self.weight_cutoff}"
            )


#: Spec that keeps everything (exact factorization).
UNRESTRICTED = TruncationSpec(max_rank=None, weight_cutoff=0.0)


@dataclass
class FactorResult:
    """Outcome of a truncated SVD.

    ``left_factor`` has orthonormal columns (shape: left dims + (rank,)),
    ``right_factor`` has orthonormal rows (shape: (rank,) + right dims), and
    the product ``left @ diag(singular_values) @ right`` reconstructs the
    input up to the discarded weight.
    """

    left_factor: np.ndarray
    singular_values: np.ndarray
    right_factor: np.ndarray
    discarded_weight: float

    @property
    def rank(self) -> int:
        return self.singular_values.size


def _as_array(t: np.ndarray) -> np.ndarray:
    return np.asarray(t, dtype=np.complex128)


def _check_finite(t: np.ndarray, op: str) -> None:
    if not np.isfinite(t).all():
        raise FactorizationError(f"{op}: non-finite entries", tuple(t.shape))


def _split_axes(t: np.ndarray, split: int | Sequence[int]) -> tuple[list[int], list[int]]:
    """Resolve a split request into (left axes, right axes), order preserving."""
    ndim = t.ndim
    if isinstance(split, (int, np.integer)):
        if not 0 < split < ndim:
            raise ShapeError(
                f"split {split} must leave axes on both sides of a {ndim}-d tensor"
            )
        left = list(range(split))
    else:
        left = [a % ndim for a in split]
        if len(set(left)) != len(left) or not left or len(left) >= ndim:
            raise ShapeError(f"invalid split {split!r} for a {ndim}-d tensor")
    right = [a for a in range(ndim) if a not in left]
    return left, right


def contract(a: np.ndarray, b: np.ndarray, axis_pairs: Sequence[tuple[int, int]]) -> np.ndarray:
    """Contract ``a`` and ``b`` over the given axis pairs.

    Remaining axes keep their original order, those of ``a`` first. With an
    empty ``axis_pairs`` this is the outer product.
    """
    a = _as_array(a)
    b = _as_array(b)
    ax_a = [p[0] % a.ndim for p in axis_pairs]
    ax_b = [p[1] % b.ndim for p in axis_pairs]
    if len(set(ax_a)) != len(ax_a) or len(set(ax_b)) != len(ax_b):
        raise ShapeError(f"repeated axis in contraction pairs {list(axis_pairs)!r}")
    for i, j in zip(ax_a, ax_b):
        if a.shape[i] != b.shape[j]:
            raise ShapeError(
                f"cannot contract axis {i} of shape {a.shape} with "
                f"axis {j} of shape {b.shape}"
            )
    return np.tensordot(a, b, axes=(ax_a, ax_b))


def _matricize(t: np.ndarray, split: int | Sequence[int]):
    left, right = _split_axes(t, split)
    perm = left + right
    lshape = tuple(t.shape[a] for a in left)
    rshape = tuple(t.shape[a] for a in right)
    mat = np.transpose(t, perm).reshape(int(np.prod(lshape)), int(np.prod(rshape)))
    return mat, lshape, rshape


def _svd(mat: np.ndarray):
    try:
        return np.linalg.svd(mat, full_matrices=False)
    except np.linalg.LinAlgError:
        pass
    try:
        # gesdd occasionally fails to converge; gesvd is slower but sturdier.
        return scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesvd")
    except Exception as exc:
        raise FactorizationError(f"SVD failed to converge: {exc}", mat.shape) from exc


def _fix_phases(u: np.ndarray, vh: np.ndarray) -> None:
    """Rotate each left singular vector so its largest entry is real positive."""
    idx = np.argmax(np.abs(u), axis=0)
    pivots = u[idx, np.arange(u.shape[1])]
    mags = np.abs(pivots)
    phases = np.where(mags > 0.0, pivots / np.where(mags > 0.0, mags, 1.0), 1.0)
    u /= phases[np.newaxis, :]
    vh *= phases[:, np.newaxis]


def _kept_rank(s: np.ndarray, spec: TruncationSpec) -> int:
    """Smallest rank allowed by the cutoff, degenerate ties extended, then capped."""
    weights = s.astype(np.float64) ** 2
    total = weights.sum()
    if total <= 0.0:
        return 1
    # Largest tail we may discard: relative weight <= weight_cutoff.
    tail = np.cumsum(weights[::-1])[::-1]  # tail[r] = sum over s[r:]
    rank = s.size
    for r in range(1, s.size + 1):
        if r == s.size or tail[r] <= spec.weight_cutoff * total:
            rank = r
            break
    # Extend over degeneracies at the boundary before applying the hard cap.
    boundary = s[rank - 1]
    while rank < s.size and s[rank] >= boundary * (1.0 - DEGENERACY_RTOL):
        rank += 1
    if spec.max_rank is not None:
        rank = min(rank, spec.max_rank)
    return max(rank, 1)


def svd_truncate(
    t: np.ndarray, split: int | Sequence[int], spec: TruncationSpec
) -> FactorResult:
    """Truncated SVD of ``t`` across the given split.

    The kept rank is the smallest rank whose relative discarded weight is at
    most ``spec.weight_cutoff``, extended over singular values degenerate with
    the last kept one (within 1e-12 relative), then capped at
    ``spec.max_rank``. The gauge is fixed by making the largest-magnitude
    entry of every left singular vector real and positive.
    """
    t = _as_array(t)
    _check_finite(t, "svd_truncate")
    mat, lshape, rshape = _matricize(t, split)
    u, s, vh = _svd(mat)
    rank = _kept_rank(s, spec)
    weights = s**2
    total = weights.sum()
    discarded = float(weights[rank:].sum() / total) if total > 0.0 else 0.0
    u, s, vh = u[:, :rank].copy(), s[:rank].copy(), vh[:rank].copy()
    _fix_phases(u, vh)
    return FactorResult(
        left_factor=u.reshape(lshape + (rank,)),
        singular_values=s,
        right_factor=vh.reshape((rank,) + rshape),
        discarded_weight=discarded,
    )


def qr_orthonormalize(
    t: np.ndarray, split: int | Sequence[int]
) -> tuple[np.ndarray, np.ndarray]:
    """Thin QR of ``t`` across the given split.

    Returns ``(q, r)`` with ``q`` an isometry (orthonormal columns in the
    matricized picture) and ``r`` upper triangular with a real positive
    diagonal, so isometric input reproduces itself with ``r = identity``.
    """
    t = _as_array(t)
    _check_finite(t, "qr_orthonormalize")
    mat, lshape, rshape = _matricize(t, split)
    try:
        q, r = np.linalg.qr(mat, mode="reduced")
    except np.linalg.LinAlgError as exc:
        raise FactorizationError(f"QR failed: {exc}", mat.shape) from exc
    diag = np.diagonal(r).copy()
    mags = np.abs(diag)
    phases = np.where(mags > 1e-300, diag / np.where(mags > 1e-300, mags, 1.0), 1.0)
    q = q * phases[np.newaxis, :]
    r = r / phases[:, np.newaxis]
    k = r.shape[0]
    return q.reshape(lshape + (k,)), r.reshape((k,) + rshape)
