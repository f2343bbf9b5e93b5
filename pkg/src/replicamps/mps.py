"""Matrix product states and operators on finite open chains.

Site tensors are rank-3 arrays with axes ``(left bond, physical, right bond)``;
boundary bonds have dimension 1. Operator site tensors are rank-4 with axes
``(left bond, physical out, physical in, right bond)``.

Canonical forms
    ``left``   every site satisfies  sum_s A[s]^dag A[s] = 1  (identity on the
               right bond),
    ``right``  every site satisfies  sum_s A[s] A[s]^dag = 1  (identity on the
               left bond), the form perfect sampling relies on,
    ``mixed``  left isometries strictly left of ``center``, right isometries
               strictly right of it, norm carried by the center tensor,
    ``none``   no gauge claim.

Norm bookkeeping
    The represented vector is ``exp(log_norm)`` times the contraction of the
    site tensors. Operations that renormalize tensors (canonicalization,
    compression, operator application) move the extracted real scale into
    ``log_norm`` so exponentially small vectors, such as replica states whose
    norm *is* the quantity of interest, never underflow.

All operations treat their inputs as immutable and return fresh objects; site
tensor arrays are never mutated in place once attached to a state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .tensors import (
    TruncationSpec,
    UNRESTRICTED,
    ShapeError,
    contract,
    qr_orthonormalize,
    svd_truncate,
)

__all__ = [
    "MatrixProductState",
    "MatrixProductOperator",
    "from_product_state",
    "random_mps",
    "canonicalize",
    "inner",
    "inner_log",
    "amplitude",
    "apply_mpo",
    "apply_diagonal_mpo",
    "compress",
    "entanglement_entropy",
    "identity_mpo",
    "save_mps",
    "load_mps",
]

CANONICAL_FORMS = ("none", "left", "right", "mixed")

# Zip-up truncation error above which one round of variational fitting is run.
VARIATIONAL_THRESHOLD = 1e-8

# Schmidt values below this are dropped before entropy logs.
SCHMIDT_FLOOR = 1e-15


@dataclass
class MatrixProductState:
    """An MPS snapshot. Treat instances as immutable."""

    site_tensors: list[np.ndarray]
    physical_dim: int = 2
    canonical_form: str = "none"
    center: int | None = None
    log_norm: float = 0.0

    def __post_init__(self) -> None:
        if self.canonical_form not in CANONICAL_FORMS:
            raise ValueError(f"unknown canonical form {self.canonical_form!r}")
        if self.canonical_form == "mixed" and self.center is None:
            raise ValueError("mixed canonical form needs a center")

    @property
    def length(self) -> int:
        return len(self.site_tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        """Inter-site bond dimensions (length - 1 entries)."""
        return tuple(t.shape[2] for t in self.site_tensors[:-1])

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def validate(self) -> None:
        """Check structural invariants; raises ShapeError on violation."""
        if not self.site_tensors:
            raise ShapeError("empty MPS")
        if self.site_tensors[0].shape[0] != 1 or self.site_tensors[-1].shape[2] != 1:
            raise ShapeError("boundary bonds must have dimension 1")
        for i, t in enumerate(self.site_tensors):
            if t.ndim != 3:
                raise ShapeError(f"site {i}: expected rank-3 tensor, got {t.shape}")
            if t.shape[1] != self.physical_dim:
                raise ShapeError(f"site {i}: physical dim {t.shape[1]} != {self.physical_dim}")
            if i and t.shape[0] != self.site_tensors[i - 1].shape[2]:
                raise ShapeError(f"bond mismatch between sites {i - 1} and {i}")
            if not np.isfinite(t).all():
                raise ShapeError(f"site {i}: non-finite entries")


@dataclass
class MatrixProductOperator:
    """An MPO with rank-4 site tensors (left, out, in, right)."""

    site_tensors: list[np.ndarray]
    physical_dim: int = 2

    @property
    def length(self) -> int:
        return len(self.site_tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[3] for t in self.site_tensors[:-1])

    def validate(self) -> None:
        for i, t in enumerate(self.site_tensors):
            if t.ndim != 4 or t.shape[1] != self.physical_dim or t.shape[2] != self.physical_dim:
                raise ShapeError(f"operator site {i}: bad shape {t.shape}")
            if i and t.shape[0] != self.site_tensors[i - 1].shape[3]:
                raise ShapeError(f"operator bond mismatch at site {i}")


def from_product_state(bits: Sequence[int], physical_dim: int = 2) -> MatrixProductState:
    """Product state |bits>; bit value b occupies physical index b.

    With the spin convention index 0 = up (Z eigenvalue +1), a domain wall on
    L=4 is ``[1, 1, 0, 0]``: left half down, right half up.
    """
    if not bits:
        raise ShapeError("need at least one site")
    tensors = []
    for i, b in enumerate(bits):
        if not 0 <= b < physical_dim:
            raise ShapeError(f"site {i}: label {b} outside [0, {physical_dim})")
        t = np.zeros((1, physical_dim, 1), dtype=np.complex128)
        t[0, b, 0] = 1.0
        tensors.append(t)
    return MatrixProductState(tensors, physical_dim, canonical_form="right")


def random_mps(
    length: int,
    max_rank: int,
    physical_dim: int = 2,
    rng: np.random.Generator | int | None = None,
) -> MatrixProductState:
    """Haar-ish random normalized MPS with bonds capped at ``max_rank``."""
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    d = physical_dim
    dims = [1]
    for i in range(length - 1):
        dims.append(min(max_rank, d ** (i + 1), d ** (length - 1 - i)))
    dims.append(1)
    tensors = [
        (gen.standard_normal((dims[i], d, dims[i + 1]))
         + 1j * gen.standard_normal((dims[i], d, dims[i + 1])))
        for i in range(length)
    ]
    state = canonicalize(MatrixProductState(tensors, d), "right")
    # A random state is a physical state: drop the scale, keep norm 1.
    return replace(state, log_norm=0.0)


# ---------------------------------------------------------------------------
# canonical forms


def _push_right(ts: list[np.ndarray], i: int) -> None:
    """Make site i a left isometry, absorbing the carry into site i + 1."""
    q, carry = qr_orthonormalize(ts[i], 2)
    ts[i] = q
    ts[i + 1] = contract(carry, ts[i + 1], [(1, 0)])


def _push_left(ts: list[np.ndarray], i: int) -> None:
    """Make site i a right isometry, absorbing the carry into site i - 1."""
    q, carry = qr_orthonormalize(ts[i].transpose(2, 1, 0), 2)
    ts[i] = q.transpose(2, 1, 0)
    ts[i - 1] = contract(ts[i - 1], carry.transpose(1, 0), [(2, 0)])


def _extract_scale(ts: list[np.ndarray], i: int) -> float:
    nrm = float(np.linalg.norm(ts[i]))
    if nrm == 0.0 or not math.isfinite(nrm):
        raise ShapeError(f"cannot normalize zero or non-finite tensor at site {i}")
    ts[i] = ts[i] / nrm
    return math.log(nrm)


def canonicalize(
    m: MatrixProductState, form: str, center: int | None = None
) -> MatrixProductState:
    """Bring ``m`` to the requested canonical form.

    The represented vector is preserved exactly (up to floating point); the
    extracted scale moves into ``log_norm``.
    """
    if form not in ("left", "right", "mixed"):
        raise ValueError(f"cannot canonicalize to form {form!r}")
    n = m.length
    if form == "mixed":
        if center is None or not 0 <= center < n:
            raise ValueError(f"mixed form needs a center in [0, {n})")
    ts = list(m.site_tensors)
    if form == "left":
        for i in range(n - 1):
            _push_right(ts, i)
        log_acc = _extract_scale(ts, n - 1)
        center = None
    elif form == "right":
        for i in range(n - 1, 0, -1):
            _push_left(ts, i)
        log_acc = _extract_scale(ts, 0)
        center = None
    else:
        for i in range(center):
            _push_right(ts, i)
        for i in range(n - 1, center, -1):
            _push_left(ts, i)
        log_acc = _extract_scale(ts, center)
    return MatrixProductState(ts, m.physical_dim, form, center, m.log_norm + log_acc)


# ---------------------------------------------------------------------------
# inner products and amplitudes


def inner_log(a: MatrixProductState, b: MatrixProductState) -> tuple[float, complex]:
    """<a|b> as ``(log magnitude, unit phase)``, stable against underflow."""
    if a.length != b.length or a.physical_dim != b.physical_dim:
        raise ShapeError("inner product needs matching length and physical dim")
    env = np.ones((1, 1), dtype=np.complex128)
    log_acc = a.log_norm + b.log_norm
    for ta, tb in zip(a.site_tensors, b.site_tensors):
        env = np.einsum("ab,asc,bsd->cd", env, ta.conj(), tb, optimize=True)
        nrm = float(np.linalg.norm(env))
        if nrm == 0.0:
            return -math.inf, 0.0 + 0.0j
        env /= nrm
        log_acc += math.log(nrm)
    val = complex(env[0, 0])
    mag = abs(val)
    if mag == 0.0:
        return -math.inf, 0.0 + 0.0j
    return log_acc + math.log(mag), val / mag


def inner(a: MatrixProductState, b: MatrixProductState) -> complex:
    """Complex overlap <a|b>, including both log_norm factors."""
    log_mag, phase = inner_log(a, b)
    if log_mag == -math.inf:
        return 0.0 + 0.0j
    return phase * math.exp(log_mag)


def amplitude(m: MatrixProductState, bits: Sequence[int]) -> complex:
    """Single computational-basis amplitude <bits|m>, site 0 first."""
    if len(bits) != m.length:
        raise ShapeError(f"expected {m.length} labels, got {len(bits)}")
    v = np.ones(1, dtype=np.complex128)
    for i, b in enumerate(bits):
        if not 0 <= b < m.physical_dim:
            raise ShapeError(f"site {i}: label {b} outside [0, {m.physical_dim})")
        v = v @ m.site_tensors[i][:, b, :]
    return complex(v[0]) * math.exp(m.log_norm)


# ---------------------------------------------------------------------------
# compression


def _sweep_truncate_rl(ts: list[np.ndarray], spec: TruncationSpec) -> tuple[float, float]:
    """Right-to-left truncating SVD sweep over left-canonical tensors.

    Leaves ``ts`` right-canonical with site 0 normalized. Returns
    ``(cumulative discarded weight, extracted log scale)``.
    """
    dw = 0.0
    for i in range(len(ts) - 1, 0, -1):
        fr = svd_truncate(ts[i], 1, spec)
        dw += fr.discarded_weight
        ts[i] = fr.right_factor
        carry = fr.left_factor * fr.singular_values[np.newaxis, :]
        ts[i - 1] = contract(ts[i - 1], carry, [(2, 0)])
    log_scale = _extract_scale(ts, 0)
    return dw, log_scale


def compress(
    m: MatrixProductState, spec: TruncationSpec
) -> tuple[MatrixProductState, float]:
    """Globally optimal two-sweep compression of ``m`` to ``spec``.

    Output is right-canonical and normalized, with the extracted scale moved
    into ``log_norm``; the second return value is the cumulative relative
    discarded weight.
    """
    ts = list(m.site_tensors)
    n = len(ts)
    log_acc = m.log_norm
    for i in range(n - 1):
        _push_right(ts, i)
    log_acc += _extract_scale(ts, n - 1)
    dw, log_scale = _sweep_truncate_rl(ts, spec)
    return MatrixProductState(ts, m.physical_dim, "right", None, log_acc + log_scale), dw


def entanglement_entropy(m: MatrixProductState, cut: int | None = None) -> float:
    """Bipartite von Neumann entropy (nats) across bond ``cut``.

    ``cut`` counts bonds 1..L-1 (cut c splits sites [0, c) from [c, L)); the
    default is the central bond. Schmidt values below 1e-15 are dropped.
    """
    n = m.length
    if cut is None:
        cut = n // 2
    if not 1 <= cut <= n - 1:
        raise ShapeError(f"cut must lie in [1, {n - 1}], got {cut}")
    mixed = canonicalize(m, "mixed", center=cut)
    fr = svd_truncate(mixed.site_tensors[cut], 1, UNRESTRICTED)
    s = fr.singular_values
    total = np.linalg.norm(s)
    if total == 0.0:
        raise ShapeError("zero state has no Schmidt spectrum")
    s = s / total
    s = s[s > SCHMIDT_FLOOR]
    p = s**2
    return float(-(p * np.log(p)).sum())


# ---------------------------------------------------------------------------
# operator application (zip-up + optional variational polish)
#
# The zip-up sweep carries a partially contracted block C[k, a, b] (compressed
# new bond, operator bond, source bond), splits off one site tensor per step
# by truncated SVD, and finishes with a right-to-left truncating sweep. When
# the zip discarded more than VARIATIONAL_THRESHOLD, one round of single-site
# variational fitting against the exact product is run at fixed ranks.
#
# Two operand flavours share the sweeps: dense rank-4 MPO tensors, and
# "diagonal" operators W|x> = <x|g> |x> whose rank-4 form never needs to be
# materialized because the carrier g is itself an MPS.


class _DenseOp:
    def __init__(self, sites: list[np.ndarray]):
        self.sites = sites

    def zip_step(self, c: np.ndarray, i: int, a: np.ndarray) -> np.ndarray:
        # c[k,a,b], W[a,s,t,d], A[b,t,c2] -> T[k,s,d,c2]
        half = np.einsum("kab,btc->katc", c, a, optimize=True)
        return np.einsum("katc,astd->ksdc", half, self.sites[i], optimize=True)

    def env_left(self, env: np.ndarray, i: int, phi: np.ndarray, a: np.ndarray) -> np.ndarray:
        # env[f,a,b] -> env'[g,d,c]
        return np.einsum(
            "fab,fsg,astd,btc->gdc", env, phi.conj(), self.sites[i], a, optimize=True
        )

    def env_right(self, env: np.ndarray, i: int, phi: np.ndarray, a: np.ndarray) -> np.ndarray:
        # env[g,d,c] -> env'[f,a,b]
        return np.einsum(
            "gdc,fsg,astd,btc->fab", env, phi.conj(), self.sites[i], a, optimize=True
        )

    def local_update(self, left: np.ndarray, i: int, a: np.ndarray, right: np.ndarray) -> np.ndarray:
        return np.einsum(
            "fab,astd,btc,gdc->fsg", left, self.sites[i], a, right, optimize=True
        )


class _DiagOp:
    """Operator diagonal in the computational basis, diagonal carried by ``g``.

    The physical index rides along as a batch dimension in every
    contraction here, which einsum executes without BLAS; spelled as batched
    matmuls these are the difference between seconds and minutes per replica
    application at realistic bonds.
    """

    def __init__(self, sites: list[np.ndarray]):
        self.sites = sites

    def zip_step(self, c: np.ndarray, i: int, a: np.ndarray) -> np.ndarray:
        # c[k,a,b], g[a,s,d], A[b,s,e] -> T[k,s,d,e]
        g = self.sites[i]
        k, _, b = c.shape
        s, d = g.shape[1], g.shape[2]
        e = a.shape[2]
        m = np.tensordot(c, g, axes=([1], [0]))  # (k,b,s,d)
        m = m.transpose(2, 0, 3, 1).reshape(s, k * d, b)
        t = m @ a.transpose(1, 0, 2)  # (s,kd,b)@(s,b,e)
        return t.reshape(s, k, d, e).transpose(1, 0, 2, 3)

    def env_left(self, env: np.ndarray, i: int, phi: np.ndarray, a: np.ndarray) -> np.ndarray:
        # env[f,a,b], phi*[f,s,g], g[a,s,d], A[b,s,c] -> env'[g,d,c]
        w = self.sites[i]
        _, av, b = env.shape
        s, go = phi.shape[1], phi.shape[2]
        d, c = w.shape[2], a.shape[2]
        x = np.tensordot(env, phi.conj(), axes=([0], [0]))  # (a,b,s,g)
        x = x.transpose(2, 1, 3, 0).reshape(s, b * go, av)
        y = x @ w.transpose(1, 0, 2)  # (s,bg,d)
        y = y.reshape(s, b, go, d).transpose(0, 2, 3, 1).reshape(s, go * d, b)
        out = y @ a.transpose(1, 0, 2)  # (s,gd,c)
        return out.sum(axis=0).reshape(go, d, c)

    def env_right(self, env: np.ndarray, i: int, phi: np.ndarray, a: np.ndarray) -> np.ndarray:
        # env[g,d,c], phi*[f,s,g], g[a,s,d], A[b,s,c] -> env'[f,a,b]
        w = self.sites[i]
        d, c = env.shape[1], env.shape[2]
        f, s = phi.shape[0], phi.shape[1]
        av, b = w.shape[0], a.shape[0]
        x = np.tensordot(env, phi.conj(), axes=([0], [2]))  # (d,c,f,s)
        x = x.transpose(3, 1, 2, 0).reshape(s, c * f, d)
        y = x @ w.transpose(1, 2, 0)  # (s,cf,a)
        y = y.reshape(s, c, f, av).transpose(0, 2, 3, 1).reshape(s, f * av, c)
        out = y @ a.transpose(1, 2, 0)  # (s,fa,b)
        return out.sum(axis=0).reshape(f, av, b)

    def local_update(self, left: np.ndarray, i: int, a: np.ndarray, right: np.ndarray) -> np.ndarray:
        # left[f,a,b], g[a,s,d], A[b,s,c], right[g,d,c] -> phi[f,s,g]
        w = self.sites[i]
        f, _, b = left.shape
        s, d = w.shape[1], w.shape[2]
        c, go = a.shape[2], right.shape[0]
        x = np.tensordot(left, w, axes=([1], [0]))  # (f,b,s,d)
        x = x.transpose(2, 0, 3, 1).reshape(s, f * d, b)
        y = x @ a.transpose(1, 0, 2)  # (s,fd,c)
        y = y.reshape(s, f, d, c).reshape(s * f, d * c)
        out = y @ right.reshape(go, d * c).T  # (sf,g)
        return out.reshape(s, f, go).transpose(1, 0, 2)


def _zip_apply(op, src: MatrixProductState, spec: TruncationSpec) -> tuple[list[np.ndarray], float, float]:
    """Zip-up product, returning (right-canonical tensors, log scale, discarded weight)."""
    n = src.length
    c = np.ones((1, 1, 1), dtype=np.complex128)
    out: list[np.ndarray] = []
    log_acc = 0.0
    dw = 0.0
    for i in range(n):
        t = op.zip_step(c, i, src.site_tensors[i])
        if i == n - 1:
            last = t.reshape(t.shape[0], t.shape[1], 1)
            out.append(last)
            log_acc += _extract_scale(out, n - 1)
        else:
            fr = svd_truncate(t, 2, spec)
            dw += fr.discarded_weight
            out.append(fr.left_factor)
            s = fr.singular_values
            nrm = float(np.linalg.norm(s))
            if nrm == 0.0:
                raise ShapeError("operator product vanished during zip-up")
            log_acc += math.log(nrm)
            c = (s / nrm)[:, np.newaxis, np.newaxis] * fr.right_factor
    dw2, log_scale = _sweep_truncate_rl(out, spec)
    return out, log_acc + log_scale, dw + dw2


def _variational_polish(
    op, src: MatrixProductState, guess: list[np.ndarray]
) -> tuple[list[np.ndarray], float]:
    """One round of single-site fitting of ``guess`` to the operator product.

    ``guess`` must be right-canonical; ranks stay fixed. Returns the refreshed
    right-canonical tensors and the log magnitude of the fitted overlap (the
    scale of the represented vector relative to the raw source tensors).
    """
    n = src.length
    phi = list(guess)
    rights: list[np.ndarray | None] = [None] * (n + 1)
    rights[n] = np.ones((1, 1, 1), dtype=np.complex128)
    for i in range(n - 1, 0, -1):
        rights[i] = op.env_right(rights[i + 1], i, phi[i], src.site_tensors[i])
    lefts: list[np.ndarray] = [np.ones((1, 1, 1), dtype=np.complex128)]
    for i in range(n - 1):
        new = op.local_update(lefts[i], i, src.site_tensors[i], rights[i + 1])
        q, _ = qr_orthonormalize(new, 2)
        phi[i] = q
        lefts.append(op.env_left(lefts[i], i, q, src.site_tensors[i]))
    right = np.ones((1, 1, 1), dtype=np.complex128)
    for i in range(n - 1, 0, -1):
        new = op.local_update(lefts[i], i, src.site_tensors[i], right)
        q, _ = qr_orthonormalize(new.transpose(2, 1, 0), 2)
        phi[i] = q.transpose(2, 1, 0)
        right = op.env_right(right, i, phi[i], src.site_tensors[i])
    new0 = op.local_update(np.ones((1, 1, 1), dtype=np.complex128), 0, src.site_tensors[0], right)
    phi[0] = new0
    log_scale = _extract_scale(phi, 0)
    return phi, log_scale


def _apply_operator(
    op, src: MatrixProductState, spec: TruncationSpec, extra_log_norm: float
) -> tuple[MatrixProductState, float]:
    if src.canonical_form != "right":
        src = canonicalize(src, "right")
    ts, log_acc, dw = _zip_apply(op, src, spec)
    if dw > VARIATIONAL_THRESHOLD:
        ts, log_acc = _variational_polish(op, src, ts)
    out = MatrixProductState(
        ts, src.physical_dim, "right", None, src.log_norm + extra_log_norm + log_acc
    )
    return out, dw


def apply_mpo(
    o: MatrixProductOperator, m: MatrixProductState, spec: TruncationSpec
) -> tuple[MatrixProductState, float]:
    """Apply ``o`` to ``m`` with zip-up compression to ``spec``.

    Returns the right-canonical result (scale in ``log_norm``) and the
    cumulative relative discarded weight of the zip stage. When that weight
    exceeds 1e-8, one round of variational sweeps at fixed ranks refines the
    tensors; the reported weight still refers to the zip truncations.
    """
    if o.length != m.length or o.physical_dim != m.physical_dim:
        raise ShapeError("operator and state have mismatched geometry")
    return _apply_operator(_DenseOp(o.site_tensors), m, spec, 0.0)


def apply_diagonal_mpo(
    g: MatrixProductState, m: MatrixProductState, spec: TruncationSpec
) -> tuple[MatrixProductState, float]:
    """Apply the diagonal operator ``W|x> = <x|g> |x>`` to ``m``.

    Equivalent to ``apply_mpo`` with the rank-4 operator ``delta_{x,x'}<x|g>``
    but reads the carrier tensors directly, which avoids materializing
    ``chi^2 d^2`` operator tensors in the replica pipelines.
    """
    if g.length != m.length or g.physical_dim != m.physical_dim:
        raise ShapeError("diagonal carrier and state have mismatched geometry")
    return _apply_operator(_DiagOp(g.site_tensors), m, spec, g.log_norm)


def identity_mpo(length: int, physical_dim: int = 2) -> MatrixProductOperator:
    eye = np.eye(physical_dim, dtype=np.complex128).reshape(1, physical_dim, physical_dim, 1)
    return MatrixProductOperator([eye.copy() for _ in range(length)], physical_dim)


# ---------------------------------------------------------------------------
# checkpoints


def save_mps(m: MatrixProductState, path: str | Path) -> None:
    """Write ``m`` to an .npz checkpoint; round trips are bit exact.

    Layout: scalar header fields (length, physical_dim, canonical_form,
    center with -1 for none, log_norm) plus one ``site_%05d`` array per site
    in chain order.
    """
    payload: dict[str, np.ndarray] = {
        "length": np.int64(m.length),
        "physical_dim": np.int64(m.physical_dim),
        "canonical_form": np.array(m.canonical_form),
        "center": np.int64(-1 if m.center is None else m.center),
        "log_norm": np.float64(m.log_norm),
    }
    for i, t in enumerate(m.site_tensors):
        payload[f"site_{i:05d}"] = np.asarray(t, dtype=np.complex128)
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_mps(path: str | Path) -> MatrixProductState:
    """Read a checkpoint written by :func:`save_mps`."""
    with np.load(path) as data:
        try:
            n = int(data["length"])
            tensors = [np.asarray(data[f"site_{i:05d}"], dtype=np.complex128) for i in range(n)]
            center = int(data["center"])
            state = MatrixProductState(
                site_tensors=tensors,
                physical_dim=int(data["physical_dim"]),
                canonical_form=str(data["canonical_form"]),
                center=None if center < 0 else center,
                log_norm=float(data["log_norm"]),
            )
        except KeyError as exc:
            raise ShapeError(f"malformed checkpoint {path}: missing {exc}") from exc
    state.validate()
    return state
