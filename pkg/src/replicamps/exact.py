"""Dense statevector oracle for small chains.

Everything here works on flat complex vectors of length ``2**L`` (site 0 is
the most significant bit, matching :func:`replicamps.mps.amplitude`) and is
deliberately independent of the MPS machinery, so it can arbitrate it.

Pauli bookkeeping uses mask pairs ``(x, z)`` over the chain: site j carries
X when only bit j of ``x`` is set, Z when only bit j of ``z`` is set, Y when
both are. The operator is the Hermitian ``i^{|x&z|} X^x Z^z``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
import scipy.linalg

from .tensors import ShapeError

__all__ = [
    "DENSE_LIMIT",
    "densify",
    "dense_hamiltonian",
    "evolve_exact",
    "pauli_expectation",
    "pauli_spectrum",
    "participation_entropy_dense",
    "sre_dense",
    "random_dense_state",
    "random_fixed_magnetization_state",
]

# Largest chain the dense paths accept; 2**14 amplitudes is still instant,
# the Pauli spectrum at that size is not.
DENSE_LIMIT = 14
EXPM_LIMIT = 10

# Single-site operators, index 0 = spin up.
ID2 = np.eye(2, dtype=np.complex128)
SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = {"I": ID2, "X": SX, "Y": SY, "Z": SZ}


def _check_length(length: int, limit: int = DENSE_LIMIT) -> None:
    if not 1 <= length <= limit:
        raise ShapeError(f"dense oracle limited to 1 <= L <= {limit}, got {length}")


def _vector_length(v: np.ndarray) -> int:
    size = v.shape[0]
    length = int(round(math.log2(size)))
    if v.ndim != 1 or 2**length != size:
        raise ShapeError(f"expected a 2**L vector, got shape {v.shape}")
    return length


def densify(m) -> np.ndarray:
    """Contract an MPS (physical_dim 2) into a dense vector, L <= 14."""
    if m.physical_dim != 2:
        raise ShapeError("densify expects physical dimension 2")
    _check_length(m.length)
    block = np.ones((1, 1), dtype=np.complex128)  # (configurations, bond)
    for t in m.site_tensors:
        block = np.einsum("xa,asb->xsb", block, t, optimize=True)
        block = block.reshape(-1, t.shape[2])
    return block[:, 0] * math.exp(m.log_norm)


# ---------------------------------------------------------------------------
# Hamiltonian and evolution


def dense_hamiltonian(model) -> np.ndarray:
    """Dense matrix of an XXZ chain model, L <= 10."""
    _check_length(model.length, EXPM_LIMIT)
    dim = 2**model.length
    h = np.zeros((dim, dim), dtype=np.complex128)

    def embed(ops: dict[int, np.ndarray]) -> np.ndarray:
        out = np.ones((1, 1), dtype=np.complex128)
        for j in range(model.length):
            out = np.kron(out, ops.get(j, ID2))
        return out

    sx, sy, sz = SX / 2, SY / 2, SZ / 2
    for i in range(model.length - 1):
        h += model.coupling * embed({i: sx, i + 1: sx})
        h += model.coupling * embed({i: sy, i + 1: sy})
        h += model.anisotropy * embed({i: sz, i + 1: sz})
    for i, f in enumerate(model.fields):
        if f != 0.0:
            h += f * embed({i: sz})
    return h


def apply_two_site_gate(v: np.ndarray, gate: np.ndarray, site: int, length: int) -> np.ndarray:
    """Apply a 4x4 gate to sites (site, site+1) of a dense vector."""
    shaped = v.reshape(2**site, 4, 2 ** (length - site - 2))
    g = gate.reshape(4, 4)
    return np.einsum("st,ltr->lsr", g, shaped, optimize=True).reshape(-1)


def evolve_exact(
    v: np.ndarray,
    model,
    t: float,
    dt_ref: float | None = None,
    order: int = 2,
    method: str = "trotter",
) -> np.ndarray:
    """Evolve a dense vector to time ``t``.

    ``method="trotter"`` replays the same even/odd gate splitting as the MPS
    path at the reference step ``dt_ref`` (default: one tenth of the model
    default 0.05). ``method="expm"`` uses the dense matrix exponential and is
    limited to L <= 10.
    """
    from .evolution import trotter_layers  # deferred to avoid a cycle

    length = _vector_length(v)
    if length != model.length:
        raise ShapeError(f"vector is L={length} but model is L={model.length}")
    if t < 0:
        raise ShapeError("negative times not supported")
    if method == "expm":
        _check_length(length, EXPM_LIMIT)
        h = dense_hamiltonian(model)
        return scipy.linalg.expm(-1j * t * h) @ v
    if method != "trotter":
        raise ValueError(f"unknown method {method!r}")
    if t == 0.0:
        return v.copy()
    if dt_ref is None:
        dt_ref = 0.005
    steps = max(1, round(t / dt_ref))
    dt = t / steps
    layers = trotter_layers(model, dt, order=order)
    out = v.copy()
    for _ in range(steps):
        for layer in layers:
            for site, gate in layer:
                out = apply_two_site_gate(out, gate, site, length)
    return out


# ---------------------------------------------------------------------------
# Pauli expectations


def _parity(masked: np.ndarray) -> np.ndarray:
    """Parity of set bits per entry, vectorized."""
    x = masked.copy()
    shift = 1
    while shift < 64:
        x ^= x >> shift
        shift *= 2
    return (x & 1).astype(np.int64)


def pauli_expectation(v: np.ndarray, labels: Sequence[str]) -> float:
    """<v| P |v> for a Pauli string given as letters, one bit-permutation pass."""
    length = _vector_length(v)
    if len(labels) != length:
        raise ShapeError(f"expected {length} letters, got {len(labels)}")
    xmask = 0
    zmask = 0
    ny = 0
    for j, letter in enumerate(labels):
        bit = 1 << (length - 1 - j)  # site 0 is the most significant bit
        if letter in ("X", "Y"):
            xmask |= bit
        if letter in ("Z", "Y"):
            zmask |= bit
        if letter == "Y":
            ny += 1
        if letter not in PAULIS:
            raise ShapeError(f"unknown Pauli letter {letter!r}")
    idx = np.arange(v.size, dtype=np.int64)
    signs = 1.0 - 2.0 * _parity(idx & zmask)
    val = ((-1j) ** ny) * np.sum(v.conj() * signs * v[idx ^ xmask])
    if abs(val.imag) > 1e-9 * max(1.0, abs(val.real)):
        raise ShapeError("Pauli expectation came out non-Hermitian; corrupt input?")
    return float(val.real)


def _popcount(a: np.ndarray) -> np.ndarray:
    x = a.copy()
    count = np.zeros_like(x)
    while np.any(x):
        count += x & 1
        x >>= 1
    return count


def _fwht(a: np.ndarray) -> np.ndarray:
    """Fast Walsh-Hadamard transform along the last axis (no normalization)."""
    out = a.copy()
    n = out.shape[-1]
    h = 1
    while h < n:
        out = out.reshape(out.shape[:-1] + (n // (2 * h), 2, h))
        top = out[..., 0, :] + out[..., 1, :]
        bot = out[..., 0, :] - out[..., 1, :]
        out = np.stack([top, bot], axis=-2).reshape(out.shape[:-3] + (n,))
        h *= 2
    return out


# (-i)^k for k mod 4; the Y phase per site after commuting Z past X once.
_Y_PHASES = np.array([1.0, -1.0j, -1.0, 1.0j], dtype=np.complex128)

SPECTRUM_LIMIT = 10


def pauli_spectrum(v: np.ndarray) -> np.ndarray:
    """All 4**L Pauli expectations of a pure state as an array ``spec[x, z]``.

    Row ``x`` fixes the X-mask, column ``z`` the Z-mask (Y where both bits
    are set). For each X-mask one Walsh-Hadamard transform of the correlation
    slice f_x(n) = conj(v[n]) v[n ^ x] enumerates every Z-mask at once:
    <P(x, z)> = (-i)^{|x & z|} sum_n (-1)^{z.n} f_x(n). Cost L 4^L instead of
    the 8^L of string-by-string passes; agrees with pauli_expectation.
    """
    length = _vector_length(v)
    if length > SPECTRUM_LIMIT:
        raise ShapeError(f"pauli_spectrum limited to L <= {SPECTRUM_LIMIT}")
    dim = v.size
    idx = np.arange(dim, dtype=np.int64)
    spec = np.empty((dim, dim), dtype=np.float64)
    for x in range(dim):
        g = _fwht(v.conj() * v[idx ^ x])
        phases = _Y_PHASES[_popcount(idx & x) & 3]
        spec[x] = (phases * g).real
    return spec


def participation_entropy_dense(v: np.ndarray, k: float) -> float:
    """Renyi-k participation entropy (nats) of a normalized dense state."""
    _require_normalized(v)
    if k <= 0:
        raise ShapeError(f"Renyi index must be positive, got {k}")
    p = np.abs(v) ** 2
    p = p[p > 0.0]
    if abs(k - 1.0) < 1e-12:
        return float(-(p * np.log(p)).sum())
    return float(np.log((p**k).sum()) / (1.0 - k))


def sre_dense(v: np.ndarray, n: float) -> float:
    """Stabilizer Renyi entropy M_n (nats) of a normalized dense state."""
    _require_normalized(v)
    if n <= 0:
        raise ShapeError(f"Renyi index must be positive, got {n}")
    length = _vector_length(v)
    spec = pauli_spectrum(v)
    xi = (spec.reshape(-1) ** 2) / v.size  # probabilities, sum to 1 for pure states
    xi = xi[xi > 0.0]
    if abs(n - 1.0) < 1e-12:
        return float(-(xi * np.log(xi)).sum() - length * math.log(2.0))
    return float(np.log((xi**n).sum()) / (1.0 - n) - length * math.log(2.0))


def _require_normalized(v: np.ndarray, tol: float = 1e-8) -> None:
    nrm = float(np.linalg.norm(v))
    if abs(nrm - 1.0) > tol:
        raise ShapeError(f"state norm {nrm} deviates from 1 beyond {tol}")


# ---------------------------------------------------------------------------
# random states


def random_dense_state(
    length: int, rng: np.random.Generator | int | None = None
) -> np.ndarray:
    _check_length(length)
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    v = gen.standard_normal(2**length) + 1j * gen.standard_normal(2**length)
    return v / np.linalg.norm(v)


def random_fixed_magnetization_state(
    length: int, n_down: int, rng: np.random.Generator | int | None = None
) -> np.ndarray:
    """Random state supported on the fixed-magnetization sector with ``n_down`` flips."""
    _check_length(length)
    if not 0 <= n_down <= length:
        raise ShapeError(f"n_down must lie in [0, {length}]")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    idx = np.arange(2**length, dtype=np.int64)
    mask = _popcount(idx) == n_down
    v = np.zeros(2**length, dtype=np.complex128)
    amplitudes = gen.standard_normal(int(mask.sum())) + 1j * gen.standard_normal(int(mask.sum()))
    v[mask] = amplitudes
    return v / np.linalg.norm(v)
