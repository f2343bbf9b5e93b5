"""Shared helpers for the test suite: dense cross-checks and canonical-form asserts."""

from __future__ import annotations

import math

import numpy as np

from replicamps.mps import MatrixProductOperator, MatrixProductState, inner_log


def dense_mpo_matrix(o: MatrixProductOperator) -> np.ndarray:
    """Contract an MPO into its full 2^L x 2^L matrix (test oracle)."""
    block = np.ones((1, 1, 1), dtype=np.complex128)  # (rows, cols, bond)
    for t in o.site_tensors:
        block = np.einsum("xya,astb->xsytb", block, t, optimize=True)
        block = block.reshape(
            block.shape[0] * block.shape[1], block.shape[2] * block.shape[3], -1
        )
    return block[:, :, 0]


def random_mpo(
    length: int, bond: int, physical_dim: int = 2, rng=None
) -> MatrixProductOperator:
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    dims = [1] + [bond] * (length - 1) + [1]
    tensors = []
    for i in range(length):
        shape = (dims[i], physical_dim, physical_dim, dims[i + 1])
        t = gen.standard_normal(shape) + 1j * gen.standard_normal(shape)
        tensors.append(t / np.sqrt(np.prod(shape)))
    return MatrixProductOperator(tensors, physical_dim)


def fidelity_sq(a: MatrixProductState, b: MatrixProductState) -> float:
    """|<a|b>|^2 / (<a|a><b|b>), stable for tiny norms."""
    lab, _ = inner_log(a, b)
    laa, _ = inner_log(a, a)
    lbb, _ = inner_log(b, b)
    return math.exp(2.0 * lab - laa - lbb)


def norm_sq_log(m: MatrixProductState) -> float:
    val, _ = inner_log(m, m)
    return val


def assert_right_canonical(m: MatrixProductState, tol: float = 1e-10) -> None:
    for i, t in enumerate(m.site_tensors):
        gram = np.einsum("asb,csb->ac", t, t.conj())
        assert np.allclose(gram, np.eye(t.shape[0]), atol=tol), f"site {i} not right-isometric"


def assert_left_canonical(m: MatrixProductState, tol: float = 1e-10) -> None:
    for i, t in enumerate(m.site_tensors):
        gram = np.einsum("asb,asc->bc", t.conj(), t)
        assert np.allclose(gram, np.eye(t.shape[2]), atol=tol), f"site {i} not left-isometric"


def ghz_mps(length: int) -> MatrixProductState:
    first = np.zeros((1, 2, 2), dtype=np.complex128)
    first[0, 0, 0] = first[0, 1, 1] = 1.0 / math.sqrt(2.0)
    mid = np.zeros((2, 2, 2), dtype=np.complex128)
    mid[0, 0, 0] = mid[1, 1, 1] = 1.0
    last = np.zeros((2, 2, 1), dtype=np.complex128)
    last[0, 0, 0] = last[1, 1, 0] = 1.0
    tensors = [first] + [mid.copy() for _ in range(length - 2)] + [last]
    return MatrixProductState(tensors, 2)
