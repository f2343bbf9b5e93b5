"""Perfect sampling from canonical MPS and Monte-Carlo entropy estimators.

Right-canonical tensors make the marginal of any prefix the norm of the
partially contracted chain, so strings come out site by site from exact
conditionals with no Markov chain and no burn-in. The same sweep over the
4-dimensional Pauli basis draws Pauli strings from Xi. Entropy estimators
average powers of the sampled probabilities; averages sit in front of the
log, so the (small-sample) log bias is estimated by the jackknife and
reported next to the error bar instead of silently mixed into it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .mps import MatrixProductState, canonicalize
from .stabilizer import PauliMps, PauliString, pauli_mps
from .tensors import ShapeError, TruncationSpec

__all__ = [
    "CanonicalFormError",
    "SampleBatch",
    "estimate_pe",
    "estimate_sre",
    "sample_bitstring",
    "sample_pauli",
]

# conditional mass below this fraction of a site's total counts as an exact
# zero (symmetry-forbidden branch), keeping log Pi finite
ZERO_BRANCH_FLOOR = 1e-14

CONDITIONAL_TOL = 1e-8


class CanonicalFormError(RuntimeError):
    """The sampling sweep found conditionals that do not sum to one."""


@dataclass(frozen=True)
class SampleBatch:
    """Draws with their probabilities plus the post-processed estimator.

    ``log_bias`` is the jackknife estimate of the bias introduced by taking
    the log of a sample mean; it is reported, not subtracted. ``seed`` is -1
    when an externally constructed generator was used.
    """

    entries: tuple[tuple[Any, float], ...]
    estimator_value: float
    standard_error: float
    log_bias: float
    n_samples: int
    seed: int

    def __post_init__(self) -> None:
        if self.standard_error < 0.0:
            raise ShapeError("standard error cannot be negative")
        if any(not 0.0 < p <= 1.0 + 1e-12 for _, p in self.entries):
            raise ShapeError("sampled probabilities must lie in (0, 1]")


def _resolve_rng(rng: int | np.random.Generator) -> tuple[np.random.Generator, int]:
    if isinstance(rng, (int, np.integer)):
        return np.random.default_rng(int(rng)), int(rng)
    if isinstance(rng, np.random.Generator):
        return rng, -1
    raise ShapeError(f"rng must be an integer seed or a numpy Generator, got {type(rng)!r}")


def _require_normalized(m: MatrixProductState) -> None:
    if abs(m.log_norm) > CONDITIONAL_TOL:
        raise CanonicalFormError("perfect sampling needs a normalized state")


def _draw_many(m: MatrixProductState, count: int, gen: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized autoregressive draws: (count, L) outcomes and their probabilities.

    Only the tensors matter here: conditionals normalize themselves, so the
    sampled distribution is that of the unit-normalized state regardless of
    ``log_norm``. Callers that promise Born probabilities of the state as a
    whole must gate on the norm themselves.
    """
    if m.canonical_form != "right":
        raise CanonicalFormError("perfect sampling needs a right-canonical state")
    d = m.physical_dim
    w = np.ones((count, 1), dtype=np.complex128)  # unit-norm prefix vectors
    outcomes = np.empty((count, m.length), dtype=np.int64)
    log_pi = np.zeros(count, dtype=np.float64)
    rows = np.arange(count)
    for j, a in enumerate(m.site_tensors):
        cand = np.einsum("nb,bsc->nsc", w, a, optimize=True)
        q = np.einsum("nsc,nsc->ns", cand, cand.conj(), optimize=True).real
        total = q.sum(axis=1)
        if np.any(np.abs(total - 1.0) > CONDITIONAL_TOL):
            raise CanonicalFormError(
                f"conditionals at site {j} sum to {total.min():.3e}..{total.max():.3e}, not 1; "
                "tensors are not the isometries the canonical form promises"
            )
        kept = np.where(q >= ZERO_BRANCH_FLOOR * total[:, np.newaxis], q, 0.0)
        cum = np.cumsum(kept, axis=1)
        u = gen.random(count) * cum[:, -1]
        choice = np.minimum((u[:, np.newaxis] >= cum).sum(axis=1), d - 1)
        chosen_q = q[rows, choice]
        outcomes[:, j] = choice
        log_pi += np.log(chosen_q) - np.log(total)
        w = cand[rows, choice, :] / np.sqrt(chosen_q)[:, np.newaxis]
    return outcomes, np.exp(log_pi)


def sample_bitstring(
    m: MatrixProductState, rng: int | np.random.Generator
) -> tuple[tuple[int, ...], float]:
    """One exact draw from |<x|m>|^2; returns the string and its probability."""
    gen, _ = _resolve_rng(rng)
    _require_normalized(m)
    outcomes, probs = _draw_many(m, 1, gen)
    return tuple(int(b) for b in outcomes[0]), float(probs[0])


def sample_pauli(p: PauliMps, rng: int | np.random.Generator) -> tuple[PauliString, float]:
    """One exact draw from the Pauli distribution Xi of a Pauli-basis MPS.

    A truncated Pauli vector is sampled as its renormalized self; the
    construction's discarded weight bounds the distance to the true Xi.
    """
    gen, _ = _resolve_rng(rng)
    outcomes, probs = _draw_many(p.state, 1, gen)
    return PauliString(tuple(int(a) for a in outcomes[0])), float(probs[0])


def _jackknife_log_mean(values: np.ndarray, scale: float) -> tuple[float, float, float]:
    """Estimator scale*log(mean values) with delete-one error and log bias."""
    count = values.size
    full = float(values.mean())
    theta = scale * math.log(full)
    loo = (values.sum() - values) / (count - 1)
    theta_i = scale * np.log(loo)
    theta_bar = float(theta_i.mean())
    err = math.sqrt((count - 1) / count * float(((theta_i - theta_bar) ** 2).sum()))
    bias = (count - 1) * (theta_bar - theta)
    return theta, err, bias


def _check_batch_args(index: float, n_samples: int, smallest: float) -> None:
    if index < smallest:
        raise ShapeError(f"estimator index must be >= {smallest}, got {index}")
    if n_samples < 2:
        raise ShapeError("need at least two samples for a jackknife error")


def estimate_pe(
    m: MatrixProductState, k: float, n_samples: int, rng: int | np.random.Generator
) -> SampleBatch:
    """Monte-Carlo participation entropy: mean of Pi^{k-1} behind a log.

    Accepts any real k >= 1; k = 1 averages -log Pi directly (Shannon),
    which is linear in the samples, so its log bias is identically zero.
    """
    _check_batch_args(k, n_samples, 1.0)
    gen, seed = _resolve_rng(rng)
    if m.canonical_form != "right":
        m = canonicalize(m, "right")
    _require_normalized(m)
    outcomes, probs = _draw_many(m, n_samples, gen)
    entries = tuple(
        (tuple(int(b) for b in row), float(p)) for row, p in zip(outcomes, probs)
    )
    if k == 1:
        values = -np.log(probs)
        est = float(values.mean())
        err = float(values.std(ddof=1)) / math.sqrt(n_samples)
        bias = 0.0
    else:
        est, err, bias = _jackknife_log_mean(probs ** (k - 1.0), 1.0 / (1.0 - k))
    return SampleBatch(entries, est, err, bias, n_samples, seed)


def estimate_sre(
    m: MatrixProductState,
    n: float,
    n_samples: int,
    rng: int | np.random.Generator,
    spec: TruncationSpec | None = None,
) -> SampleBatch:
    """Monte-Carlo stabilizer Renyi entropy from Pauli-string draws.

    Builds the Pauli-basis MPS (to ``spec`` or the default cap) and samples
    Xi; the estimator subtracts the L ln 2 offset so stabilizer states sit
    at exactly zero with zero variance.
    """
    _check_batch_args(n, n_samples, 1.0)
    gen, seed = _resolve_rng(rng)
    p = pauli_mps(m, spec)
    outcomes, probs = _draw_many(p.state, n_samples, gen)
    entries = tuple(
        (PauliString(tuple(int(a) for a in row)), float(prob))
        for row, prob in zip(outcomes, probs)
    )
    offset = m.length * math.log(2.0)
    if n == 1:
        values = -np.log(probs)
        est = float(values.mean()) - offset
        err = float(values.std(ddof=1)) / math.sqrt(n_samples)
        bias = 0.0
    else:
        est, err, bias = _jackknife_log_mean(probs ** (n - 1.0), 1.0 / (1.0 - n))
        est -= offset
    return SampleBatch(entries, est, err, bias, n_samples, seed)
