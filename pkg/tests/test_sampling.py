"""Perfect sampling draws and Monte-Carlo entropy estimators."""

import math

import numpy as np
import pytest
from scipy import stats

from replicamps.exact import densify, participation_entropy_dense, sre_dense
from replicamps.mps import MatrixProductState, amplitude, from_product_state, random_mps
from replicamps.sampling import (
    CanonicalFormError,
    SampleBatch,
    estimate_pe,
    estimate_sre,
    sample_bitstring,
    sample_pauli,
)
from replicamps.stabilizer import pauli_mps
from replicamps.tensors import ShapeError, TruncationSpec

LOSSLESS = TruncationSpec(max_rank=None, weight_cutoff=0.0)


def uniform_state(length):
    t = np.full((1, 2, 1), 1.0 / math.sqrt(2), dtype=complex)
    return MatrixProductState([t.copy() for _ in range(length)], 2, "right", None, 0.0)


def single_qubit(theta):
    t = np.array([math.cos(theta), math.sin(theta)], dtype=complex).reshape(1, 2, 1)
    return MatrixProductState([t], 2, "right", None, 0.0)


def bits_to_index(bits):
    idx = 0
    for b in bits:
        idx = (idx << 1) | b
    return idx


def lumped_chisquare(counts, probs, n_draws, min_expected=10.0):
    """Chi-square p-value with small-expectation bins lumped into one."""
    order = np.argsort(probs)[::-1]
    f_obs, f_exp = [], []
    rest_obs, rest_exp = 0.0, 0.0
    for i in order:
        expected = probs[i] * n_draws
        if expected >= min_expected:
            f_obs.append(counts[i])
            f_exp.append(expected)
        else:
            rest_obs += counts[i]
            rest_exp += expected
    if rest_exp > 0:
        f_obs.append(rest_obs)
        f_exp.append(rest_exp)
    return stats.chisquare(f_obs, f_exp).pvalue


class TestSampleBitstring:
    def test_product_state_deterministic(self):
        m = from_product_state([0, 1, 1, 0])
        for seed in range(5):
            bits, prob = sample_bitstring(m, seed)
            assert bits == (0, 1, 1, 0)
            assert prob == pytest.approx(1.0, abs=1e-12)

    def test_probability_matches_amplitude(self):
        m = random_mps(8, 6, rng=2)
        gen = np.random.default_rng(0)
        for _ in range(50):
            bits, prob = sample_bitstring(m, gen)
            assert prob == pytest.approx(abs(amplitude(m, bits)) ** 2, abs=1e-10)

    def test_seed_reproducibility(self):
        m = random_mps(6, 4, rng=9)
        assert sample_bitstring(m, 123) == sample_bitstring(m, 123)

    def test_bell_frequencies(self):
        t0 = np.zeros((1, 2, 2), dtype=complex)
        t0[0, 0, 0] = t0[0, 1, 1] = 1.0 / math.sqrt(2)
        t1 = np.zeros((2, 2, 1), dtype=complex)
        t1[0, 1, 0] = t1[1, 0, 0] = 1.0
        bell = MatrixProductState([t0, t1], 2, "right", None, 0.0)
        batch = estimate_pe(bell, 2, 10_000, 5)
        seen = {bits for bits, _ in batch.entries}
        assert seen == {(0, 1), (1, 0)}
        freq = sum(1 for bits, _ in batch.entries if bits == (0, 1)) / batch.n_samples
        assert abs(freq - 0.5) < 0.015  # 3 sigma for 10^4 fair draws

    def test_empirical_distribution_chi_square(self):
        m = random_mps(6, 5, rng=31)
        probs = np.abs(densify(m)) ** 2
        batch = estimate_pe(m, 2, 20_000, 17)
        counts = np.zeros(64)
        for bits, _ in batch.entries:
            counts[bits_to_index(bits)] += 1
        assert lumped_chisquare(counts, probs, batch.n_samples) > 0.001

    def test_rejects_bad_inputs(self):
        m = random_mps(4, 3, rng=0)
        sloppy = MatrixProductState(m.site_tensors, 2, "none", None, 0.0)
        with pytest.raises(CanonicalFormError):
            sample_bitstring(sloppy, 0)
        scaled = MatrixProductState(m.site_tensors, 2, "right", None, 0.2)
        with pytest.raises(CanonicalFormError):
            sample_bitstring(scaled, 0)
        with pytest.raises(ShapeError):
            sample_bitstring(m, "not an rng")

    def test_conditional_check_catches_fake_isometries(self):
        rng = np.random.default_rng(4)
        ts = [
            2.0 * (rng.normal(size=(1, 2, 2)) + 1j * rng.normal(size=(1, 2, 2))),
            rng.normal(size=(2, 2, 1)) + 1j * rng.normal(size=(2, 2, 1)),
        ]
        fake = MatrixProductState(ts, 2, "right", None, 0.0)
        with pytest.raises(CanonicalFormError, match="conditionals"):
            sample_bitstring(fake, 0)


class TestEstimatePe:
    def test_product_state_zero_variance(self):
        batch = estimate_pe(from_product_state([1, 0, 1]), 2, 50, 0)
        assert batch.estimator_value == 0.0
        assert batch.standard_error == 0.0
        assert batch.log_bias == 0.0

    def test_uniform_superposition_exact(self):
        batch = estimate_pe(uniform_state(4), 2, 100, 1)
        assert batch.estimator_value == pytest.approx(4 * math.log(2), abs=1e-12)
        assert batch.standard_error == pytest.approx(0.0, abs=1e-12)

    def test_random_state_within_three_sigma(self):
        m = random_mps(8, 6, rng=42)
        exact = participation_entropy_dense(densify(m), 2)
        batch = estimate_pe(m, 2, 30_000, 7)
        assert abs(batch.estimator_value - exact) < 3 * batch.standard_error + 1e-6

    def test_shannon_index(self):
        m = random_mps(7, 4, rng=11)
        exact = participation_entropy_dense(densify(m), 1)
        batch = estimate_pe(m, 1, 20_000, 3)
        assert batch.log_bias == 0.0
        assert abs(batch.estimator_value - exact) < 3 * batch.standard_error + 1e-6

    def test_error_shrinks_with_samples(self):
        m = random_mps(6, 4, rng=19)
        small = estimate_pe(m, 2, 500, 23)
        large = estimate_pe(m, 2, 32_000, 29)
        assert large.standard_error < small.standard_error
        ratio = small.standard_error / large.standard_error
        assert 2.0 < ratio < 32.0  # expect ~8 for a 64x sample budget

    def test_argument_validation(self):
        m = from_product_state([0, 1])
        with pytest.raises(ShapeError):
            estimate_pe(m, 2, 1, 0)
        with pytest.raises(ShapeError):
            estimate_pe(m, 0.5, 10, 0)

    def test_seed_bookkeeping(self):
        m = from_product_state([0, 1])
        assert estimate_pe(m, 2, 5, 77).seed == 77
        assert estimate_pe(m, 2, 5, np.random.default_rng(0)).seed == -1

    def test_fixed_seed_is_bit_stable(self):
        m = random_mps(5, 4, rng=6)
        a = estimate_pe(m, 3, 200, 13)
        b = estimate_pe(m, 3, 200, 13)
        assert a.entries == b.entries
        assert a.estimator_value == b.estimator_value


class TestSamplePauli:
    def test_basis_state_draws_only_diagonal_strings(self):
        p = pauli_mps(from_product_state([0, 0, 0]), LOSSLESS)
        gen = np.random.default_rng(8)
        for _ in range(30):
            string, prob = sample_pauli(p, gen)
            assert set(string.labels) <= {0, 3}
            assert prob == pytest.approx(1.0 / 8.0, abs=1e-10)

    def test_plus_state_draws_identity_or_x(self):
        t = np.full((1, 2, 1), 1.0 / math.sqrt(2), dtype=complex)
        plus = MatrixProductState([t], 2, "right", None, 0.0)
        batch = estimate_sre(plus, 2, 2_000, 3, LOSSLESS)
        labels = [entry[0].labels[0] for entry in batch.entries]
        assert set(labels) <= {0, 1}
        freq = labels.count(0) / len(labels)
        assert abs(freq - 0.5) < 0.034  # 3 sigma

    def test_empirical_xi_chi_square(self):
        from replicamps.exact import pauli_spectrum

        m = random_mps(4, 3, rng=14)
        table = pauli_spectrum(densify(m)) ** 2 / 2**4
        # labels (I, X, Y, Z) map to (x, z) bit pairs (0,0), (1,0), (1,1), (0,1)
        xi = np.zeros(256)
        for code in range(256):
            labels = [(code >> (2 * (3 - j))) & 3 for j in range(4)]
            x = z = 0
            for j, a in enumerate(labels):
                if a in (1, 2):
                    x |= 1 << (3 - j)
                if a in (2, 3):
                    z |= 1 << (3 - j)
            xi[code] = table[x, z]
        batch = estimate_sre(m, 2, 20_000, 21, LOSSLESS)
        counts = np.zeros(256)
        for string, _ in batch.entries:
            code = 0
            for a in string.labels:
                code = (code << 2) | a
            counts[code] += 1
        assert lumped_chisquare(counts, xi, batch.n_samples) > 0.001


class TestEstimateSre:
    def test_stabilizer_state_zero_variance(self):
        batch = estimate_sre(from_product_state([0, 1, 0, 1]), 2, 100, 0)
        assert batch.estimator_value == pytest.approx(0.0, abs=1e-10)
        assert batch.standard_error == pytest.approx(0.0, abs=1e-12)

    def test_pi_over_8_qubit(self):
        batch = estimate_sre(single_qubit(math.pi / 8), 2, 10_000, 5)
        assert abs(batch.estimator_value - math.log(4.0 / 3.0)) < 3 * batch.standard_error + 1e-6

    @pytest.mark.parametrize("n", [1, 2])
    def test_random_state_within_three_sigma(self, n):
        m = random_mps(5, 4, rng=55)
        exact = sre_dense(densify(m), n)
        batch = estimate_sre(m, n, 30_000, 9, LOSSLESS)
        assert abs(batch.estimator_value - exact) < 3 * batch.standard_error + 1e-6

    def test_truncated_pauli_vector_still_samples(self):
        m = random_mps(8, 8, rng=3)
        batch = estimate_sre(m, 2, 500, 1, TruncationSpec(max_rank=8, weight_cutoff=0.0))
        assert batch.n_samples == 500
        assert all(0.0 < prob <= 1.0 for _, prob in batch.entries)

    def test_argument_validation(self):
        m = from_product_state([0, 1])
        with pytest.raises(ShapeError):
            estimate_sre(m, 2, 1, 0)
        with pytest.raises(ShapeError):
            estimate_sre(m, 0.25, 10, 0)


class TestSampleBatchType:
    def test_field_validation(self):
        with pytest.raises(ShapeError):
            SampleBatch(((tuple([0]), 1.0),), 0.0, -1.0, 0.0, 1, 0)
        with pytest.raises(ShapeError):
            SampleBatch(((tuple([0]), 0.0),), 0.0, 0.0, 0.0, 1, 0)
