"""Pauli-basis MPS, replica SRE, and the diagonal sector weight."""

import math

import numpy as np
import pytest

from replicamps.evolution import XXZModel, domain_wall_state, evolve_to
from replicamps.exact import densify, pauli_expectation, pauli_spectrum, sre_dense
from replicamps.mps import MatrixProductState, amplitude, from_product_state, inner_log, random_mps
from replicamps.participation import participation_entropy
from replicamps.stabilizer import (
    PAULI_BOND_CAP,
    PauliString,
    default_pauli_spec,
    pauli_mps,
    sre_exact,
    stabilizer_renyi_entropy,
    zeta_z,
)
from replicamps.tensors import ShapeError, TruncationSpec

from util import ghz_mps

LOSSLESS = TruncationSpec(max_rank=None, weight_cutoff=0.0)

H_GATE = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
S_GATE = np.diag([1.0, 1.0j]).astype(complex)


def single_qubit(theta):
    t = np.array([[[math.cos(theta)], [math.sin(theta)]]], dtype=complex).reshape(1, 2, 1)
    return MatrixProductState([t], 2)


def bell_pair():
    t0 = np.zeros((1, 2, 2), dtype=complex)
    t0[0, 0, 0] = t0[0, 1, 1] = 1.0
    t1 = np.zeros((2, 2, 1), dtype=complex)
    t1[0, 1, 0] = t1[1, 0, 0] = 1.0 / math.sqrt(2)
    return MatrixProductState([t0, t1], 2)


def concat(a, b):
    """Tensor product of two right-canonical normalized chains."""
    return MatrixProductState(list(a.site_tensors) + list(b.site_tensors), 2, "right", None, 0.0)


def pauli_components(p):
    """All 4^L components of a Pauli-basis MPS, indexed by label tuples."""
    length = p.state.length
    out = {}
    for code in range(4**length):
        labels = tuple((code >> (2 * (length - 1 - j))) & 3 for j in range(length))
        out[labels] = amplitude(p.state, labels)
    return out


def masks_for(labels):
    x = z = 0
    for j, a in enumerate(labels):
        bit = 1 << (len(labels) - 1 - j)
        if a in (1, 2):
            x |= bit
        if a in (2, 3):
            z |= bit
    return x, z


class TestPauliString:
    def test_letters_round_trip(self):
        s = PauliString.from_letters("IXZy")
        assert s.labels == (0, 1, 3, 2)
        assert str(s) == "IXZY"
        assert len(s) == 4
        assert list(s) == [0, 1, 3, 2]
        assert s.weight == 3

    def test_validation(self):
        with pytest.raises(ShapeError):
            PauliString((0, 4))
        with pytest.raises(ShapeError):
            PauliString.from_letters("IXQ")


class TestPauliMps:
    def test_single_qubit_basis_state(self):
        p = pauli_mps(from_product_state([0]))
        comps = pauli_components(p)
        root = 1.0 / math.sqrt(2)
        assert comps[(0,)] == pytest.approx(root, abs=1e-12)
        assert comps[(1,)] == pytest.approx(0.0, abs=1e-12)
        assert comps[(2,)] == pytest.approx(0.0, abs=1e-12)
        assert comps[(3,)] == pytest.approx(root, abs=1e-12)

    def test_plus_state(self):
        t = np.full((1, 2, 1), 1.0 / math.sqrt(2), dtype=complex)
        p = pauli_mps(MatrixProductState([t], 2))
        comps = pauli_components(p)
        root = 1.0 / math.sqrt(2)
        assert comps[(0,)] == pytest.approx(root, abs=1e-12)
        assert comps[(1,)] == pytest.approx(root, abs=1e-12)
        assert comps[(2,)] == pytest.approx(0.0, abs=1e-12)
        assert comps[(3,)] == pytest.approx(0.0, abs=1e-12)

    def test_components_match_dense_expectations(self):
        m = random_mps(6, 4, rng=8)
        v = densify(m)
        spec_table = pauli_spectrum(v)
        scale = 1.0 / math.sqrt(2**6)
        p = pauli_mps(m, LOSSLESS)
        comps = pauli_components(p)
        for labels, got in comps.items():
            x, z = masks_for(labels)
            assert got == pytest.approx(spec_table[x, z] * scale, abs=1e-10), labels
        assert abs(p.state.log_norm) < 1e-8  # pure-state Pauli vector has norm 1
        assert p.discarded_weight == 0.0
        assert p.source_bond == m.max_bond

    def test_norm_one_for_pure_states(self):
        m = random_mps(7, 5, rng=21)
        p = pauli_mps(m, LOSSLESS)
        log_n2, _ = inner_log(p.state, p.state)
        assert log_n2 == pytest.approx(0.0, abs=1e-8)

    def test_default_spec_caps_bond(self):
        m = random_mps(6, 4, rng=2)
        spec = default_pauli_spec(m)
        assert spec.max_rank == 16
        assert default_pauli_spec(random_mps(4, 2, rng=0)).max_rank == 4
        big = random_mps(6, 8, rng=1)
        assert default_pauli_spec(big).max_rank == min(64, PAULI_BOND_CAP)
        p = pauli_mps(m, spec)
        assert p.max_bond <= 16

    def test_truncation_reported(self):
        m = random_mps(8, 8, rng=13)
        p = pauli_mps(m, TruncationSpec(max_rank=4, weight_cutoff=0.0))
        assert p.discarded_weight > 0.0
        assert p.state.log_norm < 0.0  # lost weight shows up as norm loss
        assert p.max_bond <= 4

    def test_rejects_wrong_physical_dim_and_norm(self):
        m = random_mps(3, 2, rng=5)
        off = MatrixProductState(m.site_tensors, 2, m.canonical_form, m.center, 0.2)
        with pytest.raises(ShapeError):
            pauli_mps(off)
        p = pauli_mps(m)
        with pytest.raises(ShapeError):
            pauli_mps(p.state)


class TestStabilizerRenyi:
    def test_basis_product_states_have_no_magic(self):
        for bits in ([0, 0, 0], [1, 0, 1], [1, 1, 1, 1, 0]):
            value, diag = stabilizer_renyi_entropy(from_product_state(bits))
            assert value == pytest.approx(0.0, abs=1e-10)
            assert diag.cumulative_discarded_weight == pytest.approx(0.0, abs=1e-12)

    def test_pi_over_8_qubit(self):
        value, _ = stabilizer_renyi_entropy(single_qubit(math.pi / 8), 2, LOSSLESS)
        assert value == pytest.approx(math.log(4.0 / 3.0), abs=1e-10)

    def test_bell_and_ghz_are_stabilizer_states(self):
        for state in (bell_pair(), ghz_mps(3), ghz_mps(5)):
            value, _ = stabilizer_renyi_entropy(state, 2, LOSSLESS)
            assert value == pytest.approx(0.0, abs=1e-10)

    @pytest.mark.parametrize("n", [2, 3])
    def test_matches_dense_oracle(self, n):
        m = random_mps(6, 4, rng=40 + n)
        value, _ = stabilizer_renyi_entropy(m, n, LOSSLESS)
        assert value == pytest.approx(sre_dense(densify(m), n), abs=1e-8)

    def test_additive_on_products(self):
        a = random_mps(3, 2, rng=50)
        b = random_mps(4, 3, rng=51)
        whole, _ = stabilizer_renyi_entropy(concat(a, b), 2, LOSSLESS)
        part_a, _ = stabilizer_renyi_entropy(a, 2, LOSSLESS)
        part_b, _ = stabilizer_renyi_entropy(b, 2, LOSSLESS)
        assert whole == pytest.approx(part_a + part_b, abs=1e-8)

    def test_nonnegative_on_random_states(self):
        for seed in range(6):
            m = random_mps(5, 4, rng=60 + seed)
            value, _ = stabilizer_renyi_entropy(m, 2, LOSSLESS)
            assert value >= -1e-10

    def test_index_validation(self):
        m = from_product_state([0, 1])
        for bad in (1, 0, 2.5):
            with pytest.raises(ShapeError):
                stabilizer_renyi_entropy(m, bad)

    def test_evolved_state_against_dense(self):
        model = XXZModel(length=6, anisotropy=0.8)
        m = evolve_to(domain_wall_state(6), model, 1.2, LOSSLESS, dt=0.05)
        value, _ = stabilizer_renyi_entropy(m, 2, LOSSLESS)
        assert value == pytest.approx(sre_dense(densify(m), 2), abs=1e-8)
        assert value > 0.05  # dynamics generates magic from the stabilizer wall


class TestCliffordInvariance:
    def _apply_1q(self, v, u, j, length):
        shaped = v.reshape(2**j, 2, -1)
        return np.einsum("st,ltr->lsr", u, shaped, optimize=True).reshape(-1)

    def _apply_cnot(self, v, control, target, length):
        idx = np.arange(v.size)
        ctrl = (idx >> (length - 1 - control)) & 1
        return v[idx ^ (ctrl << (length - 1 - target))]

    def test_dense_sre_invariant_under_clifford_circuits(self):
        rng = np.random.default_rng(3)
        length = 5
        v = rng.normal(size=2**length) + 1j * rng.normal(size=2**length)
        v /= np.linalg.norm(v)
        before = sre_dense(v, 2)
        for _ in range(40):
            kind = rng.integers(3)
            if kind == 0:
                v = self._apply_1q(v, H_GATE, int(rng.integers(length)), length)
            elif kind == 1:
                v = self._apply_1q(v, S_GATE, int(rng.integers(length)), length)
            else:
                c, t = rng.choice(length, size=2, replace=False)
                v = self._apply_cnot(v, int(c), int(t), length)
        assert sre_dense(v, 2) == pytest.approx(before, abs=1e-8)

    def test_exact_reexport(self):
        v = np.zeros(4, dtype=complex)
        v[0] = 1.0
        assert sre_exact(v, 2) == pytest.approx(0.0, abs=1e-12)


class TestZetaZ:
    def test_bell_pair(self):
        z = zeta_z(bell_pair(), LOSSLESS)
        assert z == pytest.approx(0.5, abs=1e-10)
        s2, _ = participation_entropy(bell_pair(), 2, LOSSLESS)
        assert -math.log(z) == pytest.approx(s2, abs=1e-10)

    def test_basis_state(self):
        assert zeta_z(from_product_state([1, 0, 1])) == pytest.approx(1.0, abs=1e-10)

    def test_fixed_sector_identity_on_evolved_wall(self):
        # magnetization-conserving evolution keeps the state in one Z sector,
        # where the diagonal Pauli weight is exactly the inverse participation
        model = XXZModel(length=8, anisotropy=1.5)
        m = evolve_to(domain_wall_state(8), model, 2.0, LOSSLESS, dt=0.05)
        z = zeta_z(m, LOSSLESS)
        s2, _ = participation_entropy(m, 2, LOSSLESS)
        assert -math.log(z) == pytest.approx(s2, abs=1e-8)

    def test_matches_dense_spectrum_row(self):
        m = random_mps(5, 4, rng=17)
        spec_table = pauli_spectrum(densify(m))
        want = float(np.sum(spec_table[0, :] ** 2)) / 2**5
        assert zeta_z(m, LOSSLESS) == pytest.approx(want, abs=1e-10)

    def test_single_string_expectation_helper(self):
        # letters round trip through the dense oracle for a handful of strings
        m = random_mps(4, 3, rng=23)
        v = densify(m)
        p = pauli_mps(m, LOSSLESS)
        for word in ("IIII", "ZIZI", "XYZI", "YYXZ"):
            s = PauliString.from_letters(word)
            got = amplitude(p.state, s.labels) * math.sqrt(2**4)
            assert got == pytest.approx(pauli_expectation(v, str(s)), abs=1e-10)
