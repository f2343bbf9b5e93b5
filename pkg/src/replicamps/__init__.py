"""Replica tensor-network toolkit for spin-1/2 chains.

Evolves magnetization-conserving XXZ chains from a domain wall with Trotter
gates and measures how participation entropy and stabilizer Renyi entropy
spread, via replica matrix-product algorithms, perfect sampling, and exact
dense cross-checks at small sizes.
"""

__version__ = "0.1.0"

from .tensors import TruncationSpec, FactorResult, contract, svd_truncate, qr_orthonormalize
from .mps import (
    MatrixProductState,
    MatrixProductOperator,
    from_product_state,
    random_mps,
    canonicalize,
    inner,
    amplitude,
    apply_mpo,
    compress,
    entanglement_entropy,
    save_mps,
    load_mps,
)
from .evolution import (
    XXZModel,
    DisorderSpec,
    TrotterSchedule,
    domain_wall_state,
    evolve,
    evolve_to,
)
from .participation import (
    participation_entropy,
    participation_entropy_exact,
    replica_state,
    DEFAULT_CONVERGENCE_SCAN,
    convergence_scan,
)
from .stabilizer import (
    PauliString,
    pauli_mps,
    stabilizer_renyi_entropy,
    sre_exact,
    zeta_z,
)
from .sampling import (
    SampleBatch,
    CanonicalFormError,
    sample_bitstring,
    sample_pauli,
    estimate_pe,
    estimate_sre,
)
from .observables import (
    TimeSeriesRecord,
    FitResult,
    magnetization_profile,
    polarization_transfer,
    fit_power_law,
    fit_power_law_offset,
    check_inequalities,
    stabilizer_norm_and_coherence,
    average_over_realizations,
)
from .config import SimulationConfig, ConfigError, load_config, parse_config
from .runner import run, oracle_check, read_records, write_records, compute_fits, SchemaError
