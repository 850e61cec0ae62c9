"""Dense statevector helpers: creation, overlaps, expectations."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError
from .pauli import PauliSum

EXPECTATION_IMAG_TOL = 1e-10


def basis_state(n: int, label: int) -> np.ndarray:
    """|label> over n qubits; qubit 0 is the least significant bit."""
    dim = 1 << n
    if not 0 <= label < dim:
        raise ValueError(f"label {label} out of range for n={n}")
    psi = np.zeros(dim, dtype=complex)
    psi[label] = 1.0
    return psi


def num_qubits(psi: np.ndarray) -> int:
    n = psi.shape[0].bit_length() - 1
    if 1 << n != psi.shape[0]:
        raise ValueError(f"state length {psi.shape[0]} is not a power of two")
    return n


def expectation(h: PauliSum, psi: np.ndarray) -> float:
    """<psi|H|psi> for Hermitian H; the imaginary residue must be tiny."""
    if psi.shape[0] != 1 << h.n:
        raise DimensionError(f"state has {psi.shape[0]} amplitudes, expected {1 << h.n}")
    val = np.vdot(psi, h.apply(psi))
    if abs(val.imag) > EXPECTATION_IMAG_TOL * max(1.0, abs(val.real)):
        raise ValueError(f"expectation has imaginary residue {val.imag:g}")
    return float(val.real)
