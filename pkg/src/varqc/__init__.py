"""varqc: variational synthesis of quantum circuits on a statevector emulator.

Capabilities: Jordan-Wigner molecular Hamiltonians from integral files,
adaptive random-ansatz VQE with quantum-natural-gradient training,
propagator compilation in the full Hilbert space or an occupation-number
subspace, and Suzuki-Trotter baselines with peephole simplification.
"""

__version__ = "0.1.0"

from .circuits import Circuit, dense_unitary, parse_circuit, run, serialize, simplify
from .fermion import FermionOperator, IntegralTable, build_hamiltonian, jordan_wigner, parse_integrals
from .gates import Gate
from .pauli import PauliString, PauliSum, commutes, multiply, parse_pauli_sum, format_pauli_sum
from .states import basis_state, expectation

__all__ = [
    "Circuit",
    "FermionOperator",
    "Gate",
    "IntegralTable",
    "PauliString",
    "PauliSum",
    "basis_state",
    "build_hamiltonian",
    "commutes",
    "dense_unitary",
    "expectation",
    "format_pauli_sum",
    "jordan_wigner",
    "multiply",
    "parse_circuit",
    "parse_integrals",
    "parse_pauli_sum",
    "run",
    "serialize",
    "simplify",
]
