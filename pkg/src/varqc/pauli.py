"""Pauli-string and Pauli-sum algebra.

Strings are stored densely as one letter per qubit (qubit 0 = least
significant bit of basis-state integers, everywhere in this package).
Sums are canonicalized on construction: duplicate strings merge, tiny
coefficients drop, and coefficients must come out real.

The action on statevectors is matrix-free: every Pauli string is a
permutation of amplitudes with unit phases, so ``PauliSum.apply`` never
materializes a 2^n x 2^n matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParseError, ResourceLimitError

LETTERS = "IXYZ"

MAT_1Q = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

# single-qubit products: (a, b) -> (phase, a*b)
_PROD = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("Y", "I"): (1, "Y"), ("Z", "I"): (1, "Z"),
    ("X", "X"): (1, "I"), ("Y", "Y"): (1, "I"), ("Z", "Z"): (1, "I"),
    ("X", "Y"): (1j, "Z"), ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"), ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"), ("X", "Z"): (-1j, "Y"),
}

COEFF_CUTOFF = 1e-14      # canonicalization drop threshold
IMAG_TOL = 1e-10          # Hermiticity tolerance on coefficients
DENSE_QUBIT_CAP = 12      # 2^12 dense matrices still fit desktop memory


@dataclass(frozen=True)
class PauliString:
    """An n-qubit tensor product of I/X/Y/Z; ``ops[i]`` acts on qubit i."""

    n: int
    ops: str

    def __post_init__(self):
        if len(self.ops) != self.n:
            raise ValueError(f"ops has {len(self.ops)} letters, expected {self.n}")
        bad = set(self.ops) - set(LETTERS)
        if bad:
            raise ValueError(f"invalid Pauli letters {sorted(bad)}")

    @staticmethod
    def identity(n: int) -> "PauliString":
        return PauliString(n, "I" * n)

    @staticmethod
    def from_ops(n: int, ops: dict[int, str]) -> "PauliString":
        """Build from a {qubit: letter} map; unlisted qubits are I."""
        letters = ["I"] * n
        for q, letter in ops.items():
            if not 0 <= q < n:
                raise ValueError(f"qubit {q} out of range for n={n}")
            letters[q] = letter
        return PauliString(n, "".join(letters))

    @property
    def x_mask(self) -> int:
        """Bit i set where the letter has an X component (X or Y)."""
        m = 0
        for q, letter in enumerate(self.ops):
            if letter in "XY":
                m |= 1 << q
        return m

    @property
    def z_mask(self) -> int:
        """Bit i set where the letter has a Z component (Z or Y)."""
        m = 0
        for q, letter in enumerate(self.ops):
            if letter in "ZY":
                m |= 1 << q
        return m

    @property
    def n_y(self) -> int:
        return self.ops.count("Y")

    def is_identity(self) -> bool:
        return self.ops == "I" * self.n

    def support(self) -> tuple[int, ...]:
        return tuple(q for q, letter in enumerate(self.ops) if letter != "I")

    def label(self) -> str:
        """Human/file form, e.g. ``"X0 Z2"``; the identity is ``"I"``."""
        parts = [f"{letter}{q}" for q, letter in enumerate(self.ops) if letter != "I"]
        return " ".join(parts) if parts else "I"

    def dense(self) -> np.ndarray:
        """Dense 2^n x 2^n matrix (kron with qubit 0 least significant)."""
        if self.n > DENSE_QUBIT_CAP:
            raise ResourceLimitError(f"dense Pauli matrix refused for n={self.n} > {DENSE_QUBIT_CAP}")
        m = np.array([[1.0 + 0.0j]])
        for letter in self.ops:  # qubit 0 innermost => left factor in kron chain
            m = np.kron(MAT_1Q[letter], m)
        return m


def commutes(a: PauliString, b: PauliString) -> bool:
    """True iff a and b commute.

    Equivalent to: the count of qubits where both letters are non-I and
    differ is even (symplectic criterion on the X/Z masks).
    """
    if a.n != b.n:
        raise DimensionError(f"qubit counts differ: {a.n} vs {b.n}")
    s = (a.x_mask & b.z_mask).bit_count() + (a.z_mask & b.x_mask).bit_count()
    return s % 2 == 0


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Product a*b as (phase, string) with phase in {1, -1, i, -i}."""
    if a.n != b.n:
        raise DimensionError(f"qubit counts differ: {a.n} vs {b.n}")
    phase = 1 + 0j
    letters = []
    for la, lb in zip(a.ops, b.ops):
        ph, lc = _PROD[(la, lb)]
        phase *= ph
        letters.append(lc)
    return phase, PauliString(a.n, "".join(letters))


class PauliSum:
    """A real-weighted sum of Pauli strings over a common qubit count.

    Construction accepts complex coefficients (intermediate algebra is
    complex), merges duplicate strings in first-appearance order, drops
    coefficients below ``COEFF_CUTOFF``, and rejects any merged
    coefficient whose imaginary part exceeds ``IMAG_TOL``.
    """

    __slots__ = ("n", "terms", "_apply_cache")

    def __init__(self, n: int, terms):
        merged: dict[PauliString, complex] = {}
        for coeff, string in terms:
            if string.n != n:
                raise DimensionError(f"term on {string.n} qubits in an n={n} sum")
            merged[string] = merged.get(string, 0.0) + complex(coeff)
        real_terms = []
        for string, coeff in merged.items():
            if abs(coeff) < COEFF_CUTOFF:
                continue
            if abs(coeff.imag) > IMAG_TOL:
                raise ValueError(
                    f"non-Hermitian coefficient {coeff} on {string.label()!r}"
                )
            real_terms.append((float(coeff.real), string))
        self.n = n
        self.terms: tuple[tuple[float, PauliString], ...] = tuple(real_terms)
        self._apply_cache = None

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        return f"PauliSum(n={self.n}, terms={len(self.terms)})"

    def coefficient(self, string: PauliString) -> float:
        for c, s in self.terms:
            if s == string:
                return c
        return 0.0

    def _build_apply_cache(self):
        dim = 1 << self.n
        idx = np.arange(dim, dtype=np.int64)
        cache = []
        for coeff, s in self.terms:
            perm = idx ^ s.x_mask
            parity = (np.bitwise_count(perm & np.int64(s.z_mask)) & 1).astype(np.int8)
            signs = (1 - 2 * parity).astype(np.int8)
            scale = coeff * (1j) ** s.n_y
            cache.append((perm, signs, scale))
        return cache

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """Return sum_k c_k P_k |psi> without any dense matrix.

        Each string maps |b> -> i^{#Y} (-1)^{popcount(b & zmask)} |b ^ xmask>.
        """
        dim = 1 << self.n
        if psi.shape[0] != dim:
            raise DimensionError(f"state has {psi.shape[0]} amplitudes, expected {dim}")
        if self._apply_cache is None:
            self._apply_cache = self._build_apply_cache()
        out = np.zeros_like(psi, dtype=complex)
        for perm, signs, scale in self._apply_cache:
            out += scale * (signs * psi[perm])
        return out

    def dense(self) -> np.ndarray:
        """Hermitian 2^n x 2^n matrix of the sum (n <= 12 only)."""
        if self.n > DENSE_QUBIT_CAP:
            raise ResourceLimitError(
                f"dense matrix refused for n={self.n} > {DENSE_QUBIT_CAP}"
            )
        dim = 1 << self.n
        idx = np.arange(dim, dtype=np.int64)
        out = np.zeros((dim, dim), dtype=complex)
        for coeff, s in self.terms:
            rows = idx ^ s.x_mask
            parity = (np.bitwise_count(idx & np.int64(s.z_mask)) & 1).astype(np.int64)
            out[rows, idx] += coeff * (1j) ** s.n_y * (1 - 2 * parity)
        return out

    def __getstate__(self):
        return (self.n, self.terms)

    def __setstate__(self, state):
        n, terms = state
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", terms)
        object.__setattr__(self, "_apply_cache", None)


def parse_pauli_sum(text: str, n: int | None = None) -> PauliSum:
    """Parse the Pauli-sum text format.

    One term per line: ``<coefficient> <letters>`` with letters such as
    ``Z0 Z1 X3``; a bare ``I`` is the identity term. ``#`` starts a
    comment line; blank lines are ignored. The qubit count is inferred
    as 1 + max index unless given.
    """
    entries = []
    max_q = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        try:
            coeff = float(tokens[0])
        except ValueError:
            raise ParseError(f"line {lineno}: bad coefficient {tokens[0]!r}") from None
        if len(tokens) < 2:
            raise ParseError(f"line {lineno}: missing Pauli letters")
        if tokens[1:] == ["I"]:
            entries.append((coeff, {}))
            continue
        ops: dict[int, str] = {}
        for tok in tokens[1:]:
            letter, idx_text = tok[0], tok[1:]
            if letter not in "XYZ" or not idx_text.isdigit():
                raise ParseError(f"line {lineno}: bad factor {tok!r}")
            q = int(idx_text)
            if q in ops:
                raise ParseError(f"line {lineno}: qubit {q} listed twice")
            ops[q] = letter
            max_q = max(max_q, q)
        entries.append((coeff, ops))
    if not entries:
        raise ParseError("no terms found")
    if n is None:
        n = max_q + 1
    elif max_q >= n:
        raise ParseError(f"qubit {max_q} out of range for n={n}")
    return PauliSum(n, [(c, PauliString.from_ops(n, ops)) for c, ops in entries])


def format_pauli_sum(h: PauliSum) -> str:
    """Inverse of :func:`parse_pauli_sum`; floats use shortest round-trip repr."""
    lines = [f"{repr(c)} {s.label()}" for c, s in h.terms]
    return "\n".join(lines) + "\n"
