"""Second-quantized integrals and the Jordan-Wigner transformation.

The integral file format is line-oriented:

    norb <int>            spin-orbital count
    core <float>          scalar energy offset (nuclear repulsion)
    h <i> <j> <float>     coefficient of a+_i a_j
    g <i> <j> <k> <l> <float>   coefficient of a+_i a+_j a_k a_l
    # comment

Two-body coefficients are used exactly as given, with no normal-ordering
reshuffle; fixture generators emit coefficients matched to this operator
ordering. Geometry-to-integral computation is out of scope here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, TextIO

from .errors import ParseError
from .pauli import PauliString, PauliSum, multiply

HERMITICITY_TOL = 1e-10

RAISE = True
LOWER = False


@dataclass
class IntegralTable:
    norb: int
    core: float = 0.0
    one_body: dict[tuple[int, int], float] = field(default_factory=dict)
    two_body: dict[tuple[int, int, int, int], float] = field(default_factory=dict)

    def validate(self):
        for idx in self.one_body:
            if any(not 0 <= i < self.norb for i in idx):
                raise ValueError(f"one-body index {idx} out of range (norb={self.norb})")
        for idx in self.two_body:
            if any(not 0 <= i < self.norb for i in idx):
                raise ValueError(f"two-body index {idx} out of range (norb={self.norb})")
        for (i, j), v in self.one_body.items():
            w = self.one_body.get((j, i), 0.0)
            if abs(v - w) > HERMITICITY_TOL:
                raise ValueError(f"one-body table not symmetric: h[{i},{j}]={v} vs h[{j},{i}]={w}")


@dataclass
class FermionOperator:
    """Sum of ladder-operator strings: (coeff, ((mode, raise?), ...))."""

    terms: list[tuple[complex, tuple[tuple[int, bool], ...]]] = field(default_factory=list)

    def __len__(self):
        return len(self.terms)


def parse_integrals(source: TextIO | str) -> IntegralTable:
    """Read the integral file format; errors carry the line number."""
    text = source if isinstance(source, str) else source.read()
    norb = None
    core = 0.0
    one: dict[tuple[int, int], float] = {}
    two: dict[tuple[int, int, int, int], float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        tag = tokens[0]
        try:
            if tag == "norb":
                norb = int(tokens[1])
            elif tag == "core":
                core = float(tokens[1])
            elif tag == "h":
                i, j = int(tokens[1]), int(tokens[2])
                one[(i, j)] = float(tokens[3])
            elif tag == "g":
                i, j, k, l = (int(t) for t in tokens[1:5])
                two[(i, j, k, l)] = float(tokens[5])
            else:
                raise ParseError(f"line {lineno}: unknown record {tag!r}")
        except (IndexError, ValueError) as e:
            if isinstance(e, ParseError):
                raise
            raise ParseError(f"line {lineno}: malformed record {line!r}") from None
    if norb is None:
        raise ParseError("missing 'norb' record")
    table = IntegralTable(norb=norb, core=core, one_body=one, two_body=two)
    try:
        table.validate()
    except ValueError as e:
        raise ParseError(str(e)) from None
    return table


def format_integrals(table: IntegralTable, header: Iterable[str] = ()) -> str:
    lines = [f"# {h}" for h in header]
    lines.append(f"norb {table.norb}")
    lines.append(f"core {repr(table.core)}")
    for (i, j), v in sorted(table.one_body.items()):
        lines.append(f"h {i} {j} {repr(v)}")
    for (i, j, k, l), v in sorted(table.two_body.items()):
        lines.append(f"g {i} {j} {k} {l} {repr(v)}")
    return "\n".join(lines) + "\n"


def build_hamiltonian(table: IntegralTable) -> FermionOperator:
    """One ladder term per nonzero integral entry plus the core offset."""
    table.validate()
    op = FermionOperator()
    if table.core != 0.0:
        op.terms.append((complex(table.core), ()))
    for (i, j), v in table.one_body.items():
        if v != 0.0:
            op.terms.append((complex(v), ((i, RAISE), (j, LOWER))))
    for (i, j, k, l), v in table.two_body.items():
        if v != 0.0:
            op.terms.append((complex(v), ((i, RAISE), (j, RAISE), (k, LOWER), (l, LOWER))))
    return op


def _ladder_pauli_parts(mode: int, raising: bool, n: int):
    """a_j = Z_{<j} (X_j + iY_j)/2 and a+_j its adjoint, as 2 weighted strings."""
    z_chain = {k: "Z" for k in range(mode)}
    x_part = PauliString.from_ops(n, {**z_chain, mode: "X"})
    y_part = PauliString.from_ops(n, {**z_chain, mode: "Y"})
    y_coeff = -0.5j if raising else 0.5j
    return [(0.5 + 0.0j, x_part), (y_coeff, y_part)]


def jordan_wigner(op: FermionOperator, n: int | None = None) -> PauliSum:
    """Map a fermionic operator to an n-qubit Pauli sum.

    ``n`` defaults to 1 + the highest mode index. The input must be
    Hermitian overall: any imaginary residue above the PauliSum
    tolerance raises.
    """
    if n is None:
        max_mode = -1
        for _, ladder in op.terms:
            for mode, _ in ladder:
                max_mode = max(max_mode, mode)
        n = max(max_mode + 1, 1)
    acc: dict[PauliString, complex] = {}
    ident = PauliString.identity(n)
    for coeff, ladder in op.terms:
        partial: dict[PauliString, complex] = {ident: complex(coeff)}
        for mode, raising in ladder:
            if mode >= n:
                raise ValueError(f"mode {mode} exceeds qubit budget n={n}")
            factors = _ladder_pauli_parts(mode, raising, n)
            nxt: dict[PauliString, complex] = {}
            for s, c in partial.items():
                for fc, fs in factors:
                    phase, prod = multiply(s, fs)
                    key_c = nxt.get(prod, 0.0) + c * fc * phase
                    nxt[prod] = key_c
            partial = nxt
        for s, c in partial.items():
            acc[s] = acc.get(s, 0.0) + c
    try:
        return PauliSum(n, [(c, s) for s, c in acc.items()])
    except ValueError as e:
        raise ValueError(f"Jordan-Wigner output not Hermitian: {e}") from None
