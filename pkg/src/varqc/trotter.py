"""Suzuki-Trotter synthesis of time-evolution circuits.

The Hamiltonian terms are partitioned greedily into mutually-commuting
slices; product formulas of orders 1-4 expand into a sequence of
(slice, evolved-time) factors; every Pauli term exponential becomes the
canonical basis-change / CNOT-ladder / Rz / mirror fragment. Orders 3
and 4 are two-operator identities and refuse other partition counts.

Order 3 uses Ruth's coefficient sequence (7/24, 2/3, 3/4, -2/3, -1/24, 1);
the leading A-coefficients must sum to 1 for the product to approximate
the propagator at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .circuits import Circuit, simplify
from .gates import Gate
from .pauli import PauliString, PauliSum, commutes

_P1_ORDER4 = 1.0 / (4.0 - 4.0 ** (1.0 / 3.0))
_ORDER3_COEFFS = ((0, 7.0 / 24.0), (1, 2.0 / 3.0), (0, 3.0 / 4.0),
                  (1, -2.0 / 3.0), (0, -1.0 / 24.0), (1, 1.0))

TROTTER_NUMBER_GRID = {1: range(1, 57), 2: range(1, 37), 3: range(1, 19), 4: range(1, 6)}

DT_GRID = (
    0.001, 0.002, 0.005, 0.007, 0.01, 0.02, 0.03, 0.035, 0.05, 0.07,
    0.1, 0.15, 0.25, 0.3, 0.35, 0.4, 0.5, 0.6, 0.75, 0.9, 1, 1.1, 1.2,
    1.35, 1.5, 1.65, 1.8, 2, 2.2, 2.35, 2.55, 2.85, 3, 3.3, 3.5, 3.7, 4,
    4.3, 4.5,
)


@dataclass(frozen=True)
class TrotterPlan:
    order: int
    n_steps: int
    dt: float
    slices: tuple[PauliSum, ...]

    def __post_init__(self):
        if self.order not in (1, 2, 3, 4):
            raise ValueError(f"unsupported order {self.order}")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.order in (3, 4) and len(self.slices) != 2:
            raise ValueError(
                f"order {self.order} is a two-operator identity; "
                f"got {len(self.slices)} commuting slices"
            )


def partition_commuting(h: PauliSum) -> list[PauliSum]:
    """Greedy sequential coloring into mutually-commuting slices.

    Each term joins the first slice whose every member commutes with it;
    slice order follows first-member order in the input sum.
    """
    slices: list[list[tuple[float, PauliString]]] = []
    for coeff, s in h.terms:
        for slc in slices:
            if all(commutes(s, member) for _, member in slc):
                slc.append((coeff, s))
                break
        else:
            slices.append([(coeff, s)])
    return [PauliSum(h.n, slc) for slc in slices]


def make_plan(h: PauliSum, order: int, n_steps: int, dt: float) -> TrotterPlan:
    return TrotterPlan(order, n_steps, dt, tuple(partition_commuting(h)))


def expand_formula(plan: TrotterPlan) -> list[tuple[int, float]]:
    """Ordered (slice index, evolved time) factors for exp(-i dt H).

    Each entry (j, tau) stands for exp(-i tau H_j). Order 1 sweeps the
    slices left to right n times. Order 2 with two slices uses the
    reordered symmetric pattern alternating (A B A) and (B A B) triples
    at half/full substeps; with k slices it falls back to the symmetric
    palindrome. Orders 3 and 4 are the Ruth and Suzuki two-operator
    sequences.
    """
    t = plan.dt / plan.n_steps
    k = len(plan.slices)
    seq: list[tuple[int, float]] = []
    if plan.order == 1:
        for _ in range(plan.n_steps):
            seq.extend((j, t) for j in range(k))
    elif plan.order == 2:
        if k == 2:
            for rep in range(plan.n_steps):
                a, b = (0, 1) if rep % 2 == 0 else (1, 0)
                seq.extend([(a, t / 2), (b, t), (a, t / 2)])
        else:
            for _ in range(plan.n_steps):
                seq.extend((j, t / 2) for j in range(k - 1))
                seq.append((k - 1, t))
                seq.extend((j, t / 2) for j in reversed(range(k - 1)))
    elif plan.order == 3:
        for _ in range(plan.n_steps):
            seq.extend((j, c * t) for j, c in _ORDER3_COEFFS)
    else:
        p = [_P1_ORDER4] * 5
        p[2] = 1.0 - 4.0 * _P1_ORDER4
        for _ in range(plan.n_steps):
            for pi in p:
                seq.extend([(0, pi * t / 2), (1, pi * t), (0, pi * t / 2)])
    return seq


def emit_exp_circuit(coeff: float, string: PauliString, scale: float) -> list[Gate]:
    """Gate fragment realizing exp(-i coeff*scale P), P not identity.

    Layout: basis change (frozen H on X qubits, Rx(pi/2) on Y qubits),
    CNOT ladder ascending over the non-I qubits, Rz(2*coeff*scale) on
    the last of them, then the mirror. With the exp(-i theta sigma/2)
    rotation convention the Y-basis change must be Rx(+pi/2) going in
    and Rx(-pi/2) coming out for the fragment to equal the exponential
    exactly (only odd-Y strings are sensitive to this sign).
    """
    if string.is_identity():
        raise ValueError("identity strings contribute a global phase, not gates")
    support = string.support()
    pre: list[Gate] = []
    post: list[Gate] = []
    for q in support:
        letter = string.ops[q]
        if letter == "X":
            pre.append(Gate("H", q, None, None, False))
            post.append(Gate("H", q, None, None, False))
        elif letter == "Y":
            pre.append(Gate("Rx", q, None, math.pi / 2, False))
            post.append(Gate("Rx", q, None, -math.pi / 2, False))
    ladder = [
        Gate("CNOT", support[i + 1], support[i], None, False)
        for i in range(len(support) - 1)
    ]
    rz = Gate("Rz", support[-1], None, 2.0 * coeff * scale, False)
    return pre + ladder + [rz] + list(reversed(ladder)) + list(reversed(post))


def synthesize(h: PauliSum, order: int, n_steps: int, dt: float):
    """Full Trotter circuit for exp(-i dt H).

    Returns (circuit, gate_count, global_phase_angle): the simplified
    circuit times e^{i phase} equals the product formula; identity terms
    contribute only to the phase.
    """
    plan = make_plan(h, order, n_steps, dt)
    gates: list[Gate] = []
    phase = 0.0
    for slice_idx, tau in expand_formula(plan):
        for coeff, string in plan.slices[slice_idx].terms:
            if string.is_identity():
                phase -= coeff * tau
            else:
                gates.extend(emit_exp_circuit(coeff, string, tau))
    circuit = simplify(Circuit(h.n, tuple(gates)))
    return circuit, circuit.gate_count, phase
