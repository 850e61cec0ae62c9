"""Circuit representation, evaluation, peephole simplification, and I/O.

A circuit is an ordered gate list over n qubits. Parametric entries read
their angle from the parameter vector (in gate order); frozen entries
carry a fixed angle. Simplification is commutation-free: only pairs with
identical qubit support and no intervening gate on either qubit are
merged, exactly the rules used on Trotter output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, ParseError, ResourceLimitError
from .gates import Gate, apply_gate, apply_generator

DENSE_QUBIT_CAP = 12
_TWO_PI = 2.0 * math.pi
_FOUR_PI = 4.0 * math.pi
_ZERO_ANGLE_TOL = 1e-12


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        for g in self.gates:
            for q in g.support():
                if not 0 <= q < self.n:
                    raise ValueError(f"gate {g} touches qubit {q} outside n={self.n}")

    @property
    def param_count(self) -> int:
        return sum(1 for g in self.gates if g.parametric)

    @property
    def gate_count(self) -> int:
        return len(self.gates)

    @property
    def two_qubit_count(self) -> int:
        return sum(1 for g in self.gates if g.is_two_qubit)

    def parametric_indices(self) -> list[int]:
        return [i for i, g in enumerate(self.gates) if g.parametric]

    def initial_theta(self) -> np.ndarray:
        """Angles stored on the parametric entries, in parameter order."""
        return np.array([g.theta for g in self.gates if g.parametric], dtype=float)

    def bind(self, theta) -> list[float]:
        """Per-gate angles with parametric entries read from ``theta``."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.param_count,):
            raise DimensionError(
                f"theta has {theta.size} entries, circuit has {self.param_count} parameters"
            )
        angles = []
        k = 0
        for g in self.gates:
            if g.parametric:
                angles.append(float(theta[k]))
                k += 1
            else:
                angles.append(g.theta)
        return angles

    def extend(self, new_gates) -> "Circuit":
        return Circuit(self.n, self.gates + tuple(new_gates))

    def without_gate(self, index: int) -> "Circuit":
        return Circuit(self.n, self.gates[:index] + self.gates[index + 1:])

    def with_bound_angles(self, theta) -> "Circuit":
        """Copy with parametric entries carrying their current angles."""
        angles = self.bind(theta)
        return Circuit(
            self.n,
            tuple(
                g.with_theta(a) if g.parametric else g
                for g, a in zip(self.gates, angles)
            ),
        )

    def frozen(self, theta) -> "Circuit":
        """Copy with every rotation frozen at its bound angle."""
        angles = self.bind(theta)
        return Circuit(
            self.n,
            tuple(
                Gate(g.kind, g.target, g.control, a, parametric=False)
                if g.kind in ("Rx", "Ry", "Rz") else g
                for g, a in zip(self.gates, angles)
            ),
        )


def run(circuit: Circuit, theta, psi0: np.ndarray) -> np.ndarray:
    """Apply the gates left to right; psi0 may live on >= circuit.n qubits."""
    angles = circuit.bind(theta)
    psi = psi0
    for g, a in zip(circuit.gates, angles):
        psi = apply_gate(g, a, psi)
    return psi


def split_frozen_prefix(circuit: Circuit, psi0: np.ndarray):
    """Fold the leading frozen gates into the initial state.

    Returns (rest_circuit, evolved_psi0); cost evaluations that sweep
    only the trailing parameters need not replay the constant prefix.
    """
    k = 0
    for g in circuit.gates:
        if g.parametric:
            break
        k += 1
    if k == 0:
        return circuit, psi0
    psi = psi0
    for g in circuit.gates[:k]:
        psi = apply_gate(g, g.theta, psi)
    return Circuit(circuit.n, circuit.gates[k:]), psi


def derivative_states(circuit: Circuit, theta, psi0: np.ndarray):
    """State and all parameter-derivative states in one sweep.

    Returns (psi, D) with D of shape (p, dim); row i is
    d|psi(theta)>/d theta_i, generally unnormalized. The derivative
    inserts the factor (-i/2) G right after gate i; partial derivative
    states ride along the forward sweep as one batched matrix so the
    whole set costs O(gates) kernel calls.
    """
    angles = circuit.bind(theta)
    dim = psi0.shape[0]
    p = circuit.param_count
    D = np.zeros((dim, p), dtype=complex)  # columns are derivative states
    psi = psi0.astype(complex)
    k = 0
    for g, a in zip(circuit.gates, angles):
        psi = apply_gate(g, a, psi)
        if k:
            D[:, :k] = apply_gate(g, a, D[:, :k])
        if g.parametric:
            D[:, k] = -0.5j * apply_generator(g, psi)
            k += 1
    return psi, D.T


def derivative_state(circuit: Circuit, theta, i: int, psi0: np.ndarray) -> np.ndarray:
    """d|psi(theta)>/d theta_i for a single parameter index."""
    if not 0 <= i < circuit.param_count:
        raise IndexError(f"parameter index {i} out of range")
    angles = circuit.bind(theta)
    gate_index = circuit.parametric_indices()[i]
    psi = psi0
    for j in range(gate_index + 1):
        psi = apply_gate(circuit.gates[j], angles[j], psi)
    psi = -0.5j * apply_generator(circuit.gates[gate_index], psi)
    for j in range(gate_index + 1, len(circuit.gates)):
        psi = apply_gate(circuit.gates[j], angles[j], psi)
    return psi


def dense_unitary(circuit: Circuit, theta=None) -> np.ndarray:
    """2^n x 2^n matrix of the circuit (n <= 12)."""
    if circuit.n > DENSE_QUBIT_CAP:
        raise ResourceLimitError(f"dense unitary refused for n={circuit.n} > {DENSE_QUBIT_CAP}")
    if theta is None:
        theta = circuit.initial_theta()
    angles = circuit.bind(theta)
    u = np.eye(1 << circuit.n, dtype=complex)
    for g, a in zip(circuit.gates, angles):
        u = apply_gate(g, a, u)
    return u


def _reduce_mod_4pi(angle: float) -> float:
    """Map into (-2pi, 2pi]; rotations are exactly 4pi-periodic as matrices."""
    r = math.fmod(angle, _FOUR_PI)
    if r > _TWO_PI:
        r -= _FOUR_PI
    elif r <= -_TWO_PI:
        r += _FOUR_PI
    return r


def _is_null_rotation(g: Gate) -> bool:
    return (
        not g.parametric
        and g.kind in ("Rx", "Ry", "Rz")
        and abs(_reduce_mod_4pi(g.theta)) < _ZERO_ANGLE_TOL
    )


def _mergeable(a: Gate, b: Gate) -> bool:
    """Frozen pair on identical support that cancels or merges."""
    if a.parametric or b.parametric:
        return False
    if a.kind != b.kind or a.target != b.target or a.control != b.control:
        return False
    return True  # same-kind rotations merge; H/CNOT self-cancel


def simplify(circuit: Circuit) -> Circuit:
    """Commutation-free peephole pass to a fixed point.

    Rules: CNOT.CNOT and H.H cancel; same-axis same-wire frozen
    rotations merge with the angle reduced mod 4pi into (-2pi, 2pi];
    frozen rotations with angle = 0 (mod 4pi, tol 1e-12) drop. A pair
    counts as adjacent when no intervening gate touches either of its
    qubits; parametric gates are never altered and act as blockers.
    """
    out: list[Gate | None] = []
    last_touch: dict[int, int] = {}

    def _retouch(qubits):
        for q in qubits:
            idx = -1
            for j in range(len(out) - 1, -1, -1):
                g = out[j]
                if g is not None and q in g.support():
                    idx = j
                    break
            if idx >= 0:
                last_touch[q] = idx
            else:
                last_touch.pop(q, None)

    for g in circuit.gates:
        if _is_null_rotation(g):
            continue
        support = g.support()
        j = max((last_touch.get(q, -1) for q in support), default=-1)
        prev = out[j] if j >= 0 else None
        if prev is not None and set(prev.support()) == set(support) and _mergeable(prev, g):
            if prev.kind in ("H", "CNOT"):
                out[j] = None
                _retouch(support)
                continue
            merged = _reduce_mod_4pi(prev.theta + g.theta)
            if abs(merged) < _ZERO_ANGLE_TOL:
                out[j] = None
                _retouch(support)
            else:
                out[j] = prev.with_theta(merged)
            continue
        out.append(g)
        for q in support:
            last_touch[q] = len(out) - 1
    return Circuit(circuit.n, tuple(g for g in out if g is not None))


def serialize(circuit: Circuit) -> str:
    """Circuit file text: JSON object with fields n and gates."""
    gates = [
        {
            "kind": g.kind,
            "target": g.target,
            "control": g.control,
            "theta": g.theta,
            "parametric": g.parametric,
        }
        for g in circuit.gates
    ]
    return json.dumps({"n": circuit.n, "gates": gates}, indent=1)


def parse_circuit(text: str) -> Circuit:
    """Inverse of :func:`serialize`; raises ParseError with a position."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"bad circuit JSON at position {e.pos}: {e.msg}") from None
    if not isinstance(obj, dict) or "n" not in obj or "gates" not in obj:
        raise ParseError("circuit object needs fields 'n' and 'gates'")
    gates = []
    for i, entry in enumerate(obj["gates"]):
        try:
            gates.append(
                Gate(
                    kind=entry["kind"],
                    target=entry["target"],
                    control=entry["control"],
                    theta=entry["theta"],
                    parametric=entry["parametric"],
                )
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"gate {i}: {e}") from None
    return Circuit(int(obj["n"]), tuple(gates))
