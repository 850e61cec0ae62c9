"""Gate vocabulary and matrix-free gate application.

Parametric gates are rotations exp(-i theta sigma/2), optionally
controlled (the rotation acts on the target only where the control bit
is 1). Frozen H and CNOT exist for Trotter-synthesized circuits; the
variational gate pool never emits them.

Kernels accept a statevector of shape (2^N,) or a matrix of shape
(2^N, M) whose columns are states; the qubit count N is taken from
``shape[0]``, so gates on n < N qubits embed automatically (ancillae
live in the high bits).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pauli import MAT_1Q

ROTATION_KINDS = ("Rx", "Ry", "Rz")
FROZEN_KINDS = ("H", "CNOT")

_H_MAT = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
_X_MAT = MAT_1Q["X"]


@dataclass(frozen=True)
class Gate:
    """One circuit entry.

    ``theta`` is the fixed angle for frozen rotations and the initial /
    last-bound angle for parametric ones; H and CNOT carry no angle.
    """

    kind: str
    target: int
    control: int | None = None
    theta: float | None = None
    parametric: bool = True

    def __post_init__(self):
        if self.kind in ROTATION_KINDS:
            if self.theta is None:
                raise ValueError(f"{self.kind} needs an angle")
        elif self.kind == "H":
            if self.control is not None or self.parametric or self.theta is not None:
                raise ValueError("H is a frozen, uncontrolled gate")
        elif self.kind == "CNOT":
            if self.control is None or self.parametric or self.theta is not None:
                raise ValueError("CNOT is frozen and needs a control")
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.control is not None and self.control == self.target:
            raise ValueError("control and target coincide")

    @property
    def is_two_qubit(self) -> bool:
        return self.control is not None

    def support(self) -> tuple[int, ...]:
        if self.control is None:
            return (self.target,)
        return (self.control, self.target)

    def with_theta(self, theta: float) -> "Gate":
        return Gate(self.kind, self.target, self.control, float(theta), self.parametric)


def rotation_matrix(kind: str, theta: float) -> np.ndarray:
    """2x2 matrix of exp(-i theta sigma/2)."""
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    if kind == "Rx":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "Ry":
        return np.array([[c, -s], [s, c]])
    if kind == "Rz":
        return np.array([[c - 1j * s, 0.0], [0.0, c + 1j * s]])
    raise ValueError(f"not a rotation kind: {kind!r}")


def _n_state_qubits(psi: np.ndarray) -> int:
    rows = psi.shape[0]
    n = rows.bit_length() - 1
    if 1 << n != rows:
        raise ValueError(f"state length {rows} is not a power of two")
    return n


def _apply_1q(mat: np.ndarray, target: int, psi: np.ndarray) -> np.ndarray:
    n = _n_state_qubits(psi)
    out = psi.reshape(1 << (n - 1 - target), 2, -1).copy()
    a = out[:, 0, :].copy()
    b = out[:, 1, :]
    out[:, 0, :] = mat[0, 0] * a + mat[0, 1] * b
    out[:, 1, :] = mat[1, 0] * a + mat[1, 1] * b
    return out.reshape(psi.shape)


def _apply_controlled(mat: np.ndarray, control: int, target: int,
                      psi: np.ndarray, annihilate_rest: bool = False) -> np.ndarray:
    """Apply ``mat`` on the target within the control=1 block.

    With ``annihilate_rest`` the control=0 block is zeroed instead of
    kept, which turns the gate into the projected generator
    |1><1|_c x mat_t used by derivative states.
    """
    n = _n_state_qubits(psi)
    hi, lo = max(control, target), min(control, target)
    shape = (1 << (n - 1 - hi), 2, 1 << (hi - lo - 1), 2, -1)
    out = psi.reshape(shape).copy()
    ctrl_axis = 1 if control == hi else 3
    if annihilate_rest:
        sel0 = [slice(None)] * 5
        sel0[ctrl_axis] = 0
        out[tuple(sel0)] = 0.0
    sel = [slice(None)] * 5
    sel[ctrl_axis] = 1
    block = out[tuple(sel)]  # view with the target axis remaining
    tgt_axis = (3 if ctrl_axis == 1 else 1) - (1 if ctrl_axis < 3 else 0)
    view = np.moveaxis(block, tgt_axis, 0)
    a = view[0].copy()
    b = view[1]
    view[0] = mat[0, 0] * a + mat[0, 1] * b
    view[1] = mat[1, 0] * a + mat[1, 1] * b
    return out.reshape(psi.shape)


def apply_gate(gate: Gate, theta: float | None, psi: np.ndarray) -> np.ndarray:
    """Apply one gate; ``theta`` overrides the stored angle for rotations."""
    if gate.kind == "H":
        return _apply_1q(_H_MAT, gate.target, psi)
    if gate.kind == "CNOT":
        return _apply_controlled(_X_MAT, gate.control, gate.target, psi)
    angle = gate.theta if theta is None else theta
    mat = rotation_matrix(gate.kind, angle)
    if gate.control is None:
        return _apply_1q(mat, gate.target, psi)
    return _apply_controlled(mat, gate.control, gate.target, psi)


def apply_generator(gate: Gate, psi: np.ndarray) -> np.ndarray:
    """Apply the rotation generator G (without the -i/2 factor).

    G is sigma on the target for plain rotations and
    |1><1|_control x sigma_target for controlled ones; this is the exact
    derivative generator of exp(-i theta G / 2).
    """
    if gate.kind not in ROTATION_KINDS:
        raise ValueError(f"{gate.kind} has no rotation generator")
    sigma = MAT_1Q[gate.kind[1].upper()]
    if gate.control is None:
        return _apply_1q(sigma, gate.target, psi)
    return _apply_controlled(sigma, gate.control, gate.target, psi, annihilate_rest=True)
