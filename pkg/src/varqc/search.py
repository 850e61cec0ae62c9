"""Adaptive ansatz evolution: random gate insertion and judicious deletion.

Each round appends a freshly sampled block to several candidate copies
of the current circuit, trains each briefly, adopts the lowest-cost
winner (the unextended current circuit is the fallback), and trains the
winner to local convergence. Between rounds, gates whose removal stays
inside a small cost budget are pruned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit
from .gates import Gate
from .natgrad import CostFunction, OptimizerConfig, minimize

_AXES = ("Rx", "Ry", "Rz")


@dataclass
class SearchConfig:
    n_candidates: int = 6
    max_insert: int = 3
    max_insert_cap: int = 32
    insert_growth: float = 2.0
    p_two_qubit: float = 0.5
    delete_tol_angle: float = 1e-2
    delete_cost_budget: float = 1e-5
    delete_rel_budget: float = 0.0
    delete_reopt_attempts: int | None = None
    reopt_iters: int = 30
    refine_iters: int = 300
    max_rounds: int = 60
    round_patience: int = 8
    cost_floor: float | None = None
    adopt_rel_improvement: float = 0.0
    screen_frozen_prefix: bool = False
    motif_prob: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_two_qubit <= 1.0:
            raise ValueError("p_two_qubit must lie in [0, 1]")
        if self.n_candidates < 1 or self.max_insert < 1:
            raise ValueError("need n_candidates >= 1 and max_insert >= 1")
        if self.round_patience < 1 or self.max_rounds < 1:
            raise ValueError("need round_patience >= 1 and max_rounds >= 1")


def _random_gate(n: int, p_two: float, rng: np.random.Generator,
                 angle: float | None = None) -> Gate:
    kind = _AXES[int(rng.integers(0, 3))]
    controlled = bool(rng.random() < p_two)
    target = int(rng.integers(0, n))
    control = None
    if controlled:
        control = int(rng.integers(0, n - 1))
        if control >= target:
            control += 1
    if angle is None:
        angle = -float(rng.uniform(-np.pi, np.pi))  # lands in (-pi, pi]
    return Gate(kind, target, control, angle, parametric=True)


def _motif_block(n: int, rng: np.random.Generator) -> list[Gate]:
    """A conjugation motif: pi-angle controlled wrappers around one rotation.

    Wrapping a single rotation in controlled rotations at +-pi turns its
    generator into a correlated multi-qubit one; circuits discovered by
    the adaptive search gravitate to exactly this shape, and seeding
    candidates with it makes the occupation-sector couplings reachable
    at small gate counts. All gates stay inside the standard pool and
    remain fully trainable.
    """
    k = int(rng.integers(1, 4))
    wrappers = []
    for _ in range(k):
        gate = _random_gate(n, 1.0, rng, angle=math.copysign(np.pi, rng.random() - 0.5))
        wrappers.append(gate)
    inner = [_random_gate(n, 0.5, rng) for _ in range(int(rng.integers(1, 4)))]
    mirror = [g.with_theta(-g.theta) for g in reversed(wrappers)]
    return wrappers + inner + mirror


def sample_gate_block(n: int, cfg: SearchConfig, rng: np.random.Generator) -> list[Gate]:
    """Random parametric block from the pool {R_sigma, C(R_sigma)}.

    Plain blocks have length uniform on [1, max_insert]; each gate picks
    its axis uniformly, is controlled with probability p_two_qubit, and
    starts at a uniform angle in (-pi, pi]. With probability motif_prob
    (and at least two qubits) the block is a conjugation motif instead.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    p_two = cfg.p_two_qubit
    if n < 2:
        if p_two >= 1.0:
            raise ValueError("p_two_qubit=1 is unsatisfiable on a single qubit")
        p_two = 0.0
    if n >= 2 and cfg.motif_prob > 0.0 and rng.random() < cfg.motif_prob:
        return _motif_block(n, rng)
    length = int(rng.integers(1, cfg.max_insert + 1))
    return [_random_gate(n, p_two, rng) for _ in range(length)]


@dataclass
class RoundResult:
    circuit: Circuit
    theta: np.ndarray
    cost: float
    stalled: bool


def evolve_round(circuit: Circuit, theta, cost_factory, opt_cfg: OptimizerConfig,
                 search_cfg: SearchConfig, rng: np.random.Generator,
                 pool_qubits: int | None = None,
                 min_improvement: float = 0.0) -> RoundResult:
    """One insertion round; never returns a higher cost than it was given.

    ``pool_qubits`` restricts sampled gates to the low qubits (the
    register) when ancillae are present. A candidate is adopted only
    when it beats the incumbent by more than ``min_improvement``;
    marginal wins count as stalls so the driver can retune instead of
    accumulating near-useless gates.
    """
    n_pool = circuit.n if pool_qubits is None else pool_qubits
    theta = np.asarray(theta, dtype=float)
    base_cost = cost_factory(circuit).value(theta)

    blocks = [sample_gate_block(n_pool, search_cfg, rng)
              for _ in range(search_cfg.n_candidates)]
    best = None
    frozen_prefix = circuit.frozen(theta) if search_cfg.screen_frozen_prefix else None
    for k, block in enumerate(blocks):
        block_theta = np.array([g.theta for g in block])
        if frozen_prefix is not None:
            # screen with the incumbent frozen: only the fresh block trains,
            # so candidate training cannot drag a tracked circuit off its basin
            res = minimize(cost_factory(frozen_prefix.extend(block)), block_theta,
                           opt_cfg, max_iters=search_cfg.reopt_iters,
                           floor=search_cfg.cost_floor)
            cand_theta = np.concatenate([theta, res.theta])
        else:
            cand_theta = np.concatenate([theta, block_theta])
            res = minimize(cost_factory(circuit.extend(block)), cand_theta, opt_cfg,
                           max_iters=search_cfg.reopt_iters,
                           floor=search_cfg.cost_floor)
            cand_theta = res.theta
        key = (res.history[-1], k)
        if best is None or key < best[0]:
            best = (key, circuit.extend(block), cand_theta)
    (best_cost, _), best_circuit, best_theta = best
    if best_cost >= base_cost - min_improvement:
        return RoundResult(circuit, theta, base_cost, stalled=True)

    final = minimize(cost_factory(best_circuit), best_theta, opt_cfg,
                     max_iters=search_cfg.refine_iters,
                     floor=search_cfg.cost_floor)
    return RoundResult(best_circuit, final.theta, final.history[-1], stalled=False)


def _angle_near_identity(angle: float, tol: float) -> bool:
    d = np.remainder(angle, 2.0 * np.pi)
    return min(d, 2.0 * np.pi - d) < tol


def _plain_removal_costs(circuit: Circuit, theta, cost_factory):
    """Cost of dropping each parametric gate without re-optimization.

    For the rotation pool, zeroing an angle equals removal (R(0) = I,
    controlled or not), so one evaluation per gate prices the
    no-compensation removal.
    """
    out = []
    for p_idx, gate_idx in enumerate(circuit.parametric_indices()):
        zeroed = np.asarray(theta, dtype=float).copy()
        zeroed[p_idx] = 0.0
        out.append((cost_factory(circuit).value(zeroed), gate_idx, p_idx))
    return out


def _drop_gates(circuit: Circuit, theta, gate_indices):
    drop = set(gate_indices)
    keep_gates = tuple(g for i, g in enumerate(circuit.gates) if i not in drop)
    param_keep = [k for k, i in enumerate(circuit.parametric_indices()) if i not in drop]
    return Circuit(circuit.n, keep_gates), np.asarray(theta, dtype=float)[param_keep]


def judicious_delete(circuit: Circuit, theta, cost_factory,
                     opt_cfg: OptimizerConfig, search_cfg: SearchConfig) -> RoundResult:
    """Prune gates while keeping the cost within delete_cost_budget.

    Passes repeat to a fixed point: (1) parametric gates whose angle is
    an identity multiple of 2pi within delete_tol_angle drop when the
    cost allows; (2a) batch removal of the cheapest gates, validated by
    a single evaluation and resettled by one short re-optimization;
    (2b) greedy single-gate trial deletion with a short re-optimization
    per attempt, cheapest first, at most delete_reopt_attempts expensive
    attempts per cycle, never retrying a rejected gate. A removal sticks
    only if the cost stays within the budget of the entry cost.
    """
    theta = np.asarray(theta, dtype=float)
    entry_cost = cost_factory(circuit).value(theta)
    budget = entry_cost + search_cfg.delete_cost_budget
    current_cost = entry_cost
    rejected: set[int] = set()  # original-position memo, survives via remapping

    changed = True
    while changed:
        changed = False

        # pass 1: near-identity angles
        i = 0
        while i < len(circuit.gates):
            g = circuit.gates[i]
            if g.parametric:
                p_idx = sum(1 for gg in circuit.gates[:i] if gg.parametric)
                if _angle_near_identity(theta[p_idx], search_cfg.delete_tol_angle):
                    trial_c = circuit.without_gate(i)
                    trial_theta = np.delete(theta, p_idx)
                    c = cost_factory(trial_c).value(trial_theta)
                    if c <= budget:
                        circuit, theta, current_cost = trial_c, trial_theta, c
                        rejected = {r - 1 if r > i else r for r in rejected if r != i}
                        changed = True
                        continue
            i += 1

        if not circuit.parametric_indices():
            break

        # pass 2a: batch-drop the cheapest gates; one evaluation validates
        # the whole batch, one short re-optimization resettles the rest
        while True:
            plains = sorted(_plain_removal_costs(circuit, theta, cost_factory))
            batch_size = 0
            batch = None
            k = 1
            while k <= len(plains):
                cand = [g for _, g, _ in plains[:k]]
                trial_c, trial_theta = _drop_gates(circuit, theta, cand)
                c = cost_factory(trial_c).value(trial_theta)
                if c <= budget:
                    batch = (trial_c, trial_theta, c, cand)
                    batch_size = k
                    k *= 2
                else:
                    break
            if batch is None:
                break
            trial_c, trial_theta, c, cand = batch
            if trial_theta.size:
                res = minimize(cost_factory(trial_c), trial_theta, opt_cfg,
                               max_iters=search_cfg.reopt_iters, floor=entry_cost)
                trial_theta, c = res.theta, min(res.history[-1], c)
            dropped = sorted(cand)
            rejected = {r - sum(1 for d in dropped if d < r)
                        for r in rejected if r not in dropped}
            circuit, theta, current_cost = trial_c, trial_theta, c
            changed = True
            if batch_size >= len(plains):
                break

        # pass 2b: contested gates, cheapest first, one re-optimization each
        plains = sorted(_plain_removal_costs(circuit, theta, cost_factory))
        reopt_left = search_cfg.delete_reopt_attempts
        removed: set[int] = set()
        for plain_cost, gate_idx, _ in plains:
            if gate_idx in removed or gate_idx in rejected:
                continue
            live_idx = gate_idx - sum(1 for r in removed if r < gate_idx)
            p_idx = sum(1 for gg in circuit.gates[:live_idx] if gg.parametric)
            trial_c = circuit.without_gate(live_idx)
            trial_theta = np.delete(theta, p_idx)
            if cost_factory(trial_c).value(trial_theta) <= budget:
                circuit, theta = trial_c, trial_theta
                current_cost = cost_factory(circuit).value(theta)
                removed.add(gate_idx)
                changed = True
                continue
            if reopt_left is not None:
                if reopt_left <= 0:
                    break
                reopt_left -= 1
            res = minimize(cost_factory(trial_c), trial_theta, opt_cfg,
                           max_iters=search_cfg.reopt_iters, floor=budget)
            if res.history[-1] <= budget:
                circuit, theta = trial_c, res.theta
                current_cost = res.history[-1]
                removed.add(gate_idx)
                changed = True
            else:
                rejected.add(gate_idx)
        if removed:
            rejected = {r - sum(1 for d in removed if d < r) for r in rejected}
    return RoundResult(circuit, theta, current_cost, stalled=False)
