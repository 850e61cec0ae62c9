"""Quantum-natural-gradient parameter training.

One step solves (F + eps I) d = grad C with the Fubini-Study metric
F_ij = 4 Re[<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>], then walks
theta -> theta - lambda d with lambda grown exponentially while the cost
keeps strictly decreasing (halved when even the first step fails).
Pure states only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .circuits import Circuit, derivative_states


@dataclass
class OptimizerConfig:
    lambda0: float = 0.05
    lambda_growth: float = 2.0
    tikhonov: float = 1e-6
    delta_conv: float = 1e-6
    patience: int = 5
    max_iters: int = 5000
    seed: int = 0

    def __post_init__(self):
        if self.lambda0 <= 0 or self.lambda_growth <= 1 or self.tikhonov < 0 or self.delta_conv <= 0:
            raise ValueError("need lambda0 > 0, lambda_growth > 1, tikhonov >= 0, delta_conv > 0")


class EvalCounter:
    """Shared mutable tally of cost/gradient evaluations across cost objects."""

    __slots__ = ("count",)

    def __init__(self):
        self.count = 0

    def bump(self, k: int = 1):
        self.count += k


class CostFunction:
    """Interface the optimizer drives.

    Subclasses implement value(theta) and gradient_and_metric(theta);
    both must bump ``self.evals``. ``gradient`` alone defaults to
    dropping the metric.
    """

    def __init__(self, counter: EvalCounter | None = None):
        self.evals = counter if counter is not None else EvalCounter()

    def value(self, theta) -> float:
        raise NotImplementedError

    def gradient_and_metric(self, theta):
        raise NotImplementedError

    def gradient(self, theta) -> np.ndarray:
        return self.gradient_and_metric(theta)[0]


def fisher_metric(circuit: Circuit, theta, psi0: np.ndarray) -> np.ndarray:
    """Fubini-Study metric of |psi(theta)> = C(theta)|psi0>.

    Frozen gates appended after the last parametric gate cancel in every
    inner product, so they cannot change the metric.
    """
    psi, D = derivative_states(circuit, theta, psi0)
    return _metric_from_states(psi, D)


def _metric_from_states(psi: np.ndarray, D: np.ndarray) -> np.ndarray:
    gram = D.conj() @ D.T
    berry = D.conj() @ psi  # <d_i psi|psi>
    f = 4.0 * np.real(gram - np.outer(berry, berry.conj()))
    return 0.5 * (f + f.T)


@dataclass
class StepResult:
    theta: np.ndarray
    cost: float
    lam: float
    grad_norm: float
    stalled: bool
    fallback_gradient: bool = False


def natural_step(cost: CostFunction, theta, cfg: OptimizerConfig,
                 value_at_theta: float | None = None) -> StepResult:
    """One regularized natural-gradient update with exponential step search.

    Returns theta unchanged with ``stalled`` set when no step length
    (growth then up to 20 halvings) lowers the cost, or when the
    gradient vanishes. ``value_at_theta`` skips re-evaluating the
    incumbent cost when the caller already knows it.
    """
    theta = np.asarray(theta, dtype=float)
    c0 = cost.value(theta) if value_at_theta is None else value_at_theta
    grad, metric = cost.gradient_and_metric(theta)
    gnorm = float(np.linalg.norm(grad))
    p = theta.size
    if p == 0 or gnorm == 0.0:
        return StepResult(theta, c0, 0.0, gnorm, stalled=True)

    trace_scale = float(np.trace(metric)) / p if p else 0.0
    shift = cfg.tikhonov * (trace_scale if trace_scale > 0 else 1.0)
    fallback = False
    try:
        direction = scipy.linalg.solve(
            metric + shift * np.eye(p), grad, assume_a="sym"
        )
        if not np.all(np.isfinite(direction)):
            raise np.linalg.LinAlgError("non-finite solve")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError, ValueError):
        direction = grad / max(shift, 1e-12)
        fallback = True

    lam = cfg.lambda0
    c_prev = cost.value(theta - lam * direction)
    if np.isfinite(c_prev) and c_prev < c0:
        for _ in range(60):
            lam_next = lam * cfg.lambda_growth
            c_next = cost.value(theta - lam_next * direction)
            if np.isfinite(c_next) and c_next < c_prev:
                lam, c_prev = lam_next, c_next
            else:
                break
        return StepResult(theta - lam * direction, c_prev, lam, gnorm, False, fallback)

    for _ in range(20):
        lam /= 2.0
        c_try = cost.value(theta - lam * direction)
        if np.isfinite(c_try) and c_try < c0:
            return StepResult(theta - lam * direction, c_try, lam, gnorm, False, fallback)
    return StepResult(theta, c0, 0.0, gnorm, stalled=True, fallback_gradient=fallback)


def converged(history, cfg: OptimizerConfig) -> bool:
    """True iff the last ``patience`` improvements are each < delta_conv."""
    if len(history) < cfg.patience + 1:
        return False
    recent = history[-(cfg.patience + 1):]
    return all(recent[i] - recent[i + 1] < cfg.delta_conv for i in range(cfg.patience))


@dataclass
class MinimizeResult:
    theta: np.ndarray
    history: list[float] = field(default_factory=list)
    converged: bool = False
    stalled: bool = False


def minimize(cost: CostFunction, theta0, cfg: OptimizerConfig,
             max_iters: int | None = None, floor: float | None = None) -> MinimizeResult:
    """Iterate natural steps until convergence, stall, or the cap.

    lambda restarts from cfg.lambda0 on every iteration. ``floor`` stops
    early once the cost is good enough for the caller's purpose.
    """
    theta = np.asarray(theta0, dtype=float)
    cap = cfg.max_iters if max_iters is None else max_iters
    history = [cost.value(theta)]
    for _ in range(cap):
        if floor is not None and history[-1] <= floor:
            return MinimizeResult(theta, history, converged=True)
        step = natural_step(cost, theta, cfg, value_at_theta=history[-1])
        theta = step.theta
        history.append(step.cost)
        if step.stalled:
            return MinimizeResult(theta, history, converged=False, stalled=True)
        if converged(history, cfg):
            return MinimizeResult(theta, history, converged=True)
    return MinimizeResult(theta, history)
