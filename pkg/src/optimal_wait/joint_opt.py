"""Coupled Unhealthy / PoweringOn thresholds and their joint optimization."""
import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .config.optwait_config import NumericSettings
from .distributions import RecoveryDistribution
from .errors import DomainError, InfiniteMeanError, UnreachableStateError
from .markov_cost import READY, TransitionModel, hitting_times
from .threshold_opt import optimal_threshold

logger = logging.getLogger(__name__)

UNHEALTHY = "Unhealthy"
POWERING_ON = "PoweringOn"
HUMAN_INVESTIGATE = "HumanInvestigate"

_ARMIJO_C1 = 1e-4
_MIN_STEP = 1e-20


@dataclass(frozen=True)
class CoupledScenario:
    """
    Recovery laws and bounce parameters for the Unhealthy -> PoweringOn -> Ready chain.

    ``dist2`` governs PoweringOn -> Ready when it is given. Without it the
    PoweringOn -> Ready leg costs the fixed ``c_int``.
    """
    dist1: RecoveryDistribution
    dist2: Optional[RecoveryDistribution] = None
    p: float = 0.0
    B: float = 0.0
    C_HI: float = 0.0
    c_int: Optional[float] = None

    def __post_init__(self) -> None:
        p = float(self.p)
        if p == 1.0:
            raise UnreachableStateError("With p = 1 an intervention never reaches Ready.")
        if not 0.0 <= p < 1.0:
            raise DomainError(f"Bounce probability p must lie in [0, 1), got {p}.")
        for name in ("B", "C_HI"):
            value = float(getattr(self, name))
            if not (value >= 0.0 and math.isfinite(value)):
                raise DomainError(f"{name} must be non-negative and finite, got {value}.")
            object.__setattr__(self, name, value)
        if self.c_int is not None:
            c_int = float(self.c_int)
            if not (c_int > 0.0 and math.isfinite(c_int)):
                raise DomainError(f"C_int must be positive and finite, got {c_int}.")
            object.__setattr__(self, "c_int", c_int)
        object.__setattr__(self, "p", p)


@dataclass(frozen=True)
class JointResult:
    tau1: float
    tau2: float
    downtime: float
    converged: bool
    iterations: int


def _split(dist: RecoveryDistribution, tau: float) -> Tuple[float, float, float]:
    """(S(tau), F(tau), E[T | T < tau]) with the conventions tau = 0 and tau = inf."""
    tau = float(tau)
    if math.isnan(tau) or tau < 0.0:
        raise DomainError(f"Threshold must be non-negative, got {tau}.")
    if tau == 0.0:
        return 1.0, 0.0, 0.0
    if math.isinf(tau):
        try:
            return 0.0, 1.0, dist.mean()
        except InfiniteMeanError:
            return 0.0, 1.0, math.inf
    s = float(dist.survival(tau))
    return s, 1.0 - s, dist.truncated_mean_below(tau)


def _resolve_cost(s: CoupledScenario, c_int: Optional[float]) -> float:
    cost = s.c_int if c_int is None else float(c_int)
    if cost is None:
        raise DomainError("A PoweringOn -> Ready cost is required when the scenario has no dist2.")
    if not (cost > 0.0 and math.isfinite(cost)):
        raise DomainError(f"C_int must be positive and finite, got {cost}.")
    return cost


def build_two_state_model(s: CoupledScenario, tau: float, c_int: Optional[float] = None) -> TransitionModel:
    """
    Unhealthy/PoweringOn/Ready model for threshold ``tau``.

    PoweringOn bounces back to Unhealthy with probability p after B, else
    reaches Ready after ``c_int`` (the scenario's fixed cost by default).
    """
    cost = _resolve_cost(s, c_int)
    surv, fail, below = _split(s.dist1, tau)
    probabilities = np.array([
        [0.0, surv, fail],
        [s.p, 0.0, 1.0 - s.p],
        [0.0, 0.0, 0.0],
    ])
    times = np.array([
        [0.0, float(tau), below],
        [s.B, 0.0, cost],
        [0.0, 0.0, 0.0],
    ])
    return TransitionModel((UNHEALTHY, POWERING_ON, READY), probabilities, times, 2)


def intervention_cost_vs_tau(s: CoupledScenario, c_int_base: float, tau_grid: Sequence[float],
                             settings: Optional[NumericSettings] = None) -> List[Tuple[float, float]]:
    """
    C_int(tau): the PoweringOn hitting time of the two-state model across a grid.

    Flat at ``c_int_base`` when p = 0, increasing in tau otherwise, because a
    longer Unhealthy wait makes every bounce more expensive.
    """
    curve = []
    for tau in tau_grid:
        model = build_two_state_model(s, tau, c_int_base)
        curve.append((float(tau), hitting_times(model, settings)[POWERING_ON]))
    return curve


def build_four_state_model(s: CoupledScenario, tau1: float, tau2: float) -> TransitionModel:
    """Unhealthy/PoweringOn/HumanInvestigate/Ready model with a PoweringOn threshold ``tau2``."""
    if s.dist2 is None:
        raise DomainError("The four-state model needs a PoweringOn recovery distribution (dist2).")
    s1, f1, below1 = _split(s.dist1, tau1)
    s2, f2, below2 = _split(s.dist2, tau2)
    q = 1.0 - s.p
    probabilities = np.array([
        [0.0, s1, 0.0, f1],
        [s.p, 0.0, q * s2, q * f2],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0],
    ])
    times = np.array([
        [0.0, float(tau1), 0.0, below1],
        [s.B, 0.0, float(tau2), below2],
        [0.0, 0.0, 0.0, s.C_HI],
        [0.0, 0.0, 0.0, 0.0],
    ])
    return TransitionModel((UNHEALTHY, POWERING_ON, HUMAN_INVESTIGATE, READY), probabilities, times, 3)


def unhealthy_downtime(s: CoupledScenario, tau1: float, tau2: float,
                       settings: Optional[NumericSettings] = None) -> float:
    """
    Expected time from Unhealthy to Ready under thresholds (tau1, tau2).

    Without dist2 the two-state model with the fixed cost is used and tau2
    plays no role.
    """
    if s.dist2 is None:
        model = build_two_state_model(s, tau1)
    else:
        model = build_four_state_model(s, tau1, tau2)
    if not np.all(np.isfinite(model.mean_times)):
        return math.inf
    return hitting_times(model, settings)[UNHEALTHY]


def finite_difference_gradient(func: Callable[[np.ndarray], float], x: np.ndarray, rel_step: float) -> np.ndarray:
    """
    Central differences with step ``rel_step * max(|x_i|, 1)``.

    A coordinate closer to 0 than its step uses a forward difference instead,
    so the objective is never evaluated at negative thresholds.
    """
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    f0 = None
    for i in range(x.size):
        h = rel_step * max(abs(x[i]), 1.0)
        up = x.copy()
        up[i] += h
        if x[i] - h >= 0.0:
            down = x.copy()
            down[i] -= h
            grad[i] = (func(up) - func(down)) / (2.0 * h)
        else:
            if f0 is None:
                f0 = func(x)
            grad[i] = (func(up) - f0) / h
    return grad


def _projected_gradient(x: np.ndarray, grad: np.ndarray) -> np.ndarray:
    # at the lower bound only descent directions that stay feasible count
    return np.where((x <= 0.0) & (grad > 0.0), 0.0, grad)


def _descend(func: Callable[[np.ndarray], float], start: np.ndarray,
             settings: NumericSettings) -> Tuple[np.ndarray, float, bool, int]:
    """
    Projected gradient descent with Barzilai-Borwein step sizes and Armijo backtracking.

    Returns the best point, its value, the converged flag and the iteration count.
    """
    x = np.maximum(np.asarray(start, dtype=float), 0.0)
    fx = func(x)
    grad = finite_difference_gradient(func, x, settings.joint_relative_step)
    step = 0.1 * max(1.0, float(np.max(np.abs(x)))) / max(float(np.max(np.abs(grad))), 1e-12)
    for iteration in range(1, settings.joint_max_iter + 1):
        if np.max(np.abs(_projected_gradient(x, grad))) < settings.joint_grad_tol * max(abs(fx), 1e-12):
            return x, fx, True, iteration - 1
        while True:
            candidate = np.maximum(x - step * grad, 0.0)
            f_candidate = func(candidate)
            decrease = float(grad @ (x - candidate))
            if f_candidate <= fx - _ARMIJO_C1 * decrease:
                break
            step *= 0.5
            if step < _MIN_STEP:
                logger.warning(f"Joint descent line search stalled at tau={tuple(x)}")
                return x, fx, False, iteration
        new_grad = finite_difference_gradient(func, candidate, settings.joint_relative_step)
        s_k = candidate - x
        y_k = new_grad - grad
        curvature = float(s_k @ y_k)
        step = float(s_k @ s_k) / curvature if curvature > 0.0 else 2.0 * step
        x, fx, grad = candidate, f_candidate, new_grad
    logger.warning(f"Joint descent hit {settings.joint_max_iter} iterations at tau={tuple(x)}")
    return x, fx, False, settings.joint_max_iter


def _box_extent(dist: RecoveryDistribution) -> float:
    try:
        return 10.0 * dist.mean()
    except InfiniteMeanError:
        return 10.0 * dist.median()


def start_lattice(s: CoupledScenario) -> List[Tuple[float, float]]:
    """Five deterministic starting points over [0, 10 mean1] x [0, 10 mean2]."""
    if s.dist2 is None:
        raise DomainError("Joint optimization needs a PoweringOn recovery distribution (dist2).")
    box1, box2 = _box_extent(s.dist1), _box_extent(s.dist2)
    fractions = ((0.5, 0.5), (0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75))
    return [(a * box1, b * box2) for a, b in fractions]


def descend(s: CoupledScenario, start: Tuple[float, float],
            settings: Optional[NumericSettings] = None) -> JointResult:
    """Single projected descent of the Unhealthy downtime from ``start``."""
    settings = settings or NumericSettings()

    def objective(x: np.ndarray) -> float:
        return unhealthy_downtime(s, x[0], x[1], settings)

    x, fx, converged, iterations = _descend(objective, np.asarray(start, dtype=float), settings)
    logger.debug(f"Start {start} -> tau={tuple(x)} downtime={fx:.9g} converged={converged}")
    return JointResult(float(x[0]), float(x[1]), float(fx), converged, iterations)


def joint_optimize(s: CoupledScenario, init: Optional[Tuple[float, float]] = None,
                   settings: Optional[NumericSettings] = None) -> JointResult:
    """
    Minimize the Unhealthy downtime over (tau1, tau2) >= 0.

    Descends from ``init`` (when given) and from each lattice start; the
    best result by downtime wins, ties going to the lexicographically
    smallest (tau1, tau2).

    Args:
        s: Coupled scenario with both recovery distributions
        init: Extra starting point
        settings: Finite-difference step, gradient tolerance and iteration cap

    Returns:
        JointResult; ``converged`` is False when the best run stopped early
    """
    settings = settings or NumericSettings()
    starts = start_lattice(s)
    if init is not None:
        if min(init) < 0.0:
            raise DomainError(f"Starting thresholds must be non-negative, got {init}.")
        starts.insert(0, (float(init[0]), float(init[1])))

    results = [descend(s, start, settings) for start in starts]
    best = min(results, key=lambda r: (r.downtime, r.tau1, r.tau2))
    logger.info(f"Joint optimum tau1={best.tau1:.6g} tau2={best.tau2:.6g} downtime={best.downtime:.6g}")
    return best


def sequential_thresholds(s: CoupledScenario, settings: Optional[NumericSettings] = None) -> JointResult:
    """
    Optimize tau2 against C_HI first, then tau1 against the resulting PoweringOn cost.

    Exact when p = 0; with bounces it ignores the coupling and serves as a reference.
    """
    if s.dist2 is None:
        raise DomainError("Sequential optimization needs a PoweringOn recovery distribution (dist2).")
    if s.C_HI <= 0.0:
        raise DomainError("Sequential optimization needs a positive C_HI.")
    second = optimal_threshold(s.dist2, s.C_HI, settings=settings)
    first = optimal_threshold(s.dist1, second.edt_at_tau_hat, settings=settings)
    downtime = unhealthy_downtime(s, first.tau_hat, second.tau_hat, settings)
    return JointResult(first.tau_hat, second.tau_hat, downtime, True, 0)
