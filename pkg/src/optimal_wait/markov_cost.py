"""Transition matrices from logs and expected time to the absorbing Ready state."""
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from .config.optwait_config import NumericSettings
from .errors import DomainError, UnknownStateError, UnreachableStateError

logger = logging.getLogger(__name__)

READY = "Ready"
_ROW_SUM_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """
    Discrete-time state machine with one absorbing state.

    ``probabilities[i, j]`` is the chance that state i moves to state j, and
    ``mean_times[i, j]`` is the mean duration of that move. Entries of
    ``mean_times`` where the probability is zero are ignored and stored as 0.
    """
    states: Tuple[str, ...]
    probabilities: np.ndarray
    mean_times: np.ndarray
    absorbing: int

    def __post_init__(self) -> None:
        states = tuple(self.states)
        n = len(states)
        if len(set(states)) != n:
            raise DomainError("State names must be unique.")
        P = np.array(self.probabilities, dtype=float)
        T = np.array(self.mean_times, dtype=float)
        if P.shape != (n, n) or T.shape != (n, n):
            raise DomainError(f"Transition matrices must be {n}x{n}.")
        if not 0 <= self.absorbing < n:
            raise DomainError(f"Absorbing index {self.absorbing} is out of range.")
        if np.any(np.isnan(P)) or np.any(P < 0.0) or np.any(P > 1.0 + _ROW_SUM_TOL):
            raise DomainError("Transition probabilities must lie in [0, 1].")
        if np.any(P[self.absorbing] != 0.0):
            raise DomainError(f"The absorbing state '{states[self.absorbing]}' must have no outgoing transitions.")
        for i in range(n):
            if i != self.absorbing and abs(P[i].sum() - 1.0) > _ROW_SUM_TOL:
                raise DomainError(f"Row '{states[i]}' sums to {P[i].sum():.12g}, not 1.")
        T = np.where(P > 0.0, T, 0.0)
        if np.any(np.isnan(T)) or np.any(T < 0.0):
            raise DomainError("Mean transition times must be non-negative.")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probabilities", P)
        object.__setattr__(self, "mean_times", T)

    @property
    def absorbing_state(self) -> str:
        return self.states[self.absorbing]

    @property
    def transient_indices(self) -> Tuple[int, ...]:
        return tuple(i for i in range(len(self.states)) if i != self.absorbing)

    @property
    def transient_states(self) -> Tuple[str, ...]:
        return tuple(self.states[i] for i in self.transient_indices)

    def index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise UnknownStateError(f"Unknown state '{state}'. Known states: {', '.join(self.states)}.") from None

    def to_rows(self) -> Sequence[Dict[str, object]]:
        """Flatten the nonzero transitions for CSV emission and day-to-day diffing."""
        rows = []
        for i, src in enumerate(self.states):
            for j, dst in enumerate(self.states):
                if self.probabilities[i, j] > 0.0:
                    rows.append({"from_state": src, "to_state": dst,
                                 "probability": self.probabilities[i, j],
                                 "mean_time": self.mean_times[i, j]})
        return rows


def estimate_transition_model(records: Iterable, states: Sequence[str], absorbing: str = READY) -> TransitionModel:
    """
    Estimate transition probabilities and mean durations from a log.

    Probabilities are transition counts divided by all transitions out of the
    source state; times are mean durations per (source, target) pair.
    Windowing (e.g. the last 30 days) is the caller's job.

    Raises:
        UnknownStateError: If a record names a state outside ``states``
        UnreachableStateError: If a transient state has no outgoing transitions
    """
    states = tuple(states)
    index = {name: i for i, name in enumerate(states)}
    if absorbing not in index:
        raise UnknownStateError(f"Absorbing state '{absorbing}' is not in the state list.")
    n = len(states)
    counts = np.zeros((n, n))
    durations = np.zeros((n, n))
    ignored = 0
    for record in records:
        for name in (record.from_state, record.to_state):
            if name not in index:
                raise UnknownStateError(f"Record for node '{record.node_id}' uses unknown state '{name}'.")
        i, j = index[record.from_state], index[record.to_state]
        if record.from_state == absorbing:
            ignored += 1
            continue
        counts[i, j] += 1
        durations[i, j] += record.duration
    if ignored:
        logger.info(f"Ignored {ignored} records leaving the absorbing state '{absorbing}'")

    a = index[absorbing]
    row_totals = counts.sum(axis=1)
    for i, name in enumerate(states):
        if i != a and row_totals[i] == 0:
            raise UnreachableStateError(f"State '{name}' has no outgoing transitions in the log.")
    with np.errstate(divide="ignore", invalid="ignore"):
        P = np.where(row_totals[:, None] > 0, counts / row_totals[:, None], 0.0)
        T = np.where(counts > 0, durations / counts, 0.0)
    logger.info(f"Estimated transition model over {int(row_totals.sum())} transitions and {n} states")
    return TransitionModel(states, P, T, a)


def expected_time_to_absorption(model: TransitionModel, settings: Optional[NumericSettings] = None) -> np.ndarray:
    """
    Expected time to reach the absorbing state from each transient state.

    Solves (I - Q) t = (P ∘ T) 1, where Q drops the absorbing row and column
    of P, with a dense LU solve with partial pivoting.

    Returns:
        Array aligned with ``model.transient_states``

    Raises:
        UnreachableStateError: If (I - Q) is singular or nearly so
    """
    settings = settings or NumericSettings()
    transient = list(model.transient_indices)
    P, T = model.probabilities, model.mean_times
    Q = P[np.ix_(transient, transient)]
    rhs = (P * T).sum(axis=1)[transient]
    system = np.eye(len(transient)) - Q
    condition = np.linalg.cond(system) if transient else 1.0
    if not np.isfinite(condition) or condition > settings.max_condition_number:
        raise UnreachableStateError(
            f"'{model.absorbing_state}' is unreachable from some transient state (condition number {condition:.3g})."
        )
    t = linalg.solve(system, rhs)
    return np.maximum(t, 0.0)


def hitting_times(model: TransitionModel, settings: Optional[NumericSettings] = None) -> Dict[str, float]:
    """Expected time to absorption keyed by state name (the absorbing state maps to 0)."""
    t = expected_time_to_absorption(model, settings)
    result = {name: float(value) for name, value in zip(model.transient_states, t)}
    result[model.absorbing_state] = 0.0
    return {name: result[name] for name in model.states}


def intervention_cost(model: TransitionModel, from_state: str, settings: Optional[NumericSettings] = None) -> float:
    """
    Average time from ``from_state`` to the absorbing state.

    Raises:
        UnknownStateError: If ``from_state`` is not part of the model
    """
    model.index(from_state)
    return hitting_times(model, settings)[from_state]
