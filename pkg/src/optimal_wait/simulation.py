"""Synthetic transition logs, policy replay, Monte Carlo checks and A/B measurement."""
import logging
import math
from dataclasses import dataclass
from itertools import groupby
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from .distributions import RecoveryDistribution
from .errors import (DomainError, IncompleteEpisodeError, InsufficientSampleError,
                     UnknownStateError, ZeroVarianceError)
from .joint_opt import HUMAN_INVESTIGATE, POWERING_ON, UNHEALTHY, CoupledScenario
from .markov_cost import READY, TransitionModel

logger = logging.getLogger(__name__)

EPOCH_START = 1_700_000_000
_EPISODE_STRIDE = 1000
_MAX_EPISODE_STEPS = _EPISODE_STRIDE - 1


@dataclass(frozen=True)
class TransitionRecord:
    """One logged state change: the node spent ``duration`` seconds in ``from_state``."""
    node_id: str
    from_state: str
    to_state: str
    duration: float
    timestamp: int
    features: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        duration = float(self.duration)
        if not (duration >= 0.0 and math.isfinite(duration)):
            raise DomainError(f"Duration must be non-negative and finite, got {duration}.")
        object.__setattr__(self, "duration", duration)
        object.__setattr__(self, "timestamp", int(self.timestamp))
        if self.features is not None:
            object.__setattr__(self, "features", tuple(float(v) for v in self.features))


@dataclass(frozen=True)
class Policy:
    """Waiting thresholds: tau1 in Unhealthy, tau2 in PoweringOn."""
    tau1: float
    tau2: float = math.inf

    def __post_init__(self) -> None:
        for name in ("tau1", "tau2"):
            value = float(getattr(self, name))
            if math.isnan(value) or value < 0.0:
                raise DomainError(f"{name} must be non-negative, got {value}.")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class AbResult:
    treatment_mean: float
    control_mean: float
    treatment_n: int
    control_n: int
    t_stat: float
    p_value: float
    assignment_prob: float

    @property
    def mean_difference(self) -> float:
        return self.treatment_mean - self.control_mean


def _as_policy(policy: Union[Policy, float, Tuple[float, float]]) -> Policy:
    if isinstance(policy, Policy):
        return policy
    if isinstance(policy, tuple):
        return Policy(*policy)
    return Policy(float(policy))


def episode_rng(seed: int, episode_index: int) -> np.random.Generator:
    """Independent stream per episode, so results do not depend on execution order."""
    return np.random.default_rng([int(seed), int(episode_index)])


class _EpisodeLog:
    """Collects one episode's records with monotone synthetic timestamps."""

    def __init__(self, episode_index: int, features: Optional[Tuple[float, ...]] = None) -> None:
        self.node_id = f"node-{episode_index:06d}"
        self.base = EPOCH_START + episode_index * _EPISODE_STRIDE
        self.features = features
        self.records: List[TransitionRecord] = []

    def log(self, from_state: str, to_state: str, duration: float) -> None:
        if len(self.records) >= _MAX_EPISODE_STEPS:
            raise IncompleteEpisodeError(f"Episode for {self.node_id} did not reach {READY} within {_MAX_EPISODE_STEPS} steps.")
        self.records.append(TransitionRecord(self.node_id, from_state, to_state, duration,
                                             self.base + len(self.records), self.features))


def _scenario_episode(s: CoupledScenario, policy: Policy, rng: np.random.Generator,
                      log: _EpisodeLog) -> None:
    state = UNHEALTHY
    while state != READY:
        if state == UNHEALTHY:
            organic = s.dist1.sample(rng)
            if organic < policy.tau1:
                log.log(UNHEALTHY, READY, organic)
                state = READY
            else:
                # intervention fires: only the censoring level is logged
                log.log(UNHEALTHY, POWERING_ON, policy.tau1)
                state = POWERING_ON
        elif state == POWERING_ON:
            if s.p > 0.0 and rng.random() < s.p:
                log.log(POWERING_ON, UNHEALTHY, s.B)
                state = UNHEALTHY
            elif s.dist2 is None:
                log.log(POWERING_ON, READY, s.c_int)
                state = READY
            else:
                boot = s.dist2.sample(rng)
                if boot < policy.tau2:
                    log.log(POWERING_ON, READY, boot)
                    state = READY
                else:
                    log.log(POWERING_ON, HUMAN_INVESTIGATE, policy.tau2)
                    state = HUMAN_INVESTIGATE
        else:
            log.log(HUMAN_INVESTIGATE, READY, s.C_HI)
            state = READY


def _model_episode(model: TransitionModel, start: int, rng: np.random.Generator, log: _EpisodeLog) -> None:
    state = start
    cumulative = np.cumsum(model.probabilities, axis=1)
    while state != model.absorbing:
        nxt = min(int(np.searchsorted(cumulative[state], rng.random(), side="right")), len(model.states) - 1)
        log.log(model.states[state], model.states[nxt], model.mean_times[state, nxt])
        state = nxt


def _check_scenario(s: CoupledScenario) -> None:
    if s.dist2 is None and s.c_int is None:
        raise DomainError("Scenario needs either dist2 or a fixed C_int for the PoweringOn leg.")


def simulate_episode(source: Union[CoupledScenario, TransitionModel], policy: Policy, seed: int,
                     episode_index: int) -> List[TransitionRecord]:
    """Records of one episode, drawn from the stream for (seed, episode_index)."""
    rng = episode_rng(seed, episode_index)
    log = _EpisodeLog(episode_index)
    if isinstance(source, TransitionModel):
        start = source.index(UNHEALTHY) if UNHEALTHY in source.states else source.transient_indices[0]
        _model_episode(source, start, rng, log)
    else:
        _scenario_episode(source, policy, rng, log)
    return log.records


def generate_logs(source: Union[CoupledScenario, TransitionModel],
                  policy: Union[Policy, float, Tuple[float, float]],
                  n_episodes: int, seed: int) -> List[TransitionRecord]:
    """
    Simulate ``n_episodes`` node episodes starting in Unhealthy.

    For a scenario, each Unhealthy stay draws an organic recovery time and
    compares it with tau1; interventions log the threshold itself, so
    censored records carry no information beyond the censoring level.
    PoweringOn bounces with probability p, else recovers against tau2 and
    escalates to HumanInvestigate. For a TransitionModel the policy is
    ignored and each move logs its mean duration.

    Identical seeds produce identical record lists.
    """
    if n_episodes < 1:
        raise DomainError(f"n_episodes must be at least 1, got {n_episodes}.")
    policy = _as_policy(policy)
    if isinstance(source, CoupledScenario):
        _check_scenario(source)
    records: List[TransitionRecord] = []
    for i in range(n_episodes):
        records.extend(simulate_episode(source, policy, seed, i))
    logger.info(f"Generated {len(records)} records over {n_episodes} episodes (seed={seed})")
    return records


def generate_cluster_logs(clusters: Sequence[RecoveryDistribution], n_per_cluster: int, tau: float,
                          seed: int) -> List[TransitionRecord]:
    """
    Unhealthy exits for several clusters, tagged with one-hot cluster features.

    Recoveries below ``tau`` log Unhealthy -> Ready; the rest log an
    intervention at ``tau``.
    """
    if n_per_cluster < 1:
        raise DomainError(f"n_per_cluster must be at least 1, got {n_per_cluster}.")
    rng = np.random.default_rng(seed)
    records = []
    index = 0
    for k, dist in enumerate(clusters):
        one_hot = tuple(1.0 if j == k else 0.0 for j in range(len(clusters)))
        for duration in dist.sample_many(rng, n_per_cluster):
            log = _EpisodeLog(index, one_hot)
            if duration < tau:
                log.log(UNHEALTHY, READY, float(duration))
            else:
                log.log(UNHEALTHY, POWERING_ON, tau)
            records.extend(log.records)
            index += 1
    return records


def split_episodes(records: Sequence[TransitionRecord]) -> Dict[str, List[TransitionRecord]]:
    """Group consecutive records by node, in log order."""
    return {node: list(group) for node, group in groupby(records, key=lambda r: r.node_id)}


def episode_downtime(records: Sequence[TransitionRecord]) -> float:
    """
    Total time of one episode: the sum of its transition durations.

    Raises:
        IncompleteEpisodeError: If the episode does not end in Ready
    """
    if not records or records[-1].to_state != READY:
        node = records[0].node_id if records else "<empty>"
        raise IncompleteEpisodeError(f"Episode for {node} does not end in {READY}.")
    return float(sum(r.duration for r in records))


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> Tuple[float, float]:
    """
    Two-sided Welch t-test.

    Raises:
        InsufficientSampleError: If either sample has fewer than 2 values
        ZeroVarianceError: If both samples are constant
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise InsufficientSampleError(f"Each group needs at least 2 values, got {a.size} and {b.size}.")
    if np.var(a) == 0.0 and np.var(b) == 0.0:
        raise ZeroVarianceError("Both samples are constant; the t statistic is undefined.")
    result = stats.ttest_ind(a, b, equal_var=False)
    return float(result.statistic), float(result.pvalue)


def ab_experiment(s: CoupledScenario, tau_treatment, tau_control, assignment_prob: float,
                  n_episodes: int, seed: int) -> AbResult:
    """
    Randomized threshold experiment.

    Each episode tosses a coin with P(heads) = ``assignment_prob`` on its own
    stream; heads runs the treatment policy. Per-episode downtimes of the two
    groups are compared with a Welch t-test.
    """
    if not 0.0 < assignment_prob < 1.0:
        raise DomainError(f"Assignment probability must lie strictly between 0 and 1, got {assignment_prob}.")
    if n_episodes < 1:
        raise DomainError(f"n_episodes must be at least 1, got {n_episodes}.")
    _check_scenario(s)
    treatment_policy, control_policy = _as_policy(tau_treatment), _as_policy(tau_control)
    treatment, control = [], []
    for i in range(n_episodes):
        rng = episode_rng(seed, i)
        in_treatment = rng.random() < assignment_prob
        log = _EpisodeLog(i)
        _scenario_episode(s, treatment_policy if in_treatment else control_policy, rng, log)
        (treatment if in_treatment else control).append(episode_downtime(log.records))
    t_stat, p_value = welch_t_test(treatment, control)
    result = AbResult(
        treatment_mean=float(np.mean(treatment)),
        control_mean=float(np.mean(control)),
        treatment_n=len(treatment),
        control_n=len(control),
        t_stat=t_stat,
        p_value=p_value,
        assignment_prob=float(assignment_prob),
    )
    logger.info(f"A/B: treatment {result.treatment_mean:.6g} (n={result.treatment_n}) vs "
                f"control {result.control_mean:.6g} (n={result.control_n}), p={p_value:.3g}")
    return result


def monte_carlo_downtime(dist: RecoveryDistribution, tau: float, c_int: float, n: int,
                         rng: np.random.Generator) -> Tuple[float, float]:
    """Mean downtime of the wait-then-intervene rule over ``n`` draws, with its standard error."""
    draws = dist.sample_many(rng, n)
    downtime = np.where(draws < tau, draws, tau + c_int)
    return float(downtime.mean()), float(downtime.std(ddof=1) / math.sqrt(n))


def random_walk_absorption(model: TransitionModel, start: str, n_walks: int, seed: int,
                           max_steps: int = 100_000) -> Tuple[float, float]:
    """
    Mean time to absorption from ``start`` over seeded walks, with its standard error.

    Every move adds its mean duration, so the estimate targets the same
    quantity as the linear solve.
    """
    if start not in model.states:
        raise UnknownStateError(f"Unknown state '{start}'. Known states: {', '.join(model.states)}.")
    rng = np.random.default_rng(seed)
    cumulative = np.cumsum(model.probabilities, axis=1)
    last = len(model.states) - 1
    state = np.full(n_walks, model.index(start))
    elapsed = np.zeros(n_walks)
    for _ in range(max_steps):
        active = np.flatnonzero(state != model.absorbing)
        if active.size == 0:
            break
        u = rng.random(active.size)
        nxt = np.minimum((u[:, None] >= cumulative[state[active]]).sum(axis=1), last)
        elapsed[active] += model.mean_times[state[active], nxt]
        state[active] = nxt
    else:
        if np.any(state != model.absorbing):
            raise IncompleteEpisodeError(f"Some walks did not reach {model.absorbing_state} within {max_steps} steps.")
    return float(elapsed.mean()), float(elapsed.std(ddof=1) / math.sqrt(n_walks))
