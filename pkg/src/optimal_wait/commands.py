"""Command implementations behind the optimal-wait CLI."""
import argparse
import logging
import sys
from typing import IO, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .config.optwait_config import OptimalWaitConfig
from .config.scenario_config import ScenarioConfig, dump_scenario_config, load_scenario_config
from .decorators import handle_cli_errors
from .distributions import Family, RecoveryDistribution, make_distribution
from .errors import DomainError, UsageError
from .estimation import CensoredSampleSet, FitResult, fit_censored
from .feature_regression import (FeatureVector, RegressionDataset, fit_regression, per_point_threshold,
                                 predict_params)
from .joint_opt import CoupledScenario, intervention_cost_vs_tau, joint_optimize, sequential_thresholds
from .log_io import (ModelFileRow, ParsedLog, emit_model_file, model_file_frame, parse_transition_log,
                     write_table, write_transition_log)
from .markov_cost import estimate_transition_model, hitting_times
from .simulation import Policy, TransitionRecord, ab_experiment, generate_logs
from .threshold_opt import ThresholdReport, downtime_curve, optimal_threshold

logger = logging.getLogger(__name__)

ALL_CLUSTERS = "all"


def _slots(dist: RecoveryDistribution):
    """(param1, param2) in the model-file convention: shape slot, scale slot."""
    params = dist.params
    return (None, params[0]) if len(params) == 1 else (params[0], params[1])


def _report_frame(report: ThresholdReport) -> pd.DataFrame:
    return pd.DataFrame([{
        "tau_hat": report.tau_hat,
        "boundary_case": report.boundary_case.value,
        "edt_at_tau_hat": report.edt_at_tau_hat,
        "edt_at_zero": report.edt_at_zero,
        "edt_limit": report.edt_limit,
        "tau_baseline": report.tau_baseline,
        "edt_at_baseline": report.edt_at_baseline,
        "relative_savings": report.relative_savings,
        "c_int": report.c_int,
    }])


def group_by_cluster(records: Sequence[TransitionRecord], feature: Optional[int]) -> Dict[str, List[TransitionRecord]]:
    """
    Split records by the value of feature column ``feature`` (1-based).

    Without a feature every record belongs to the single cluster "all".
    """
    if feature is None:
        return {ALL_CLUSTERS: list(records)}
    if feature < 1:
        raise UsageError(f"--cluster-feature is 1-based, got {feature}.")
    clusters: Dict[str, List[TransitionRecord]] = {}
    for record in records:
        if record.features is None or len(record.features) < feature:
            raise DomainError(f"Record for node '{record.node_id}' has no feature_{feature}.")
        clusters.setdefault(f"{record.features[feature - 1]:g}", []).append(record)
    return dict(sorted(clusters.items()))


class OptimalWaitCommands:
    """Optimal-wait CLI commands; each takes parsed arguments and writes results to ``out``."""

    def __init__(self, config: OptimalWaitConfig, out: Optional[IO[str]] = None) -> None:
        """
        Initialize command handlers.

        Args:
            config: Runtime configuration (defaults for baseline and assignment)
            out: Stream for results; standard output when omitted
        """
        self.config = config
        self.out = out if out is not None else sys.stdout

    # ---- helpers --------------------------------------------------------------

    def _emit(self, frame: pd.DataFrame, args: argparse.Namespace) -> None:
        write_table(frame, self.out, args.format)

    def _read_log(self, path: str) -> ParsedLog:
        parsed = parse_transition_log(path)
        for error in parsed.errors:
            print(f"warning: line {error.line}: {error.message}", file=sys.stderr)
        return parsed

    def _scenario(self, path: str) -> ScenarioConfig:
        return load_scenario_config(path)

    def _baseline(self, args: argparse.Namespace) -> float:
        baseline = getattr(args, "baseline_tau", None)
        return self.config.baseline_tau if baseline is None else baseline

    def _fit(self, family: Family, records, args: argparse.Namespace) -> FitResult:
        samples = CensoredSampleSet.from_records(records, args.from_state, args.to_state)
        logger.info(f"Fitting {family.value} to {samples.n_observed} observed and {samples.n_censored} censored samples")
        return fit_censored(family, samples, self.config.numerics)

    # ---- commands ---------------------------------------------------------------

    @handle_cli_errors
    def fit(self, args: argparse.Namespace) -> None:
        """Fit a family to one transition of the log, per cluster when asked."""
        family = Family.from_name(args.family)
        parsed = self._read_log(args.log)
        transition = f"{args.from_state}->{args.to_state}"
        rows, model_rows = [], []
        for cluster_id, records in group_by_cluster(parsed.records, args.cluster_feature).items():
            result = self._fit(family, records, args)
            param1, param2 = _slots(result.distribution)
            rows.append({
                "cluster_id": cluster_id, "transition": transition, "family": family.value,
                "param1": param1, "param2": param2, "log_likelihood": result.log_likelihood,
                "method": result.method.value, "converged": result.converged, "boundary": result.boundary,
            })
            if args.c_int is not None:
                report = optimal_threshold(result.distribution, args.c_int, self._baseline(args), self.config.numerics)
                model_rows.append(ModelFileRow(
                    cluster_id, transition, family.value, param1, param2, report.tau_hat, args.c_int,
                    report.tau_baseline, report.relative_savings, parsed.max_timestamp,
                ))
        self._emit(pd.DataFrame(rows), args)
        if args.model_file:
            if args.c_int is None:
                raise UsageError("--model-file needs --c-int to compute thresholds.")
            emit_model_file(model_rows, args.model_file)

    @handle_cli_errors
    def optimize(self, args: argparse.Namespace) -> None:
        """Optimal threshold for given parameters, or for a fit of the log."""
        if args.log:
            family = Family.from_name(args.family)
            dist = self._fit(family, self._read_log(args.log).records, args).distribution
        else:
            dist = make_distribution(args.family, args.shape, args.scale)
        report = optimal_threshold(dist, args.c_int, self._baseline(args), self.config.numerics)
        self._emit(_report_frame(report), args)

    @handle_cli_errors
    def cost(self, args: argparse.Namespace) -> None:
        """Intervention cost of ``--from-state`` plus the estimated transition rows."""
        records = self._read_log(args.log).records
        if args.states:
            states = [s.strip() for s in args.states.split(",") if s.strip()]
        else:
            states = list(dict.fromkeys(name for r in records for name in (r.from_state, r.to_state)))
            if args.absorbing not in states:
                states.append(args.absorbing)
        model = estimate_transition_model(records, states, args.absorbing)
        times = hitting_times(model, self.config.numerics)
        model.index(args.from_state)
        self._emit(pd.DataFrame([{"from_state": args.from_state, "c_int": times[args.from_state]}]), args)
        self.out.write("\n")
        self._emit(pd.DataFrame(model.to_rows()), args)

    @handle_cli_errors
    def regress(self, args: argparse.Namespace) -> None:
        """Feature regression of the parameters plus per-cluster thresholds."""
        family = Family.from_name(args.family)
        parsed = self._read_log(args.log)
        data = RegressionDataset.from_records(parsed.records, args.from_state, args.to_state)
        result = fit_regression(family, data, args.upper_bounds, self.config.numerics)
        if not result.converged:
            print("warning: regression did not reach its gradient tolerance", file=sys.stderr)
        weights = pd.DataFrame(result.model.weights, columns=[f"w_{k}" for k in range(data.dimension)])
        weights.insert(0, "parameter", ["shape", "scale"])
        self._emit(weights, args)

        transition = f"{args.from_state}->{args.to_state}"
        relevant = [r for r in parsed.records if r.from_state == args.from_state]
        model_rows = []
        for cluster_id, records in group_by_cluster(relevant, args.cluster_feature).items():
            features = FeatureVector.with_bias(np.mean([r.features for r in records], axis=0))
            report = per_point_threshold(result.model, features, args.c_int, self._baseline(args),
                                         self.config.numerics)
            distribution = predict_params(result.model, features)
            param1, param2 = _slots(distribution)
            model_rows.append(ModelFileRow(
                cluster_id, transition, family.value, param1, param2, report.tau_hat, args.c_int,
                report.tau_baseline, report.relative_savings, parsed.max_timestamp,
            ))
        self.out.write("\n")
        self._emit(model_file_frame(model_rows), args)
        if args.model_file:
            emit_model_file(model_rows, args.model_file)

    @handle_cli_errors
    def joint(self, args: argparse.Namespace) -> None:
        """Jointly optimal (tau1, tau2) for a scenario, next to the sequential answer."""
        config = self._scenario(args.scenario)
        if args.dump_config:
            self.out.write(dump_scenario_config(config))
            return
        result = joint_optimize(config.scenario, tuple(args.init) if args.init else None, self.config.numerics)
        row = {"tau1": result.tau1, "tau2": result.tau2, "downtime": result.downtime,
               "converged": result.converged}
        if config.scenario.C_HI > 0.0:
            reference = sequential_thresholds(config.scenario, self.config.numerics)
            row.update({"sequential_tau1": reference.tau1, "sequential_tau2": reference.tau2,
                        "sequential_downtime": reference.downtime})
        self._emit(pd.DataFrame([row]), args)

    @handle_cli_errors
    def simulate(self, args: argparse.Namespace) -> None:
        """Synthetic transition log for a scenario and policy."""
        config = self._scenario(args.scenario)
        tau1 = config.baseline_tau if args.tau1 is None else args.tau1
        records = generate_logs(config.scenario, Policy(tau1, args.tau2), args.n_episodes, args.seed)
        write_transition_log(records, args.output if args.output else self.out)

    @handle_cli_errors
    def abtest(self, args: argparse.Namespace) -> None:
        """Randomized treatment/control threshold experiment."""
        config = self._scenario(args.scenario)
        tau_control = config.baseline_tau if args.tau_control is None else args.tau_control
        tau_treatment = args.tau_treatment
        if tau_treatment is None:
            tau_treatment = optimal_threshold(config.scenario.dist1, _leg_cost(config.scenario),
                                              settings=self.config.numerics).tau_hat
            logger.info(f"Treatment threshold from the optimizer: {tau_treatment:.6g}")
        assignment = self.config.assignment_prob if args.assignment_prob is None else args.assignment_prob
        result = ab_experiment(config.scenario, Policy(tau_treatment, args.tau2), Policy(tau_control, args.tau2),
                               assignment, args.n_episodes, args.seed)
        self._emit(pd.DataFrame([{
            "tau_treatment": tau_treatment, "tau_control": tau_control,
            "treatment_mean": result.treatment_mean, "control_mean": result.control_mean,
            "treatment_n": result.treatment_n, "control_n": result.control_n,
            "t_stat": result.t_stat, "p_value": result.p_value, "assignment_prob": result.assignment_prob,
        }]), args)

    @handle_cli_errors
    def curve(self, args: argparse.Namespace) -> None:
        """Plot data: expected downtime or intervention cost against the threshold."""
        grid = np.linspace(0.0, args.tau_max, args.points)
        if args.kind == "downtime":
            dist = make_distribution(args.family, args.shape, args.scale)
            frame = pd.DataFrame(downtime_curve(dist, args.c_int, grid), columns=["tau", "expected_downtime"])
        else:
            if not args.scenario:
                raise UsageError("curve --kind cost needs --scenario.")
            base = self._scenario(args.scenario).scenario
            rows = []
            for p in args.p_values:
                coupled = CoupledScenario(base.dist1, base.dist2, p, base.B, base.C_HI, base.c_int)
                rows.extend({"p": p, "tau": tau, "c_int": cost}
                            for tau, cost in intervention_cost_vs_tau(coupled, args.c_int, grid, self.config.numerics))
            frame = pd.DataFrame(rows, columns=["p", "tau", "c_int"])
        self._emit(frame, args)


def _leg_cost(s: CoupledScenario) -> float:
    """Cost of an Unhealthy intervention ignoring bounces: fixed C_int, else the optimized PoweringOn leg."""
    if s.dist2 is None:
        if s.c_int is None:
            raise DomainError("Scenario needs either dist2 or a fixed C_int for the PoweringOn leg.")
        return s.c_int
    if s.C_HI <= 0.0:
        raise DomainError("Scenario needs C_HI > 0 to derive the PoweringOn cost.")
    return optimal_threshold(s.dist2, s.C_HI).edt_at_tau_hat
