"""Complete experiments: ordered measurement steps, evolution, distributions.

An experiment is a fixed initial state plus a time-ordered list of isometry
steps (measurements and controlled preparations).  Evolution under a collapse
model yields either a single coherent state (no collapse) or an ensemble of
collapsed branches, and every distribution here is computed by exact branch
and projector enumeration; nothing is ever sampled.

Conditional tables deserve one warning.  "What does agent X know about agent Y"
is evaluated on the circuit truncated at the later of the two measurements:
a superobserver step that comes afterwards acts coherently on the earlier
memories and would alter the answer.  :func:`conditional_table` applies that
truncation; :func:`conditional` itself is plain Bayes on whatever joint
distribution it is given.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .channels import (
    CollapseModel,
    Isometry,
    MeasurementIsometry,
    apply_isometry,
    branch_decomposition,
)
from .registry import SubsystemRegistry
from .states import (
    DensityMatrix,
    StateVector,
    ZeroProbabilityError,
    partial_trace,
)

ATOL_DIST = 1e-9
SUPPORT_EPS = 1e-15
CONDITION_EPS = 1e-12


@dataclass(frozen=True)
class Step:
    time: int
    iso: Isometry

    @property
    def agent(self) -> str:
        return self.iso.agent

    @property
    def is_measurement(self) -> bool:
        return isinstance(self.iso, MeasurementIsometry)


@dataclass(frozen=True)
class ExperimentSpec:
    """Initial state plus ordered steps, with an optional halting condition."""

    name: str
    registry: SubsystemRegistry
    initial: StateVector
    steps: tuple[Step, ...]
    halting: tuple[tuple[str, str], ...] | None = None

    def __post_init__(self) -> None:
        if self.initial.registry.labels != self.registry.labels:
            raise ValueError(
                "initial state registry does not match the experiment registry"
            )
        times = [s.time for s in self.steps]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError(f"step times must be strictly increasing, got {times}")
        reg = self.registry
        for step in self.steps:
            for label in step.iso.domain_labels:
                if label not in reg:
                    raise ValueError(
                        f"step at t={step.time} ({step.agent}) references unknown "
                        f"subsystem {label!r}"
                    )
            reg = reg.extended(step.iso.appended)
        if self.halting is not None:
            measuring = {s.agent: s for s in self.steps if s.is_measurement}
            for agent, outcome in self.halting:
                if agent not in measuring:
                    raise ValueError(f"halting condition names non-measuring agent {agent!r}")
                if outcome not in measuring[agent].iso.outcome_labels:
                    raise ValueError(
                        f"halting outcome {outcome!r} is not an outcome of {agent!r}"
                    )

    @property
    def measuring_steps(self) -> tuple[Step, ...]:
        return tuple(s for s in self.steps if s.is_measurement)

    @property
    def measuring_agents(self) -> tuple[str, ...]:
        return tuple(s.agent for s in self.measuring_steps)

    def step_for(self, agent: str) -> Step:
        for s in self.measuring_steps:
            if s.agent == agent:
                return s
        raise KeyError(f"no measuring agent {agent!r} in experiment {self.name!r}")

    def registry_after(self, through_time: int | None = None) -> SubsystemRegistry:
        reg = self.registry
        for step in self.steps:
            if through_time is not None and step.time > through_time:
                break
            reg = reg.extended(step.iso.appended)
        return reg


@dataclass(frozen=True)
class OutcomeAssignment:
    """One outcome label per measuring agent, in a fixed agent order."""

    outcomes: tuple[tuple[str, str], ...]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "OutcomeAssignment":
        return cls(tuple(pairs))

    @property
    def agents(self) -> tuple[str, ...]:
        return tuple(agent for agent, _ in self.outcomes)

    def __getitem__(self, agent: str) -> str:
        for a, outcome in self.outcomes:
            if a == agent:
                return outcome
        raise KeyError(f"no outcome recorded for agent {agent!r}")

    def get(self, agent: str, default: str | None = None) -> str | None:
        try:
            return self[agent]
        except KeyError:
            return default

    def as_dict(self) -> dict[str, str]:
        return dict(self.outcomes)

    def matches(self, condition: Mapping[str, str]) -> bool:
        return all(self.get(a) == o for a, o in condition.items())

    def __str__(self) -> str:
        return ",".join(f"{a}={o}" for a, o in self.outcomes)


@dataclass(frozen=True)
class JointDistribution:
    """Exact joint outcome distribution with a collapse-model provenance tag."""

    agents: tuple[str, ...]
    alphabets: dict[str, tuple[str, ...]]
    probs: dict[OutcomeAssignment, float]
    model_tag: str

    def __post_init__(self) -> None:
        total = 0.0
        for assignment, p in self.probs.items():
            if p < -CONDITION_EPS:
                raise ValueError(f"negative probability {p!r} for {assignment}")
            if assignment.agents != self.agents:
                raise ValueError(
                    f"assignment agents {assignment.agents} != {self.agents}"
                )
            for agent, outcome in assignment.outcomes:
                if outcome not in self.alphabets[agent]:
                    raise ValueError(
                        f"outcome {outcome!r} not in {agent!r}'s memory basis"
                    )
            total += p
        if abs(total - 1.0) > ATOL_DIST:
            raise ValueError(f"joint distribution sums to {total!r}, not 1")

    def probability(self, condition: Mapping[str, str]) -> float:
        """Total probability of all assignments matching a partial condition."""
        unknown = set(condition) - set(self.agents)
        if unknown:
            raise KeyError(f"unknown agents {sorted(unknown)}")
        return sum(p for a, p in self.probs.items() if a.matches(condition))

    def items_sorted(self) -> list[tuple[OutcomeAssignment, float]]:
        """Entries sorted by outcome indices in agent order (stable display)."""
        def key(item: tuple[OutcomeAssignment, float]):
            assignment = item[0]
            return tuple(
                self.alphabets[agent].index(outcome)
                for agent, outcome in assignment.outcomes
            )
        return sorted(self.probs.items(), key=key)


@dataclass(frozen=True)
class ConditionalTable:
    """P(target outcome | conditioning outcome), one column per condition.

    Columns whose conditioning outcome has zero marginal probability are
    absent, not zero-filled: conditioning on an impossible event is undefined
    rather than impossible-valued.
    """

    target: str
    given: str
    target_alphabet: tuple[str, ...]
    given_alphabet: tuple[str, ...]
    columns: dict[str, dict[str, float]]
    model_tag: str

    def __post_init__(self) -> None:
        for g, column in self.columns.items():
            total = sum(column.values())
            if abs(total - 1.0) > ATOL_DIST:
                raise ValueError(
                    f"column {g!r} sums to {total!r}, not 1 within 1e-9"
                )

    def probability(self, target_outcome: str, given_outcome: str) -> float:
        if given_outcome not in self.columns:
            raise KeyError(
                f"no column for {self.given}={given_outcome!r} (zero marginal)"
            )
        return self.columns[given_outcome][target_outcome]

    def present_columns(self) -> tuple[str, ...]:
        return tuple(g for g in self.given_alphabet if g in self.columns)


@dataclass(frozen=True)
class _Branch:
    """One collapsed-evolution branch: state plus the outcomes observed so far.

    ``records`` holds the results of measurements the model collapsed.  Those
    are what the agents actually observed at their steps; reading the memory
    factor again at the end of the circuit can differ, because a later
    superobserver measurement acts coherently on the record.
    """

    weight: float
    state: StateVector
    records: tuple[tuple[str, str], ...]

    def record(self, agent: str) -> str | None:
        for a, outcome in self.records:
            if a == agent:
                return outcome
        return None


def _evolved_branches(
    spec: ExperimentSpec,
    model: CollapseModel,
    through_time: int | None = None,
) -> list[_Branch]:
    """Weighted pure-state ensemble after evolving under the model."""
    if model.kind == "subjective" and model.agent not in spec.measuring_agents:
        raise ValueError(
            f"collapse model names unknown agent {model.agent!r} for {spec.name!r}"
        )
    branches = [_Branch(1.0, spec.initial, ())]
    for step in spec.steps:
        if through_time is not None and step.time > through_time:
            break
        if step.is_measurement and model.collapses_at(step.agent):
            nxt = []
            for b in branches:
                for label, p, branch in branch_decomposition(b.state, step.iso):
                    if branch is not None:
                        nxt.append(
                            _Branch(
                                b.weight * p,
                                branch,
                                b.records + ((step.agent, label),),
                            )
                        )
            branches = nxt
        else:
            branches = [
                _Branch(b.weight, apply_isometry(b.state, step.iso), b.records)
                for b in branches
            ]
    return branches


def _memory_readout(state: StateVector, memory_axes: list[int]) -> np.ndarray:
    """Joint outcome probabilities over the given memory axes."""
    probs = np.abs(state.tensored()) ** 2
    other = tuple(i for i in range(probs.ndim) if i not in memory_axes)
    if other:
        probs = probs.sum(axis=other)
    return probs


def _project_state_on_memory(
    state: StateVector, axis: int, index: int
) -> tuple[float, StateVector | None]:
    """Project onto one memory record; returns (probability, renormalized state)."""
    tens = state.tensored()
    mover = np.moveaxis(tens, axis, -1)
    p = float(np.sum(np.abs(mover[..., index]) ** 2))
    if p <= CONDITION_EPS:
        return 0.0, None
    out = np.zeros_like(mover)
    out[..., index] = mover[..., index] / np.sqrt(p)
    out = np.moveaxis(out, -1, axis)
    return p, StateVector(state.registry, out.reshape(-1))


def _condition_branches(
    branches: list[_Branch],
    spec: ExperimentSpec,
    model: CollapseModel,
    registry: SubsystemRegistry,
    condition: Mapping[str, str],
) -> list[_Branch]:
    """Condition the ensemble on memory outcomes, renormalizing the weights.

    If the model collapsed an agent's measurement, conditioning selects the
    matching branches (the outcome was decided at the step).  Otherwise the
    record still lives coherently in the memory factor and conditioning is a
    projective update on the final state.
    """
    work = branches
    for agent, outcome in condition.items():
        step = spec.step_for(agent)
        if outcome not in step.iso.outcome_labels:
            raise KeyError(f"{outcome!r} is not an outcome of {agent!r}")
        if model.collapses_at(agent):
            work = [b for b in work if b.record(agent) == outcome]
        else:
            axis = registry.axis(step.iso.memory_label)
            index = step.iso.outcome_labels.index(outcome)
            projected = []
            for b in work:
                p, state = _project_state_on_memory(b.state, axis, index)
                if state is not None:
                    projected.append(_Branch(b.weight * p, state, b.records))
            work = projected
    total = sum(b.weight for b in work)
    if total <= CONDITION_EPS:
        raise ZeroProbabilityError(
            f"conditioning on {dict(condition)} has zero probability"
        )
    return [_Branch(b.weight / total, b.state, b.records) for b in work]


def evolve(
    spec: ExperimentSpec,
    model: CollapseModel,
    through_time: int | None = None,
) -> JointDistribution:
    """Exact joint distribution of the outcomes observed by ``through_time``.

    Agents whose measurement the model collapsed contribute the branch
    outcome; agents measured by plain isometry contribute the diagonal
    readout of their memory factor in the final state.
    """
    branches = _evolved_branches(spec, model, through_time)
    registry = spec.registry_after(through_time)
    steps = [
        s
        for s in spec.measuring_steps
        if through_time is None or s.time <= through_time
    ]
    agents = tuple(s.agent for s in steps)
    alphabets = {s.agent: s.iso.outcome_labels for s in steps}
    readout_steps = [s for s in steps if not model.collapses_at(s.agent)]
    memory_axes = [registry.axis(s.iso.memory_label) for s in readout_steps]
    mem_dims = tuple(registry.dims[a] for a in memory_axes)

    probs: dict[OutcomeAssignment, float] = {}
    for b in branches:
        readout = b.weight * _memory_readout(b.state, memory_axes)
        for idx in np.ndindex(*mem_dims):
            p = float(readout[idx])
            if p <= SUPPORT_EPS:
                continue
            by_agent = dict(b.records)
            for s, i in zip(readout_steps, idx):
                by_agent[s.agent] = s.iso.outcome_labels[i]
            assignment = OutcomeAssignment.from_pairs(
                (agent, by_agent[agent]) for agent in agents
            )
            probs[assignment] = probs.get(assignment, 0.0) + p
    return JointDistribution(agents, alphabets, probs, model.tag)


def evolved_density(
    spec: ExperimentSpec,
    model: CollapseModel,
    through_time: int | None = None,
) -> DensityMatrix:
    """Density matrix of the evolved (possibly branch-mixed) experiment."""
    branches = _evolved_branches(spec, model, through_time)
    registry = spec.registry_after(through_time)
    d = registry.total_dimension
    rho = np.zeros((d, d), dtype=np.complex128)
    for b in branches:
        rho += b.weight * np.outer(b.state.amplitudes, b.state.amplitudes.conj())
    return DensityMatrix(registry, rho)


def marginal(joint: JointDistribution, agent: str) -> dict[str, float]:
    """Distribution of one agent's outcome, summed over everybody else."""
    if agent not in joint.agents:
        raise KeyError(f"unknown agent {agent!r}")
    out = {outcome: 0.0 for outcome in joint.alphabets[agent]}
    for assignment, p in joint.probs.items():
        out[assignment[agent]] += p
    return out


def conditional(
    joint: JointDistribution, target: str, given: str
) -> ConditionalTable:
    """Bayes' rule on a joint distribution: P(target | given)."""
    if given not in joint.agents:
        raise KeyError(f"cannot condition on agent {given!r}: not in the joint")
    if target not in joint.agents:
        raise KeyError(f"unknown target agent {target!r}")
    if target == given:
        raise ValueError("target and conditioning agent must differ")
    given_marginal = marginal(joint, given)
    columns: dict[str, dict[str, float]] = {}
    for g, pg in given_marginal.items():
        if pg <= CONDITION_EPS:
            continue
        column = {}
        for t in joint.alphabets[target]:
            column[t] = joint.probability({target: t, given: g}) / pg
        columns[g] = column
    return ConditionalTable(
        target=target,
        given=given,
        target_alphabet=joint.alphabets[target],
        given_alphabet=joint.alphabets[given],
        columns=columns,
        model_tag=joint.model_tag,
    )


def conditional_table(
    spec: ExperimentSpec,
    model: CollapseModel,
    target: str,
    given: str,
) -> ConditionalTable:
    """P(target | given) evaluated at the later of the two measurements.

    Later steps are excluded: a subsequent superobserver measurement acts
    coherently on the earlier memory records, and including it would answer a
    different question than "what can ``given`` infer about ``target``".
    """
    through = max(spec.step_for(target).time, spec.step_for(given).time)
    return conditional(evolve(spec, model, through_time=through), target, given)


def conditional_via_renormalized_state(
    spec: ExperimentSpec,
    model: CollapseModel,
    target: str,
    given: str,
    given_outcome: str,
) -> dict[str, float]:
    """Condition the evolved state on one outcome, renormalize, read the target.

    When the model collapses the conditioning agent's measurement this picks
    the collapsed branch at that step (the per-branch prediction); otherwise
    it is a projective update on the final state.  Either way it agrees with
    Bayes' rule on the joint distribution of the same model.
    """
    through = max(spec.step_for(target).time, spec.step_for(given).time)
    branches = _evolved_branches(spec, model, through_time=through)
    registry = spec.registry_after(through)
    conditioned = _condition_branches(
        branches, spec, model, registry, {given: given_outcome}
    )
    step = spec.step_for(target)
    labels = step.iso.outcome_labels
    out = {outcome: 0.0 for outcome in labels}
    if model.collapses_at(target):
        for b in conditioned:
            out[b.record(target)] += b.weight
    else:
        axis = registry.axis(step.iso.memory_label)
        for b in conditioned:
            readout = b.weight * _memory_readout(b.state, [axis])
            for i, outcome in enumerate(labels):
                out[outcome] += float(readout[i])
    return out


def memory_state(
    spec: ExperimentSpec,
    model: CollapseModel,
    discard: Iterable[str],
    given: Mapping[str, str] | None = None,
) -> DensityMatrix:
    """Evolved density matrix with the named subsystems traced out.

    ``given`` optionally conditions on observed outcomes before tracing (for
    a collapsed measurement this selects the branch; otherwise it projects
    and renormalizes), which is how a collapsed observer's conditional
    memory state is produced.
    """
    branches = _evolved_branches(spec, model)
    registry = spec.registry_after()
    if given:
        branches = _condition_branches(branches, spec, model, registry, given)
    d = registry.total_dimension
    rho_mat = np.zeros((d, d), dtype=np.complex128)
    for b in branches:
        rho_mat += b.weight * np.outer(b.state.amplitudes, b.state.amplitudes.conj())
    rho = DensityMatrix(registry, rho_mat)
    discard = set(discard)
    unknown = discard - set(registry.labels)
    if unknown:
        raise KeyError(f"unknown subsystem labels {sorted(unknown)}")
    keep = [l for l in registry.labels if l not in discard]
    return partial_trace(rho, keep)


def post_select(
    joint: JointDistribution, condition: Mapping[str, str]
) -> JointDistribution:
    """Condition a joint distribution on a partial assignment (halting round)."""
    total = joint.probability(condition)
    if total <= CONDITION_EPS:
        raise ZeroProbabilityError(
            f"post-selection on {dict(condition)} has zero probability"
        )
    probs = {
        a: p / total for a, p in joint.probs.items() if a.matches(condition)
    }
    return JointDistribution(joint.agents, joint.alphabets, probs, joint.model_tag)
