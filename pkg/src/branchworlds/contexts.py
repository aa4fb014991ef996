"""Probability contexts over branching worlds.

Four distinct senses in which measure ratios behave like probabilities are
implemented here, each valid only in its own situation:

* reflection: subjective credence after a split but before the outcome is
  revealed;
* theory confirmation: Bayesian updating over competing world models, using
  measure ratios as likelihoods;
* causal differentiation: genuine hidden-variable ignorance, where classical
  expected utility applies;
* caring coefficients: deterministic branching, where utility is linear in
  the measures themselves rather than in any probability.

Also here: the observer-moment lifespan test (finite vs infinite afterlife
models) and the togglable renormalizing semantics used to demonstrate what
goes wrong if a person's total measure is forced to stay constant through
deaths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .core import EmptyReferenceClassError, WorldError, WorldState
from .measure import EVERYONE, Predicate, effective_probability, integral_measure, measure_of
from .scenario import (
    POST_SPLIT_PRE_REVEAL,
    QIF_RENORMALIZE,
    STANDARD,
    LifespanSpec,
    Scenario,
    Timeline,
    execute,
)
from . import core

_LN2 = math.log(2.0)


class StageError(WorldError):
    """A context was evaluated outside the stage in which it is legitimate."""


# ---------------------------------------------------------------------------
# 1) Reflection


def reflection_distribution(
    state: WorldState,
    kind: str,
    stage: str = POST_SPLIT_PRE_REVEAL,
) -> dict[str, float]:
    """Subjective outcome credences for an observer who has split but not looked.

    Valid only between a split and the reveal of its outcome, which is why the
    evaluation stage must be passed in explicitly.  The returned distribution
    assigns each outcome label the kind's measure share in the leaves carrying
    that label.
    """
    if stage != POST_SPLIT_PRE_REVEAL:
        raise StageError(
            f"reflection credences are only defined post-split, pre-reveal (stage is {stage!r})"
        )
    by_label: dict[str, float] = {}
    total = 0.0
    for br in state.branches:
        m = br.kind_measure(kind)
        if m == 0.0:
            continue
        label = br.outcome_label or br.id
        by_label[label] = by_label.get(label, 0.0) + m
        total += m
    if total <= 0.0:
        raise EmptyReferenceClassError(f"kind {kind!r} has no conscious measure")
    return {label: m / total for label, m in sorted(by_label.items())}


# ---------------------------------------------------------------------------
# 2) Theory confirmation


@dataclass(frozen=True)
class Hypothesis:
    label: str
    prior: float
    model: Scenario


@dataclass(frozen=True)
class HypothesisSet:
    hypotheses: tuple[Hypothesis, ...]

    def __post_init__(self) -> None:
        if any(h.prior < 0.0 for h in self.hypotheses):
            raise WorldError("hypothesis priors must be nonnegative")
        total = sum(h.prior for h in self.hypotheses)
        if abs(total - 1.0) > core.FRACTION_TOL:
            raise WorldError(f"hypothesis priors sum to {total!r}, expected 1")
        labels = [h.label for h in self.hypotheses]
        if len(set(labels)) != len(labels):
            raise WorldError("duplicate hypothesis labels")

    def labels(self) -> tuple[str, ...]:
        return tuple(h.label for h in self.hypotheses)


def likelihood(hypothesis: Hypothesis, observation: Predicate) -> float:
    """Effective probability of the observation in the hypothesis's world model."""
    final = execute(hypothesis.model).final_state
    return effective_probability(final, observation)


def bayes_update(hyps: HypothesisSet, observation: Predicate) -> dict[str, float]:
    """Posterior over hypotheses given an observed outcome.

    posterior(h) is proportional to prior(h) times the effective probability
    of the observation under h.  Raises if every hypothesis assigns the
    observation zero likelihood.
    """
    joint = {h.label: h.prior * likelihood(h, observation) for h in hyps.hypotheses}
    norm = sum(joint.values())
    if norm <= 0.0:
        raise EmptyReferenceClassError("observation has zero likelihood under every hypothesis")
    return {label: value / norm for label, value in joint.items()}


def max_posterior_guess(posterior: Mapping[str, float]) -> str:
    """Highest-posterior label; ties break to the lexicographically smallest."""
    best = ""
    best_p = -1.0
    for label in sorted(posterior):
        if posterior[label] > best_p:
            best, best_p = label, posterior[label]
    return best


def outcome_partition(model: Scenario) -> list[tuple[str, Predicate]]:
    """Outcome labels present on the final leaves of a model, as predicates."""
    final = execute(model).final_state
    labels: list[str] = []
    for br in final.branches:
        label = br.outcome_label or br.id
        if label not in labels:
            labels.append(label)
    return [(label, Predicate(path_labels=(label,))) for label in sorted(labels)]


def measure_weighted_accuracy(
    hyps: HypothesisSet,
    true_label: str,
    outcomes: Optional[Sequence[tuple[str, Predicate]]] = None,
) -> float:
    """Fraction of measure, under the true model, that guesses the truth.

    For each possible observation, the guesser runs the Bayesian update and
    picks the maximum-posterior hypothesis; the outcomes for which that guess
    is correct are weighted by their effective probability under the true
    model.
    """
    true_hyp = None
    for h in hyps.hypotheses:
        if h.label == true_label:
            true_hyp = h
    if true_hyp is None:
        raise WorldError(f"unknown hypothesis {true_label!r}")
    if outcomes is None:
        outcomes = outcome_partition(true_hyp.model)
    final = execute(true_hyp.model).final_state
    correct = 0.0
    for _, pred in outcomes:
        p_true = effective_probability(final, pred)
        if p_true == 0.0:
            continue
        posterior = bayes_update(hyps, pred)
        if max_posterior_guess(posterior) == true_label:
            correct += p_true
    return correct


def expected_accuracy(hyps: HypothesisSet) -> float:
    """Prior-weighted accuracy of the maximum-posterior guess rule."""
    return sum(h.prior * measure_weighted_accuracy(hyps, h.label) for h in hyps.hypotheses)


# ---------------------------------------------------------------------------
# 3 + 4) Decision theory: caring coefficients and causal differentiation


CARING = "caring_coefficients"
CAUSAL = "causal_differentiation"


@dataclass(frozen=True)
class DecisionProblem:
    """Choices mapped to world models, plus what the decider cares about.

    In caring mode the utility of a choice is the measure-weighted sum of
    quality over everyone the resulting world contains.  In causal mode the
    decider faces a genuine hidden variable: ``hidden`` is its distribution
    and ``realized`` gives the utility of each (choice, hidden value) pair
    for the one copy the decider can actually affect.
    """

    choices: Mapping[str, Scenario]
    mode: str = CARING
    hidden: tuple[tuple[str, float], ...] = ()
    realized: Mapping[str, Mapping[str, float]] = None  # type: ignore[assignment]

    def scenario(self, choice: str) -> Scenario:
        if choice not in self.choices:
            raise WorldError(f"unknown choice {choice!r}")
        return self.choices[choice]


def endpoint_utility(state: WorldState, kind: Optional[str]) -> float:
    total = 0.0
    for br in state.branches:
        for pop in br.populations:
            if pop.conscious and (kind is None or pop.kind == kind):
                total += br.weight * pop.count * pop.consciousness_degree * pop.quality
    return total


def integrated_utility(timeline: Timeline, kind: Optional[str]) -> float:
    total = 0.0
    points = timeline.points
    for i in range(len(points) - 1):
        dt = points[i + 1].time - points[i].time
        if dt <= 0.0:
            continue
        for br in points[i].state.branches:
            for pop in br.populations:
                if not pop.conscious or (kind is not None and pop.kind != kind):
                    continue
                lived = min(dt, pop.remaining) if pop.status == core.DYING else dt
                total += br.weight * pop.count * pop.consciousness_degree * pop.quality * lived
    return total


def caring_utility(
    problem: DecisionProblem,
    choice: str,
    kind: Optional[str] = None,
    integrated: bool = False,
) -> float:
    """Utility linear in the measures: sum over branches and people of
    measure times quality, optionally integrated over subjective time."""
    if problem.mode != CARING:
        raise WorldError(f"caring utility requested for a {problem.mode!r} problem")
    timeline = execute(problem.scenario(choice))
    if integrated:
        return integrated_utility(timeline, kind)
    return endpoint_utility(timeline.final_state, kind)


def causal_expected_utility(problem: DecisionProblem, choice: str) -> float:
    """Classical expectation over the hidden variable of the realized utility."""
    if problem.mode != CAUSAL:
        raise WorldError(f"causal expected utility requested for a {problem.mode!r} problem")
    if not problem.hidden:
        raise WorldError("causal differentiation needs a hidden-variable distribution")
    if any(p < 0.0 for _, p in problem.hidden):
        raise WorldError("hidden-variable probabilities must be nonnegative")
    total_p = sum(p for _, p in problem.hidden)
    if abs(total_p - 1.0) > core.FRACTION_TOL:
        raise WorldError(f"hidden-variable distribution sums to {total_p!r}, expected 1")
    if problem.realized is None or choice not in problem.realized:
        raise WorldError(f"no realized utilities for choice {choice!r}")
    table = problem.realized[choice]
    value = 0.0
    for hv, p in problem.hidden:
        if hv not in table:
            raise WorldError(f"no realized utility for choice {choice!r} under {hv!r}")
        value += p * table[hv]
    return value


# ---------------------------------------------------------------------------
# Lifespan observation test


@dataclass(frozen=True)
class SurvivalModel:
    """Normal lifespan plus one of three afterlife shapes.

    ``constant`` keeps full measure for ``duration`` more subjective time
    (None means forever); ``exponential_tail`` halves the surviving measure
    every ``half_life`` after the normal lifespan ends.
    """

    normal_lifespan: float
    afterlife: str = "none"  # "none" | "constant" | "exponential_tail"
    duration: Optional[float] = None
    half_life: float = 0.0

    def __post_init__(self) -> None:
        if self.normal_lifespan <= 0.0:
            raise WorldError("normal lifespan must be positive")
        if self.afterlife not in ("none", "constant", "exponential_tail"):
            raise WorldError(f"unknown afterlife model {self.afterlife!r}")
        if self.afterlife == "exponential_tail" and self.half_life <= 0.0:
            raise WorldError("exponential tail needs half_life > 0")
        if self.duration is not None and self.duration <= 0.0:
            raise WorldError("afterlife duration must be positive (or None for unbounded)")

    def tail_integral(self, span: Optional[float]) -> float:
        """Integral measure of the afterlife over its first ``span`` units
        (None for the full tail).  Analytic; no floating-point infinities."""
        if self.afterlife == "none":
            return 0.0
        if self.afterlife == "constant":
            if self.duration is None:
                if span is None:
                    raise WorldError("unbounded constant afterlife has no finite tail integral")
                return span
            return self.duration if span is None else min(span, self.duration)
        # Exponential tail: survival fraction 2**(-t / half_life) past the lifespan.
        full = self.half_life / _LN2
        if span is None:
            return full
        return full * (1.0 - 2.0 ** (-span / self.half_life))


def lifespan_observation_probability(model: SurvivalModel, horizon: Optional[float]) -> float:
    """Probability that a random observer-moment falls inside the normal lifespan.

    ``horizon`` bounds the observation window in subjective time; None means
    unbounded, in which case the analytic limit is returned (exactly 0.0 for
    an unbounded constant afterlife).
    """
    life = model.normal_lifespan
    if horizon is not None and horizon < life:
        raise WorldError(f"horizon {horizon} is shorter than the normal lifespan {life}")
    if model.afterlife == "constant" and model.duration is None and horizon is None:
        return 0.0  # infinitely more observer-moments in the tail than in life
    tail_span = None if horizon is None else horizon - life
    return life / (life + model.tail_integral(tail_span))


def lifespan_from_spec(spec: LifespanSpec) -> tuple[SurvivalModel, Optional[float]]:
    afterlife = {"none": "none", "constant": "constant", "exponential": "exponential_tail"}[spec.afterlife]
    model = SurvivalModel(
        normal_lifespan=spec.normal_lifespan,
        afterlife=afterlife,
        duration=spec.duration,
        half_life=spec.half_life,
    )
    return model, spec.horizon


# ---------------------------------------------------------------------------
# Accounting semantics (standard vs forced renormalization)


@dataclass(frozen=True)
class SemanticsResult:
    """Adjusted per-kind measure trajectory under a semantics mode.

    ``series[kind][i]`` is the (possibly adjusted) measure at point ``i`` of
    the timeline; ``corrections`` holds the multiplier applied to standard
    measure at each point.  ``extinct_at`` records, per kind, the time its
    measure hit exactly zero, after which renormalization is undefined and
    the adjusted series is reported as zero.
    """

    times: tuple[float, ...]
    series: Mapping[str, tuple[float, ...]]
    corrections: Mapping[str, tuple[float, ...]]
    extinct_at: Mapping[str, Optional[float]]


def apply_semantics(timeline: Timeline, mode: str = STANDARD) -> SemanticsResult:
    """Per-kind measure trajectory under standard or renormalizing accounting.

    Standard mode reports measures unchanged.  The renormalizing mode
    implements the accounting it exists to refute: every split credits each
    child branch with the parent's full measure (so an ordinary n-way split
    multiplies a kind's total by n), and whenever deaths remove measure the
    survivors are rescaled so the kind's total returns to its starting
    constant.  Declines are left alone; only actual deaths (including dying
    cohorts whose time runs out) trigger the rescale.
    """
    if mode not in (STANDARD, QIF_RENORMALIZE):
        raise WorldError(f"unknown semantics mode {mode!r}")
    points = timeline.points
    kinds: list[str] = []
    for point in points:
        for k in point.state.kinds():
            if k not in kinds:
                kinds.append(k)
    times = tuple(p.time for p in points)
    standard = {k: [p.state.total_measure(k) for p in points] for k in kinds}
    if mode == STANDARD:
        return SemanticsResult(
            times=times,
            series={k: tuple(v) for k, v in standard.items()},
            corrections={k: tuple(1.0 for _ in points) for k in kinds},
            extinct_at={k: None for k in kinds},
        )

    series: dict[str, tuple[float, ...]] = {}
    corrections: dict[str, tuple[float, ...]] = {}
    extinct_at: dict[str, Optional[float]] = {}
    for kind in kinds:
        m0 = standard[kind][0]
        c = 1.0
        extinct: Optional[float] = None
        corr = [c]
        values = [m0 * c]
        for i, event in enumerate(timeline.events):
            before = standard[kind][i]
            after = standard[kind][i + 1]
            if extinct is None:
                if isinstance(event, core.Split):
                    split_branch = points[i].state.branch(event.branch)
                    if split_branch.kind_measure(kind) > 0.0:
                        c *= len(event.outcomes)
                if after < before and isinstance(event, (core.Death, core.TimeStep)):
                    if after <= 0.0:
                        extinct = points[i + 1].time
                    else:
                        c = m0 / after  # rescale survivors back to the starting total
            if extinct is not None:
                corr.append(0.0)
                values.append(0.0)
            else:
                corr.append(c)
                values.append(after * c)
        series[kind] = tuple(values)
        corrections[kind] = tuple(corr)
        extinct_at[kind] = extinct
    return SemanticsResult(times=times, series=series, corrections=corrections, extinct_at=extinct_at)


def adjusted_integral(
    timeline: Timeline,
    sem: SemanticsResult,
    pred: Predicate = EVERYONE,
    window: Optional[tuple[float, float]] = None,
) -> float:
    """Integral measure with the semantics corrections applied per kind and segment."""
    kinds = list(sem.series)
    total = 0.0
    for kind in kinds:
        kind_pred = pred.and_also(Predicate(kind=kind))
        corr = sem.corrections[kind]
        points = timeline.points
        t0, t1 = points[0].time, points[-1].time
        lo, hi = window if window is not None else (t0, t1)
        for i in range(len(points) - 1):
            dt = points[i + 1].time - points[i].time
            if dt <= 0.0 or corr[i] == 0.0:
                continue
            piece = integral_measure(
                timeline,
                kind_pred,
                (max(lo, points[i].time), min(hi, points[i + 1].time)),
            ) if points[i].time < hi and points[i + 1].time > lo else 0.0
            total += corr[i] * piece
    return total


def observer_moment_fraction(
    timeline: Timeline,
    mode: str,
    kind: str,
    cutoff: float,
) -> float:
    """Share of a kind's observer-moments that occur at ages up to ``cutoff``."""
    sem = apply_semantics(timeline, mode)
    pred = Predicate(kind=kind)
    whole = adjusted_integral(timeline, sem, pred)
    if whole <= 0.0:
        raise EmptyReferenceClassError(f"kind {kind!r} accrues no observer-moments")
    early = adjusted_integral(timeline, sem, pred, (timeline.points[0].time, cutoff))
    return early / whole
