"""Measure of consciousness, integral measure, and effective probabilities.

Measure is weight x count x consciousness degree summed over conscious
(alive or dying) populations.  An effective probability is a ratio of
measures; it plays the role of a probability without being a physical
chance, and after deaths the conditional form renormalizes while the
measures themselves do not.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, TYPE_CHECKING

from .core import (
    ALIVE,
    DYING,
    Branch,
    EmptyReferenceClassError,
    Population,
    WorldError,
    WorldState,
)


class WindowError(WorldError):
    """Requested integration window lies outside the recorded timeline."""

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import Timeline

CONSCIOUS_STATUSES = frozenset({ALIVE, DYING})


@dataclass(frozen=True)
class Predicate:
    """Pure selector over (branch outcome path, person kind, status).

    All constraints are conjoined.  ``path_labels`` must each appear on the
    branch's outcome path; ``branch_prefix`` matches a branch id exactly or
    any of its descendants.  Statuses default to the conscious ones.
    """

    kind: Optional[str] = None
    statuses: frozenset[str] = CONSCIOUS_STATUSES
    path_labels: tuple[str, ...] = ()
    branch_prefix: Optional[str] = None

    def matches(self, branch: Branch, pop: Population) -> bool:
        if self.kind is not None and pop.kind != self.kind:
            return False
        if pop.status not in self.statuses:
            return False
        if self.path_labels:
            labels = branch.path_labels()
            if any(lbl not in labels for lbl in self.path_labels):
                return False
        if self.branch_prefix is not None:
            if branch.id != self.branch_prefix and not branch.id.startswith(self.branch_prefix + "."):
                return False
        return True

    def and_also(self, other: Optional["Predicate"]) -> "Predicate":
        """Conjunction of two predicates."""
        if other is None:
            return self
        if self.kind is not None and other.kind is not None and self.kind != other.kind:
            # Mutually exclusive kinds: matches nothing.
            return replace(self, kind=self.kind, statuses=frozenset())
        if (
            self.branch_prefix is not None
            and other.branch_prefix is not None
            and self.branch_prefix != other.branch_prefix
        ):
            longer, shorter = sorted((self.branch_prefix, other.branch_prefix), key=len, reverse=True)
            if not longer.startswith(shorter + "."):
                return replace(self, statuses=frozenset())
            prefix = longer
        else:
            prefix = self.branch_prefix if self.branch_prefix is not None else other.branch_prefix
        return Predicate(
            kind=self.kind if self.kind is not None else other.kind,
            statuses=self.statuses & other.statuses,
            path_labels=tuple(dict.fromkeys(self.path_labels + other.path_labels)),
            branch_prefix=prefix,
        )


EVERYONE = Predicate()


@dataclass(frozen=True)
class MeasureReport:
    """A measure together with the total it is taken against."""

    measure: float
    total: float

    @property
    def effective_probability(self) -> float:
        if self.total <= 0.0:
            raise EmptyReferenceClassError("effective probability over zero total measure")
        return self.measure / self.total


def measure_of(state: WorldState, pred: Predicate = EVERYONE) -> float:
    """Total conscious measure matching the predicate.

    Dead populations contribute nothing even if the predicate selects the
    dead status explicitly.
    """
    total = 0.0
    for br in state.branches:
        for pop in br.populations:
            if pop.conscious and pred.matches(br, pop):
                total += br.weight * pop.count * pop.consciousness_degree
    return total


def effective_probability(
    state: WorldState,
    pred: Predicate,
    conditional_on: Optional[Predicate] = None,
) -> float:
    """measure(pred and condition) / measure(condition).

    The unconditioned form divides by the total conscious measure.  A zero
    conditioning measure signals an empty reference class (for example, all
    observers dead) and raises.
    """
    cond = conditional_on if conditional_on is not None else EVERYONE
    denom = measure_of(state, cond)
    if denom <= 0.0:
        raise EmptyReferenceClassError(
            "conditioning measure is zero: no observers in the reference class"
        )
    return measure_of(state, pred.and_also(conditional_on)) / denom


def branch_probability(state: WorldState, pred: Predicate) -> float:
    """Share of branch weight on leaves that carry any population matching pred.

    This counts worlds rather than observers, so it answers questions of the
    form "how probable is a world where ..." as opposed to "what fraction of
    observers see ...".
    """
    total = 0.0
    matched = 0.0
    for br in state.branches:
        total += br.weight
        if any(pop.count > 0.0 and pred.matches(br, pop) for pop in br.populations):
            matched += br.weight
    if total <= 0.0:
        raise EmptyReferenceClassError("branch probability over zero total weight")
    return matched / total


def measure_report(
    state: WorldState,
    pred: Predicate,
    conditional_on: Optional[Predicate] = None,
) -> MeasureReport:
    cond = conditional_on if conditional_on is not None else EVERYONE
    return MeasureReport(
        measure=measure_of(state, pred.and_also(conditional_on)),
        total=measure_of(state, cond),
    )


# ---------------------------------------------------------------------------
# Time-resolved measure


def _segment_integral(state: WorldState, seg_start: float, dt: float, pred: Predicate,
                      lo: float, hi: float) -> float:
    """Integral of pred-measure over [lo, hi] within one time step.

    ``state`` is the snapshot at the start of the step.  Alive populations
    contribute over the whole overlap; dying populations only until their
    remaining time runs out, which may happen inside the step.
    """
    a = max(lo, seg_start)
    b = min(hi, seg_start + dt)
    if b <= a:
        return 0.0
    total = 0.0
    for br in state.branches:
        for pop in br.populations:
            if not pop.conscious or not pred.matches(br, pop):
                continue
            if pop.status == DYING:
                end = min(b, seg_start + pop.remaining)
                lived = max(0.0, end - a)
            else:
                lived = b - a
            total += br.weight * pop.count * pop.consciousness_degree * lived
    return total


def integral_measure(
    timeline: "Timeline",
    pred: Predicate = EVERYONE,
    window: Optional[tuple[float, float]] = None,
) -> float:
    """Subjective-time integral of pred-measure over a recorded run.

    Piecewise-exact: measure is constant between events except where a dying
    cohort expires, and that breakpoint is handled analytically.  Matches the
    per-kind accumulation done by time steps.
    """
    points = timeline.points
    t0, t1 = points[0].time, points[-1].time
    if window is None:
        window = (t0, t1)
    lo, hi = window
    if lo < t0 - 1e-12 or hi > t1 + 1e-12 or lo > hi:
        raise WindowError(f"window [{lo}, {hi}] outside recorded timeline [{t0}, {t1}]")
    total = 0.0
    for i in range(len(points) - 1):
        dt = points[i + 1].time - points[i].time
        if dt <= 0.0:
            continue
        total += _segment_integral(points[i].state, points[i].time, dt, pred, lo, hi)
    return total


def measure_trajectory(timeline: "Timeline") -> list[tuple[float, dict[str, float]]]:
    """Per-kind total measure sampled at every event boundary."""
    kinds: list[str] = []
    for point in timeline.points:
        for k in point.state.kinds():
            if k not in kinds:
                kinds.append(k)
    out = []
    for point in timeline.points:
        out.append((point.time, {k: point.state.total_measure(k) for k in kinds}))
    return out
