"""World-tree core: branches, observer populations, and the event calculus.

A world state is a set of leaf branches. Each branch carries a nonnegative
weight (its share of the original trunk) and a list of observer populations.
Events (splits, deaths, declines, time steps) are pure functions from state
to state; unaffected branches are shared between snapshots, so anything that
was not touched is bit-identical before and after an event.

Counts are real numbers, not integers, so very large ensembles can be
modelled through densities instead of enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional

# Tolerance for "fractions sum to one" checks.
FRACTION_TOL = 1e-9

ALIVE = "alive"
DYING = "dying"
DEAD = "dead"

_STATUSES = (ALIVE, DYING, DEAD)


class WorldError(ValueError):
    """Raised when an event violates its preconditions."""


class UnknownBranchError(WorldError):
    pass


class UnknownKindError(WorldError):
    pass


class InvalidFractionError(WorldError):
    pass


class EmptyReferenceClassError(WorldError):
    """Raised when a probability is requested over zero conditioning measure."""


@dataclass(frozen=True)
class PersonKind:
    """A cohort label with a default quality-of-life per unit measure."""

    label: str
    baseline_quality: float = 1.0


@dataclass(frozen=True, slots=True)
class Population:
    """A cohort of identical observer copies within one branch.

    ``count`` may be fractional (a density).  ``consciousness_degree`` scales
    the amount of consciousness per copy; ``quality`` is utility per unit
    measure and never enters measure itself.  Dead populations contribute
    zero measure regardless of the other fields.
    """

    kind: str
    count: float
    status: str = ALIVE
    remaining: float = 0.0  # subjective time left, > 0 only while dying
    consciousness_degree: float = 1.0
    quality: float = 1.0

    def __post_init__(self) -> None:
        if self.count < 0:
            raise WorldError(f"negative population count {self.count} for kind {self.kind!r}")
        if not 0.0 <= self.consciousness_degree <= 1.0:
            raise WorldError(
                f"consciousness_degree {self.consciousness_degree} outside [0, 1] for kind {self.kind!r}"
            )
        if self.status not in _STATUSES:
            raise WorldError(f"unknown status {self.status!r}")
        if self.status == DYING and self.remaining <= 0.0:
            raise WorldError("dying population needs strictly positive remaining time")

    @property
    def conscious(self) -> bool:
        return self.status in (ALIVE, DYING)


@dataclass(frozen=True, slots=True)
class Branch:
    """A leaf of the world tree.

    The id encodes the outcome path: a child created by splitting branch
    ``b`` with outcome label ``x`` is named ``b.x``.  ``parent_weight`` and
    ``split_fraction`` record how the weight was derived at creation time so
    that :func:`validate` can audit the bookkeeping afterwards.
    """

    id: str
    weight: float
    populations: tuple[Population, ...] = ()
    parent: Optional[str] = None
    outcome_label: str = ""
    parent_weight: float = 0.0
    split_fraction: float = 1.0

    def path_labels(self) -> tuple[str, ...]:
        """Outcome labels along the path from the root branch to this leaf."""
        return tuple(self.id.split(".")[1:])

    def kind_measure(self, kind: Optional[str] = None) -> float:
        """Weighted conscious measure carried by this branch (optionally one kind)."""
        total = 0.0
        for pop in self.populations:
            if pop.conscious and (kind is None or pop.kind == kind):
                total += self.weight * pop.count * pop.consciousness_degree
        return total


@dataclass(frozen=True)
class WorldState:
    """Immutable snapshot: the current leaves, the clock, and accumulated
    integral measure (observer-moments) per person kind."""

    branches: tuple[Branch, ...]
    clock: float = 0.0
    integral: Mapping[str, float] = field(default_factory=dict)

    def branch(self, branch_id: str) -> Branch:
        for br in self.branches:
            if br.id == branch_id:
                return br
        raise UnknownBranchError(f"no leaf branch named {branch_id!r}")

    def kinds(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for br in self.branches:
            for pop in br.populations:
                seen.setdefault(pop.kind, None)
        return tuple(seen)

    def total_measure(self, kind: Optional[str] = None) -> float:
        return sum(br.kind_measure(kind) for br in self.branches)


# ---------------------------------------------------------------------------
# Events


@dataclass(frozen=True)
class Split:
    branch: str
    outcomes: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class Death:
    branch: str
    kind: str
    fraction: float
    mode: str = "instant"  # "instant" or "lingering"
    duration: float = 0.0
    dying_quality: float = 0.0


@dataclass(frozen=True)
class Decline:
    branch: str
    kind: str
    degree: float


@dataclass(frozen=True)
class TimeStep:
    dt: float


Event = Split | Death | Decline | TimeStep


def check_fractions(fractions: Iterable[float], context: str) -> None:
    """Outcome fractions must be nonnegative and sum to 1 within tolerance."""
    total = 0.0
    for f in fractions:
        if f < 0.0:
            raise InvalidFractionError(f"{context}: negative fraction {f}")
        total += f
    if abs(total - 1.0) > FRACTION_TOL:
        raise InvalidFractionError(f"{context}: fractions sum to {total!r}, expected 1")


def _replace_branch(state: WorldState, old: Branch, new: tuple[Branch, ...]) -> tuple[Branch, ...]:
    out: list[Branch] = []
    for br in state.branches:
        if br is old:
            out.extend(new)
        else:
            out.append(br)
    return tuple(out)


def split(state: WorldState, branch_id: str, outcomes: Iterable[tuple[str, float]]) -> WorldState:
    """Split a leaf into one child per outcome.

    Child weight is parent weight times the outcome fraction; populations are
    carried over unchanged into every child.  Total measure is preserved
    exactly up to float rounding.
    """
    outcomes = tuple(outcomes)
    if not outcomes:
        raise WorldError(f"split of {branch_id!r} needs at least one outcome")
    labels = [label for label, _ in outcomes]
    if len(set(labels)) != len(labels):
        raise WorldError(f"split of {branch_id!r} has duplicate outcome labels")
    check_fractions((f for _, f in outcomes), f"split of {branch_id!r}")
    parent = state.branch(branch_id)
    children = tuple(
        Branch(
            id=f"{parent.id}.{label}",
            weight=parent.weight * fraction,
            populations=parent.populations,
            parent=parent.id,
            outcome_label=label,
            parent_weight=parent.weight,
            split_fraction=fraction,
        )
        for label, fraction in outcomes
    )
    return replace(state, branches=_replace_branch(state, parent, children))


def apply_death(
    state: WorldState,
    branch_id: str,
    kind: str,
    fraction: float,
    mode: str = "instant",
    duration: float = 0.0,
    dying_quality: float = 0.0,
) -> WorldState:
    """Kill ``fraction`` of the alive copies of ``kind`` on one branch.

    Instant deaths move the removed copies straight to dead; lingering deaths
    move them to a dying cohort that keeps observing (and accruing measure)
    for ``duration`` units of subjective time at ``dying_quality``.  Every
    other branch is left untouched.
    """
    if not 0.0 <= fraction <= 1.0:
        raise InvalidFractionError(f"death fraction {fraction} outside [0, 1]")
    if mode not in ("instant", "lingering"):
        raise WorldError(f"unknown death mode {mode!r}")
    if mode == "lingering" and duration <= 0.0:
        raise WorldError("lingering death needs a positive duration")
    parent = state.branch(branch_id)
    if all(pop.kind != kind for pop in parent.populations):
        raise UnknownKindError(f"branch {branch_id!r} carries no populations of kind {kind!r}")

    new_pops: list[Population] = []
    for pop in parent.populations:
        if pop.kind != kind or pop.status != ALIVE or pop.count == 0.0:
            new_pops.append(pop)
            continue
        removed = pop.count * fraction
        kept = pop.count - removed
        if kept > 0.0:
            new_pops.append(replace(pop, count=kept))
        if removed > 0.0:
            if mode == "instant":
                new_pops.append(replace(pop, count=removed, status=DEAD, remaining=0.0))
            else:
                new_pops.append(
                    replace(
                        pop,
                        count=removed,
                        status=DYING,
                        remaining=duration,
                        quality=dying_quality,
                    )
                )
    child = replace(parent, populations=tuple(new_pops))
    return replace(state, branches=_replace_branch(state, parent, (child,)))


def decline(state: WorldState, branch_id: str, kind: str, degree: float) -> WorldState:
    """Lower the consciousness degree of a kind's conscious copies on one branch.

    Declines only go down: raising a degree would mint measure, which no
    event is allowed to do.
    """
    if not 0.0 <= degree <= 1.0:
        raise WorldError(f"consciousness degree {degree} outside [0, 1]")
    parent = state.branch(branch_id)
    if all(pop.kind != kind for pop in parent.populations):
        raise UnknownKindError(f"branch {branch_id!r} carries no populations of kind {kind!r}")
    for pop in parent.populations:
        if pop.kind == kind and pop.conscious and degree > pop.consciousness_degree:
            raise WorldError(
                f"decline to {degree} would raise the consciousness degree "
                f"{pop.consciousness_degree} of kind {kind!r} on branch {branch_id!r}"
            )
    new_pops = tuple(
        replace(pop, consciousness_degree=degree) if pop.kind == kind and pop.conscious else pop
        for pop in parent.populations
    )
    child = replace(parent, populations=new_pops)
    return replace(state, branches=_replace_branch(state, parent, (child,)))


def advance_time(state: WorldState, dt: float) -> WorldState:
    """Advance subjective time, accruing integral measure per kind.

    Alive copies contribute ``weight * count * degree * dt``; dying copies
    contribute the same rate but only for ``min(dt, remaining)``, after which
    they are dead.
    """
    if dt <= 0.0:
        raise WorldError(f"time step must be positive, got {dt}")
    gained: dict[str, float] = {}
    new_branches: list[Branch] = []
    for br in state.branches:
        changed = False
        new_pops: list[Population] = []
        for pop in br.populations:
            if pop.status == ALIVE:
                gained[pop.kind] = gained.get(pop.kind, 0.0) + (
                    br.weight * pop.count * pop.consciousness_degree * dt
                )
                new_pops.append(pop)
            elif pop.status == DYING:
                lived = min(dt, pop.remaining)
                gained[pop.kind] = gained.get(pop.kind, 0.0) + (
                    br.weight * pop.count * pop.consciousness_degree * lived
                )
                if pop.remaining <= dt:
                    new_pops.append(replace(pop, status=DEAD, remaining=0.0))
                else:
                    new_pops.append(replace(pop, remaining=pop.remaining - dt))
                changed = True
            else:
                new_pops.append(pop)
        new_branches.append(replace(br, populations=tuple(new_pops)) if changed else br)
    integral = dict(state.integral)
    for kind, amount in gained.items():
        integral[kind] = integral.get(kind, 0.0) + amount
    return WorldState(branches=tuple(new_branches), clock=state.clock + dt, integral=integral)


def apply_event(state: WorldState, event: Event) -> WorldState:
    if isinstance(event, Split):
        return split(state, event.branch, event.outcomes)
    if isinstance(event, Death):
        return apply_death(
            state,
            event.branch,
            event.kind,
            event.fraction,
            event.mode,
            event.duration,
            event.dying_quality,
        )
    if isinstance(event, Decline):
        return decline(state, event.branch, event.kind, event.degree)
    if isinstance(event, TimeStep):
        return advance_time(state, event.dt)
    raise WorldError(f"unknown event {event!r}")


def classical_ensemble(
    n: int,
    template: Iterable[Population],
    prefix: str = "world",
) -> WorldState:
    """A uniform classical ensemble: n branches of weight 1/n, identical contents.

    Models a very large homogeneous universe by density ratios; measure-wise
    it behaves exactly like a quantum split into n equal branches.
    """
    if n < 1:
        raise WorldError(f"ensemble size must be >= 1, got {n}")
    pops = tuple(template)
    w = 1.0 / n
    branches = tuple(
        Branch(id=f"{prefix}{i}", weight=w, populations=pops, parent_weight=w)
        for i in range(1, n + 1)
    )
    return WorldState(branches=branches)


def single_branch(branch_id: str, populations: Iterable[Population], weight: float = 1.0) -> WorldState:
    """One root branch holding the given populations."""
    br = Branch(id=branch_id, weight=weight, populations=tuple(populations), parent_weight=weight)
    return WorldState(branches=(br,))


def validate(state: WorldState) -> list[str]:
    """Audit a state against the structural invariants.

    Returns a list of human-readable violations; an empty list means the
    state is consistent.  Never raises.
    """
    problems: list[str] = []
    seen_ids: set[str] = set()
    for br in state.branches:
        if br.id in seen_ids:
            problems.append(f"duplicate branch id {br.id!r}")
        seen_ids.add(br.id)
        if br.weight < 0.0 or not math.isfinite(br.weight):
            problems.append(f"branch {br.id!r}: weight {br.weight!r} is not a nonnegative real")
        expected = br.parent_weight * br.split_fraction
        if math.isfinite(br.weight) and abs(br.weight - expected) > FRACTION_TOL * max(1.0, abs(expected)):
            problems.append(
                f"branch {br.id!r}: weight {br.weight!r} inconsistent with recorded split "
                f"({br.parent_weight!r} * {br.split_fraction!r})"
            )
        for pop in br.populations:
            if pop.count < 0.0:
                problems.append(f"branch {br.id!r}: kind {pop.kind!r} has negative count {pop.count!r}")
            if not 0.0 <= pop.consciousness_degree <= 1.0:
                problems.append(
                    f"branch {br.id!r}: kind {pop.kind!r} consciousness degree "
                    f"{pop.consciousness_degree!r} outside [0, 1]"
                )
            if pop.status == DYING and pop.remaining <= 0.0:
                problems.append(
                    f"branch {br.id!r}: dying cohort of kind {pop.kind!r} has nonpositive remaining time"
                )
    for kind, value in state.integral.items():
        if value < 0.0:
            problems.append(f"accumulated integral measure for kind {kind!r} is negative")
    return problems
