"""Scenario files: a line-oriented schema for reproducible thought experiments.

A scenario declares person kinds, an initial world (a quantum tree root or a
classical ensemble), an ordered event script, and queries.  The format is
plain text with four sections and one declaration per line::

    name quantum_gun

    [persons]
    person experimenter quality=1.0

    [initial]
    branch root weight=1.0
    populate root experimenter count=1

    [events]
    mark before
    split root fire=0.5 click=0.5
    stage post_split_pre_reveal
    death root.fire experimenter fraction=1.0 mode=instant
    stage post_reveal

    [queries]
    measure m_before kind=experimenter at=before
    measure m_after kind=experimenter
    prob conditional_survival path~click given kind=experimenter

Comments start with ``#``.  Parsing either returns a validated Scenario or
raises :class:`ScenarioParseError` carrying every violation with its line
number.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from . import core
from .core import Death, Decline, Event, PersonKind, Population, Split, TimeStep
from .measure import CONSCIOUS_STATUSES, Predicate

# Epistemic stages; reflection-style credences are only legitimate in the
# window after a split has happened but before its outcome is known.
PRE_SPLIT = "pre_split"
POST_SPLIT_PRE_REVEAL = "post_split_pre_reveal"
POST_REVEAL = "post_reveal"
STAGES = (PRE_SPLIT, POST_SPLIT_PRE_REVEAL, POST_REVEAL)

# Measure-accounting semantics. "qif" is a deliberately fallacious mode that
# renormalizes a kind's measure back to its starting total after every death
# and credits every split with a full copy of its parent's measure; it exists
# to exhibit the consequences of that accounting, not to endorse it.
STANDARD = "standard"
QIF_RENORMALIZE = "qif"
SEMANTICS = (STANDARD, QIF_RENORMALIZE)

_STATUS_TOKENS = {
    "alive": frozenset({core.ALIVE}),
    "dying": frozenset({core.DYING}),
    "dead": frozenset({core.DEAD}),
    "conscious": CONSCIOUS_STATUSES,
    "any": frozenset({core.ALIVE, core.DYING, core.DEAD}),
}


class ScenarioError(ValueError):
    """Problem with a scenario definition or its execution."""


class ScenarioParseError(ScenarioError):
    """Carries (line number, message) pairs for every violation found."""

    def __init__(self, violations: list[tuple[int, str]]):
        self.violations = violations
        lines = "; ".join(f"line {n}: {msg}" for n, msg in violations)
        super().__init__(lines or "invalid scenario")


@dataclass(frozen=True)
class Mark:
    name: str


@dataclass(frozen=True)
class SetStage:
    stage: str


Directive = Union[Event, Mark, SetStage]


@dataclass(frozen=True)
class RootSpec:
    id: str
    weight: float = 1.0


@dataclass(frozen=True)
class PopulateSpec:
    branch: str  # a root id, or "all" for every root
    kind: str
    count: float
    degree: float = 1.0
    quality: Optional[float] = None  # None: use the kind's baseline quality


@dataclass(frozen=True)
class HypothesisSpec:
    """An inline world-model: a single split with the given outcome fractions."""

    label: str
    prior: float
    outcomes: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class LifespanSpec:
    """Closed-form observer-moment model: a normal lifespan plus an afterlife.

    ``duration`` / ``horizon`` of None mean unbounded; infinities never enter
    the arithmetic, the limits are taken analytically.
    """

    normal_lifespan: float
    afterlife: str  # "none" | "constant" | "exponential"
    duration: Optional[float] = None
    half_life: float = 0.0
    horizon: Optional[float] = None


@dataclass(frozen=True)
class Query:
    op: str
    qid: str
    pred: Optional[Predicate] = None
    given: Optional[Predicate] = None
    kind: Optional[str] = None
    at: Optional[str] = None
    frm: Optional[str] = None
    window: Optional[tuple[float, float]] = None
    observe: Optional[str] = None
    true_label: Optional[str] = None
    integrated: bool = False
    ref: Optional[str] = None
    lifespan: Optional[LifespanSpec] = None


@dataclass(frozen=True)
class Scenario:
    name: str
    kinds: tuple[PersonKind, ...] = ()
    roots: tuple[RootSpec, ...] = ()
    populations: tuple[PopulateSpec, ...] = ()
    script: tuple[Directive, ...] = ()
    queries: tuple[Query, ...] = ()
    hypotheses: tuple[HypothesisSpec, ...] = ()
    semantics: str = STANDARD

    def kind(self, label: str) -> PersonKind:
        for k in self.kinds:
            if k.label == label:
                return k
        raise ScenarioError(f"unknown person kind {label!r}")


@dataclass(frozen=True)
class TimelinePoint:
    time: float
    state: core.WorldState
    label: str
    stage: str


@dataclass(frozen=True)
class Timeline:
    """Run record: every snapshot at event boundaries, plus named marks."""

    scenario: Scenario
    points: tuple[TimelinePoint, ...]
    marks: Mapping[str, int]
    events: tuple[Event, ...]  # events[i] turned points[i] into points[i + 1]

    @property
    def final_state(self) -> core.WorldState:
        return self.points[-1].state

    def at(self, mark: Optional[str]) -> TimelinePoint:
        if mark is None:
            return self.points[-1]
        if mark not in self.marks:
            raise ScenarioError(f"unknown mark {mark!r}")
        return self.points[self.marks[mark]]


def initial_state(scenario: Scenario) -> core.WorldState:
    branches = []
    for root in scenario.roots:
        pops = []
        for spec in scenario.populations:
            if spec.branch != "all" and spec.branch != root.id:
                continue
            quality = spec.quality
            if quality is None:
                quality = scenario.kind(spec.kind).baseline_quality
            pops.append(
                Population(
                    kind=spec.kind,
                    count=spec.count,
                    consciousness_degree=spec.degree,
                    quality=quality,
                )
            )
        branches.append(
            core.Branch(
                id=root.id,
                weight=root.weight,
                populations=tuple(pops),
                parent_weight=root.weight,
            )
        )
    return core.WorldState(branches=tuple(branches))


def execute(scenario: Scenario) -> Timeline:
    """Run the event script analytically and record every snapshot."""
    state = initial_state(scenario)
    times = [0.0]
    states = [state]
    labels = ["start"]
    stages = [PRE_SPLIT]
    events: list[Event] = []
    marks: dict[str, int] = {"start": 0}
    for item in scenario.script:
        if isinstance(item, Mark):
            marks[item.name] = len(states) - 1
        elif isinstance(item, SetStage):
            stages[-1] = item.stage
        else:
            state = core.apply_event(state, item)
            events.append(item)
            times.append(state.clock)
            states.append(state)
            labels.append(_event_label(item))
            stages.append(stages[-1])
    marks["end"] = len(states) - 1
    points = tuple(
        TimelinePoint(time=t, state=s, label=l, stage=g)
        for t, s, l, g in zip(times, states, labels, stages)
    )
    return Timeline(scenario=scenario, points=points, marks=marks, events=tuple(events))


def _event_label(event: Event) -> str:
    if isinstance(event, Split):
        return f"split {event.branch}"
    if isinstance(event, Death):
        return f"death {event.branch} {event.kind}"
    if isinstance(event, Decline):
        return f"decline {event.branch} {event.kind}"
    if isinstance(event, TimeStep):
        return f"time {event.dt!r}"
    return repr(event)


def hypothesis_scenario(host: Scenario, spec: HypothesisSpec) -> Scenario:
    """Materialize an inline hypothesis as a one-split world model."""
    return Scenario(
        name=f"{host.name}::{spec.label}",
        kinds=host.kinds,
        roots=(RootSpec(id="root", weight=1.0),),
        populations=tuple(
            PopulateSpec(branch="root", kind=k.label, count=1.0) for k in host.kinds
        ),
        script=(
            Split(branch="root", outcomes=spec.outcomes),
            SetStage(POST_SPLIT_PRE_REVEAL),
        ),
    )


# ---------------------------------------------------------------------------
# Parsing


_IDENT_OK = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_")


def _is_ident(token: str) -> bool:
    return bool(token) and token[0] not in "0123456789" and set(token) <= _IDENT_OK


def _is_branch_ref(token: str) -> bool:
    return bool(token) and all(_is_ident(part) for part in token.split("."))


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.violations: list[tuple[int, str]] = []
        self.name = ""
        self.semantics = STANDARD
        self.kinds: list[PersonKind] = []
        self.roots: list[RootSpec] = []
        self.populations: list[PopulateSpec] = []
        self.script: list[Directive] = []
        self.queries: list[Query] = []
        self.hypotheses: list[HypothesisSpec] = []
        # Static tracking for reference checking.
        self.leaves: set[str] = set()
        self.mark_names: set[str] = {"start", "end"}
        self.query_ids: dict[str, str] = {}  # id -> op

    def fail(self, line_no: int, message: str) -> None:
        self.violations.append((line_no, message))

    def number(self, line_no: int, token: str, what: str) -> Optional[float]:
        try:
            return float(token)
        except ValueError:
            self.fail(line_no, f"{what}: not a number: {token!r}")
            return None

    def kv(self, line_no: int, tokens: list[str], allowed: dict[str, str],
           required: tuple[str, ...] = ()) -> Optional[dict[str, object]]:
        """Parse key=value tokens; ``allowed`` maps key -> 'num'|'ident'|'num_or_inf'."""
        out: dict[str, object] = {}
        ok = True
        for tok in tokens:
            if "=" not in tok:
                self.fail(line_no, f"expected key=value, got {tok!r}")
                ok = False
                continue
            key, _, val = tok.partition("=")
            if key not in allowed:
                self.fail(line_no, f"unknown key {key!r}")
                ok = False
                continue
            if key in out:
                self.fail(line_no, f"duplicate key {key!r}")
                ok = False
                continue
            typ = allowed[key]
            if typ == "num":
                num = self.number(line_no, val, key)
                if num is None:
                    ok = False
                    continue
                out[key] = num
            elif typ == "num_or_inf":
                if val == "inf":
                    out[key] = None
                else:
                    num = self.number(line_no, val, key)
                    if num is None:
                        ok = False
                        continue
                    out[key] = num
            else:
                out[key] = val
        for key in required:
            if key not in out:
                self.fail(line_no, f"missing required key {key!r}")
                ok = False
        return out if ok else None

    def predicate(self, line_no: int, tokens: list[str]) -> Optional[Predicate]:
        kind = None
        statuses = CONSCIOUS_STATUSES
        path: list[str] = []
        prefix = None
        ok = True
        for tok in tokens:
            if tok.startswith("path~"):
                label = tok[len("path~"):]
                if not _is_ident(label):
                    self.fail(line_no, f"bad outcome label in {tok!r}")
                    ok = False
                else:
                    path.append(label)
            elif tok.startswith("kind="):
                kind = tok[len("kind="):]
                if not any(k.label == kind for k in self.kinds):
                    self.fail(line_no, f"undeclared person kind {kind!r}")
                    ok = False
            elif tok.startswith("status="):
                value = tok[len("status="):]
                if value not in _STATUS_TOKENS:
                    self.fail(line_no, f"unknown status {value!r}")
                    ok = False
                else:
                    statuses = _STATUS_TOKENS[value]
            elif tok.startswith("branch="):
                prefix = tok[len("branch="):]
                if not _is_branch_ref(prefix):
                    self.fail(line_no, f"bad branch reference {prefix!r}")
                    ok = False
            else:
                self.fail(line_no, f"unknown predicate term {tok!r}")
                ok = False
        if not ok:
            return None
        return Predicate(kind=kind, statuses=statuses, path_labels=tuple(path), branch_prefix=prefix)

    # -- section handlers ---------------------------------------------------

    def top_level(self, line_no: int, tokens: list[str]) -> None:
        head = tokens[0]
        if head == "name":
            if len(tokens) != 2 or not _is_ident(tokens[1]):
                self.fail(line_no, "usage: name <identifier>")
            else:
                self.name = tokens[1]
        elif head == "semantics":
            if len(tokens) != 2 or tokens[1] not in SEMANTICS:
                self.fail(line_no, f"usage: semantics {'|'.join(SEMANTICS)}")
            else:
                self.semantics = tokens[1]
        else:
            self.fail(line_no, f"unknown declaration {head!r} before any section")

    def persons(self, line_no: int, tokens: list[str]) -> None:
        if tokens[0] != "person" or len(tokens) < 2:
            self.fail(line_no, "usage: person <label> [quality=<q>]")
            return
        label = tokens[1]
        if not _is_ident(label):
            self.fail(line_no, f"bad person label {label!r}")
            return
        if any(k.label == label for k in self.kinds):
            self.fail(line_no, f"duplicate person label {label!r}")
            return
        opts = self.kv(line_no, tokens[2:], {"quality": "num"})
        if opts is None:
            return
        self.kinds.append(PersonKind(label=label, baseline_quality=float(opts.get("quality", 1.0))))

    def initial(self, line_no: int, tokens: list[str]) -> None:
        head = tokens[0]
        if head == "branch":
            if len(tokens) < 2 or not _is_ident(tokens[1]):
                self.fail(line_no, "usage: branch <id> [weight=<w>]")
                return
            if tokens[1] in self.leaves:
                self.fail(line_no, f"duplicate branch id {tokens[1]!r}")
                return
            opts = self.kv(line_no, tokens[2:], {"weight": "num"})
            if opts is None:
                return
            weight = float(opts.get("weight", 1.0))
            if weight < 0:
                self.fail(line_no, f"negative branch weight {weight}")
                return
            self.roots.append(RootSpec(id=tokens[1], weight=weight))
            self.leaves.add(tokens[1])
        elif head == "ensemble":
            if len(tokens) < 2:
                self.fail(line_no, "usage: ensemble <n> [prefix=<id>]")
                return
            try:
                n = int(tokens[1])
            except ValueError:
                self.fail(line_no, f"ensemble size must be an integer, got {tokens[1]!r}")
                return
            if n < 1:
                self.fail(line_no, f"ensemble size must be >= 1, got {n}")
                return
            opts = self.kv(line_no, tokens[2:], {"prefix": "ident"})
            if opts is None:
                return
            prefix = str(opts.get("prefix", "world"))
            if not _is_ident(prefix):
                self.fail(line_no, f"bad ensemble prefix {prefix!r}")
                return
            for i in range(1, n + 1):
                root_id = f"{prefix}{i}"
                if root_id in self.leaves:
                    self.fail(line_no, f"ensemble branch id {root_id!r} collides")
                    return
                self.roots.append(RootSpec(id=root_id, weight=1.0 / n))
                self.leaves.add(root_id)
        elif head == "populate":
            if len(tokens) < 3:
                self.fail(line_no, "usage: populate <branch|all> <kind> count=<n> [degree=<d>] [quality=<q>]")
                return
            branch, kind = tokens[1], tokens[2]
            if branch != "all" and branch not in self.leaves:
                self.fail(line_no, f"undeclared branch {branch!r}")
                return
            if not any(k.label == kind for k in self.kinds):
                self.fail(line_no, f"undeclared person kind {kind!r}")
                return
            opts = self.kv(line_no, tokens[3:], {"count": "num", "degree": "num", "quality": "num"},
                           required=("count",))
            if opts is None:
                return
            count = float(opts["count"])
            degree = float(opts.get("degree", 1.0))
            if count < 0:
                self.fail(line_no, f"negative count {count}")
                return
            if not 0.0 <= degree <= 1.0:
                self.fail(line_no, f"degree {degree} outside [0, 1]")
                return
            quality = opts.get("quality")
            self.populations.append(
                PopulateSpec(branch=branch, kind=kind, count=count, degree=degree,
                             quality=None if quality is None else float(quality))
            )
        else:
            self.fail(line_no, f"unknown initial declaration {head!r}")

    def events(self, line_no: int, tokens: list[str]) -> None:
        head = tokens[0]
        if head == "split":
            if len(tokens) < 3:
                self.fail(line_no, "usage: split <branch> <label>=<fraction> ...")
                return
            branch = tokens[1]
            if branch not in self.leaves:
                self.fail(line_no, f"split references unknown leaf {branch!r}")
                return
            outcomes: list[tuple[str, float]] = []
            total = 0.0
            for tok in tokens[2:]:
                label, _, frac = tok.partition("=")
                if not _is_ident(label) or not frac:
                    self.fail(line_no, f"bad outcome {tok!r}")
                    return
                num = self.number(line_no, frac, f"fraction for {label!r}")
                if num is None:
                    return
                if num < 0:
                    self.fail(line_no, f"negative fraction for outcome {label!r}")
                    return
                outcomes.append((label, num))
                total += num
            labels = [l for l, _ in outcomes]
            if len(set(labels)) != len(labels):
                self.fail(line_no, f"duplicate outcome labels in split of {branch!r}")
                return
            if abs(total - 1.0) > core.FRACTION_TOL:
                self.fail(line_no, f"split of {branch!r}: fractions sum to {total!r}, expected 1")
                return
            self.script.append(Split(branch=branch, outcomes=tuple(outcomes)))
            self.leaves.discard(branch)
            self.leaves.update(f"{branch}.{label}" for label in labels)
        elif head == "death":
            if len(tokens) < 3:
                self.fail(line_no, "usage: death <branch> <kind> fraction=<f> [mode=...] [duration=<t>] [quality=<q>]")
                return
            branch, kind = tokens[1], tokens[2]
            if branch not in self.leaves:
                self.fail(line_no, f"death references unknown leaf {branch!r}")
                return
            if not any(k.label == kind for k in self.kinds):
                self.fail(line_no, f"undeclared person kind {kind!r}")
                return
            opts = self.kv(line_no, tokens[3:],
                           {"fraction": "num", "mode": "ident", "duration": "num", "quality": "num"},
                           required=("fraction",))
            if opts is None:
                return
            fraction = float(opts["fraction"])
            mode = str(opts.get("mode", "instant"))
            if not 0.0 <= fraction <= 1.0:
                self.fail(line_no, f"death fraction {fraction} outside [0, 1]")
                return
            if mode not in ("instant", "lingering"):
                self.fail(line_no, f"unknown death mode {mode!r}")
                return
            duration = float(opts.get("duration", 0.0))
            if mode == "lingering" and duration <= 0:
                self.fail(line_no, "lingering death needs duration > 0")
                return
            self.script.append(
                Death(branch=branch, kind=kind, fraction=fraction, mode=mode,
                      duration=duration, dying_quality=float(opts.get("quality", 0.0)))
            )
        elif head == "decline":
            if len(tokens) < 3:
                self.fail(line_no, "usage: decline <branch> <kind> degree=<d>")
                return
            branch, kind = tokens[1], tokens[2]
            if branch not in self.leaves:
                self.fail(line_no, f"decline references unknown leaf {branch!r}")
                return
            if not any(k.label == kind for k in self.kinds):
                self.fail(line_no, f"undeclared person kind {kind!r}")
                return
            opts = self.kv(line_no, tokens[3:], {"degree": "num"}, required=("degree",))
            if opts is None:
                return
            degree = float(opts["degree"])
            if not 0.0 <= degree <= 1.0:
                self.fail(line_no, f"degree {degree} outside [0, 1]")
                return
            self.script.append(Decline(branch=branch, kind=kind, degree=degree))
        elif head == "time":
            if len(tokens) != 2:
                self.fail(line_no, "usage: time <dt>")
                return
            dt = self.number(line_no, tokens[1], "dt")
            if dt is None:
                return
            if dt <= 0:
                self.fail(line_no, f"time step must be positive, got {dt}")
                return
            self.script.append(TimeStep(dt=dt))
        elif head == "mark":
            if len(tokens) != 2 or not _is_ident(tokens[1]):
                self.fail(line_no, "usage: mark <name>")
                return
            if tokens[1] in self.mark_names:
                self.fail(line_no, f"duplicate mark {tokens[1]!r}")
                return
            self.mark_names.add(tokens[1])
            self.script.append(Mark(name=tokens[1]))
        elif head == "stage":
            if len(tokens) != 2 or tokens[1] not in STAGES:
                self.fail(line_no, f"usage: stage {'|'.join(STAGES)}")
                return
            self.script.append(SetStage(stage=tokens[1]))
        else:
            self.fail(line_no, f"unknown event {head!r}")

    def queries_section(self, line_no: int, tokens: list[str]) -> None:
        head = tokens[0]
        if head == "hypothesis":
            if len(tokens) < 3:
                self.fail(line_no, "usage: hypothesis <label> prior=<p> <outcome>=<fraction> ...")
                return
            label = tokens[1]
            if not _is_ident(label):
                self.fail(line_no, f"bad hypothesis label {label!r}")
                return
            if any(h.label == label for h in self.hypotheses):
                self.fail(line_no, f"duplicate hypothesis {label!r}")
                return
            prior = None
            outcomes: list[tuple[str, float]] = []
            for tok in tokens[2:]:
                key, _, val = tok.partition("=")
                num = self.number(line_no, val, key)
                if num is None:
                    return
                if key == "prior":
                    prior = num
                elif _is_ident(key):
                    outcomes.append((key, num))
                else:
                    self.fail(line_no, f"bad outcome label {key!r}")
                    return
            if prior is None or not outcomes:
                self.fail(line_no, "hypothesis needs prior=<p> and at least one outcome")
                return
            total = sum(f for _, f in outcomes)
            if any(f < 0 for _, f in outcomes) or abs(total - 1.0) > core.FRACTION_TOL:
                self.fail(line_no, f"hypothesis {label!r}: outcome fractions must be >= 0 and sum to 1")
                return
            self.hypotheses.append(HypothesisSpec(label=label, prior=prior, outcomes=tuple(outcomes)))
            return

        if len(tokens) < 2 or not _is_ident(tokens[1]):
            self.fail(line_no, f"query needs an identifier: {' '.join(tokens)!r}")
            return
        qid = tokens[1]
        if qid in self.query_ids:
            self.fail(line_no, f"duplicate query id {qid!r}")
            return
        rest = tokens[2:]

        def split_opts(keys: dict[str, str]) -> tuple[list[str], Optional[dict[str, object]]]:
            plain = [t for t in rest if t.partition("=")[0] not in keys]
            opts = self.kv(line_no, [t for t in rest if t.partition("=")[0] in keys], keys)
            return plain, opts

        if head in ("measure", "branchprob"):
            plain, opts = split_opts({"at": "ident"})
            if opts is None:
                return
            pred = self.predicate(line_no, plain)
            if pred is None:
                return
            self._want_mark(line_no, opts.get("at"))
            self.queries.append(Query(op=head, qid=qid, pred=pred, at=opts.get("at")))
        elif head == "prob":
            if "given" in rest:
                cut = rest.index("given")
                pred_toks, given_toks = rest[:cut], rest[cut + 1:]
            else:
                pred_toks, given_toks = rest, None
            at = None
            kept = []
            for tok in pred_toks:
                if tok.startswith("at="):
                    at = tok[len("at="):]
                else:
                    kept.append(tok)
            pred = self.predicate(line_no, kept)
            given = self.predicate(line_no, given_toks) if given_toks is not None else None
            if pred is None or (given_toks is not None and given is None):
                return
            self._want_mark(line_no, at)
            self.queries.append(Query(op="prob", qid=qid, pred=pred, given=given, at=at))
        elif head == "survival":
            plain, opts = split_opts({"kind": "ident", "from": "ident", "at": "ident"})
            if opts is None or plain:
                self.fail(line_no, "usage: survival <id> kind=<kind> [from=<mark>] [at=<mark>]")
                return
            kind = opts.get("kind")
            if kind is None or not any(k.label == kind for k in self.kinds):
                self.fail(line_no, f"survival query needs a declared kind, got {kind!r}")
                return
            self._want_mark(line_no, opts.get("from"))
            self._want_mark(line_no, opts.get("at"))
            self.queries.append(Query(op="survival", qid=qid, kind=str(kind),
                                      frm=opts.get("from"), at=opts.get("at")))
        elif head == "reflection":
            plain, opts = split_opts({"kind": "ident", "at": "ident"})
            if opts is None or plain:
                self.fail(line_no, "usage: reflection <id> kind=<kind> [at=<mark>]")
                return
            kind = opts.get("kind")
            if kind is None or not any(k.label == kind for k in self.kinds):
                self.fail(line_no, f"reflection query needs a declared kind, got {kind!r}")
                return
            self._want_mark(line_no, opts.get("at"))
            self.queries.append(Query(op="reflection", qid=qid, kind=str(kind), at=opts.get("at")))
        elif head == "bayes":
            plain, opts = split_opts({"observe": "ident"})
            if opts is None or plain or "observe" not in opts:
                self.fail(line_no, "usage: bayes <id> observe=<outcome>")
                return
            self.queries.append(Query(op="bayes", qid=qid, observe=str(opts["observe"])))
        elif head == "accuracy":
            plain, opts = split_opts({"true": "ident"})
            if opts is None or plain or "true" not in opts:
                self.fail(line_no, "usage: accuracy <id> true=<hypothesis>")
                return
            self.queries.append(Query(op="accuracy", qid=qid, true_label=str(opts["true"])))
        elif head == "utility":
            integrated = "integrated" in rest
            plain, opts = split_opts({"kind": "ident"})
            plain = [t for t in plain if t != "integrated"]
            if opts is None or plain:
                self.fail(line_no, "usage: utility <id> [kind=<kind>] [integrated]")
                return
            kind = opts.get("kind")
            if kind is not None and not any(k.label == kind for k in self.kinds):
                self.fail(line_no, f"undeclared person kind {kind!r}")
                return
            self.queries.append(Query(op="utility", qid=qid, kind=kind, integrated=integrated))
        elif head == "integral":
            plain, opts = split_opts({"from": "num", "to": "num"})
            if opts is None or "from" not in opts or "to" not in opts:
                self.fail(line_no, "usage: integral <id> [<pred>] from=<t0> to=<t1>")
                return
            pred = self.predicate(line_no, plain)
            if pred is None:
                return
            lo, hi = float(opts["from"]), float(opts["to"])
            if lo > hi:
                self.fail(line_no, f"empty window [{lo}, {hi}]")
                return
            self.queries.append(Query(op="integral", qid=qid, pred=pred, window=(lo, hi)))
        elif head == "trajectory":
            plain, opts = split_opts({"kind": "ident"})
            if opts is None or plain:
                self.fail(line_no, "usage: trajectory <id> [kind=<kind>]")
                return
            kind = opts.get("kind")
            if kind is not None and not any(k.label == kind for k in self.kinds):
                self.fail(line_no, f"undeclared person kind {kind!r}")
                return
            self.queries.append(Query(op="trajectory", qid=qid, kind=kind))
        elif head == "lifespan":
            plain, opts = split_opts({
                "lifespan": "num", "afterlife": "ident", "duration": "num_or_inf",
                "half_life": "num", "horizon": "num_or_inf",
            })
            if opts is None or plain or "lifespan" not in opts or "afterlife" not in opts:
                self.fail(line_no, "usage: lifespan <id> lifespan=<L> afterlife=<kind> [duration=..] "
                                   "[half_life=..] horizon=<T|inf>")
                return
            afterlife = str(opts["afterlife"])
            if afterlife not in ("none", "constant", "exponential"):
                self.fail(line_no, f"unknown afterlife {afterlife!r}")
                return
            lifespan = float(opts["lifespan"])  # type: ignore[arg-type]
            if lifespan <= 0:
                self.fail(line_no, f"lifespan must be positive, got {lifespan}")
                return
            half_life = float(opts.get("half_life", 0.0))  # type: ignore[arg-type]
            if afterlife == "exponential" and half_life <= 0:
                self.fail(line_no, "exponential afterlife needs half_life > 0")
                return
            if "horizon" not in opts:
                self.fail(line_no, "lifespan query needs horizon=<T|inf>")
                return
            self.queries.append(Query(op="lifespan", qid=qid, lifespan=LifespanSpec(
                normal_lifespan=lifespan,
                afterlife=afterlife,
                duration=opts.get("duration"),  # type: ignore[arg-type]
                half_life=half_life,
                horizon=opts.get("horizon"),  # type: ignore[arg-type]
            )))
        elif head == "oracle":
            plain, opts = split_opts({"ref": "ident"})
            if opts is None or plain or "ref" not in opts:
                self.fail(line_no, "usage: oracle <id> ref=<query-id>")
                return
            ref = str(opts["ref"])
            if self.query_ids.get(ref) not in ("prob", "survival", "branchprob"):
                self.fail(line_no, f"oracle ref {ref!r} must name an earlier prob/survival/branchprob query")
                return
            self.queries.append(Query(op="oracle", qid=qid, ref=ref))
        else:
            self.fail(line_no, f"unknown query {head!r}")
            return
        self.query_ids[qid] = head

    def _want_mark(self, line_no: int, mark: object) -> None:
        if mark is not None and mark not in self.mark_names:
            self.fail(line_no, f"unknown mark {mark!r}")

    # -- driver ---------------------------------------------------------------

    def parse(self) -> Scenario:
        section = None
        handlers = {
            "persons": self.persons,
            "initial": self.initial,
            "events": self.events,
            "queries": self.queries_section,
        }
        for line_no, raw in enumerate(self.text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section not in handlers:
                    self.fail(line_no, f"unknown section [{section}]")
                    section = None
                continue
            tokens = line.split()
            if section is None:
                self.top_level(line_no, tokens)
            else:
                handlers[section](line_no, tokens)
        if not self.name:
            self.fail(0, "scenario needs a 'name <identifier>' line")
        if not self.roots:
            self.fail(0, "scenario needs at least one initial branch or ensemble")
        for q in self.queries:
            if q.op in ("bayes", "accuracy") and not self.hypotheses:
                self.fail(0, f"query {q.qid!r} needs hypothesis declarations")
            if q.op == "accuracy" and not any(h.label == q.true_label for h in self.hypotheses):
                self.fail(0, f"query {q.qid!r}: unknown hypothesis {q.true_label!r}")
        if self.hypotheses:
            total = sum(h.prior for h in self.hypotheses)
            if any(h.prior < 0 for h in self.hypotheses) or abs(total - 1.0) > core.FRACTION_TOL:
                self.fail(0, f"hypothesis priors must be >= 0 and sum to 1, got {total!r}")
        if self.violations:
            raise ScenarioParseError(sorted(self.violations))
        return Scenario(
            name=self.name,
            kinds=tuple(self.kinds),
            roots=tuple(self.roots),
            populations=tuple(self.populations),
            script=tuple(self.script),
            queries=tuple(self.queries),
            hypotheses=tuple(self.hypotheses),
            semantics=self.semantics,
        )


def parse_scenario(text: str) -> Scenario:
    """Parse scenario text, raising ScenarioParseError with located violations."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# Serialization (the exact inverse of parsing)


def _fmt(value: float) -> str:
    return repr(float(value))


def _pred_tokens(pred: Predicate) -> list[str]:
    toks = []
    if pred.kind is not None:
        toks.append(f"kind={pred.kind}")
    if pred.statuses != CONSCIOUS_STATUSES:
        for token, statuses in _STATUS_TOKENS.items():
            if statuses == pred.statuses:
                toks.append(f"status={token}")
                break
        else:
            raise ScenarioError(f"predicate status set {set(pred.statuses)!r} has no text form")
    toks.extend(f"path~{label}" for label in pred.path_labels)
    if pred.branch_prefix is not None:
        toks.append(f"branch={pred.branch_prefix}")
    return toks


def to_text(scenario: Scenario) -> str:
    """Serialize a scenario back to its text form (round-trips through parse)."""
    out = [f"name {scenario.name}"]
    if scenario.semantics != STANDARD:
        out.append(f"semantics {scenario.semantics}")
    out.append("")
    out.append("[persons]")
    for k in scenario.kinds:
        out.append(f"person {k.label} quality={_fmt(k.baseline_quality)}")
    out.append("")
    out.append("[initial]")
    for root in scenario.roots:
        out.append(f"branch {root.id} weight={_fmt(root.weight)}")
    for spec in scenario.populations:
        line = f"populate {spec.branch} {spec.kind} count={_fmt(spec.count)} degree={_fmt(spec.degree)}"
        if spec.quality is not None:
            line += f" quality={_fmt(spec.quality)}"
        out.append(line)
    out.append("")
    out.append("[events]")
    for item in scenario.script:
        if isinstance(item, Split):
            outcomes = " ".join(f"{label}={_fmt(f)}" for label, f in item.outcomes)
            out.append(f"split {item.branch} {outcomes}")
        elif isinstance(item, Death):
            line = f"death {item.branch} {item.kind} fraction={_fmt(item.fraction)} mode={item.mode}"
            if item.mode == "lingering":
                line += f" duration={_fmt(item.duration)} quality={_fmt(item.dying_quality)}"
            out.append(line)
        elif isinstance(item, Decline):
            out.append(f"decline {item.branch} {item.kind} degree={_fmt(item.degree)}")
        elif isinstance(item, TimeStep):
            out.append(f"time {_fmt(item.dt)}")
        elif isinstance(item, Mark):
            out.append(f"mark {item.name}")
        elif isinstance(item, SetStage):
            out.append(f"stage {item.stage}")
    out.append("")
    out.append("[queries]")
    for h in scenario.hypotheses:
        outcomes = " ".join(f"{label}={_fmt(f)}" for label, f in h.outcomes)
        out.append(f"hypothesis {h.label} prior={_fmt(h.prior)} {outcomes}")
    for q in scenario.queries:
        out.append(_query_text(q))
    out.append("")
    return "\n".join(out)


def _query_text(q: Query) -> str:
    parts = [q.op, q.qid]
    if q.op in ("measure", "branchprob"):
        parts.extend(_pred_tokens(q.pred or Predicate()))
        if q.at:
            parts.append(f"at={q.at}")
    elif q.op == "prob":
        parts.extend(_pred_tokens(q.pred or Predicate()))
        if q.at:
            parts.append(f"at={q.at}")
        if q.given is not None:
            parts.append("given")
            parts.extend(_pred_tokens(q.given))
    elif q.op == "survival":
        parts.append(f"kind={q.kind}")
        if q.frm:
            parts.append(f"from={q.frm}")
        if q.at:
            parts.append(f"at={q.at}")
    elif q.op == "reflection":
        parts.append(f"kind={q.kind}")
        if q.at:
            parts.append(f"at={q.at}")
    elif q.op == "bayes":
        parts.append(f"observe={q.observe}")
    elif q.op == "accuracy":
        parts.append(f"true={q.true_label}")
    elif q.op == "utility":
        if q.kind:
            parts.append(f"kind={q.kind}")
        if q.integrated:
            parts.append("integrated")
    elif q.op == "integral":
        parts.extend(_pred_tokens(q.pred or Predicate()))
        lo, hi = q.window or (0.0, 0.0)
        parts.append(f"from={_fmt(lo)}")
        parts.append(f"to={_fmt(hi)}")
    elif q.op == "trajectory":
        if q.kind:
            parts.append(f"kind={q.kind}")
    elif q.op == "lifespan":
        spec = q.lifespan
        assert spec is not None
        parts.append(f"lifespan={_fmt(spec.normal_lifespan)}")
        parts.append(f"afterlife={spec.afterlife}")
        if spec.afterlife == "constant" and spec.duration is not None:
            parts.append(f"duration={_fmt(spec.duration)}")
        if spec.afterlife == "exponential":
            parts.append(f"half_life={_fmt(spec.half_life)}")
        parts.append("horizon=inf" if spec.horizon is None else f"horizon={_fmt(spec.horizon)}")
    elif q.op == "oracle":
        parts.append(f"ref={q.ref}")
    else:  # pragma: no cover
        raise ScenarioError(f"unknown query op {q.op!r}")
    return " ".join(parts)
