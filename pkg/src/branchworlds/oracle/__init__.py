"""Single-world stochastic oracle.

Replays a scenario's event script while sampling exactly one outcome per
split (and one realized root branch, when the initial state has several), so
each trial is one self-consistent world history.  Frequencies among trial
observers validate the analytic measure fractions: where the branch calculus
says a fraction of measure survives, the sampler should see a matching
fraction of survivors, within Monte Carlo noise.

Trials are deterministic given (seed, trial index): the generator is a
counter-based Philox4x32-10 keyed by the seed with the trial index as the
stream, so results are order-independent and aggregation in trial-index
order makes whole reports reproducible.  A compiled kernel is used when
available; set ``BRANCHWORLDS_ORACLE=python`` or ``=compiled`` to force a
backend (the two are bit-identical by construction, and tested to be).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from ..core import ALIVE, DEAD, DYING, EmptyReferenceClassError, WorldError
from ..measure import MeasureReport, Predicate
from ..scenario import Scenario
from .. import core
from . import _engine

_env = os.environ.get("BRANCHWORLDS_ORACLE", "auto").strip().lower() or "auto"
if _env == "python":
    _impl = _engine
    BACKEND = "python"
elif _env in ("auto", "compiled"):
    try:
        from . import _kernel as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        if _env == "compiled":
            raise
        _impl = _engine
        BACKEND = "python"
else:
    raise ImportError(f"BRANCHWORLDS_ORACLE={_env!r}: expected auto, compiled, or python")


def backend_name() -> str:
    """Which trial engine this process is using ("compiled" or "python")."""
    return BACKEND


def engine_for(name: str):
    """Fetch a specific engine module (for benchmarks and equivalence tests)."""
    if name == "python":
        return _engine
    if name == "compiled":
        from . import _kernel  # raises ImportError when not built

        return _kernel
    raise WorldError(f"unknown oracle backend {name!r}")


@dataclass(frozen=True)
class OracleProgram:
    """A scenario flattened into tables both trial engines can execute."""

    branch_ids: tuple[str, ...]
    kind_labels: tuple[str, ...]
    root_idx: np.ndarray
    root_cum: np.ndarray
    init_counts: np.ndarray
    op: np.ndarray
    ebranch: np.ndarray
    ekind: np.ndarray
    child_off: np.ndarray
    nchild: np.ndarray
    x: np.ndarray
    y: np.ndarray
    child_branch: np.ndarray
    child_cum: np.ndarray


def compile_program(scn: Scenario) -> OracleProgram:
    kind_labels = tuple(k.label for k in scn.kinds)
    kind_index = {label: i for i, label in enumerate(kind_labels)}
    branch_ids: list[str] = []
    branch_index: dict[str, int] = {}

    def intern(branch_id: str) -> int:
        if branch_id not in branch_index:
            branch_index[branch_id] = len(branch_ids)
            branch_ids.append(branch_id)
        return branch_index[branch_id]

    roots = [intern(root.id) for root in scn.roots]
    weights = [root.weight for root in scn.roots]
    total_w = sum(weights)
    if total_w <= 0.0:
        raise WorldError("cannot sample a world from zero total root weight")
    cum = 0.0
    root_cum = []
    for w in weights:
        cum += w / total_w
        root_cum.append(cum)

    init = [[0.0] * len(kind_labels) for _ in roots]
    for spec in scn.populations:
        for i, root in enumerate(scn.roots):
            if spec.branch == "all" or spec.branch == root.id:
                init[i][kind_index[spec.kind]] += spec.count

    op: list[int] = []
    ebranch: list[int] = []
    ekind: list[int] = []
    child_off: list[int] = []
    nchild: list[int] = []
    xs: list[float] = []
    ys: list[float] = []
    child_branch: list[int] = []
    child_cum: list[float] = []

    for item in scn.script:
        if isinstance(item, core.Split):
            op.append(_engine.OP_SPLIT)
            ebranch.append(intern(item.branch))
            ekind.append(-1)
            child_off.append(len(child_branch))
            nchild.append(len(item.outcomes))
            xs.append(0.0)
            ys.append(0.0)
            running = 0.0
            for label, fraction in item.outcomes:
                running += fraction
                child_branch.append(intern(f"{item.branch}.{label}"))
                child_cum.append(running)
        elif isinstance(item, core.Death):
            op.append(_engine.OP_DEATH_LINGER if item.mode == "lingering" else _engine.OP_DEATH_INSTANT)
            ebranch.append(intern(item.branch))
            ekind.append(kind_index[item.kind])
            child_off.append(0)
            nchild.append(0)
            xs.append(item.fraction)
            ys.append(item.duration)
        elif isinstance(item, core.Decline):
            op.append(_engine.OP_DECLINE)
            ebranch.append(intern(item.branch))
            ekind.append(kind_index[item.kind])
            child_off.append(0)
            nchild.append(0)
            xs.append(item.degree)
            ys.append(0.0)
        elif isinstance(item, core.TimeStep):
            op.append(_engine.OP_TIME)
            ebranch.append(-1)
            ekind.append(-1)
            child_off.append(0)
            nchild.append(0)
            xs.append(item.dt)
            ys.append(0.0)
        # Mark / SetStage carry no single-world content.

    i32 = np.int32
    return OracleProgram(
        branch_ids=tuple(branch_ids),
        kind_labels=kind_labels,
        root_idx=np.ascontiguousarray(roots, dtype=i32),
        root_cum=np.ascontiguousarray(root_cum, dtype=np.float64),
        init_counts=np.ascontiguousarray(init, dtype=np.float64),
        op=np.ascontiguousarray(op, dtype=i32),
        ebranch=np.ascontiguousarray(ebranch, dtype=i32),
        ekind=np.ascontiguousarray(ekind, dtype=i32),
        child_off=np.ascontiguousarray(child_off, dtype=i32),
        nchild=np.ascontiguousarray(nchild, dtype=i32),
        x=np.ascontiguousarray(xs, dtype=np.float64),
        y=np.ascontiguousarray(ys, dtype=np.float64),
        child_branch=np.ascontiguousarray(child_branch, dtype=i32),
        child_cum=np.ascontiguousarray(child_cum, dtype=np.float64),
    )


@dataclass(frozen=True, slots=True)
class TrialRecord:
    """One sampled world history."""

    trial: int
    seed: int
    leaf: str
    path: tuple[str, ...]
    kinds: tuple[str, ...]
    initial: tuple[float, ...]
    alive: tuple[float, ...]
    conscious: tuple[float, ...]
    observations: tuple[str, ...]

    @property
    def survivors(self) -> dict[str, float]:
        return dict(zip(self.kinds, self.alive))


@dataclass(frozen=True)
class FrequencyReport:
    """Observed frequency against the analytic effective probability."""

    frequency: float
    std_error: float
    z_score: float
    trials: int
    expected: float


def run_trials(
    scn: Scenario,
    n: int,
    seed: int = 0,
    engine=None,
) -> list[TrialRecord]:
    """Sample ``n`` single-world trials of a scenario.

    Deterministic given (scenario, n, seed); trial ``i`` of a run with a
    larger ``n`` is identical to trial ``i`` of a smaller one.
    """
    if n < 1:
        raise WorldError(f"need at least one trial, got {n}")
    program = compile_program(scn)
    impl = engine if engine is not None else _impl
    out_root, out_leaf, out_alive, out_conscious = impl.run_program(program, n, int(seed))
    if isinstance(out_root, np.ndarray):
        out_root = out_root.tolist()
        out_leaf = out_leaf.tolist()
        out_alive = out_alive.tolist()
        out_conscious = out_conscious.tolist()
    init_rows = program.init_counts.tolist()
    kinds = program.kind_labels
    records = []
    for t in range(n):
        leaf = program.branch_ids[out_leaf[t]]
        path = tuple(leaf.split(".")[1:])
        conscious = tuple(out_conscious[t])
        records.append(
            TrialRecord(
                trial=t,
                seed=int(seed),
                leaf=leaf,
                path=path,
                kinds=kinds,
                initial=tuple(init_rows[out_root[t]]),
                alive=tuple(out_alive[t]),
                conscious=conscious,
                observations=path if sum(conscious) > 0.0 else (),
            )
        )
    return records


def _check_trial_pred(pred: Predicate) -> None:
    if DEAD in pred.statuses:
        raise WorldError("trial comparisons count living observers; status=dead is not supported")


def _matching_count(record: TrialRecord, pred: Optional[Predicate]) -> float:
    if pred is None:
        pred = Predicate()
    if pred.path_labels and any(lbl not in record.path for lbl in pred.path_labels):
        return 0.0
    if pred.branch_prefix is not None:
        if record.leaf != pred.branch_prefix and not record.leaf.startswith(pred.branch_prefix + "."):
            return 0.0
    total = 0.0
    count_alive = ALIVE in pred.statuses
    count_dying = DYING in pred.statuses
    for i, kind in enumerate(record.kinds):
        if pred.kind is not None and kind != pred.kind:
            continue
        if count_alive:
            total += record.alive[i]
        if count_dying:
            total += record.conscious[i] - record.alive[i]
    return total


def compare(
    mwi: Union[MeasureReport, float],
    trials: Sequence[TrialRecord],
    pred: Optional[Predicate] = None,
    given: Optional[Predicate] = None,
    kind: Optional[str] = None,
    mode: str = "prob",
) -> FrequencyReport:
    """Frequency of an outcome among trial observers, z-scored against the
    analytic effective probability.

    Modes:
      prob:       matching observers / reference-class observers at the end
                  of each trial (the reference class is ``given``, or every
                  conscious observer);
      survival:   per-kind survivors at the end / copies at the start;
      branchprob: fraction of trials whose realized world contains any
                  matching observer.
    """
    if not trials:
        raise WorldError("cannot compare against an empty trial list")
    expected = mwi.effective_probability if isinstance(mwi, MeasureReport) else float(mwi)
    num = 0.0
    den = 0.0
    if mode == "prob":
        if pred is not None:
            _check_trial_pred(pred)
        if given is not None:
            _check_trial_pred(given)
        joint = pred.and_also(given) if pred is not None else (given or Predicate())
        for rec in trials:
            num += _matching_count(rec, joint)
            den += _matching_count(rec, given)
    elif mode == "survival":
        if kind is None:
            raise WorldError("survival comparison needs a kind")
        for rec in trials:
            i = rec.kinds.index(kind)
            num += rec.alive[i]
            den += rec.initial[i]
    elif mode == "branchprob":
        if pred is not None:
            _check_trial_pred(pred)
        for rec in trials:
            num += 1.0 if _matching_count(rec, pred) > 0.0 else 0.0
            den += 1.0
    else:
        raise WorldError(f"unknown comparison mode {mode!r}")
    if den <= 0.0:
        raise EmptyReferenceClassError("empty conditioning class across all trials")
    freq = num / den
    n = len(trials)
    se = math.sqrt(freq * (1.0 - freq) / n)
    if se > 0.0:
        z = (freq - expected) / se
    else:
        z = 0.0 if freq == expected else math.copysign(math.inf, freq - expected)
    return FrequencyReport(frequency=freq, std_error=se, z_score=z, trials=n, expected=expected)


__all__ = [
    "BACKEND",
    "FrequencyReport",
    "OracleProgram",
    "TrialRecord",
    "backend_name",
    "compare",
    "compile_program",
    "engine_for",
    "run_trials",
]
