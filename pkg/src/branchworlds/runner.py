"""Query execution and reporting.

``run`` evaluates every query of a scenario analytically, optionally runs
the single-world oracle for ``oracle`` queries, and returns flat report rows
that serialize deterministically to CSV or text (identical inputs and
options give byte-identical output).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

from . import contexts, oracle
from .measure import (
    Predicate,
    branch_probability,
    effective_probability,
    integral_measure,
    measure_of,
)
from .scenario import (
    QIF_RENORMALIZE,
    STANDARD,
    Query,
    Scenario,
    ScenarioError,
    Timeline,
    execute,
    hypothesis_scenario,
)

CSV_COLUMNS = ("scenario", "query_id", "quantity", "value", "provenance", "trials", "sigma")


class QueryError(ScenarioError):
    """A query failed at runtime; carries the failing query id."""

    def __init__(self, query_id: str, message: str):
        self.query_id = query_id
        super().__init__(f"query {query_id!r}: {message}")


@dataclass(frozen=True)
class ReportRow:
    scenario: str
    query_id: str
    quantity: str
    value: float
    provenance: str = "analytic"
    trials: Optional[int] = None
    sigma: Optional[float] = None


@dataclass(frozen=True)
class RunOptions:
    trials: int = 0
    seed: int = 0
    semantics: Optional[str] = None  # None: use the scenario's own mode


def _fmt(value: float) -> str:
    return f"{value:.12g}"


class _Runner:
    def __init__(self, scenario: Scenario, options: RunOptions):
        self.scenario = scenario
        self.options = options
        self.semantics = options.semantics if options.semantics is not None else scenario.semantics
        if self.semantics not in (STANDARD, QIF_RENORMALIZE):
            raise ScenarioError(f"unknown semantics mode {self.semantics!r}")
        self.timeline: Timeline = execute(scenario)
        self.sem = contexts.apply_semantics(
            self.timeline, QIF_RENORMALIZE if self.semantics == QIF_RENORMALIZE else STANDARD
        )
        self.rows: list[ReportRow] = []
        self.analytic: dict[str, float] = {}
        self._trials: Optional[list[oracle.TrialRecord]] = None
        self._hypset: Optional[contexts.HypothesisSet] = None

    def row(self, qid: str, quantity: str, value: float, provenance: str = "analytic",
            trials: Optional[int] = None, sigma: Optional[float] = None) -> None:
        self.rows.append(ReportRow(
            scenario=self.scenario.name, query_id=qid, quantity=quantity,
            value=float(value), provenance=provenance, trials=trials, sigma=sigma,
        ))

    # -- helpers -------------------------------------------------------------

    def point(self, q: Query, mark: Optional[str]):
        try:
            return self.timeline.at(mark)
        except ScenarioError as err:
            raise QueryError(q.qid, str(err)) from err

    def point_index(self, mark: Optional[str]) -> int:
        return self.timeline.marks["end" if mark is None else mark]

    def adjusted_measure(self, idx: int, pred: Optional[Predicate]) -> float:
        """Measure at a timeline point with per-kind semantics corrections."""
        pred = pred or Predicate()
        state = self.timeline.points[idx].state
        total = 0.0
        for kind, corr in self.sem.corrections.items():
            total += corr[idx] * measure_of(state, pred.and_also(Predicate(kind=kind)))
        return total

    @property
    def hypset(self) -> contexts.HypothesisSet:
        if self._hypset is None:
            self._hypset = contexts.HypothesisSet(hypotheses=tuple(
                contexts.Hypothesis(label=h.label, prior=h.prior,
                                    model=hypothesis_scenario(self.scenario, h))
                for h in self.scenario.hypotheses
            ))
        return self._hypset

    def trial_records(self) -> list[oracle.TrialRecord]:
        if self._trials is None:
            self._trials = oracle.run_trials(self.scenario, self.options.trials, self.options.seed)
        return self._trials

    # -- query evaluation ----------------------------------------------------

    def run_query(self, q: Query) -> None:
        handler = getattr(self, f"q_{q.op}")
        try:
            handler(q)
        except QueryError:
            raise
        except Exception as err:
            raise QueryError(q.qid, str(err)) from err

    def q_measure(self, q: Query) -> None:
        point = self.point(q, q.at)
        self.analytic[q.qid] = value = measure_of(point.state, q.pred or Predicate())
        self.row(q.qid, "measure", value)
        if self.semantics == QIF_RENORMALIZE:
            self.row(q.qid, "qif_measure", self.adjusted_measure(self.point_index(q.at), q.pred))

    def q_prob(self, q: Query) -> None:
        point = self.point(q, q.at)
        value = effective_probability(point.state, q.pred or Predicate(), q.given)
        self.analytic[q.qid] = value
        self.row(q.qid, "effective_probability", value)

    def q_branchprob(self, q: Query) -> None:
        point = self.point(q, q.at)
        value = branch_probability(point.state, q.pred or Predicate())
        self.analytic[q.qid] = value
        self.row(q.qid, "branch_probability", value)

    def q_survival(self, q: Query) -> None:
        pred = Predicate(kind=q.kind)
        baseline = q.frm if q.frm is not None else "start"
        start = measure_of(self.point(q, baseline).state, pred)
        end = measure_of(self.point(q, q.at).state, pred)
        if start <= 0.0:
            raise QueryError(q.qid, f"kind {q.kind!r} has no measure at the baseline")
        self.analytic[q.qid] = value = end / start
        self.row(q.qid, "survival_fraction", value)
        if self.semantics == QIF_RENORMALIZE:
            astart = self.adjusted_measure(self.timeline.marks[baseline], pred)
            aend = self.adjusted_measure(self.point_index(q.at), pred)
            if astart > 0.0:
                self.row(q.qid, "qif_survival_fraction", aend / astart)

    def q_reflection(self, q: Query) -> None:
        point = self.point(q, q.at)
        dist = contexts.reflection_distribution(point.state, q.kind, point.stage)
        for label, p in dist.items():
            self.row(q.qid, f"p[{label}]", p)

    def q_bayes(self, q: Query) -> None:
        posterior = contexts.bayes_update(self.hypset, Predicate(path_labels=(q.observe,)))
        for label in sorted(posterior):
            self.row(q.qid, f"posterior[{label}]", posterior[label])

    def q_accuracy(self, q: Query) -> None:
        value = contexts.measure_weighted_accuracy(self.hypset, q.true_label)
        self.row(q.qid, "measure_weighted_accuracy", value)

    def q_utility(self, q: Query) -> None:
        if q.integrated:
            self.row(q.qid, "caring_utility_integrated",
                     contexts.integrated_utility(self.timeline, q.kind))
        else:
            self.row(q.qid, "caring_utility",
                     contexts.endpoint_utility(self.timeline.final_state, q.kind))

    def q_integral(self, q: Query) -> None:
        value = integral_measure(self.timeline, q.pred or Predicate(), q.window)
        self.row(q.qid, "integral_measure", value)
        if self.semantics == QIF_RENORMALIZE:
            self.row(q.qid, "qif_integral_measure",
                     contexts.adjusted_integral(self.timeline, self.sem, q.pred or Predicate(), q.window))

    def q_trajectory(self, q: Query) -> None:
        for i, point in enumerate(self.timeline.points):
            pred = Predicate(kind=q.kind) if q.kind else Predicate()
            self.row(q.qid, f"measure[{i}]@{_fmt(point.time)}", measure_of(point.state, pred))
        if self.semantics == QIF_RENORMALIZE:
            for i, point in enumerate(self.timeline.points):
                pred = Predicate(kind=q.kind) if q.kind else None
                self.row(q.qid, f"qif_measure[{i}]@{_fmt(point.time)}", self.adjusted_measure(i, pred))

    def q_lifespan(self, q: Query) -> None:
        assert q.lifespan is not None
        model, horizon = contexts.lifespan_from_spec(q.lifespan)
        self.row(q.qid, "normal_lifespan_probability",
                 contexts.lifespan_observation_probability(model, horizon))

    def q_oracle(self, q: Query) -> None:
        if self.options.trials <= 0:
            return
        ref = next(query for query in self.scenario.queries if query.qid == q.ref)
        if ref.at is not None or ref.frm is not None:
            raise QueryError(q.qid, "oracle comparisons check end-of-script queries only")
        expected = self.analytic[ref.qid]
        report = oracle.compare(
            expected,
            self.trial_records(),
            pred=ref.pred,
            given=ref.given,
            kind=ref.kind,
            mode={"prob": "prob", "survival": "survival", "branchprob": "branchprob"}[ref.op],
        )
        self.row(q.qid, "frequency", report.frequency, provenance="monte-carlo",
                 trials=report.trials, sigma=report.std_error)
        self.row(q.qid, "z_score", report.z_score, provenance="monte-carlo",
                 trials=report.trials, sigma=report.std_error)

    def run(self) -> list[ReportRow]:
        for q in self.scenario.queries:
            self.run_query(q)
        if self.semantics == QIF_RENORMALIZE:
            for kind, when in sorted(self.sem.extinct_at.items()):
                if when is not None:
                    self.row("semantics", f"qif_renormalization_undefined[{kind}]", when)
        return self.rows


def run(scenario: Scenario, options: RunOptions = RunOptions()) -> list[ReportRow]:
    """Evaluate all queries; deterministic given (scenario, options)."""
    return _Runner(scenario, options).run()


def to_csv(rows: list[ReportRow]) -> str:
    """Fixed columns, 12 significant digits, empty cells for absent numerics."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([
            row.scenario,
            row.query_id,
            row.quantity,
            _fmt(row.value),
            row.provenance,
            "" if row.trials is None else str(row.trials),
            "" if row.sigma is None else _fmt(row.sigma),
        ])
    return buf.getvalue()


def to_text(rows: list[ReportRow], semantics: str = STANDARD) -> str:
    lines = []
    if semantics == QIF_RENORMALIZE:
        lines.append("# semantics: qif (fallacy-demonstration mode; measures are deliberately")
        lines.append("# renormalized and do not describe the standard accounting)")
    for row in rows:
        text = f"{row.scenario} {row.query_id} {row.quantity} = {_fmt(row.value)}"
        if row.provenance != "analytic":
            extra = f" [{row.provenance}"
            if row.trials is not None:
                extra += f" n={row.trials}"
            if row.sigma is not None:
                extra += f" sigma={_fmt(row.sigma)}"
            text += extra + "]"
        lines.append(text)
    return "\n".join(lines) + "\n"
