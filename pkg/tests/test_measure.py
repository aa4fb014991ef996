import pytest

from branchworlds import core, library, measure
from branchworlds.core import EmptyReferenceClassError, Population
from branchworlds.measure import Predicate, integral_measure, measure_of
from branchworlds.scenario import execute, parse_scenario
from helpers import gun_state, play_gun


ALIVE_EXP = Predicate(kind="experimenter")


class TestMeasureOf:
    def test_post_split_survivor_measure(self):
        state = play_gun(gun_state())
        assert measure_of(state, ALIVE_EXP) == 0.5

    def test_empty_predicate_matches_nothing(self):
        state = gun_state()
        assert measure_of(state, Predicate(kind="nobody")) == 0.0

    def test_ensemble_share_by_direct_sum(self):
        # Oracle: sum over the three branches by hand: one of three 1/3 weights.
        state = core.classical_ensemble(3, [Population(kind="e", count=1.0)], prefix="p")
        got = measure_of(state, Predicate(branch_prefix="p1"))
        assert got == pytest.approx((1 / 3) * 1.0, abs=0)
        assert got == pytest.approx(measure_of(state) / 3, rel=1e-15)

    def test_dead_population_contributes_zero_even_if_selected(self):
        state = play_gun(gun_state())
        dead = Predicate(kind="experimenter", statuses=frozenset({core.DEAD}))
        assert measure_of(state, dead) == 0.0

    def test_consciousness_degree_scales_measure(self):
        state = core.single_branch("b", [Population(kind="k", count=2.0, consciousness_degree=0.25)])
        assert measure_of(state) == 0.5


class TestEffectiveProbability:
    def test_conditional_survival_is_one_after_the_gun(self):
        state = play_gun(gun_state())
        p = measure.effective_probability(state, Predicate(path_labels=("click",)), ALIVE_EXP)
        assert p == 1.0

    def test_population_scale_survivor_share(self):
        # 1e10 people, 200 triers, half the triers die.
        state = core.single_branch("root", [
            Population(kind="bystander", count=1e10 - 200),
            Population(kind="trier", count=200.0),
        ])
        state = core.apply_death(state, "root", "trier", 0.5)
        p = measure.effective_probability(state, Predicate(kind="trier"))
        assert p == pytest.approx(100 / (1e10 - 100), rel=1e-12)
        assert p == pytest.approx(1e-8, rel=0.01)

    def test_two_thirds_split(self):
        state = core.split(gun_state(), "root", [("A", 2 / 3), ("B", 1 / 3)])
        p = measure.effective_probability(state, Predicate(path_labels=("A",)))
        assert p == pytest.approx(2 / 3, rel=1e-12)

    def test_empty_reference_class_raises(self):
        state = core.apply_death(gun_state(), "root", "experimenter", 1.0)
        with pytest.raises(EmptyReferenceClassError):
            measure.effective_probability(state, ALIVE_EXP, ALIVE_EXP)

    def test_conditional_coherence(self):
        state = play_gun(core.split(gun_state(), "root", [("L", 0.3), ("R", 0.7)]), "root.R")
        cond = Predicate(path_labels=("R",))
        pred = Predicate(path_labels=("click",))
        lhs = measure.effective_probability(state, pred, cond) * measure_of(state, cond)
        rhs = measure_of(state, pred.and_also(cond))
        assert lhs == pytest.approx(rhs, rel=1e-12)


class TestBranchProbability:
    def test_counts_worlds_not_observers(self):
        state = core.single_branch("life", [Population(kind="o", count=5.0)], weight=0.01)
        barren = core.Branch(id="barren", weight=0.99, parent_weight=0.99)
        state = core.WorldState(branches=state.branches + (barren,))
        assert measure.branch_probability(state, Predicate(kind="o")) == pytest.approx(0.01)
        assert measure.effective_probability(state, Predicate(kind="o")) == 1.0


class TestIntegralMeasure:
    def test_constant_measure_times_window(self):
        scn = parse_scenario("\n".join([
            "name flat", "[persons]", "person k", "[initial]",
            "branch b", "populate b k count=1.0", "[events]", "time 5.0", "[queries]",
        ]))
        timeline = execute(scn)
        assert integral_measure(timeline, Predicate(kind="k"), (0.0, 5.0)) == 5.0

    def test_halving_mid_window(self):
        # Oracle: piecewise sum 2*1.0 + 2*0.5 = 3.0.
        scn = parse_scenario("\n".join([
            "name qs_mid", "[persons]", "person e", "[initial]",
            "branch root", "populate root e count=1.0",
            "[events]",
            "time 2.0",
            "split root fire=0.5 click=0.5",
            "death root.fire e fraction=1.0",
            "time 2.0",
            "[queries]",
        ]))
        timeline = execute(scn)
        assert integral_measure(timeline, Predicate(kind="e"), (0.0, 4.0)) == pytest.approx(3.0, abs=0)

    def test_matches_advance_time_accumulation(self):
        scn = parse_scenario(library.bleeding_death())
        timeline = execute(scn)
        accumulated = timeline.final_state.integral["experimenter"]
        integrated = integral_measure(timeline, Predicate(kind="experimenter"))
        assert integrated == pytest.approx(accumulated, rel=1e-12)

    def test_dying_expiry_inside_window(self):
        scn = parse_scenario("\n".join([
            "name linger", "[persons]", "person k", "[initial]",
            "branch b", "populate b k count=1.0",
            "[events]",
            "death b k fraction=1.0 mode=lingering duration=3.0 quality=0.0",
            "time 5.0",
            "[queries]",
        ]))
        timeline = execute(scn)
        assert integral_measure(timeline, Predicate(kind="k"), (0.0, 5.0)) == pytest.approx(3.0, abs=0)
        assert integral_measure(timeline, Predicate(kind="k"), (2.0, 5.0)) == pytest.approx(1.0, abs=0)

    def test_double_rate_doubles_observer_moments(self):
        fast = parse_scenario("\n".join([
            "name fast", "[persons]", "person k", "[initial]",
            "branch b", "populate b k count=1.0", "[events]", "time 2.0", "[queries]",
        ]))
        slow = parse_scenario("\n".join([
            "name slow", "[persons]", "person k", "[initial]",
            "branch b", "populate b k count=1.0", "[events]", "time 1.0", "[queries]",
        ]))
        assert integral_measure(execute(fast)) == 2 * integral_measure(execute(slow))

    def test_window_outside_timeline_rejected(self):
        scn = parse_scenario("\n".join([
            "name w", "[persons]", "person k", "[initial]",
            "branch b", "populate b k count=1.0", "[events]", "time 1.0", "[queries]",
        ]))
        with pytest.raises(measure.WindowError):
            integral_measure(execute(scn), window=(0.0, 2.0))


class TestTrajectory:
    def test_repeated_gun_runs_halve_each_time(self):
        lines = ["name rep", "[persons]", "person experimenter", "[initial]",
                 "branch root", "populate root experimenter count=1.0", "[events]"]
        cur = "root"
        for _ in range(5):
            lines.append(f"split {cur} fire=0.5 click=0.5")
            lines.append(f"death {cur}.fire experimenter fraction=1.0")
            cur += ".click"
        lines.append("[queries]")
        timeline = execute(parse_scenario("\n".join(lines)))
        series = [m["experimenter"] for _, m in measure.measure_trajectory(timeline)]
        post_death = series[2::2]  # after each death event
        assert post_death == [0.5 ** k for k in range(1, 6)]

    def test_death_free_trajectory_constant(self):
        lines = ["name free", "[persons]", "person k", "[initial]",
                 "branch root", "populate root k count=1.0", "[events]"]
        cur = "root"
        for i in range(5):
            lines.append(f"split {cur} a=0.5 b=0.5")
            cur += ".a" if i % 2 == 0 else ".a"
        lines.append("[queries]")
        timeline = execute(parse_scenario("\n".join(lines)))
        for _, per_kind in measure.measure_trajectory(timeline):
            assert per_kind["k"] == pytest.approx(1.0, rel=1e-9)

    def test_bleeding_death_windows(self):
        timeline = execute(parse_scenario(library.bleeding_death()))
        series = measure.measure_trajectory(timeline)
        # Conscious (alive or dying) measure stays 1.0 through the lingering
        # window and settles at 0.5 once the dying cohort is gone.
        assert series[2][1]["experimenter"] == 1.0
        assert series[-1][1]["experimenter"] == 0.5


class TestPartitionAdditivity:
    @pytest.mark.parametrize("fractions", [
        [("a", 0.5), ("b", 0.5)],
        [("a", 0.9), ("b", 0.1)],
        [("a", 1 / 3), ("b", 1 / 3), ("c", 1 / 3)],
        [("a", 0.25), ("b", 0.35), ("c", 0.4)],
    ])
    def test_outcome_partition_sums_to_one(self, fractions):
        state = core.split(gun_state(), "root", fractions)
        total = sum(
            measure.effective_probability(state, Predicate(path_labels=(label,)))
            for label, _ in fractions
        )
        assert total == pytest.approx(1.0, abs=1e-9)
