import math

import pytest
from scipy.integrate import quad

from branchworlds import contexts, core, library
from branchworlds.contexts import (
    CARING,
    CAUSAL,
    DecisionProblem,
    Hypothesis,
    HypothesisSet,
    SurvivalModel,
    apply_semantics,
    bayes_update,
    caring_utility,
    causal_expected_utility,
    lifespan_observation_probability,
    measure_weighted_accuracy,
    reflection_distribution,
)
from branchworlds.core import EmptyReferenceClassError, WorldError
from branchworlds.measure import Predicate
from branchworlds.scenario import (
    POST_REVEAL,
    POST_SPLIT_PRE_REVEAL,
    QIF_RENORMALIZE,
    STANDARD,
    execute,
    parse_scenario,
)
from helpers import gun_state, play_gun


def one_split_model(name, fractions, kind="observer"):
    lines = [f"name {name}", "[persons]", f"person {kind}", "[initial]",
             "branch root", f"populate root {kind} count=1.0", "[events]",
             "split root " + " ".join(f"{l}={f!r}" for l, f in fractions),
             "stage post_split_pre_reveal", "[queries]"]
    return parse_scenario("\n".join(lines))


def idle_model(name="idle", kind="observer", quality=1.0):
    lines = [f"name {name}", "[persons]", f"person {kind} quality={quality!r}",
             "[initial]", "branch root", f"populate root {kind} count=1.0", "[queries]"]
    return parse_scenario("\n".join(lines))


SPIN_HYPS = HypothesisSet(hypotheses=(
    Hypothesis("angle_a", 0.5, one_split_model("a", [("up", 0.9), ("down", 0.1)])),
    Hypothesis("angle_b", 0.5, one_split_model("b", [("up", 0.1), ("down", 0.9)])),
))


class TestReflection:
    def test_two_thirds_one_third(self):
        state = core.split(gun_state(), "root", [("A", 2 / 3), ("B", 1 / 3)])
        dist = reflection_distribution(state, "experimenter")
        assert dist["A"] == pytest.approx(2 / 3, rel=1e-12)
        assert dist["B"] == pytest.approx(1 / 3, rel=1e-12)

    def test_single_outcome(self):
        state = core.split(gun_state(), "root", [("only", 1.0)])
        assert reflection_distribution(state, "experimenter") == {"only": 1.0}

    def test_spin_split(self):
        state = core.split(gun_state(), "root", [("up", 0.9), ("down", 0.1)])
        dist = reflection_distribution(state, "experimenter")
        assert dist == {"down": pytest.approx(0.1), "up": pytest.approx(0.9)}

    def test_wrong_stage_rejected(self):
        state = core.split(gun_state(), "root", [("a", 0.5), ("b", 0.5)])
        with pytest.raises(contexts.StageError):
            reflection_distribution(state, "experimenter", stage=POST_REVEAL)

    def test_absent_kind_rejected(self):
        state = core.split(gun_state(), "root", [("a", 0.5), ("b", 0.5)])
        with pytest.raises(EmptyReferenceClassError):
            reflection_distribution(state, "nobody")


class TestBayes:
    def test_spin_posteriors_match_direct_arithmetic(self):
        # Oracle: 0.5*0.9 / (0.5*0.9 + 0.5*0.1) = 0.9 and its complement.
        posterior = bayes_update(SPIN_HYPS, Predicate(path_labels=("up",)))
        assert posterior["angle_a"] == pytest.approx(0.9, abs=1e-15)
        assert posterior["angle_b"] == pytest.approx(0.1, abs=1e-15)

    def test_observe_down(self):
        posterior = bayes_update(SPIN_HYPS, Predicate(path_labels=("down",)))
        assert posterior["angle_a"] == pytest.approx(0.1, abs=1e-15)
        assert posterior["angle_b"] == pytest.approx(0.9, abs=1e-15)

    def test_uninformative_observation_returns_prior(self):
        hyps = HypothesisSet(hypotheses=(
            Hypothesis("x", 0.3, one_split_model("x", [("up", 0.5), ("down", 0.5)])),
            Hypothesis("y", 0.7, one_split_model("y", [("up", 0.5), ("down", 0.5)])),
        ))
        posterior = bayes_update(hyps, Predicate(path_labels=("up",)))
        assert posterior["x"] == pytest.approx(0.3, rel=1e-12)
        assert posterior["y"] == pytest.approx(0.7, rel=1e-12)

    def test_all_zero_likelihoods_rejected(self):
        with pytest.raises(EmptyReferenceClassError):
            bayes_update(SPIN_HYPS, Predicate(path_labels=("sideways",)))

    def test_posteriors_sum_to_one(self):
        posterior = bayes_update(SPIN_HYPS, Predicate(path_labels=("up",)))
        assert sum(posterior.values()) == pytest.approx(1.0, abs=1e-12)

    def test_bad_priors_rejected(self):
        with pytest.raises(WorldError):
            HypothesisSet(hypotheses=(
                Hypothesis("x", 0.6, one_split_model("x", [("up", 1.0)])),
                Hypothesis("y", 0.6, one_split_model("y", [("up", 1.0)])),
            ))


class TestAccuracy:
    def test_true_b_gets_ninety_percent(self):
        assert measure_weighted_accuracy(SPIN_HYPS, "angle_b") == pytest.approx(0.9, abs=1e-12)

    def test_true_a_by_symmetry(self):
        assert measure_weighted_accuracy(SPIN_HYPS, "angle_a") == pytest.approx(0.9, abs=1e-12)

    def test_identical_hypotheses_tie_break_lexicographic(self):
        model = one_split_model("same", [("up", 0.5), ("down", 0.5)])
        hyps = HypothesisSet(hypotheses=(
            Hypothesis("beta", 0.5, model),
            Hypothesis("alpha", 0.5, model),
        ))
        # Every observation ties; the guess is always "alpha".
        assert measure_weighted_accuracy(hyps, "alpha") == pytest.approx(1.0)
        assert measure_weighted_accuracy(hyps, "beta") == pytest.approx(0.0)


class TestCaringUtility:
    def test_quantum_gun_play_vs_abstain(self):
        problem = DecisionProblem(choices={
            "play": parse_scenario(library.quantum_gun()),
            "abstain": idle_model(kind="experimenter"),
        })
        assert caring_utility(problem, "play") == 0.5
        assert caring_utility(problem, "abstain") == 1.0

    def test_conserved_measure_equals_probability_form(self):
        scn = one_split_model("s", [("up", 0.3), ("down", 0.7)])
        problem = DecisionProblem(choices={"only": scn})
        final = execute(scn).final_state
        total = final.total_measure()
        by_prob = total * sum(
            contexts.effective_probability(final, Predicate(path_labels=(l,))) * 1.0
            for l in ("up", "down")
        )
        assert caring_utility(problem, "only") == pytest.approx(by_prob, rel=1e-12)

    def test_zero_quality_zeroes_utility(self):
        problem = DecisionProblem(choices={"c": idle_model(quality=0.0)})
        assert caring_utility(problem, "c") == 0.0

    def test_integrated_bleeding_run_is_worse_than_abstaining(self):
        bleed = parse_scenario(library.bleeding_death())
        abstain = parse_scenario("\n".join([
            "name stay", "[persons]", "person experimenter", "[initial]",
            "branch root", "populate root experimenter count=1.0",
            "[events]", "time 3.0", "[queries]",
        ]))
        problem = DecisionProblem(choices={"play": bleed, "abstain": abstain})
        assert caring_utility(problem, "play", integrated=True) == pytest.approx(0.0, abs=1e-12)
        assert caring_utility(problem, "abstain", integrated=True) == pytest.approx(3.0)

    def test_wrong_mode_rejected(self):
        problem = DecisionProblem(choices={"c": idle_model()}, mode=CAUSAL,
                                  hidden=(("h", 1.0),), realized={"c": {"h": 1.0}})
        with pytest.raises(WorldError):
            caring_utility(problem, "c")


class TestCausalUtility:
    def roulette(self):
        return DecisionProblem(
            choices={"play": parse_scenario(library.quantum_gun()), "abstain": idle_model()},
            mode=CAUSAL,
            hidden=(("fire", 0.5), ("click", 0.5)),
            realized={
                "play": {"fire": 0.0, "click": 1.0},
                "abstain": {"fire": 1.0, "click": 1.0},
            },
        )

    def test_roulette_matches_classical_values(self):
        problem = self.roulette()
        assert causal_expected_utility(problem, "play") == 0.5
        assert causal_expected_utility(problem, "abstain") == 1.0

    def test_deterministic_hidden_variable(self):
        problem = DecisionProblem(
            choices={"c": idle_model()}, mode=CAUSAL,
            hidden=(("only", 1.0),), realized={"c": {"only": 0.25}},
        )
        assert causal_expected_utility(problem, "c") == 0.25

    def test_three_valued_uniform_is_arithmetic_mean(self):
        # Oracle: enumeration, (1 + 2 + 6) / 3.
        problem = DecisionProblem(
            choices={"c": idle_model()}, mode=CAUSAL,
            hidden=(("a", 1 / 3), ("b", 1 / 3), ("c", 1 / 3)),
            realized={"c": {"a": 1.0, "b": 2.0, "c": 6.0}},
        )
        assert causal_expected_utility(problem, "c") == pytest.approx(3.0, rel=1e-12)

    def test_unnormalized_distribution_rejected(self):
        problem = DecisionProblem(
            choices={"c": idle_model()}, mode=CAUSAL,
            hidden=(("a", 0.5), ("b", 0.3)), realized={"c": {"a": 1.0, "b": 1.0}},
        )
        with pytest.raises(WorldError):
            causal_expected_utility(problem, "c")


class TestLifespan:
    def test_no_afterlife_is_certainty(self):
        model = SurvivalModel(normal_lifespan=100.0)
        assert lifespan_observation_probability(model, None) == 1.0
        assert lifespan_observation_probability(model, 1e6) == 1.0

    def test_constant_afterlife_ratio_of_lengths(self):
        model = SurvivalModel(normal_lifespan=100.0, afterlife="constant")
        assert lifespan_observation_probability(model, 10_000.0) == pytest.approx(0.01, abs=1e-12)
        assert lifespan_observation_probability(model, None) == 0.0

    def test_finite_constant_afterlife(self):
        model = SurvivalModel(normal_lifespan=100.0, afterlife="constant", duration=900.0)
        assert lifespan_observation_probability(model, None) == pytest.approx(0.1, abs=1e-12)
        assert lifespan_observation_probability(model, 500.0) == pytest.approx(0.2, abs=1e-12)

    def test_exponential_tail_against_quadrature(self):
        life, half = 100.0, 50.0
        model = SurvivalModel(normal_lifespan=life, afterlife="exponential_tail", half_life=half)
        closed = lifespan_observation_probability(model, None)
        tail, _ = quad(lambda t: 2.0 ** (-(t - life) / half), life, life + 60 * half)
        assert closed == pytest.approx(life / (life + tail), abs=1e-6)
        # And at a finite horizon.
        horizon = 350.0
        tail_h, _ = quad(lambda t: 2.0 ** (-(t - life) / half), life, horizon)
        assert lifespan_observation_probability(model, horizon) == pytest.approx(
            life / (life + tail_h), abs=1e-6)

    def test_non_increasing_in_horizon(self):
        model = SurvivalModel(normal_lifespan=10.0, afterlife="exponential_tail", half_life=5.0)
        values = [lifespan_observation_probability(model, h) for h in (10.0, 20.0, 50.0, 200.0)]
        values.append(lifespan_observation_probability(model, None))
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_horizon_shorter_than_life_rejected(self):
        with pytest.raises(WorldError):
            lifespan_observation_probability(SurvivalModel(normal_lifespan=10.0), 5.0)


class TestSemantics:
    def test_standard_mode_returns_measures_unchanged(self):
        timeline = execute(parse_scenario(library.quantum_gun()))
        sem = apply_semantics(timeline, STANDARD)
        assert sem.series["experimenter"] == (1.0, 1.0, 0.5)

    def test_gun_survivor_renormalized_to_one(self):
        timeline = execute(parse_scenario(library.quantum_gun()))
        sem = apply_semantics(timeline, QIF_RENORMALIZE)
        assert sem.series["experimenter"][-1] == 1.0  # not 0.5

    def test_split_free_death_free_sequence_identical(self):
        scn = parse_scenario("\n".join([
            "name calm", "[persons]", "person k", "[initial]",
            "branch b", "populate b k count=2.0",
            "[events]", "time 1.0", "decline b k degree=0.5", "time 2.0", "[queries]",
        ]))
        timeline = execute(scn)
        assert (apply_semantics(timeline, STANDARD).series
                == apply_semantics(timeline, QIF_RENORMALIZE).series)

    def test_each_ordinary_split_doubles(self):
        for n in (1, 3, 20):
            timeline = execute(parse_scenario(library.qif_reductio(splits=n)))
            sem = apply_semantics(timeline, QIF_RENORMALIZE)
            assert sem.series["bob"][-1] == 2.0 ** n

    def test_extinction_reported(self):
        timeline = execute(parse_scenario("\n".join([
            "name gone", "[persons]", "person k", "[initial]",
            "branch b", "populate b k count=1.0",
            "[events]", "death b k fraction=1.0", "[queries]",
        ])))
        sem = apply_semantics(timeline, QIF_RENORMALIZE)
        assert sem.extinct_at["k"] == 0.0
        assert sem.series["k"][-1] == 0.0

    def test_lingering_completion_triggers_renormalization(self):
        timeline = execute(parse_scenario(library.bleeding_death()))
        sem = apply_semantics(timeline, QIF_RENORMALIZE)
        # After the dying cohort expires only the unharmed branch remains,
        # and it is credited with the full original measure.
        assert sem.series["experimenter"][-1] == pytest.approx(1.0, rel=1e-12)

    def test_oldest_guy_effect(self):
        # The share of observer-moments spent at ordinary ages collapses as
        # splits accumulate under the renormalizing semantics, yet stays
        # bounded away from zero for a decaying tail under standard rules.
        fractions = []
        for n in range(1, 21):
            timeline = execute(parse_scenario(library.qif_reductio(splits=n)))
            frac = contexts.observer_moment_fraction(timeline, QIF_RENORMALIZE, "bob", 1.0)
            assert frac == pytest.approx(1.0 / (2.0 ** n - 1.0), rel=1e-9)
            fractions.append(frac)
        assert all(a > b for a, b in zip(fractions, fractions[1:]))
        assert fractions[-1] < 1e-5
        tail = SurvivalModel(normal_lifespan=1.0, afterlife="exponential_tail", half_life=1.0)
        floor = lifespan_observation_probability(tail, None)
        for horizon in (10.0, 100.0, 10_000.0):
            assert lifespan_observation_probability(tail, horizon) >= floor > 0.0


def test_expected_accuracy_beats_any_fixed_guess():
    assert contexts.expected_accuracy(SPIN_HYPS) == pytest.approx(0.9)
    assert contexts.expected_accuracy(SPIN_HYPS) >= max(h.prior for h in SPIN_HYPS.hypotheses)
