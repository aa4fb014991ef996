"""Built-in scenarios.

Each generator returns scenario text in the documented schema, so the
library doubles as a set of format examples.  Population-scale scenarios
take their headline numbers as parameters with the canonical defaults baked
in; pass smaller values for desk-scale Monte Carlo runs.
"""

from __future__ import annotations

from .scenario import Scenario, parse_scenario


def _num(x: float) -> str:
    return repr(float(x))


def quantum_gun(runs: int = 1) -> str:
    """Russian roulette on a measurement: a 50/50 split, then death on fire.

    With several runs the surviving lineage keeps playing; the survivor's
    conditional survival probability stays 1 while the measure halves each
    round.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    lines = [
        "name quantum_gun",
        "",
        "[persons]",
        "person experimenter quality=1.0",
        "",
        "[initial]",
        "branch root weight=1.0",
        "populate root experimenter count=1.0",
        "",
        "[events]",
        "mark before",
    ]
    cur = "root"
    for i in range(runs):
        lines.append(f"split {cur} fire=0.5 click=0.5")
        if i == 0:
            lines.append("stage post_split_pre_reveal")
            lines.append("mark after_split")
        lines.append(f"death {cur}.fire experimenter fraction=1.0 mode=instant")
        if i == 0:
            lines.append("stage post_reveal")
        cur = f"{cur}.click"
    lines += [
        "",
        "[queries]",
        "measure measure_before kind=experimenter at=start",
        "measure measure_after kind=experimenter",
        "prob conditional_survival path~click given kind=experimenter",
        "survival survival_fraction kind=experimenter",
        "utility caring_endpoint kind=experimenter",
    ]
    if runs == 1:
        lines.append("reflection refl kind=experimenter at=after_split")
    lines.append("oracle mc_survival ref=survival_fraction")
    lines.append("")
    return "\n".join(lines)


def many_planets(n: int = 10) -> str:
    """A classical uniform ensemble: identical experimenters on n planets,
    revolvers that fire on half of them. Measure-wise this is the same
    structure as one 50/50 quantum split."""
    if n < 2 or n % 2:
        raise ValueError("need an even ensemble of at least 2 planets")
    lines = [
        "name many_planets",
        "",
        "[persons]",
        "person experimenter quality=1.0",
        "",
        "[initial]",
        f"ensemble {n} prefix=planet",
        "populate all experimenter count=1.0",
        "",
        "[events]",
        "mark before",
    ]
    for i in range(1, n // 2 + 1):
        lines.append(f"death planet{i} experimenter fraction=1.0 mode=instant")
    lines += [
        "",
        "[queries]",
        "measure measure_before kind=experimenter at=start",
        "measure measure_after kind=experimenter",
        "survival survival_fraction kind=experimenter",
        f"prob p_each_survivor branch=planet{n} given kind=experimenter",
        "",
    ]
    return "\n".join(lines)


def bleeding_death(duration: float = 3.0) -> str:
    """The gunshot does not kill at once: the unlucky copies bleed for a
    while, so for a window there are two classes of copies, unharmed and
    dying, and the dying time is spent at a miserable quality of life."""
    d = _num(duration)
    return "\n".join([
        "name bleeding_death",
        "",
        "[persons]",
        "person experimenter quality=1.0",
        "",
        "[initial]",
        "branch root weight=1.0",
        "populate root experimenter count=1.0",
        "",
        "[events]",
        "split root fire=0.5 click=0.5",
        f"death root.fire experimenter fraction=1.0 mode=lingering duration={d} quality=-1.0",
        "mark during",
        f"time {d}",
        "",
        "[queries]",
        "measure conscious_during kind=experimenter at=during",
        "measure measure_after kind=experimenter",
        f"integral im_dying_window kind=experimenter from=0.0 to={d}",
        "utility caring_integrated kind=experimenter integrated",
        "trajectory traj kind=experimenter",
        "",
    ])


def spin_measurement(p_up: float = 0.9) -> str:
    """A spin is measured at one of two preparation angles; the observer has
    seen the result but not the angle, so Bayesian updating over the two
    world models applies, with measure shares as likelihoods."""
    if not 0.0 < p_up < 1.0:
        raise ValueError("p_up must be strictly between 0 and 1")
    up, down = _num(p_up), _num(1.0 - p_up)
    return "\n".join([
        "name spin_measurement",
        "",
        "[persons]",
        "person observer quality=1.0",
        "",
        "[initial]",
        "branch root weight=1.0",
        "populate root observer count=1.0",
        "",
        "[events]",
        f"split root up={up} down={down}",
        "stage post_split_pre_reveal",
        "",
        "[queries]",
        f"hypothesis angle_a prior=0.5 up={up} down={down}",
        f"hypothesis angle_b prior=0.5 up={down} down={up}",
        "reflection refl kind=observer",
        "prob p_up path~up",
        "bayes posterior_up observe=up",
        "bayes posterior_down observe=down",
        "accuracy acc_true_a true=angle_a",
        "accuracy acc_true_b true=angle_b",
        "oracle mc_up ref=p_up",
        "",
    ])


def anthropic(x: float = 0.01) -> str:
    """Universes vary; only a fraction x support observers. Conditioned on
    being an observer you are certainly in a life-supporting universe, while
    the chance that a single sampled universe contains observers is only x."""
    if not 0.0 < x < 1.0:
        raise ValueError("x must be strictly between 0 and 1")
    return "\n".join([
        "name anthropic",
        f"# fraction of life-supporting universes: {_num(x)}",
        "",
        "[persons]",
        "person observer quality=1.0",
        "",
        "[initial]",
        f"branch life weight={_num(x)}",
        f"branch barren weight={_num(1.0 - x)}",
        "populate life observer count=1.0",
        "",
        "[events]",
        "",
        "[queries]",
        "prob p_in_life_supporting branch=life",
        "branchprob p_any_observers kind=observer",
        "oracle mc_any_observers ref=p_any_observers",
        "",
    ])


def population_qs(population: float = 1e10, triers: float = 200.0) -> str:
    """A world of bystanders in which a small group plays the quantum gun
    once; about half the players' measure survives, and the chance of being
    a surviving player is tiny either way.

    Defaults: 1e10 people, 200 triers. Pass population=1e6 for a desk-scale
    Monte Carlo variant.
    """
    if triers < 1 or population <= triers:
        raise ValueError("need population > triers >= 1")
    return "\n".join([
        "name population_qs",
        f"# canonical scale: population={_num(1e10)} triers={_num(200.0)}",
        "",
        "[persons]",
        "person bystander quality=1.0",
        "person trier quality=1.0",
        "",
        "[initial]",
        "branch root weight=1.0",
        f"populate root bystander count={_num(population - triers)}",
        f"populate root trier count={_num(triers)}",
        "",
        "[events]",
        "mark before",
        "death root trier fraction=0.5 mode=instant",
        "",
        "[queries]",
        "measure measure_before at=before",
        "measure measure_after",
        "prob p_qs_survivor kind=trier",
        "survival trier_survival kind=trier",
        "oracle mc_qs_survivor ref=p_qs_survivor",
        "oracle mc_trier_survival ref=trier_survival",
        "",
    ])


def immortality_test(lifespan: float = 100.0, half_life: float = 50.0) -> str:
    """Where would a random observer-moment fall? With an unbounded
    constant afterlife the normal lifespan has probability zero; a decaying
    tail leaves it finite, which is what observation requires."""
    life = _num(lifespan)
    return "\n".join([
        "name immortality_test",
        "",
        "[persons]",
        "person mortal quality=1.0",
        "",
        "[initial]",
        "branch root weight=1.0",
        "populate root mortal count=1.0",
        "",
        "[events]",
        f"time {life}",
        "death root mortal fraction=1.0 mode=instant",
        "",
        "[queries]",
        f"lifespan p_no_afterlife lifespan={life} afterlife=none horizon=inf",
        f"lifespan p_infinite_afterlife lifespan={life} afterlife=constant horizon=inf",
        f"lifespan p_horizon_100x lifespan={life} afterlife=constant horizon={_num(lifespan * 1e2)}",
        f"lifespan p_horizon_1000x lifespan={life} afterlife=constant horizon={_num(lifespan * 1e3)}",
        f"lifespan p_horizon_10000x lifespan={life} afterlife=constant horizon={_num(lifespan * 1e4)}",
        f"lifespan p_exponential_tail lifespan={life} afterlife=exponential half_life={_num(half_life)} horizon=inf",
        f"integral im_life kind=mortal from=0.0 to={life}",
        "trajectory traj kind=mortal",
        "",
    ])


def amoeba_decline() -> str:
    """Dying as a continuum: in one branch self-awareness dwindles stepwise
    to nothing before an anticlimactic end. The fully conscious branch is no
    better off than if the decline had been an abrupt death."""
    return "\n".join([
        "name amoeba_decline",
        "",
        "[persons]",
        "person person quality=1.0",
        "",
        "[initial]",
        "branch root weight=1.0",
        "populate root person count=1.0",
        "",
        "[events]",
        "split root healthy=0.5 decline=0.5",
        "decline root.decline person degree=0.5",
        "time 1.0",
        "decline root.decline person degree=0.25",
        "time 1.0",
        "decline root.decline person degree=0.0",
        "time 1.0",
        "death root.decline person fraction=1.0 mode=instant",
        "",
        "[queries]",
        "measure measure_final kind=person",
        "integral im_total kind=person from=0.0 to=3.0",
        "trajectory traj kind=person",
        "",
    ])


def qif_reductio(splits: int = 20) -> str:
    """Ordinary, harmless measurements repeated n times. Under standard
    accounting nothing happens to total measure; under the renormalizing
    semantics every split doubles it, which is the reductio (run with
    --semantics qif to see measure reach 2**n)."""
    if splits < 1:
        raise ValueError("need at least one split")
    lines = [
        "name qif_reductio",
        "",
        "[persons]",
        "person bob quality=1.0",
        "",
        "[initial]",
        "branch root weight=1.0",
        "populate root bob count=1.0",
        "",
        "[events]",
    ]
    cur = "root"
    for _ in range(splits):
        lines.append(f"split {cur} up=0.5 down=0.5")
        lines.append("time 1.0")
        cur = f"{cur}.up"
    lines += [
        "",
        "[queries]",
        "measure measure_final kind=bob",
        "integral im_first kind=bob from=0.0 to=1.0",
        f"integral im_total kind=bob from=0.0 to={_num(float(splits))}",
        "trajectory traj kind=bob",
        "",
    ]
    return "\n".join(lines)


def evolved_vs_spontaneous(density_ratio: float = 1000.0) -> str:
    """Evolved observers vastly outnumber spontaneously assembled ones per
    unit volume. The ratio is a free parameter (no canonical value); what
    matters is that copy density drives the effective probability."""
    if density_ratio <= 0.0:
        raise ValueError("density ratio must be positive")
    return "\n".join([
        "name evolved_vs_spontaneous",
        f"# density ratio is illustrative, not canonical: {_num(density_ratio)}",
        "",
        "[persons]",
        "person evolved quality=1.0",
        "person spontaneous quality=1.0",
        "",
        "[initial]",
        "branch root weight=1.0",
        f"populate root evolved count={_num(density_ratio)}",
        "populate root spontaneous count=1.0",
        "",
        "[events]",
        "",
        "[queries]",
        "prob p_evolved kind=evolved",
        "prob p_spontaneous kind=spontaneous",
        "measure measure_total",
        "",
    ])


_BUILTINS = {
    "quantum_gun": quantum_gun,
    "many_planets": many_planets,
    "bleeding_death": bleeding_death,
    "spin_measurement": spin_measurement,
    "anthropic": anthropic,
    "population_qs": population_qs,
    "immortality_test": immortality_test,
    "amoeba_decline": amoeba_decline,
    "qif_reductio": qif_reductio,
    "evolved_vs_spontaneous": evolved_vs_spontaneous,
}


def builtin_names() -> list[str]:
    return list(_BUILTINS)


def builtin_text(name: str) -> str:
    """Scenario text of a built-in at its default parameters."""
    if name not in _BUILTINS:
        raise KeyError(f"no built-in scenario named {name!r}")
    return _BUILTINS[name]()


def builtin_scenarios() -> dict[str, Scenario]:
    """All built-ins, parsed, at their default parameters."""
    return {name: parse_scenario(fn()) for name, fn in _BUILTINS.items()}
