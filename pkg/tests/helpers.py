"""Shared test fixtures: canned states and random world-tree builders."""

from __future__ import annotations

import random

from branchworlds import core
from branchworlds.core import Population, WorldState


def gun_state() -> WorldState:
    """One experimenter, pre-split."""
    return core.single_branch("root", [Population(kind="experimenter", count=1.0)])


def play_gun(state: WorldState, branch: str = "root") -> WorldState:
    """One round: 50/50 split, then certain death on the fire branch."""
    state = core.split(state, branch, [("fire", 0.5), ("click", 0.5)])
    return core.apply_death(state, f"{branch}.fire", "experimenter", 1.0)


def random_state(rng: random.Random, kinds=("a", "b"), max_splits: int = 4) -> WorldState:
    """A random tree with random populations; no deaths or declines."""
    pops = tuple(
        Population(
            kind=k,
            count=rng.uniform(0.0, 5.0),
            consciousness_degree=rng.uniform(0.1, 1.0),
            quality=rng.uniform(-2.0, 2.0),
        )
        for k in kinds
    )
    state = core.single_branch("root", pops)
    for _ in range(rng.randint(0, max_splits)):
        leaf = rng.choice(state.branches)
        n = rng.randint(2, 3)
        raw = [rng.uniform(0.05, 1.0) for _ in range(n)]
        total = sum(raw)
        outcomes = [(f"o{i}", raw[i] / total) for i in range(n)]
        state = core.split(state, leaf.id, outcomes)
    return state


def random_event(rng: random.Random, state: WorldState) -> core.Event:
    leaf = rng.choice(state.branches)
    kinds = [p.kind for p in leaf.populations if p.status == core.ALIVE and p.count > 0]
    choices = ["split", "time"]
    if kinds:
        choices += ["death", "decline"]
    kind_of_event = rng.choice(choices)
    if kind_of_event == "split":
        return core.Split(branch=leaf.id, outcomes=(("x", 0.25), ("y", 0.75)))
    if kind_of_event == "time":
        return core.TimeStep(dt=rng.uniform(0.1, 2.0))
    kind = rng.choice(kinds)
    if kind_of_event == "death":
        if rng.random() < 0.5:
            return core.Death(branch=leaf.id, kind=kind, fraction=rng.random())
        return core.Death(branch=leaf.id, kind=kind, fraction=rng.random(),
                          mode="lingering", duration=rng.uniform(0.5, 2.0))
    floor = min(p.consciousness_degree for p in leaf.populations
                if p.kind == kind and p.conscious)
    return core.Decline(branch=leaf.id, kind=kind, degree=rng.uniform(0.0, floor))
