import pytest

from branchworlds import core, library
from branchworlds.scenario import (
    POST_SPLIT_PRE_REVEAL,
    PRE_SPLIT,
    ScenarioParseError,
    execute,
    parse_scenario,
    to_text,
)


def violations_of(text):
    with pytest.raises(ScenarioParseError) as err:
        parse_scenario(text)
    return err.value.violations


class TestParsing:
    def test_builtins_parse_and_validate_clean(self):
        for name in library.builtin_names():
            scn = parse_scenario(library.builtin_text(name))
            assert scn.name == name
            timeline = execute(scn)
            for point in timeline.points:
                assert core.validate(point.state) == []

    def test_unnormalized_split_names_the_event_and_line(self):
        bad = "\n".join([
            "name bad", "[persons]", "person k", "[initial]",
            "branch root", "populate root k count=1.0",
            "[events]", "split root a=0.6 b=0.6", "[queries]",
        ])
        (line_no, message), = violations_of(bad)
        assert line_no == 8
        assert "root" in message and "1.2" in message

    def test_undeclared_kind_reference(self):
        bad = "\n".join([
            "name bad", "[persons]", "person k", "[initial]",
            "branch root", "populate root k count=1.0",
            "[events]", "death root ghost fraction=0.5", "[queries]",
        ])
        (line_no, message), = violations_of(bad)
        assert line_no == 8
        assert "ghost" in message

    def test_undeclared_branch_reference(self):
        bad = "\n".join([
            "name bad", "[persons]", "person k", "[initial]",
            "branch root", "populate root k count=1.0",
            "[events]", "split trunk a=0.5 b=0.5", "[queries]",
        ])
        assert any("trunk" in msg for _, msg in violations_of(bad))

    def test_split_children_become_referencable(self):
        good = "\n".join([
            "name ok", "[persons]", "person k", "[initial]",
            "branch root", "populate root k count=1.0",
            "[events]", "split root a=0.5 b=0.5", "death root.a k fraction=1.0",
            "[queries]", "measure m kind=k",
        ])
        scn = parse_scenario(good)
        assert len(scn.script) == 2

    def test_unknown_key_and_section(self):
        assert any("unknown" in msg for _, msg in violations_of(
            "name x\n[initial]\nbranch root wight=1.0\n"))
        assert any("section" in msg for _, msg in violations_of(
            "name x\n[initial]\nbranch root\n[conclusions]\nfoo\n"))

    def test_duplicate_query_ids_rejected(self):
        bad = "\n".join([
            "name x", "[persons]", "person k", "[initial]",
            "branch root", "populate root k count=1.0", "[queries]",
            "measure m kind=k", "measure m kind=k",
        ])
        assert any("duplicate" in msg for _, msg in violations_of(bad))

    def test_oracle_must_reference_probability_query(self):
        bad = "\n".join([
            "name x", "[persons]", "person k", "[initial]",
            "branch root", "populate root k count=1.0", "[queries]",
            "trajectory t", "oracle o ref=t",
        ])
        assert any("oracle" in msg for _, msg in violations_of(bad))

    def test_comments_and_blank_lines_ignored(self):
        scn = parse_scenario("\n".join([
            "# a comment", "name ok", "",
            "[persons]", "person k  # trailing note", "",
            "[initial]", "branch root", "populate root k count=1.0", "[queries]",
        ]))
        assert scn.name == "ok"

    def test_multiple_violations_all_reported(self):
        bad = "\n".join([
            "name bad", "[persons]", "person k", "[initial]",
            "branch root", "populate root ghost count=1.0",
            "[events]", "time -1.0", "split root a=0.7 b=0.7", "[queries]",
        ])
        assert len(violations_of(bad)) == 3


class TestRoundTrip:
    @pytest.mark.parametrize("name", library.builtin_names())
    def test_serialize_parse_identity(self, name):
        scn = parse_scenario(library.builtin_text(name))
        assert parse_scenario(to_text(scn)) == scn


class TestExecution:
    def test_marks_and_stages(self):
        timeline = execute(parse_scenario(library.quantum_gun()))
        assert timeline.points[0].stage == PRE_SPLIT
        after_split = timeline.at("after_split")
        assert after_split.stage == POST_SPLIT_PRE_REVEAL
        assert after_split.state.total_measure() == 1.0
        assert timeline.at("before").time == 0.0
        assert timeline.at(None) is timeline.points[-1]

    def test_clock_advances_with_time_steps(self):
        timeline = execute(parse_scenario(library.bleeding_death()))
        assert timeline.points[-1].time == 3.0

    def test_ensemble_initialization(self):
        scn = parse_scenario(library.many_planets(n=4))
        state = execute(scn).points[0].state
        assert len(state.branches) == 4
        assert all(br.weight == 0.25 for br in state.branches)
        assert state.total_measure() == 1.0

    def test_population_quality_defaults_to_kind_baseline(self):
        scn = parse_scenario("\n".join([
            "name q", "[persons]", "person k quality=2.5", "[initial]",
            "branch root", "populate root k count=1.0", "[queries]",
        ]))
        state = execute(scn).points[0].state
        assert state.branch("root").populations[0].quality == 2.5
