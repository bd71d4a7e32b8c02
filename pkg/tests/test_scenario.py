"""Tests for scenario files."""

import dataclasses

import pytest

import timescale_sir as ts
from timescale_sir.errors import ScenarioParseError, ScenarioValidationError
from timescale_sir.site.settings import settings
from timescale_sir.sir.model import SirScenario, SolutionMethod
from timescale_sir.transmuters.scenario import (
    bundled_scenarios,
    to_scenario,
    validate_scenario_file,
)

from .conftest import TestScenarioFactory

BUNDLED = [
    "ex19_discrete",
    "ex19_hybrid",
    "ex29_c01",
    "ex29_c03",
    "example1_continuous",
    "fig1_timevarying",
    "sinusoidal_discrete",
]


class TestParseScenario:
    """Test parsing and validating scenario text."""

    @pytest.mark.unit
    def test_minimal_scenario_gets_defaults(self):
        sf = ts.parse_scenario(TestScenarioFactory.scenario_text())

        assert sf.name == "ex19_discrete"
        assert sf.timescale == ts.integer_range(0, 24)
        assert sf.b == ts.constant(0.4)
        assert sf.c == ts.constant(0.2)
        assert (sf.x0, sf.y0, sf.z0) == (0.8, 0.2, 0.0)
        assert (sf.t0, sf.t_end, sf.horizon) == (0.0, 24.0, 24.0)
        assert sf.h == settings.default_step
        assert sf.method == "closed"
        assert sf.methods == [SolutionMethod.CLOSED_FORM]
        assert sf.out_dir is None

    @pytest.mark.unit
    def test_hybrid_scenario(self):
        sf = ts.parse_scenario(
            TestScenarioFactory.scenario_text(timescale="[0,12], 13..24", method="both")
        )

        assert sf.timescale == TestScenarioFactory.hybrid_timescale()
        assert sf.methods == [SolutionMethod.CLOSED_FORM, SolutionMethod.RECURSION]

    @pytest.mark.unit
    def test_comments_and_blank_lines(self):
        text = "# header\n\n" + TestScenarioFactory.scenario_text(
            x0="0.8   # susceptible share"
        )
        assert ts.parse_scenario(text).x0 == 0.8

    @pytest.mark.unit
    def test_name_defaults(self):
        sf = ts.parse_scenario(TestScenarioFactory.scenario_text(name=None))
        assert sf.name == "scenario"

    @pytest.mark.unit
    def test_times_are_snapped_onto_the_scale(self):
        sf = ts.parse_scenario(TestScenarioFactory.scenario_text(t_end="10.0000000000001"))
        assert sf.t_end == 10.0

    @pytest.mark.unit
    def test_zero_infected_is_rejected(self):
        with pytest.raises(ScenarioValidationError) as excinfo:
            ts.parse_scenario(TestScenarioFactory.scenario_text(y0="0"))
        assert excinfo.value.field == "y0"

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "overrides, field",
        [
            ({"b": None}, "b"),
            ({"x0": "-1"}, "x0"),
            ({"z0": "-0.1"}, "z0"),
            ({"h": "0"}, "h"),
            ({"method": "euler"}, "method"),
            ({"t_end": "30"}, "t_end"),
            ({"t0": "5", "t_end": "3"}, "t_end"),
            ({"t0": "5", "horizon": "3"}, "horizon"),
            ({"timescale": "[0,12], 13..24", "t0": "12.5"}, "t0"),
        ],
    )
    def test_semantic_errors_name_the_field(self, overrides, field):
        with pytest.raises(ScenarioValidationError) as excinfo:
            ts.parse_scenario(TestScenarioFactory.scenario_text(**overrides))
        assert excinfo.value.field == field

    @pytest.mark.unit
    def test_unknown_key(self):
        text = TestScenarioFactory.scenario_text() + "  gamma = 3\n"
        with pytest.raises(ScenarioParseError) as excinfo:
            ts.parse_scenario(text)

        assert excinfo.value.line == 8
        assert excinfo.value.column == 3

    @pytest.mark.unit
    def test_duplicate_key(self):
        text = TestScenarioFactory.scenario_text() + "b = const:0.5\n"
        with pytest.raises(ScenarioParseError, match="duplicate"):
            ts.parse_scenario(text)

    @pytest.mark.unit
    def test_line_without_assignment(self):
        with pytest.raises(ScenarioParseError) as excinfo:
            ts.parse_scenario("timescale 0..24\n")
        assert (excinfo.value.line, excinfo.value.column) == (1, 1)

    @pytest.mark.unit
    def test_bad_number_reports_its_column(self):
        text = TestScenarioFactory.scenario_text(x0="abc")
        with pytest.raises(ScenarioParseError) as excinfo:
            ts.parse_scenario(text)

        assert excinfo.value.line == 5
        assert excinfo.value.column == 6

    @pytest.mark.unit
    def test_bad_coefficient_reports_its_line(self):
        with pytest.raises(ScenarioParseError) as excinfo:
            ts.parse_scenario(TestScenarioFactory.scenario_text(c="gauss:1"))
        assert (excinfo.value.line, excinfo.value.column) == (4, 5)

    @pytest.mark.unit
    def test_table_coefficient(self, tmp_path):
        (tmp_path / "b.csv").write_text("t,value\n0,0.4\n24,0.1\n")
        sf = ts.parse_scenario(
            TestScenarioFactory.scenario_text(b="table:b.csv"), base_dir=str(tmp_path)
        )
        assert sf.b(12.0) == pytest.approx(0.25)


class TestFormatScenario:
    """Test that written scenarios read back unchanged."""

    @pytest.mark.unit
    def test_round_trip(self):
        sf = ts.parse_scenario(
            TestScenarioFactory.scenario_text(
                timescale="[0,12], 13..24",
                b="vonbert:s=0.55,r=0.5,d=0.3",
                c="recip:a=2,shift=1",
                h="0.01",
                method="both",
                out="results",
            )
        )
        assert ts.parse_scenario(ts.format_scenario(sf)) == sf

    @pytest.mark.unit
    @pytest.mark.parametrize("name", BUNDLED)
    def test_bundled_round_trip(self, name):
        sf = ts.load_scenario(name)
        assert ts.parse_scenario(ts.format_scenario(sf)) == sf

    @pytest.mark.unit
    @pytest.mark.parametrize(
        "field, attribute, value",
        [
            ("name", "name", "run#1"),
            ("name", "name", "two\nlines"),
            ("name", "name", " padded"),
            ("name", "name", ""),
            ("out", "out_dir", "results#old"),
            ("out", "out_dir", "a\r\nb"),
        ],
    )
    def test_text_that_cannot_read_back_is_rejected(self, field, attribute, value):
        sf = ts.parse_scenario(TestScenarioFactory.scenario_text())
        with pytest.raises(ScenarioValidationError) as excinfo:
            validate_scenario_file(dataclasses.replace(sf, **{attribute: value}))
        assert excinfo.value.field == field

    @pytest.mark.unit
    def test_inline_table_cannot_be_written(self):
        sf = ts.parse_scenario(TestScenarioFactory.scenario_text())
        sf = dataclasses.replace(sf, b=ts.tabulated([(0.0, 0.4), (24.0, 0.1)]))

        with pytest.raises(ScenarioValidationError) as excinfo:
            ts.format_scenario(sf)
        assert excinfo.value.field == "b"

    @pytest.mark.unit
    def test_key_order(self):
        text = ts.format_scenario(ts.parse_scenario(TestScenarioFactory.scenario_text()))
        keys = [line.split("=")[0].strip() for line in text.splitlines()]

        assert keys[:4] == ["name", "timescale", "b", "c"]
        assert "out" not in keys


class TestLoadScenario:
    """Test loading scenarios from files and bundled names."""

    @pytest.mark.unit
    def test_bundled_names(self):
        assert bundled_scenarios() == BUNDLED

    @pytest.mark.unit
    def test_bundled_hybrid(self):
        sf = ts.load_scenario("ex19_hybrid")

        assert sf.timescale == TestScenarioFactory.hybrid_timescale()
        assert sf.h == 0.01
        assert sf.method == "both"

    @pytest.mark.unit
    def test_path_with_relative_table(self, tmp_path):
        (tmp_path / "c.csv").write_text("t,value\n0,0.2\n24,0.2\n")
        path = tmp_path / "custom.scn"
        path.write_text(TestScenarioFactory.scenario_text(c="table:c.csv"))

        sf = ts.load_scenario(str(path))
        assert sf.c(3.0) == pytest.approx(0.2)

    @pytest.mark.unit
    def test_unknown_source(self):
        with pytest.raises(FileNotFoundError):
            ts.load_scenario("no_such_scenario")

    @pytest.mark.unit
    def test_to_scenario(self):
        scenario = to_scenario(ts.load_scenario("ex29_c03"))

        assert isinstance(scenario, SirScenario)
        assert scenario.init.as_tuple() == (0.8, 0.1, 0.1)
        assert scenario.kappa == pytest.approx(0.125)
