"""Shared test configuration and fixtures for timescale_sir tests."""

import math
from typing import List

import numpy as np
import pytest

import timescale_sir as ts
from timescale_sir.sir.model import SirScenario, SirState


# Test markers
def pytest_configure(config):
    """Configure custom pytest markers."""
    config.addinivalue_line("markers", "unit: Unit tests for individual components")
    config.addinivalue_line(
        "markers", "integration: Tests running several modules together"
    )
    config.addinivalue_line("markers", "slow: Tests that may take longer to run")


# Test Data Factories
class TestScenarioFactory:
    """Factory for the time scales and scenarios shared across test modules."""

    @staticmethod
    def hybrid_timescale() -> ts.TimeScale:
        """[0,12] followed by the integers 13..24."""
        return ts.canonicalize(
            [ts.Interval(0.0, 12.0)] + [ts.Point(float(k)) for k in range(13, 25)]
        )

    @staticmethod
    def ex19_discrete() -> SirScenario:
        return ts.make_scenario(
            ts.integer_range(0, 24), ts.constant(0.4), ts.constant(0.2), 0.8, 0.2, 0.0
        )

    @staticmethod
    def ex19_hybrid() -> SirScenario:
        return ts.make_scenario(
            TestScenarioFactory.hybrid_timescale(),
            ts.constant(0.4),
            ts.constant(0.2),
            0.8,
            0.2,
            0.0,
        )

    @staticmethod
    def ex19_continuous(t_end: float = 30.0) -> SirScenario:
        return ts.make_scenario(
            ts.real_interval(0.0, t_end), ts.constant(0.4), ts.constant(0.2), 0.8, 0.2
        )

    @staticmethod
    def ex29(c: float, horizon: int = 500) -> SirScenario:
        return ts.make_scenario(
            ts.integer_range(0, horizon), ts.constant(0.2), ts.constant(c), 0.8, 0.1, 0.1
        )

    @staticmethod
    def example1(t_end: float = 10.0) -> SirScenario:
        """b = 1/(t+1), c = 2/(t+1), x0 = 0.4, y0 = 1.2 on [0, t_end]."""
        return ts.make_scenario(
            ts.real_interval(0.0, t_end),
            ts.reciprocal(1.0, 1.0),
            ts.reciprocal(2.0, 1.0),
            0.4,
            1.2,
            0.0,
        )

    @staticmethod
    def sinusoidal(last: int = 50) -> SirScenario:
        return ts.make_scenario(
            ts.integer_range(0, last),
            ts.sinusoid(0.5, 0.25, 1.0),
            ts.reciprocal(1.0, 1.0),
            0.9,
            0.1,
            0.0,
        )

    @staticmethod
    def random_mixed_timescale(rng: np.random.Generator) -> ts.TimeScale:
        """Random union of intervals and integer points inside [0, 12]."""
        segments = []
        cursor = 0
        while cursor < 12:
            length = int(rng.integers(1, 4))
            end = min(cursor + length, 12)
            if rng.random() < 0.5:
                segments.append(ts.Interval(float(cursor), float(end)))
            else:
                segments.extend(ts.Point(float(k)) for k in range(cursor, end + 1))
            cursor = end + int(rng.integers(1, 3))
        if not segments:
            segments.append(ts.Point(0.0))
        return ts.canonicalize(segments)

    @staticmethod
    def random_coefficient(rng: np.random.Generator):
        """Constant p in (-0.25, 0.8) or a table on [0, 12] with values in [0, 0.8]."""
        if rng.random() < 0.5:
            return ts.constant(float(rng.uniform(-0.25, 0.8)))
        knots = [(float(k), float(rng.uniform(0.0, 0.8))) for k in range(13)]
        return ts.tabulated(knots, source="random.csv")

    @staticmethod
    def scenario_text(**overrides) -> str:
        """ex19 scenario file text with keys overridden or removed (value None)."""
        values = {
            "name": "ex19_discrete",
            "timescale": "0..24",
            "b": "const:0.4",
            "c": "const:0.2",
            "x0": "0.8",
            "y0": "0.2",
            "z0": "0",
        }
        values.update(overrides)
        return "".join(f"{k} = {v}\n" for k, v in values.items() if v is not None)


@pytest.fixture
def scenario_factory():
    """Provide the scenario factory."""
    return TestScenarioFactory


@pytest.fixture
def hybrid_timescale():
    return TestScenarioFactory.hybrid_timescale()


@pytest.fixture
def ex19_discrete():
    return TestScenarioFactory.ex19_discrete()


@pytest.fixture
def ex19_hybrid():
    return TestScenarioFactory.ex19_hybrid()


@pytest.fixture
def output_dir(tmp_path, monkeypatch):
    """Point the configured output directory at a temporary folder."""
    from timescale_sir.site.settings import settings

    target = tmp_path / "out"
    monkeypatch.setattr(settings, "_output_dir", str(target))
    return target


class TestConstants:
    """Values and tolerances used across multiple test modules."""

    # ex19 single step by hand
    EX19_Y1 = 0.2 / 0.88
    EX19_X1 = 0.8 - 0.32 * 0.2 / 0.88
    EX19_Z1 = 0.2 * 0.2 / 0.88

    # ex29 with c = 0.3: kappa = 0.125, M = b / (c - b) = 2
    EX29_ALPHA_LOWER_BOUND = 0.8 * math.exp(-0.25)

    # Tolerances
    DISCRETE_RELATIVE = 1e-10
    HYBRID_ABSOLUTE = 1e-6
    CONTINUOUS_RELATIVE = 1e-6
    IDENTITY_RELATIVE = 1e-9


@pytest.fixture
def test_constants():
    """Provide test constants."""
    return TestConstants


# Helper functions for assertions
def assert_states_close(
    actual: SirState, expected: SirState, rel: float = 1e-10, abs_: float = 1e-15
):
    """Assert that two states agree componentwise."""
    for label, a, e in zip("xyz", actual.as_tuple(), expected.as_tuple()):
        assert a == pytest.approx(e, rel=rel, abs=abs_), f"{label}: {a} != {e}"


def assert_conserved(series, tolerance: float):
    """Assert that x + y + z stays at N along a series."""
    assert series.max_conservation_error() <= tolerance * series.scenario.total


def assert_nonnegative(values: List[float], tolerance: float = 1e-12):
    assert min(values) >= -tolerance


# Export helpers for use in tests
__all__ = [
    "TestScenarioFactory",
    "TestConstants",
    "assert_states_close",
    "assert_conserved",
    "assert_nonnegative",
]
