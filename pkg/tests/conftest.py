"""Shared fixtures: the figure-protocol runs are expensive enough to cache
for the whole session."""
from __future__ import annotations

import numpy as np
import pytest

from gradecho import builtin_scenario, integrate
from gradecho.model import (ControlSchedule, GridSpec, MediumParams,
                            ProbePulse, Scenario, Uniform)

UTAU = 1e-6


def small_scenario(flip: bool = True, **overrides) -> Scenario:
    """Cheap, fully resolved scenario for property tests (~1.6k steps)."""
    fields = dict(
        medium=MediumParams(xi=50.0),
        profile=Uniform(b=2.0),
        schedule=ControlSchedule(segments=((0.0, 1.0), (0.8, -1.0)) if flip
                                 else ((0.0, 1.0),)),
        probe=ProbePulse(amplitude=1.0, center_time=0.2, width=0.05),
        grid=GridSpec(t_end=2.0, nz=128),
    )
    fields.update(overrides)
    return Scenario(**fields)


@pytest.fixture(scope="session")
def fig2a_records():
    return {beta: integrate(builtin_scenario(f"fig2a-beta{beta}"))
            for beta in (1, 2, 4)}


@pytest.fixture(scope="session")
def fig2b_record():
    return integrate(builtin_scenario("fig2b"))


@pytest.fixture(scope="session")
def fig3a_record():
    return integrate(builtin_scenario("fig3a"))


@pytest.fixture(scope="session")
def fig3b_record():
    return integrate(builtin_scenario("fig3b"))


@pytest.fixture(scope="session")
def fig4b_record():
    return integrate(builtin_scenario("fig4b"))


@pytest.fixture(scope="session")
def fig4c_record():
    return integrate(builtin_scenario("fig4c"))


@pytest.fixture(scope="session")
def small_record():
    return integrate(small_scenario())


def rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
