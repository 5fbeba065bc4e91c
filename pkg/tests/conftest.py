"""Shared fixtures: force Anderson projection checks on for the whole suite."""

import numpy as np
import pytest

import aarsolve.aar as aar_mod


@pytest.fixture(autouse=True)
def _enable_anderson_checks(monkeypatch):
    # Every aar_solve call in the suite runs with the internal projection
    # assertions active, so a regression in the least-squares step fails
    # loudly no matter which test triggered the solve.
    monkeypatch.setattr(aar_mod, "_FORCE_DEBUG", True)


@pytest.fixture
def rng():
    return np.random.default_rng(20260823)
