"""Shared builders for the test suite."""

from __future__ import annotations

import functools

from magnetosc.cli.scenario import load_scenario
from magnetosc.profiles import Constant, SystemParams
from magnetosc.quantum import QuantumSystem


def const_params(m1=1.0, m2=1.0, C1=1.0, C2=1.0, C3=0.0, B=0.0, interval=(0.0, 10.0), e=1.0, hbar=1.0):
    """Parameters with every profile constant; profiles may also be passed directly."""

    def wrap(v):
        return v if hasattr(v, "value") else Constant(float(v))

    return SystemParams(
        m1=wrap(m1), m2=wrap(m2), C1=wrap(C1), C2=wrap(C2), C3=wrap(C3), B=wrap(B),
        interval=interval, e=e, hbar=hbar,
    )


@functools.lru_cache(maxsize=None)
def scenario(name: str):
    return load_scenario(name)


@functools.lru_cache(maxsize=None)
def system(name: str) -> QuantumSystem:
    return QuantumSystem.build(scenario(name).params)


ACCEPTANCE_LINES: list[str] = []
