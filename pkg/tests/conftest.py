"""
Shared fixtures.  The parameter set is the one every anchor value in the test
suite refers to: beta_c = 0.2, beta_h = 0.05, E_max = 2, E_v = 1.
"""
import os

os.environ["VQM_LOG_TO_FILE"] = "0"

import pytest  # noqa: E402

from concat import ConcatSpec  # noqa: E402
from design import DesignParams, Mode  # noqa: E402

BETA_C = 0.2
BETA_H = 0.05
E_MAX = 2.0
E_V = 1.0


def make_params(n: int = 4, mode=Mode.FRIDGE, **overrides) -> DesignParams:
    values = dict(n=n, e_v=E_V, e_max=E_MAX, beta_c=BETA_C, beta_h=BETA_H, mode=mode)
    values.update(overrides)
    return DesignParams(**values)


@pytest.fixture
def params() -> DesignParams:
    return make_params()


@pytest.fixture
def engine_params() -> DesignParams:
    return make_params(mode=Mode.ENGINE)


@pytest.fixture
def qutrit_params() -> DesignParams:
    return make_params(n=3)


@pytest.fixture
def concat_spec():
    def build(k: int, mode=Mode.FRIDGE, placement=None) -> ConcatSpec:
        return ConcatSpec(k=k, e_v=E_V, e_max=E_MAX, beta_c=BETA_C, beta_h=BETA_H,
                          mode=mode, placement=placement)
    return build
