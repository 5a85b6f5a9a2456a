from __future__ import annotations

import numpy as np
import pytest

from kolmotaylor.group import chain, prototype, random_spec

LAYER_SHAPES = [(1, 1), (2, 1), (2, 2), (1, 1, 1), (2, 2, 1), (3, 2, 2, 1), (2, 2, 1, 1)]


def all_specs():
    rng = np.random.default_rng(20240611)
    specs = [prototype(), chain((2, 1), [[[1.0, 0.0]]])]
    specs += [random_spec(layers, rng) for layers in LAYER_SHAPES]
    return specs


SPECS = all_specs()
SPEC_IDS = [f"layers{'-'.join(map(str, s.layers))}_{i}" for i, s in enumerate(SPECS)]


@pytest.fixture(params=SPECS, ids=SPEC_IDS)
def spec(request):
    return request.param


@pytest.fixture
def proto():
    return prototype()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_points(spec, rng, count, scale=1.0):
    return rng.uniform(-scale, scale, size=(count, spec.d + 1))


def unit_layer0(spec, rng, count=None):
    shape = (spec.layers[0],) if count is None else (count, spec.layers[0])
    v0 = rng.normal(size=shape)
    v0 /= np.linalg.norm(v0, axis=-1, keepdims=True)
    v = np.zeros(shape[:-1] + (spec.d,))
    v[..., : spec.layers[0]] = v0
    return v


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
