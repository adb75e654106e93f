from __future__ import annotations

import functools

import numpy as np
import pytest

from fnconv.convolution import build_fusion_bialgebra, build_group_algebra
from fnconv.fusion import FIXTURES, load_fixture
from fnconv.groups import small_groups

GROUPS = small_groups()
FUSION_FN = ("fibonacci", "ising")
FN_FIXTURES = tuple(f"group:{g}" for g in GROUPS) + tuple(f"fusion:{f}" for f in FUSION_FN)


@functools.lru_cache(maxsize=None)
def fn_algebra(key: str):
    kind, name = key.split(":")
    if kind == "group":
        return build_group_algebra(GROUPS[name])
    return build_fusion_bialgebra(load_fixture(name))


@pytest.fixture(params=FN_FIXTURES)
def fn_fixture(request):
    return fn_algebra(request.param)


@pytest.fixture(params=FIXTURES)
def ring(request):
    return load_fixture(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
