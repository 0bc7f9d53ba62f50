"""Upper level sets: membership, H-representation, nesting, convexity."""

import numpy as np
import pytest
from conftest import mk, rand_sample

from qre.envelope import eval_psi
from qre.errors import LevelAboveMax, NonMonotoneUnsupported
from qre.levelsets import level_index, levelset_contains, levelset_hrep


def _two_point_sample():
    return mk([[0.0, 0.0], [1.0, 1.0]], [0.0, 1.0], lipschitz=1.0, monotone=True)


def test_hand_membership():
    # at level 0.5 only the top point counts; its generator shifts to (.5, .5)
    s = _two_point_sample()
    assert levelset_contains(s, 0.5, [0.5, 0.5])
    assert levelset_contains(s, 0.5, [2.0, 0.5])
    assert not levelset_contains(s, 0.5, [0.49, 2.0])
    assert not levelset_contains(s, 0.5, [0.0, 0.0])


def test_hrep_generators_and_corners():
    s = _two_point_sample()
    ls = levelset_hrep(s, 0.5)
    assert ls.index == 1 and ls.shift == pytest.approx(0.5)
    np.testing.assert_allclose(ls.generators, [[0.0, 0.0]])
    np.testing.assert_allclose(ls.corner_points(), [[0.5, 0.5]])


def test_boundary_polyline_sits_on_the_level():
    rng = np.random.default_rng(5)
    s = rand_sample(rng, N=2, J=8, monotone=True)
    v = float(s.values[2]) - 1e-9
    ls = levelset_hrep(s, v)
    assert ls.boundary is not None and ls.boundary.shape[1] == 2
    for pt in ls.boundary:
        assert levelset_contains(s, v, pt + 1e-7)
        assert eval_psi(s, pt).value == pytest.approx(v, abs=1e-6)


def test_membership_iff_value_reaches_level():
    rng = np.random.default_rng(6)
    for _ in range(40):
        s = rand_sample(rng)
        x = rng.uniform(-2.5, 2.5, s.dim)
        v = float(rng.uniform(-1.5, s.v_max))
        psi = eval_psi(s, x).value
        if abs(psi - v) > 1e-6:
            assert levelset_contains(s, v, x) == (psi >= v)


def test_levels_nest():
    rng = np.random.default_rng(7)
    for _ in range(15):
        s = rand_sample(rng)
        v1, v2 = np.sort(rng.uniform(s.v_max - 2.0, s.v_max, 2))
        for _ in range(4):
            x = rng.uniform(-2.5, 2.5, s.dim)
            if levelset_contains(s, v2, x):
                assert levelset_contains(s, v1, x)


def test_levelsets_are_convex():
    rng = np.random.default_rng(8)
    hits = 0
    while hits < 15:
        s = rand_sample(rng)
        v = float(rng.uniform(s.v_max - 1.5, s.v_max))
        a, b = rng.uniform(-2.5, 2.5, (2, s.dim))
        if levelset_contains(s, v, a) and levelset_contains(s, v, b):
            lam = rng.uniform()
            assert levelset_contains(s, v, lam * a + (1 - lam) * b)
            hits += 1


def test_monotone_levelsets_are_upward_closed():
    rng = np.random.default_rng(9)
    hits = 0
    while hits < 10:
        s = rand_sample(rng, monotone=True)
        v = float(rng.uniform(s.v_max - 1.5, s.v_max))
        x = rng.uniform(-2.5, 2.5, s.dim)
        if levelset_contains(s, v, x):
            assert levelset_contains(s, v, x + rng.uniform(0, 1, s.dim))
            hits += 1


def test_level_index_sandwich():
    s = mk([[0.0], [1.0], [2.0]], [2.0, 1.0, 0.0], monotone=True)
    assert level_index(s, 2.0) == 1
    assert level_index(s, 1.5) == 1
    assert level_index(s, 1.0) == 2
    assert level_index(s, -3.0) == 3


def test_guards():
    s = _two_point_sample()
    with pytest.raises(LevelAboveMax):
        levelset_contains(s, s.v_max + 1e-3, [0.0, 0.0])
    free = mk([[0.0, 0.0]], [1.0], monotone=False)
    with pytest.raises(NonMonotoneUnsupported):
        levelset_hrep(free, 0.5)
