import math
import warnings

import numpy as np
import pytest

from reslab.errors import ErrorFloorReached, SupportOverlap
from reslab.mollifier import (
    build_kernel,
    bump_mass,
    global_trace,
    mollified_trace,
    mollified_trace_detail,
    trace_error_scaling,
)
from reslab.periodic_orbits import FixedPointSet, enumerate_fix
from reslab.torus_maps import catalog_map

LADDER = [0.08, 0.04, 0.02, 0.01]


def test_bump_mass_against_grid():
    n = 4000
    h = 2.0 / n
    u = -1 + h * (np.arange(n) + 0.5)
    X, Y = np.meshgrid(u, u)
    r2 = X**2 + Y**2
    vals = np.where(r2 < 1, np.exp(-1 / np.maximum(1 - r2, 1e-300)), 0.0)
    assert vals.sum() * h * h == pytest.approx(bump_mass(), rel=1e-10)


def test_order_zero_kernel():
    k = build_kernel(0, 0.1)
    assert k.node_amplitudes == ((1.0, 1.0),)


@pytest.mark.parametrize("r", [2, 4, 6, 8])
def test_moments(r):
    k = build_kernel(r, 0.1)
    res = k.default_resolution()
    m1 = k.moments(res)
    m2 = k.moments(2 * res)
    assert abs(m1[(0, 0)] - 1.0) <= 1e-10
    for alpha, v in m1.items():
        if alpha != (0, 0):
            # moments scale like eps^|alpha|; compare in kernel units
            assert abs(v) / 0.1 ** sum(alpha) <= 1e-8
        assert abs(v - m2[alpha]) <= 1e-9


def test_kernel_even_and_supported():
    k = build_kernel(4, 0.05)
    pts = np.random.default_rng(0).normal(scale=0.03, size=(200, 2))
    assert np.allclose(k(pts), k(-pts))
    far = pts / np.linalg.norm(pts, axis=1, keepdims=True) * 0.0501
    assert np.all(k(far) == 0.0)


def test_odd_order_rejected():
    with pytest.raises(ValueError, match="r=4"):
        build_kernel(3, 0.1)
    with pytest.raises(ValueError):
        build_kernel(10, 0.1)


def test_linear_trace_exact(cat):
    for r in (0, 2, 4):
        assert mollified_trace(cat, build_kernel(r, 0.05), 1) == pytest.approx(1.0, abs=1e-12)


def test_empty_fixed_set(cat):
    empty = FixedPointSet(1, np.zeros((0, 2)), np.zeros((0, 2, 2)), np.zeros(0))
    assert mollified_trace(cat, build_kernel(2, 0.05), 1, fixed_points=empty) == 0.0


def test_desk_trace_close_to_gamma(desk):
    gamma = enumerate_fix(desk, 1).gamma
    t = mollified_trace(desk, build_kernel(4, 0.05), 1)
    assert abs(t - gamma) <= 0.05**5


def test_branch_count(desk):
    d = mollified_trace_detail(desk, build_kernel(2, 0.02), 2)
    assert d.branch_count == len(d.fixed_points) == 5
    assert d.value == pytest.approx(d.fixed_points.gamma, abs=1e-6)


def test_localization_matches_global(desk):
    k = build_kernel(2, 0.1)
    assert abs(mollified_trace(desk, k, 1) - global_trace(desk, k, 1, 2048)) <= 1e-8


def test_support_overlap(desk):
    with pytest.raises(SupportOverlap):
        mollified_trace(desk, build_kernel(2, 0.3), 2)


def test_scaling_r2(desk):
    res = trace_error_scaling(desk, 1, 2, LADDER)
    assert res.slope >= 2.5
    assert not res.floor_reached
    assert res.to_csv().splitlines()[0] == "epsilon,trace,gamma_ref,abs_error"


def test_scaling_linear_floor(cat):
    with pytest.warns(ErrorFloorReached):
        res = trace_error_scaling(cat, 1, 2, LADDER)
    assert max(res.abs_errors) <= 1e-10 and math.isnan(res.slope)


def test_scaling_needs_ladder(desk):
    with pytest.raises(ValueError):
        trace_error_scaling(desk, 1, 2, [0.1, 0.05])
