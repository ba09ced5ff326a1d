import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reslab.errors import BadPerturbation, ConeConditionFailed, NotHyperbolic
from reslab.torus_maps import (
    CATALOG,
    catalog_map,
    eval_inverse,
    eval_map,
    iterate_with_jacobian,
    jacobian,
    linear_eigen,
    make_linear_map,
    make_perturbed_map,
    map_from_dict,
    perturbation_from_fourier,
    torus_delta,
    verify_hyperbolicity,
    wrap01,
)

CAT = [[2, 1], [1, 1]]
GOLDEN = (3 + math.sqrt(5)) / 2
SHEAR = [{"k": [0, 1], "amp": [1.0, 0.0]}]

unit = st.floats(0.0, 1.0, allow_nan=False, exclude_max=True)


def test_linear_constructor():
    spec = make_linear_map(CAT)
    assert spec.A == ((2, 1), (1, 1)) and spec.epsilon == 0.0 and spec.perturbation == ()


def test_parabolic_rejected():
    with pytest.raises(NotHyperbolic):
        make_linear_map([[1, 1], [0, 1]])


def test_determinant_must_be_unimodular():
    with pytest.raises(NotHyperbolic):
        make_linear_map([[2, 0], [0, 1]])


def test_square_of_cat():
    lam_u, lam_s = linear_eigen(make_linear_map([[5, 3], [3, 2]]).A)
    assert lam_u == pytest.approx(GOLDEN**2, abs=1e-12)
    assert lam_s == pytest.approx(GOLDEN**-2, abs=1e-12)


def test_perturbed_shear_certified():
    spec = make_perturbed_map(CAT, SHEAR, 0.01)
    assert spec.report is not None and spec.report.passed


def test_large_epsilon_fails_cone_check():
    with pytest.raises(ConeConditionFailed):
        make_perturbed_map(CAT, SHEAR, 10.0)


def test_zero_epsilon_behaves_linearly():
    a = make_perturbed_map(CAT, SHEAR, 0.0)
    b = make_linear_map(CAT)
    pts = np.random.default_rng(1).random((20, 2))
    assert np.array_equal(eval_map(a, pts), eval_map(b, pts))


def test_eval_examples():
    cat = make_linear_map(CAT)
    assert np.array_equal(eval_map(cat, [0.0, 0.0]), [0.0, 0.0])
    assert np.allclose(eval_map(cat, [0.5, 0.5]), [0.5, 0.0])
    spec = make_perturbed_map(CAT, [{"k": [1, 1], "amp": [0.3, 0.2], "phase": [0.5, 1.0]}], 0.01)
    expected = wrap01(0.01 * np.array([0.3 * math.sin(0.5), 0.2 * math.sin(1.0)]))
    assert np.allclose(eval_map(spec, [0.0, 0.0]), expected, atol=1e-15)


def test_linear_jacobian_exact():
    cat = make_linear_map(CAT)
    _, J = iterate_with_jacobian(cat, [0.3, 0.7], 3)
    assert np.array_equal(J, [[13, 8], [8, 5]])
    assert np.array_equal(jacobian(cat, [[0.1, 0.2], [0.9, 0.4]]), np.array([CAT, CAT], dtype=float))


@pytest.mark.parametrize("name", ["cat_kick", "cat_shear", "trace4_kick", "flip_kick"])
def test_jacobian_finite_differences(name):
    spec = catalog_map(name, 0.01)
    h = 1e-6
    for p in np.random.default_rng(3).random((10, 2)):
        fd = np.empty((2, 2))
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd[:, j] = torus_delta(eval_map(spec, p + e) - eval_map(spec, p - e)) / (2 * h)
        assert np.max(np.abs(fd - jacobian(spec, p))) <= 1e-6


@given(unit, unit)
@settings(max_examples=50, deadline=None)
def test_semigroup(x, y):
    spec = catalog_map("cat_kick", 0.01)
    p1, J1 = iterate_with_jacobian(spec, [x, y], 1)
    p2, J2 = iterate_with_jacobian(spec, p1, 1)
    q, J = iterate_with_jacobian(spec, [x, y], 2)
    assert np.max(np.abs(torus_delta(p2 - q))) <= 1e-12
    assert np.allclose(J2 @ J1, J, atol=1e-12)


@given(unit, unit, st.integers(1, 6))
@settings(max_examples=50, deadline=None)
def test_iterated_eval_matches_iterate(x, y, n):
    spec = catalog_map("cat_kick", 0.01)
    p = np.array([x, y])
    for _ in range(n):
        p = eval_map(spec, p)
    q, _ = iterate_with_jacobian(spec, [x, y], n)
    assert np.max(np.abs(torus_delta(p - q))) <= 1e-12 * 3.0**n


@given(unit, unit)
@settings(max_examples=50, deadline=None)
def test_points_stay_canonical(x, y):
    q = eval_map(catalog_map("cat_kick", 0.01), [x, y])
    assert np.all((q >= 0.0) & (q < 1.0))


def test_wrap_boundary():
    assert wrap01(-1e-17) == 0.0 or wrap01(-1e-17) < 1.0
    assert np.all(wrap01(np.array([1.0, 2.0, -0.0, -1.0])) == 0.0)


@pytest.mark.parametrize("name", ["cat_kick", "cat_sym_kick", "trace4_kick", "flip_kick"])
def test_kicked_maps_area_preserving(name):
    spec = catalog_map(name, 0.01)
    J = jacobian(spec, np.random.default_rng(0).random((100, 2)))
    assert np.max(np.abs(np.abs(np.linalg.det(J)) - 1.0)) <= 1e-12


def test_inverse():
    spec = catalog_map("cat_kick", 0.01)
    pts = np.random.default_rng(2).random((30, 2))
    assert np.max(np.abs(torus_delta(eval_map(spec, eval_inverse(spec, pts)) - pts))) <= 1e-13


def test_hyperbolicity_report_linear():
    rep = verify_hyperbolicity(make_linear_map(CAT), 64)
    assert rep.passed
    assert rep.min_expansion == pytest.approx(GOLDEN, abs=1e-9)
    assert rep.max_contraction == pytest.approx(1 / GOLDEN, abs=1e-9)


def test_hyperbolicity_fails_for_huge_epsilon():
    spec = map_from_dict({"A": CAT, "epsilon": 10.0, "perturbation": SHEAR}, validate=False)
    assert not verify_hyperbolicity(spec, 64).passed


def test_verdict_grid_stable():
    cat = make_linear_map(CAT)
    assert verify_hyperbolicity(cat, 16).passed == verify_hyperbolicity(cat, 512).passed
    spec = catalog_map("cat_kick", 0.01)
    assert verify_hyperbolicity(spec, 16).passed == verify_hyperbolicity(spec, 512).passed


def test_parabolic_report():
    spec = map_from_dict({"A": [[1, 1], [0, 1]]}, validate=False)
    rep = verify_hyperbolicity(spec, 32)
    assert not rep.passed and rep.to_dict()["pass"] is False


def test_json_roundtrip():
    spec = make_perturbed_map(CAT, [{"k": [1, 2], "amp": [0.1, -0.2], "phase": [0.3, 0.0]}], 0.01)
    doc = json.loads(spec.to_json())
    assert set(doc) == {"A", "epsilon", "perturbation"}
    assert set(doc["perturbation"][0]) == {"k", "amp", "phase"}
    back = map_from_dict(doc)
    assert back == spec and back.content_hash() == spec.content_hash()


def test_bad_perturbation():
    with pytest.raises(BadPerturbation):
        make_perturbed_map(CAT, [{"k": [0.5, 1], "amp": [1, 0]}], 0.01)
    with pytest.raises(BadPerturbation):
        perturbation_from_fourier({(1, 0): (1.0 + 1j, 0.0)})


def test_fourier_perturbation_matches_direct():
    terms = perturbation_from_fourier({(1, 0): (0.5j, 0.25), (-1, 0): (-0.5j, 0.25)})
    spec = make_perturbed_map(CAT, terms, 0.01)
    pts = np.random.default_rng(4).random((10, 2))
    th = 2 * np.pi * pts[:, 0]
    g = np.stack([(0.5j * np.exp(1j * th) - 0.5j * np.exp(-1j * th)).real, 0.5 * np.cos(th)], axis=1)
    assert np.allclose(spec.g(pts), g, atol=1e-14)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_certified(name):
    for eps in (0.0, 0.005, 0.01):
        spec = catalog_map(name, eps)
        assert verify_hyperbolicity(spec, 64).passed
