import math

import numpy as np
import pytest

from reslab.errors import CountCapExceeded, NewtonDiverged
from reslab.periodic_orbits import (
    GammaTable,
    enumerate_fix,
    fixed_point_count,
    fixed_points_linear,
    gamma_table,
    refine_fixed_point_newton,
    smith_normal_form_2x2,
)
from reslab.torus_maps import CATALOG, catalog_map, int_matpow, iterate_with_jacobian, torus_delta, torus_distance

CAT = ((2, 1), (1, 1))


@pytest.mark.parametrize("n,count", [(1, 1), (2, 5), (3, 16)])
def test_lattice_counts(n, count):
    pts = fixed_points_linear(CAT, n)
    assert len(pts) == count == fixed_point_count(CAT, n)
    img = (pts @ np.array(int_matpow(CAT, n), dtype=float).T) - pts
    assert np.max(np.abs(img - np.round(img))) <= 1e-12
    d = torus_distance(pts[:, None, :], pts[None, :, :]) + np.eye(len(pts))
    assert d.min() > 1e-8


@pytest.mark.parametrize("A", [CAT, ((3, 2), (1, 1)), ((1, 1), (1, 0)), ((5, 3), (3, 2))])
@pytest.mark.parametrize("n", range(1, 8))
def test_count_is_determinant(A, n):
    An = np.array(int_matpow(A, n), dtype=object)
    det = (An[0, 0] - 1) * (An[1, 1] - 1) - An[0, 1] * An[1, 0]
    assert fixed_point_count(A, n) == abs(det)


def test_smith_form():
    B = ((4, 3), (3, 1))  # A^2 - I for the cat map
    U, V, d1, d2 = smith_normal_form_2x2(B)
    prod = np.array(U, dtype=object) @ np.array(B, dtype=object) @ np.array(V, dtype=object)
    assert prod[0, 1] == prod[1, 0] == 0 and (prod[0, 0], prod[1, 1]) in ((d1, d2), (-d1, d2), (d1, -d2), (-d1, -d2))
    assert d1 * d2 == 5 and d2 % d1 == 0


def test_count_cap():
    with pytest.raises(CountCapExceeded):
        fixed_points_linear(CAT, 20, cap=1000)


def test_newton_linear(cat):
    rec = refine_fixed_point_newton(cat, 1, (0.0, 0.0))
    assert rec.point == (0.0, 0.0) and rec.weight == 1.0


def test_newton_perturbed_origin(desk):
    rec = refine_fixed_point_newton(desk, 1, (0.0, 0.0))
    assert torus_distance(np.array(rec.point), np.zeros(2)) <= 1.0 * desk.epsilon
    assert rec.newton_residual <= 1e-12


def test_newton_diverges_far_from_basin():
    spec = catalog_map("cat_kick", 0.01)
    with pytest.raises(NewtonDiverged):
        refine_fixed_point_newton(spec, 6, (0.123456, 0.654321), maxiter=3)


def test_linear_route_weights(cat):
    fps = enumerate_fix(cat, 2)
    assert len(fps) == 5
    assert np.all(fps.weights == 0.2)


def test_newton_reproduces_lattice(cat):
    for n in (1, 2, 3, 4):
        lat = fixed_points_linear(CAT, n)
        for p in lat:
            rec = refine_fixed_point_newton(cat, n, p)
            assert torus_distance(np.array(rec.point), p) <= 1e-12
            assert abs(rec.weight - 1.0 / fixed_point_count(CAT, n)) <= 1e-12


def test_perturbed_counts_and_weights(desk):
    fps = enumerate_fix(desk, 2)
    assert len(fps) == 5
    assert np.all(np.abs(fps.weights - 0.2) <= 0.2 * 10 * desk.epsilon * 8)
    for rec in fps:
        q, _ = iterate_with_jacobian(desk, np.array(rec.point), 2)
        assert torus_distance(q, np.array(rec.point)) <= 1e-12
        assert rec.weight == pytest.approx(1 / abs(np.linalg.det(np.eye(2) - rec.jac_n)), rel=1e-12)


def test_divisor_containment(desk):
    p2 = enumerate_fix(desk, 2).points
    p4 = enumerate_fix(desk, 4).points
    for p in p2:
        assert torus_distance(p4, p).min() <= 1e-9


def test_weight_lower_bound(desk):
    lam = desk.report.min_expansion
    for n in (1, 3, 5):
        fps = enumerate_fix(desk, n)
        bound = (lam**n - 1) * (1 - lam**-n) * 0.9
        assert np.all(np.abs(fps.det_id_minus_jac) >= bound)


def test_gamma_cat_exact(cat):
    t = gamma_table(cat, 10)
    assert t.counts[:3] == [1, 5, 16]
    assert max(abs(g - 1.0) for g in t.gamma) <= 1e-12


def test_gamma_unit_amplitude_range():
    # unit-amplitude perturbation at eps = 0.01: Gamma_n stays within 10% of the linear value
    t = gamma_table(catalog_map("cat_shear", 0.01), 6)
    assert all(0.9 <= g <= 1.1 for g in t.gamma)


def test_gamma_desk(desk_gamma):
    assert desk_gamma.counts == [fixed_point_count(CAT, n) for n in range(1, 11)]
    assert all(g > 0 for g in desk_gamma.gamma)


def test_gamma_table_roundtrip(desk_gamma):
    back = GammaTable.from_csv(desk_gamma.to_csv())
    assert back.gamma == desk_gamma.gamma and back.counts == desk_gamma.counts
    assert GammaTable.from_dict(desk_gamma.to_dict()) == desk_gamma


def test_empty_gamma():
    assert GammaTable.from_values([0.0, 0.0]).gamma == [0.0, 0.0]


@pytest.mark.parametrize("name", [k for k, (_, t) in CATALOG.items() if t])
def test_gamma_boundedness_small(name):
    t = gamma_table(catalog_map(name, 0.01), 6)
    assert max(t.gamma) / min(t.gamma) <= 2.0
