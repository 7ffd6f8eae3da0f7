import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from polybilliard.errors import DegenerateNormal, DegenerateTangent, DimensionMismatch
from polybilliard.geom import (Curve, SkewMatrix, SurfacePatch, as_vec, curve_fd_error,
                               expm_skew, matrix_exp_action, patch_fd_error, surface_normal,
                               unit_tangent)
from polybilliard.tables import (ArctanSurface, CircleTable, EllipseTable, HyperbolaTable,
                                 ParabolaTable, ProfileFamily, Spiral, ToricKnot)


def circle():
    return Curve(lambda t: np.stack([np.cos(t), np.sin(t)], -1),
                 lambda t: np.stack([-np.sin(t), np.cos(t)], -1), 2)


def test_unit_tangent_circle():
    np.testing.assert_allclose(unit_tangent(circle(), 0.0), [0.0, 1.0], atol=1e-15)


def test_unit_tangent_spiral():
    np.testing.assert_allclose(unit_tangent(Spiral(1, 1).curve, 0.0),
                               np.array([1.0, 0.0, 1.0]) / math.sqrt(2), atol=1e-15)


def test_unit_tangent_toric_knot():
    np.testing.assert_allclose(unit_tangent(ToricKnot(1, 1, 2, 3).curve, 0.0),
                               np.array([0.0, 2.0, 0.0, 3.0]) / math.sqrt(13), atol=1e-15)


def test_unit_tangent_degenerate():
    flat = Curve(lambda t: np.zeros(2), lambda t: np.zeros(2), 2)
    with pytest.raises(DegenerateTangent):
        unit_tangent(flat, 0.3)


@given(st.floats(-50, 50))
def test_unit_tangent_norm(t):
    for curve in (Spiral(2.0, 0.3).curve, ToricKnot(1.0, 2.0, 2, 3).curve, EllipseTable().curve):
        assert abs(np.linalg.norm(unit_tangent(curve, t)) - 1.0) <= 1e-14


def test_matrix_exp_planar_rotation():
    a = SkewMatrix.from_dense([[0, -1], [1, 0]])
    np.testing.assert_allclose(matrix_exp_action(a, math.pi / 2, [1, 0]), [0, 1], atol=1e-15)


def test_matrix_exp_zero_is_identity():
    a = SkewMatrix(3, [0, 0, 0])
    x0 = np.array([0.3, -1.2, 4.0])
    assert np.array_equal(matrix_exp_action(a, 7.5, x0), x0)


@pytest.mark.parametrize("t", [0.0, 0.4, 1.7, -3.1])
def test_matrix_exp_toric_blocks(t):
    a, b = 1.5, 0.7
    got = matrix_exp_action(SkewMatrix.block_rotation(2, 3), t, [a, 0, b, 0])
    want = [a * math.cos(2 * t), a * math.sin(2 * t), b * math.cos(3 * t), b * math.sin(3 * t)]
    np.testing.assert_allclose(got, want, atol=1e-14)


def test_matrix_exp_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        matrix_exp_action(SkewMatrix(3, [1, 2, 3]), 1.0, [1, 0])
    with pytest.raises(DimensionMismatch):
        SkewMatrix(3, [1, 2])


def test_expm_matches_scipy(rng):
    for _ in range(50):
        n = int(rng.integers(2, 7))
        a = SkewMatrix(n, rng.normal(size=n * (n - 1) // 2))
        t = rng.uniform(-10, 10)
        np.testing.assert_allclose(expm_skew(a, t), scipy.linalg.expm(a.dense() * t), atol=1e-11)


def test_expm_preserves_norm(rng):
    # at least 100 random skew matrices, n <= 6, t in [-10, 10]
    for _ in range(150):
        n = int(rng.integers(2, 7))
        a = SkewMatrix(n, rng.normal(scale=2.0, size=n * (n - 1) // 2))
        x0 = rng.normal(size=n)
        x = matrix_exp_action(a, rng.uniform(-10, 10), x0)
        assert abs(np.linalg.norm(x) - np.linalg.norm(x0)) <= 1e-12 * max(1.0, np.linalg.norm(x0))


@settings(max_examples=60)
@given(st.lists(st.floats(-3, 3), min_size=6, max_size=6), st.floats(-10, 10))
def test_expm_orthogonal_property(upper, t):
    q = expm_skew(SkewMatrix(4, upper), t)
    np.testing.assert_allclose(q.T @ q, np.eye(4), atol=1e-12)


def test_skew_roundtrip_and_neg():
    a = SkewMatrix(3, [1.0, -2.0, 0.5])
    d = a.dense()
    assert np.array_equal(d, -d.T)
    assert SkewMatrix.from_dense(d) == a
    assert (-a).dense().tolist() == (-d).tolist()
    with pytest.raises(ValueError):
        SkewMatrix.from_dense([[0, 1], [1, 0]])


def test_block_rotation_detected():
    assert SkewMatrix.block_rotation(2, 3).rotation_blocks() == [2, 3]
    assert SkewMatrix(3, [1, 1, 0]).rotation_blocks() is None


def test_normal_plane():
    plane = SurfacePatch(lambda u1, u2: np.array([u1, u2, 0.0]),
                         lambda u1, u2: (np.array([1.0, 0, 0]), np.array([0, 1.0, 0])))
    n = surface_normal(plane, 0.3, -2.0)
    assert abs(abs(n[2]) - 1) == 0 and n[0] == n[1] == 0


def test_normal_paraboloid_apex():
    patch = ProfileFamily(0.0, 2.0, 1.0, 1.0).patch()
    np.testing.assert_allclose(np.abs(surface_normal(patch, 0.0, 0.0)), [0, 0, 1], atol=1e-15)
    np.testing.assert_allclose(patch.eval(0.0, 0.0), [0, 0, 0.25])


def test_normal_graph_direction(rng):
    fam = ProfileFamily(1.0, 0.0, 1.0, 1.0)
    for _ in range(20):
        u1, u2 = rng.uniform(-0.8, 0.8, 2)
        _, fp = fam.eval(u1 * u1 + u2 * u2)
        want = np.array([-2 * u1 * fp, -2 * u2 * fp, 1.0])
        n = surface_normal(fam.patch(), u1, u2)
        np.testing.assert_allclose(np.cross(n, want), 0, atol=1e-14)


def test_normal_degenerate():
    bad = SurfacePatch(lambda u1, u2: np.zeros(3),
                       lambda u1, u2: (np.array([1.0, 0, 0]), np.array([2.0, 0, 0])))
    with pytest.raises(DegenerateNormal):
        surface_normal(bad, 0, 0)


def test_as_vec():
    with pytest.raises(DimensionMismatch):
        as_vec([1.0])
    with pytest.raises(DimensionMismatch):
        as_vec([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        as_vec([1.0, math.nan])


CURVES = {
    "circle": CircleTable(1.3, 0.2, -0.4).curve,
    "ellipse": EllipseTable().curve,
    "hyperbola": HyperbolaTable().curve,
    "parabola": ParabolaTable(1.0, 0.5).curve,
    "toric_knot": ToricKnot(1.0, 0.5, 2, 3).curve,
    "spiral": Spiral(1.0, 1.0).curve,
}


@pytest.mark.parametrize("name", sorted(CURVES))
def test_curve_derivatives_match_differences(name, rng):
    assert curve_fd_error(CURVES[name], rng.uniform(-3, 3, 100)) <= 1e-6


def test_patch_derivatives_match_differences(rng):
    arctan = ArctanSurface(1.0, 1.0)
    us = np.column_stack([rng.uniform(-1, 1, 100), rng.uniform(0.3, 2, 100)])
    assert patch_fd_error(arctan.patch, us) <= 1e-6
    for fam in (ProfileFamily(0.0, 2.0, 1.0, 1.0), ProfileFamily(1.0, 0.0, 1.0, 1.0)):
        us = rng.uniform(-0.9, 0.9, (100, 2))
        assert patch_fd_error(fam.patch(), us) <= 1e-6
