import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polybilliard import integrals as ig
from polybilliard.config import parse_integral
from polybilliard.dynamics import Orbit, PhaseState, WireChord, propagate
from polybilliard.errors import DegenerateChord, DimensionMismatch
from polybilliard.geom import SkewMatrix
from polybilliard.tables import (ArctanSurface, CircleTable, ExpWire, ProfileFamily, Spiral,
                                 make_parabolic_lens)


def test_conic_integral_example():
    x, v = np.array([0.0, 1.0]), np.array([1.0, 0.0])
    assert ig.PlanarDeg1()(x, v) == -1.0
    assert ig.ConicIntegral(1.0)(x, v) == 2.0


def test_spiral_integral_example():
    R = 1.7
    spec = Spiral(R, 1.0).natural_integrals()[0]
    assert spec(np.array([0.0, R, 0.0]), np.array([1.0, 0.0, 0.0])) == pytest.approx(R, abs=1e-15)


def test_spiral_integral_hand_formula(rng):
    a = 0.8
    spec = Spiral(1.0, a).natural_integrals()[0]
    for _ in range(20):
        x, v = rng.normal(size=3), rng.normal(size=3)
        want = x[1] * v[0] - x[0] * v[1] + a * v[2]
        assert spec(x, v) == pytest.approx(want, abs=1e-13)


def test_degree2_on_axis(rng):
    spec = ig.Degree2Axial(0.0, 1.0, 0.0)
    for _ in range(10):
        x3 = rng.normal()
        v = rng.normal(size=3)
        assert spec(np.array([0, 0, x3]), v) == pytest.approx(-x3 * (v[0] ** 2 + v[1] ** 2), abs=1e-13)


def test_linear_momentum_explicit_sum(rng):
    for n in (2, 3, 4, 5):
        spec = ig.LinearMomentum(SkewMatrix(n, rng.normal(size=n * (n - 1) // 2)),
                                 tuple(rng.normal(size=n)))
        x, v = rng.normal(size=n), rng.normal(size=n)
        assert spec(x, v) == pytest.approx(spec.explicit_sum(x, v), abs=1e-12)


def test_transpose_negates(rng):
    A = SkewMatrix(4, rng.normal(size=6))
    x, v = rng.normal(size=4), rng.normal(size=4)
    assert ig.LinearMomentum(-A)(x, v) == pytest.approx(-ig.LinearMomentum(A)(x, v), abs=1e-14)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        ig.ConicIntegral(1.0)(np.zeros(3), np.zeros(3))
    with pytest.raises(DimensionMismatch):
        ig.AxialDeg1()(np.zeros(3), np.zeros(2))


SPECS = [ig.PlanarDeg1(0.3, -1.0), ig.ParabolaIntegral(0.5), ig.ConicIntegral(1.0),
         ig.AxialDeg1(1.0, 2.0), ig.Degree2Axial(1.0, -0.5, 2.0),
         ig.LinearMomentum(SkewMatrix(3, [1.0, -2.0, 0.5]), (0.0, 1.0, 0.0))]


@settings(max_examples=40)
@given(st.integers(0, len(SPECS) - 1), st.floats(-10, 10),
       st.lists(st.floats(-5, 5), min_size=6, max_size=6))
def test_line_invariance(k, lam, xv):
    spec = SPECS[k]
    n = spec.dim
    x, v = np.array(xv[:n]), np.array(xv[3:3 + n])
    if np.linalg.norm(v) < 1e-3:
        return
    v = v / np.linalg.norm(v)
    assert abs(spec(x + lam * v, v) - spec(x, v)) <= 1e-12 * max(1.0, abs(spec(x, v))) * 100


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.label)
def test_label_round_trip(spec):
    assert parse_integral(spec.label) == [spec]


def test_audit_series_order():
    xs = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    vs = np.array([[1.0, 0.0], [-1 / math.sqrt(2), 1 / math.sqrt(2)], [0.0, -1.0]])
    vals = ig.audit_series(xs, vs, ig.PlanarDeg1())
    # initial, then (midpoint, incoming, outgoing) per impact
    assert vals.shape == (7,)
    assert vals[1] == ig.PlanarDeg1()(0.5 * (xs[0] + xs[1]), vs[0])
    assert vals[2] == ig.PlanarDeg1()(xs[1], vs[0])
    assert vals[3] == ig.PlanarDeg1()(xs[1], vs[1])


def test_single_segment_exact():
    orbit = propagate(CircleTable(), PhaseState.make([0.1, 0.2], [0.6, 0.8]), 1)
    x = orbit.positions
    spec = ig.PlanarDeg1()
    f0 = spec(x[0], orbit.velocities[0])
    f1 = spec(x[1], orbit.velocities[0])
    assert abs(f1 - f0) <= 1e-16
    # initial, midpoint and incoming values all lie on the one segment
    seg = ig.audit_series(x, orbit.velocities, spec)[:3]
    # rounding only, relative to the O(|x||v|) terms being cancelled
    assert np.max(np.abs(seg - seg[0])) <= 4 * np.finfo(float).eps


def test_empty_report():
    rep, = ig.audit_orbit(Orbit("planar"), [ig.PlanarDeg1()])
    assert rep.n_impacts == 0
    rec = rep.to_record(1e-9)
    assert rec["pass"] is False and rec["F0"] is None


def test_relative_floor():
    rep = ig.report_from_series("x", np.array([1e-6, 2e-6]), 1)
    assert rep.max_abs_drift == pytest.approx(1e-6)
    assert rep.max_rel_drift == pytest.approx(1e-3)


def test_circle_conservation_1e4():
    orbit = propagate(CircleTable(), PhaseState.make([0.3, -0.1], [0.2, 1.0], normalize=True), 10_000)
    rep, = ig.audit_orbit(orbit, [ig.PlanarDeg1()])
    assert rep.n_impacts == 10_000 and rep.max_rel_drift <= 1e-10


def test_lens_conservation_1e3():
    lens = make_parabolic_lens()
    orbit = propagate(lens, PhaseState.make([0.1, 0.05, 0.5], [0.3, -0.7, 0.2], normalize=True), 1000)
    reps = ig.audit_orbit(orbit, [ig.AxialDeg1(1, 0), ig.Degree2Axial(0, 2, 1)])
    assert orbit.n_impacts == 1000
    assert all(r.max_rel_drift <= 1e-8 for r in reps)


def test_wire_chord_integral_ends_agree(rng):
    w = ExpWire(SkewMatrix(4, rng.normal(size=6)), rng.normal(size=4))
    spec = w.natural_integrals()[0]
    for _ in range(30):
        s, t = rng.uniform(-5, 5, 2)
        ch = WireChord(s, t)
        assert ig.wire_chord_integral(w, ch, spec) == pytest.approx(
            ig.wire_chord_integral(w, ch, spec, at_end=True), abs=1e-13)
    with pytest.raises(DegenerateChord):
        ig.wire_chord_integral(w, WireChord(1.0, 1.0), spec)


def test_spiral_chord_hand_value():
    sp = Spiral(1.0, 1.0)
    spec = sp.natural_integrals()[0]
    p, q = np.array([0.0, 1.0, 0.0]), np.array([1.0, 0.0, math.pi / 2])
    u = (q - p) / np.linalg.norm(q - p)
    want = p[1] * u[0] - p[0] * u[1] + 1.0 * u[2]
    assert ig.wire_chord_integral(sp, WireChord(0.0, math.pi / 2), spec) == pytest.approx(want, abs=1e-15)


def test_tangential_data_and_axial_identity(rng):
    # alpha M3 + beta v3 = h1 S1 + h2 S2 on the arctan surface
    for alpha, beta in ((1.0, 1.0), (2.0, -0.5)):
        surf = ArctanSurface(alpha, beta)
        spec = ig.AxialDeg1(alpha, beta)
        for _ in range(200):
            u1, u2 = rng.uniform(-1, 1), rng.uniform(0.2, 2)
            v = rng.normal(size=3)
            v /= np.linalg.norm(v)
            S1, S2 = ig.tangential_data(surf.patch, u1, u2, v)
            h1, h2 = ig.axial_multipliers(surf.patch, u1, u2, alpha)
            x = surf.patch.eval(u1, u2)
            assert spec(x, v) == pytest.approx(h1 * S1 + h2 * S2, abs=1e-10)


@pytest.mark.parametrize("abcs", [(0.0, 2.0, 1.0, 1.0), (0.0, 2.0, 1.0, -0.5), (1.0, 0.0, 1.0, 1.0),
                                  (1.0, 0.0, 1.0, -0.25), (1.5, 0.4, 0.8, 0.6)])
def test_degree2_identity(abcs, rng):
    a, b, c, s = abcs
    fam = ProfileFamily(a, b, c, s)
    spec = ig.Degree2Axial(a, b, c)
    lo, hi = 0.0, min(fam.t_max(), 2.0)
    if s < 0 and a:
        lo, hi = fam.s + fam.D + 0.05, fam.s + fam.D + 1.0
    for _ in range(200):
        t = rng.uniform(lo + 0.01, 0.95 * hi)
        ph = rng.uniform(0, 2 * math.pi)
        u1, u2 = math.sqrt(t) * math.cos(ph), math.sqrt(t) * math.sin(ph)
        f, fp = (float(z) for z in fam.eval(t))
        if abs(fp) < 1e-3:
            continue
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        S1, S2 = ig.tangential_data(fam.patch(), u1, u2, v)
        h = ig.degree2_multipliers(a, b, c, t, f, fp)
        rhs = h["h11"] * S1 ** 2 + h["h12"] * S1 * S2 + h["h22"] * S2 ** 2 + h["h"]
        assert spec(np.array([u1, u2, f]), v) == pytest.approx(rhs, abs=1e-9)
        assert abs(ig.degree2_constraint_residual(a, b, c, t, f, fp)) <= 1e-9


def test_printed_constraint_warns(caplog):
    fam = ProfileFamily(1.0, 0.0, 1.0, 1.0)
    f, fp = (float(z) for z in fam.eval(0.5))
    with caplog.at_level(logging.WARNING):
        assert not ig.check_degree2_constraint(1.0, 0.0, 1.0, 0.5, f, fp)
    assert "printed" in caplog.text
    # linear family: the printed and consistent forms coincide
    assert ig.check_degree2_constraint(0.0, 2.0, 1.0, 0.5, 0.75, 1.0)
