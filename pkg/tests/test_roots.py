import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from polybilliard import roots


def test_quadratic_roots_basic():
    assert roots.quadratic_roots(1, -3, 2) == [1.0, 2.0]
    assert roots.quadratic_roots(0, 2, -1) == [0.5]
    assert roots.quadratic_roots(0, 0, 1) == []
    assert roots.quadratic_roots(1, 0, 1) == []


def test_quadratic_roots_cancellation():
    # naive formula loses the small root
    r = roots.quadratic_roots(1.0, -1e8, 1.0)
    assert abs(r[0] - 1e-8) <= 1e-22
    assert abs(r[1] - 1e8) <= 1e-6


def test_quadratic_tiny_discriminant_clamped():
    assert len(roots.quadratic_roots(1.0, 2.0, 1.0 + 1e-17, tiny=1e-14)) == 2
    assert roots.quadratic_roots(1.0, 2.0, 1.0 + 1e-10, tiny=1e-14) == []


@given(st.floats(-100, 100), st.floats(-100, 100))
def test_quadratic_roots_recover(r1, r2):
    got = roots.quadratic_roots(1.0, -(r1 + r2), r1 * r2)
    assert len(got) == 2
    for g, w in zip(got, sorted((r1, r2))):
        assert abs(g - w) <= 1e-6 * max(1.0, abs(r1), abs(r2)) or abs(r1 - r2) < 1e-6


def test_scan_brackets_finds_all():
    br = roots.scan_brackets(np.sin, 0.5, 10.0, 2048)
    found = [roots.refine(np.sin, b) for b in br]
    np.testing.assert_allclose(found, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-12)


def test_scan_skips_non_finite():
    def f(x):
        return np.where(x < 1, np.nan, x - 2)
    br = roots.scan_brackets(f, 0, 3, 30)
    assert len(br) == 1 and br[0][0] <= 2 <= br[0][1]


def test_refine_with_newton_polish():
    f = lambda x: x ** 3 - 2  # noqa: E731
    df = lambda x: 3 * x ** 2  # noqa: E731
    x = roots.first_root(f, 0.0, 3.0, df)
    assert abs(x - 2 ** (1 / 3)) <= 1e-14


def test_newton_polish_rejects_escape():
    # derivative is nonsense: polish must stay in the bracket
    f = lambda x: x - 0.5  # noqa: E731
    x = roots.newton_polish(f, lambda x: 1e-9, 0.5 + 1e-14, 0.4, 0.6)
    assert 0.4 <= x <= 0.6


def test_first_root_none():
    assert roots.first_root(lambda x: x * 0 + 1.0, 0, 1) is None
