import numpy as np
import pytest

from pharmonic.geometry import make_grid
from pharmonic.pde import AnnulusConfig
from pharmonic.suites import Check, _monotone, gradient_bound_suite, halfplane_bound


def test_halfplane_bound_far_field():
    # far from the line the disk looks like a point charge: |grad v| ~ 2 / (d log(2 d / rho))
    d, rho = 1e4, 0.4
    assert halfplane_bound(d, rho) == pytest.approx(2 / (d * np.log(2 * d / rho)), rel=1e-6)


def test_halfplane_bound_decreasing():
    b = halfplane_bound(np.linspace(0.5, 3.0, 200), 0.4)
    assert np.all(np.diff(b) < 0)


def test_gradient_bound_suite():
    checks = gradient_bound_suite(make_grid(256), AnnulusConfig())
    assert len(checks) == 12
    assert all(c.passed for c in checks), [c.line() for c in checks if not c.passed]


def test_monotone_floor():
    assert _monotone([1.0, 0.5, 1e-12, 2e-12], floor=1e-9)
    assert not _monotone([1.0, 0.5, 0.6], floor=1e-9)


def test_check_line():
    assert Check("s", "case", 0.5, 1.0, True).line() == "[PASS] s: case: 0.5 (tol 1)"
