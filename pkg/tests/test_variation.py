import warnings

import numpy as np
import pytest

from pharmonic.errors import ValidationError
from pharmonic.geometry import make_grid, rounded_square, support_of_ball, support_of_ellipse
from pharmonic.measure import gamma
from pharmonic.pde import AnnulusConfig
from pharmonic.variation import (
    VariationReport,
    fd_derivative,
    fd_order,
    formula_derivative,
    gamma_on_path,
    homogeneity_slope,
    self_consistency,
    step_bound,
    verify_variation,
)

G = make_grid(256)
BALL = support_of_ball(1.0, grid=G)
ELL = support_of_ellipse(1.5, 1.0, G)


class TestPath:
    def test_t_zero(self):
        c = AnnulusConfig(p=2.0)
        # equal up to roundoff in the q-sum, amplified by the nonlinear solver tolerance
        assert gamma_on_path(ELL, BALL, 0.5, 0.0, c) == pytest.approx(gamma(ELL, c), rel=1e-6)

    @pytest.mark.parametrize("p, q, t", [(1.5, 0.5, 0.1), (2.5, 0.3, -0.05), (4.0, 0.9, 0.2)])
    def test_self_path_scaling(self, p, q, t):
        c = AnnulusConfig(p=p)
        expect = (1 + t) ** ((2 - p + 1) / q) * gamma(ELL, c)
        assert gamma_on_path(ELL, ELL, q, t, c) == pytest.approx(expect, rel=1e-6)

    def test_ball_example(self):
        # obstacle radius half the body radius, scaled along the path
        c = AnnulusConfig(p=1.5, rho_factor=0.5)
        assert gamma_on_path(BALL, BALL, 0.5, 0.1, c) == pytest.approx(1.1**3 * 2 * np.pi, rel=0.02)

    def test_step_bound(self):
        assert step_bound(BALL, support_of_ball(2.0, grid=G), 0.5) == pytest.approx(0.5 / np.sqrt(2))
        with pytest.raises(ValidationError) as e:
            fd_derivative(BALL, BALL, 0.5, AnnulusConfig(), step=0.9)
        assert e.value.code == "bad-step"


class TestFormula:
    def test_self_pair(self):
        c = AnnulusConfig(p=2.0)
        assert formula_derivative(ELL, ELL, 0.5, c) == pytest.approx(2.0 * gamma(ELL, c), rel=1e-12)

    def test_concentric_balls(self):
        c = AnnulusConfig(p=1.5).with_obstacle((0, 0), 0.5)
        val = formula_derivative(BALL, support_of_ball(2.0, grid=G), 0.5, c)
        assert val == pytest.approx(6 * np.sqrt(2) * np.pi, rel=0.01)

    def test_p3_vanishes(self):
        assert formula_derivative(ELL, BALL, 0.5, AnnulusConfig(p=3.0)) == 0.0

    def test_q_zero_rejected(self):
        with pytest.raises(ValidationError):
            formula_derivative(ELL, BALL, 0.0, AnnulusConfig())

    def test_grid_mismatch(self):
        with pytest.raises(ValidationError) as e:
            formula_derivative(ELL, support_of_ball(1.0, grid=make_grid(64)), 0.5, AnnulusConfig())
        assert e.value.code == "grid-mismatch"


@pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 4.0])
@pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
def test_self_consistency(p, q):
    fd, fm, exact = self_consistency(ELL, q, AnnulusConfig(p=p))
    assert fd == pytest.approx(exact, rel=0.02)
    assert fm == pytest.approx(exact, rel=0.02)


class TestReports:
    def test_ball_ball(self):
        r = verify_variation(BALL, BALL, 0.5, AnnulusConfig(p=2.0))
        assert r.passed and r.rel_error <= 0.02 and not r.degenerate

    def test_ellipse_ball(self):
        r = verify_variation(ELL, BALL, 0.5, AnnulusConfig(p=2.0), tol=0.03)
        assert r.rel_error <= 0.03, r

    def test_rounded_square_ellipse(self):
        r = verify_variation(rounded_square(G), support_of_ellipse(1.3, 1.0, G), 0.7, AnnulusConfig(p=2.5), tol=0.05)
        assert r.rel_error <= 0.05, r

    def test_degenerate_flag(self):
        r = verify_variation(ELL, BALL, 0.5, AnnulusConfig(p=3.0))
        assert r.formula_value == 0.0 and r.degenerate

    def test_row(self):
        row = VariationReport("K", "L", 0.5, 2.0, 1.0, 1.01, 0.0099, 0.01, False).as_row()
        assert row["passed"] and not row["degenerate"] and row["K_id"] == "K"


def test_fd_order_smooth_pair():
    assert fd_order(ELL, BALL, 0.5, AnnulusConfig(p=2.0)) >= 2.0


def test_richardson_combination():
    c = AnnulusConfig(p=2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        r = fd_derivative(ELL, BALL, 0.5, c, step=0.02, richardson=True)
    d1 = fd_derivative(ELL, BALL, 0.5, c, step=0.02, richardson=False)
    d2 = fd_derivative(ELL, BALL, 0.5, c, step=0.01, richardson=False)
    assert r == pytest.approx((4 * d2 - d1) / 3, rel=1e-12)


class TestSign:
    L = support_of_ball(2.0, grid=G)  # contains ELL

    @pytest.mark.parametrize("p", [1.5, 2.5])
    def test_positive_below_n_plus_1(self, p):
        c = AnnulusConfig(p=p)
        assert formula_derivative(ELL, self.L, 0.5, c) > 0
        assert fd_derivative(ELL, self.L, 0.5, c, richardson=False) > 0

    def test_negative_above_n_plus_1(self):
        c = AnnulusConfig(p=4.0)
        assert formula_derivative(ELL, self.L, 0.5, c) < 0
        assert fd_derivative(ELL, self.L, 0.5, c, richardson=False) < 0


@pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 4.0])
def test_homogeneity_slope(p):
    assert homogeneity_slope(ELL, AnnulusConfig(p=p)) == pytest.approx(3 - p, abs=0.05)
