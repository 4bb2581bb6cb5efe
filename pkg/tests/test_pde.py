import numpy as np
import pytest

from pharmonic.errors import ValidationError
from pharmonic.geometry import (
    make_grid,
    radial_function,
    regular_polygon,
    rounded_square,
    support_of_ball,
    support_of_ellipse,
    translate,
)
from pharmonic.pde import (
    AnnulusConfig,
    build_mesh,
    level_set_polygon,
    polygon_convexity_defect,
    radial_oracle,
    solve_body,
    solve_plaplace,
)

G = make_grid(256)
BALL = support_of_ball(1.0, grid=G)


def cfg(p=2.0, rho=0.5, **kw):
    return AnnulusConfig(p=p, **kw).with_obstacle((0.0, 0.0), rho)


class TestMesh:
    def test_node_radii(self):
        m = build_mesh(BALL, cfg(Ns=4, Ntheta=8))
        assert np.allclose(m.radii, np.array([0.5, 0.625, 0.75, 0.875, 1.0])[:, None])
        assert np.allclose(np.hypot(*m.nodes[-1].T), 1.0)

    def test_clearance(self):
        with pytest.raises(ValidationError) as e:
            build_mesh(BALL, AnnulusConfig(clearance_min=0.05).with_obstacle((0, 0), 0.99))
        assert e.value.code == "obstacle-clearance"

    def test_ellipse_outer_ring(self):
        K = support_of_ellipse(2, 1, G)
        m = build_mesh(K, cfg(Ntheta=64))
        assert np.allclose(m.outer, radial_function(K, m.theta), rtol=1e-12)
        # the grid polygon circumscribes the ellipse, so it is within O(dtheta^2) of the exact radius
        exact = 1.0 / np.sqrt((np.cos(m.theta) / 2) ** 2 + np.sin(m.theta) ** 2)
        assert np.allclose(m.outer, exact, rtol=G.dtheta**2)

    def test_default_obstacle_moves_with_body(self):
        K = support_of_ellipse(1.5, 1, G)
        m0 = build_mesh(K, AnnulusConfig())
        m1 = build_mesh(translate(K, (0.2, -0.1)), AnnulusConfig())
        assert np.allclose(m1.center - m0.center, (0.2, -0.1), atol=1e-12)
        assert m1.rho == pytest.approx(m0.rho, rel=1e-12)


class TestRadialOracle:
    def test_p2(self):
        u, g = radial_oracle(1.0, 0.5, 2.0)
        assert g == pytest.approx(1 / np.log(2))
        assert u(0.5) == pytest.approx(1.0) and u(1.0) == pytest.approx(0.0)

    def test_p15(self):
        u, g = radial_oracle(1.0, 0.5, 1.5)
        assert g == pytest.approx(1.0)
        assert u(0.75) == pytest.approx(1 / 0.75 - 1)

    def test_p4(self):
        _, g = radial_oracle(1.0, 0.5, 4.0)
        assert g == pytest.approx((2 / 3) / (1 - 0.5 ** (2 / 3)), rel=1e-14)
        assert g == pytest.approx(1.80161, abs=1e-5)

    def test_ball_radius_two(self):
        assert radial_oracle(2.0, 1.0, 2.0)[1] == pytest.approx(1 / (2 * np.log(2)))


class TestSolver:
    @pytest.mark.parametrize("p", [1.5, 2.0])
    def test_nodal_values(self, p):
        sol = solve_body(BALL, cfg(p, Ns=64, Ntheta=128))
        u, _ = radial_oracle(1.0, 0.5, p)
        assert np.abs(sol.u - u(sol.mesh.radii)).max() <= 0.01

    @pytest.mark.parametrize("p, g", [(2.0, 1 / np.log(2)), (1.5, 1.0)])
    def test_boundary_gradient(self, p, g):
        sol = solve_body(BALL, cfg(p))
        assert np.allclose(sol.boundary_gradient, g, rtol=0.01)

    def test_ball_radius_two_gradient(self):
        sol = solve_body(support_of_ball(2.0, grid=G), cfg(2.0, rho=1.0))
        assert np.allclose(sol.boundary_gradient, 1 / (2 * np.log(2)), rtol=0.01)

    def test_p4_gradient(self):
        sol = solve_body(BALL, cfg(4.0))
        assert np.allclose(sol.boundary_gradient, radial_oracle(1.0, 0.5, 4.0)[1], rtol=0.01)

    def test_linear_case_picard_one_step(self):
        c = cfg(2.0, method="picard", epsilon_reg=1e-14, Ns=16, Ntheta=64)
        sol = solve_body(support_of_ellipse(1.5, 1, G), c)
        # the second iteration only confirms a zero update
        assert sol.iterations <= 2

    def test_warm_start_agrees(self):
        K = support_of_ellipse(1.5, 1, G)
        c = cfg(2.5, Ns=32, Ntheta=128)
        cold = solve_body(K, c)
        warm = solve_plaplace(cold.mesh, c, u0=cold.u)
        assert np.allclose(warm.u, cold.u, atol=1e-7)
        assert warm.iterations <= cold.iterations


BODIES = {
    "ellipse": support_of_ellipse(2, 1, G),
    "rounded-square": rounded_square(G),
    "hexagon": regular_polygon(6, G),
}


@pytest.mark.parametrize("name", list(BODIES))
@pytest.mark.parametrize("p", [1.5, 2.0, 4.0])
class TestQualitative:
    def test_maximum_principle(self, name, p):
        u = solve_body(BODIES[name], AnnulusConfig(p=p, Ns=32, Ntheta=128)).u
        assert u.min() >= -1e-10 and u.max() <= 1 + 1e-10

    def test_monotone_rays(self, name, p):
        u = solve_body(BODIES[name], AnnulusConfig(p=p, Ns=32, Ntheta=128)).u
        assert np.all(np.diff(u, axis=0) <= 1e-10)

    def test_level_set_convex(self, name, p):
        sol = solve_body(BODIES[name], AnnulusConfig(p=p, Ns=32, Ntheta=128))
        assert polygon_convexity_defect(level_set_polygon(sol, 0.5)) >= -1e-3


def test_mesh_convergence_order():
    errs = []
    for Ns, Nt in ((8, 32), (16, 64), (32, 128)):
        sol = solve_body(BALL, cfg(1.5, Ns=Ns, Ntheta=Nt))
        errs.append(np.abs(sol.boundary_gradient - 1.0).max())
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.5), (errs, orders)


def test_polygon_gradients_converge_to_ball():
    c = cfg(2.0)
    gB = solve_body(BALL, c).boundary_gradient
    d = [np.abs(solve_body(regular_polygon(m, G), c).boundary_gradient - gB).max() for m in (8, 16, 32, 64)]
    assert all(b < a for a, b in zip(d, d[1:])), d
