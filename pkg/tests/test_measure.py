import numpy as np
import pytest

from pharmonic.errors import InputOutputError, ValidationError
from pharmonic.geometry import make_grid, support_of_ball, support_of_ellipse, translate
from pharmonic.measure import (
    SphericalMeasure,
    bin_atoms,
    gamma,
    integrate,
    lq_measure,
    measure_centroid,
    pharmonic_measure,
    read_measure_csv,
    write_measure_csv,
)
from pharmonic.pde import AnnulusConfig

G = make_grid(256)
BALL = support_of_ball(1.0, grid=G)


def fixed(p, rho=0.5):
    return AnnulusConfig(p=p).with_obstacle((0.0, 0.0), rho)


class TestPharmonicMeasure:
    def test_ball_p2(self):
        m = pharmonic_measure(BALL, fixed(2.0))
        assert np.allclose(m.density, 1 / np.log(2), rtol=0.01)
        assert m.total_mass == pytest.approx(2 * np.pi / np.log(2), rel=0.01)

    def test_ball_p15(self):
        m = pharmonic_measure(BALL, fixed(1.5))
        assert np.allclose(m.density, 1.0, rtol=0.01)
        assert m.total_mass == pytest.approx(2 * np.pi, rel=0.01)

    def test_translated_ball_mass(self):
        c = AnnulusConfig(p=2.0)
        m0 = pharmonic_measure(BALL, c)
        m1 = pharmonic_measure(support_of_ball(1.0, (0.2, 0.0), G), c)
        assert m1.total_mass == pytest.approx(m0.total_mass, rel=0.01)

    def test_nonnegative(self):
        m = pharmonic_measure(support_of_ellipse(2, 1, G), AnnulusConfig(p=2.5))
        assert m.density.min() >= 0


class TestLq:
    def test_q_one_is_mu(self):
        K = support_of_ellipse(1.5, 1, G)
        c = AnnulusConfig(p=2.0)
        assert np.array_equal(lq_measure(K, 1.0, c).density, pharmonic_measure(K, c).density)

    @pytest.mark.parametrize("q", [-1.0, 0.3, 0.9, 2.0])
    def test_ball_any_q(self, q):
        c = fixed(2.0)
        assert np.allclose(lq_measure(BALL, q, c).density, pharmonic_measure(BALL, c).density)

    def test_ball_radius_two(self):
        m = lq_measure(support_of_ball(2.0, grid=G), 0.5, fixed(2.0, rho=1.0))
        assert np.allclose(m.density, np.sqrt(2) * 2 / (2 * np.log(2)), rtol=0.01)


class TestGamma:
    def test_ball_p2(self):
        assert gamma(BALL, fixed(2.0)) == pytest.approx(2 * np.pi / np.log(2), rel=0.01)
        assert 2 * np.pi / np.log(2) == pytest.approx(9.0647, abs=1e-4)

    def test_ball_p15(self):
        assert gamma(BALL, fixed(1.5)) == pytest.approx(2 * np.pi, rel=0.01)

    def test_translation(self):
        K = support_of_ellipse(1.5, 1, G)
        c = AnnulusConfig(p=2.0)
        assert gamma(translate(K, (0.1, 0.0)), c) == pytest.approx(gamma(K, c), rel=0.01)


class TestCentroid:
    def test_ball_exact(self):
        m = pharmonic_measure(BALL, fixed(2.0))
        assert np.abs(measure_centroid(m)).max() <= 1e-12 * m.total_mass

    def test_ellipse(self):
        m = pharmonic_measure(support_of_ellipse(2, 1, G), AnnulusConfig(p=2.0))
        assert np.hypot(*measure_centroid(m)) <= 1e-2 * m.total_mass

    def test_uniform_density(self):
        m = SphericalMeasure(G, np.ones(G.M))
        assert np.abs(measure_centroid(m)).max() <= 1e-13


class TestIntegrate:
    def test_identities(self):
        K = support_of_ellipse(1.5, 1, G)
        c = AnnulusConfig(p=2.0)
        m = pharmonic_measure(K, c)
        assert integrate(m, np.ones(G.M)) == pytest.approx(m.total_mass, rel=1e-14)
        assert integrate(m, K.h) == pytest.approx(gamma(K, c), rel=1e-14)
        x0 = np.array([0.3, -0.7])
        assert integrate(m, G.directions @ x0) == pytest.approx(x0 @ measure_centroid(m), abs=1e-12)

    def test_grid_mismatch(self):
        with pytest.raises(ValidationError):
            integrate(SphericalMeasure(G, np.ones(G.M)), np.ones(10))


class TestAtoms:
    def test_binning(self):
        m = bin_atoms([0.0, np.pi / 2 + 1e-3, 2 * np.pi - 1e-4], [1.0, 2.0, 0.5], G)
        assert m.total_mass == pytest.approx(3.5)
        assert m.density[0] * G.dtheta == pytest.approx(1.5)
        assert m.density[64] * G.dtheta == pytest.approx(2.0)

    def test_negative_rejected(self):
        with pytest.raises(ValidationError) as e:
            SphericalMeasure(G, -np.ones(G.M))
        assert e.value.code == "negative-density"


class TestCsv:
    def test_roundtrip(self, tmp_path):
        m = lq_measure(support_of_ellipse(1.5, 1, G), 0.5, AnnulusConfig(p=2.0))
        path = tmp_path / "m.csv"
        write_measure_csv(m, path)
        m2 = read_measure_csv(path)
        assert np.array_equal(m.density, m2.density)
        assert m2.provenance == "lq"
        text = path.read_text()
        assert "# p=2.0" in text and "# q=0.5" in text and "# grid_size=256" in text

    def test_deterministic_bytes(self, tmp_path):
        m = pharmonic_measure(support_of_ellipse(1.5, 1, G), AnnulusConfig(p=2.0))
        write_measure_csv(m, tmp_path / "a.csv")
        write_measure_csv(m, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_parse_error_line_number(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("# grid_size=8\ntheta,density\n0,1\n0.785,x\n")
        with pytest.raises(ValidationError) as e:
            read_measure_csv(path)
        assert "line 4" in str(e.value)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("angle,value\n0,1\n")
        with pytest.raises(ValidationError, match="line 1"):
            read_measure_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputOutputError):
            read_measure_csv(tmp_path / "nope.csv")
