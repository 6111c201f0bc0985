"""Point generators: Sobol correctness, grids, boundaries, noise."""

import numpy as np
import pytest
from scipy.stats import qmc

from hpkm.problems import problem_by_name
from hpkm.sampling import add_gaussian_noise, boundary_points, sobol, uniform_points


class TestSobol:
    def test_first_points_dim1(self):
        pts = sobol(1, 3, ((0.0, 1.0),)).points[:, 0]
        np.testing.assert_array_equal(pts, [0.5, 0.75, 0.25])

    def test_first_point_dim2(self):
        pts = sobol(2, 1, ((0.0, 1.0), (0.0, 1.0))).points
        np.testing.assert_array_equal(pts[0], [0.5, 0.5])

    @pytest.mark.parametrize("dim", [1, 2])
    def test_matches_reference_implementation_bitwise(self, dim):
        ours = sobol(dim, 64, ((0.0, 1.0),) * dim).points
        eng = qmc.Sobol(d=dim, scramble=False)
        theirs = eng.random(65)[1:]  # drop the all-zeros point like skip=1
        np.testing.assert_array_equal(ours, theirs)

    def test_unit_interval_before_scaling(self):
        pts = sobol(2, 512, ((0.0, 1.0), (0.0, 1.0))).points
        assert pts.min() > 0.0 and pts.max() < 1.0

    def test_scaling_to_bounds(self):
        ps = sobol(1, 4, ((-2.0, 6.0),))
        np.testing.assert_array_equal(ps.points[:, 0], [-2 + 8 * v for v in (0.5, 0.75, 0.25, 0.375)])

    def test_rejects_unsupported_dim(self):
        with pytest.raises(ValueError):
            sobol(3, 4, ((0, 1),) * 3)

    def test_lower_star_discrepancy_than_pseudorandom(self):
        for n in (256, 1024):
            quasi = sobol(2, n, ((0.0, 1.0), (0.0, 1.0))).points
            pseudo = np.random.default_rng(123).uniform(size=(n, 2))
            assert _star_discrepancy(quasi) < _star_discrepancy(pseudo)


def _star_discrepancy(pts):
    """Brute-force sup over corner candidates of |empirical - volume|."""
    n = len(pts)
    xs = np.unique(np.append(pts[:, 0], 1.0))
    ys = np.unique(np.append(pts[:, 1], 1.0))
    order = np.argsort(pts[:, 0], kind="stable")
    sorted_pts = pts[order]
    worst = 0.0
    for x in xs:
        k = np.searchsorted(sorted_pts[:, 0], x, side="left")
        py = np.sort(sorted_pts[:k, 1])
        counts = np.searchsorted(py, ys, side="left")
        worst = max(worst, np.max(np.abs(counts / n - x * ys)))
    return worst


class TestUniform:
    def test_small_grid(self):
        np.testing.assert_array_equal(uniform_points(1, 3, ((0, 1),)).points[:, 0], [0, 0.5, 1])

    def test_fit_interval_spacing(self):
        pts = uniform_points(1, 500, ((-3, 3),)).points[:, 0]
        assert pts[1] - pts[0] == pytest.approx(6.0 / 499.0, rel=1e-15)
        assert pts[0] == -3.0 and pts[-1] == 3.0

    def test_tensor_grid_count(self):
        ps = uniform_points(2, 101, ((-1, 1), (-1, 1)))
        assert len(ps) == 10201

    def test_too_few_points(self):
        with pytest.raises(ValueError):
            uniform_points(1, 1, ((0, 1),))


class TestBoundary:
    def test_poisson_endpoints_repeated(self):
        ps = boundary_points(problem_by_name("poisson"), 500)
        assert len(ps) == 500
        assert (ps.tags == 0).sum() == 250 and (ps.tags == 1).sum() == 250
        length = problem_by_name("poisson").bounds[0][1]
        np.testing.assert_array_equal(np.unique(ps.points[:, 0]), [-length, length])

    def test_advection_segments(self):
        problem = problem_by_name("advection")
        ps = boundary_points(problem, 500)
        for tag, xval in ((0, 0.0), (1, 1.0)):
            seg = ps.points[ps.tags == tag]
            assert len(seg) == 250
            np.testing.assert_array_equal(seg[:, 0], xval)
            assert seg[:, 1].min() >= 0.0 and seg[:, 1].max() <= 0.5

    def test_helmholtz_even_split(self):
        ps = boundary_points(problem_by_name("helmholtz"), 500)
        counts = [(ps.tags == i).sum() for i in range(4)]
        assert counts == [125, 125, 125, 125]

    def test_remainder_goes_to_earlier_segments(self):
        ps = boundary_points(problem_by_name("helmholtz"), 6)
        counts = [(ps.tags == i).sum() for i in range(4)]
        assert counts == [2, 2, 1, 1]


class TestNoise:
    def _base(self, n=10000):
        return uniform_points(2, int(np.sqrt(n)), ((0, 1), (0, 2)))

    def test_zero_sigma_identity(self):
        base = self._base()
        noisy = add_gaussian_noise(base, 0.0, seed=3)
        np.testing.assert_array_equal(noisy.points, base.points)
        assert noisy.provenance == "noisy"

    def test_requested_scale(self):
        base = self._base()
        noisy = add_gaussian_noise(base, 0.05, seed=4)
        delta = noisy.points - base.points
        # widths are 1 and 2, so nominal deviations are 0.05 and 0.10
        assert abs(delta[:, 0].std() / 0.05 - 1) < 0.03
        assert abs(delta[:, 1].std() / 0.10 - 1) < 0.03

    def test_deterministic_per_seed(self):
        base = self._base()
        a = add_gaussian_noise(base, 0.02, seed=9)
        b = add_gaussian_noise(base, 0.02, seed=9)
        np.testing.assert_array_equal(a.points, b.points)
        c = add_gaussian_noise(base, 0.02, seed=10)
        assert not np.array_equal(a.points, c.points)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            add_gaussian_noise(self._base(), -0.1, seed=0)
