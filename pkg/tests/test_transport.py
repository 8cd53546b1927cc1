import numpy as np
import pytest

from conftest import (chi2_pmf_pvalue, chi2_uniform_cube_pvalue,
                      gaussian_gof_pvalue, ks_uniform_pvalue)
from pmlab.channels import GaussianChannel, bsc, qsc
from pmlab.errors import BadParam, ZeroLikelihood
from pmlab.linalg import SymMatrix
from pmlab.transport import (DiscretePhi, GaussianPhi, GridDensity, GridPhi,
                             MEpsilonFamily, brenier_gaussian, grid_posterior,
                             kr_gaussian, kr_grid, make_kit,
                             posterior_cells_1d, s_cdf_1d,
                             weighted_cost_schedule)


class TestDiscretePhi:
    def test_quantile_cells(self):
        phi = DiscretePhi([0.3, 0.7])
        assert phi(0.1) == 0 and phi(0.3) == 1 and phi(0.99) == 1
        assert phi.cell_bounds(0) == (0.0, 0.3)

    def test_pushforward_matches_pmf(self):
        phi = DiscretePhi([0.2, 0.5, 0.3])
        rng = np.random.default_rng(0)
        x = phi(rng.random(100_000))
        assert chi2_pmf_pvalue(x, [0.2, 0.5, 0.3]) > 0.01

    def test_rejects_bad_pmf(self):
        with pytest.raises(BadParam):
            DiscretePhi([0.5, 0.6])


class TestGridPhi:
    def test_quadrant_symbols(self):
        phi = GridPhi([[0.0, 0.5, 1.0], [0.0, 0.5, 1.0]])
        # C-order ravel: symbol = 2 * cell(w0) + cell(w1)
        assert phi(np.array([0.2, 0.2])) == 0
        assert phi(np.array([0.2, 0.8])) == 1
        assert phi(np.array([0.8, 0.2])) == 2
        assert phi(np.array([0.8, 0.8])) == 3
        assert np.allclose(phi.symbol_masses(), 0.25)

    def test_pushforward_uniform(self):
        phi = GridPhi([[0.0, 0.5, 1.0], [0.0, 0.5, 1.0]])
        rng = np.random.default_rng(1)
        x = phi(rng.random((100_000, 2)))
        assert chi2_pmf_pvalue(x, np.full(4, 0.25)) > 0.01


class TestGaussianPhi:
    def test_pushforward_gaussian(self, mimo_channel):
        phi = GaussianPhi(mimo_channel.sigma_x)
        rng = np.random.default_rng(2)
        x = phi(rng.random((50_000, 2)))
        assert gaussian_gof_pvalue(x, mimo_channel.sigma_x.array()) > 0.01

    def test_inverse_round_trip(self, mimo_channel):
        phi = GaussianPhi(mimo_channel.sigma_x)
        rng = np.random.default_rng(3)
        w = rng.random((100, 2))
        assert np.allclose(phi.inverse_at(phi(w)), w, atol=1e-12)

    def test_log_det_jacobian_finite_difference(self, mimo_channel):
        phi = GaussianPhi(mimo_channel.sigma_x)
        w = np.array([0.37, 0.62])
        h = 1e-6
        jac = np.zeros((2, 2))
        for j in range(2):
            dw = np.zeros(2)
            dw[j] = h
            jac[:, j] = (phi(w + dw) - phi(w - dw)) / (2 * h)
        fd = float(np.log(abs(np.linalg.det(jac))))
        assert phi.log_det_jacobian(w) == pytest.approx(fd, abs=1e-6)


class TestCdf1dMap:
    def test_known_posterior_bsc(self):
        channel = bsc(0.2)
        phi = DiscretePhi([0.5, 0.5])
        edges, dens = posterior_cells_1d(channel, phi, 0)
        # P(X=0 | Y=0) = 0.8, on a half-width cell: density 1.6
        assert np.allclose(dens, [1.6, 0.4])
        f = s_cdf_1d(channel, phi, 0)
        assert f(0.5) == pytest.approx(0.8)
        assert f.slope_at(0.25) == pytest.approx(1.6)

    def test_zero_probability_output_rejected(self):
        channel = bsc(0.0)
        phi = DiscretePhi([1.0, 0.0])
        with pytest.raises(ZeroLikelihood):
            posterior_cells_1d(channel, phi, 1)

    def test_zero_density_cells_floored_to_bijection(self):
        channel = bsc(0.0)
        phi = DiscretePhi([0.5, 0.5])
        f = s_cdf_1d(channel, phi, 0)
        assert f(1.0) == 1.0
        assert np.all(np.diff(f.ys) > 0)

    def test_pm_compatibility_by_rejection(self, bsc02_kit):
        # Bayes-consistent posterior samples (rejection on the observed y)
        # must push forward to Uniform[0,1] under the transport map
        rng = np.random.default_rng(4)
        w = rng.random(200_000)
        x = np.asarray(bsc02_kit.phi(w))
        y = bsc02_kit.channel.sample(x, rng)
        for yy in (0, 1):
            pushed = bsc02_kit.s_constructor(yy)(w[y == yy])
            assert ks_uniform_pvalue(pushed) > 0.01


class TestBrenierGaussian:
    def test_identity_on_random_pd_pairs(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            d = int(rng.integers(1, 5))
            a = rng.standard_normal((d, d))
            b = rng.standard_normal((d, d))
            ch = GaussianChannel(SymMatrix(a @ a.T + 0.5 * np.eye(d)),
                                 SymMatrix(b @ b.T + 0.5 * np.eye(d)))
            alpha, _ = brenier_gaussian(ch)
            m = alpha.array()
            res = m @ ch.sigma_x_given_y.array() @ m.T - ch.sigma_x.array()
            assert np.linalg.norm(res) < 1e-10

    def test_scalar_reduction_sqrt_snr(self):
        for snr in (0.25, 1.0, 4.0):
            ch = GaussianChannel(SymMatrix([[snr]]), SymMatrix([[1.0]]))
            alpha, _ = brenier_gaussian(ch)
            assert alpha.array()[0, 0] == pytest.approx(np.sqrt(1.0 + snr),
                                                        abs=1e-12)

    def test_alpha_is_symmetric(self, mimo_channel):
        alpha, _ = brenier_gaussian(mimo_channel)
        assert np.allclose(alpha.array(), alpha.array().T)

    def test_map_centers_posterior(self, mimo_channel):
        _, s = brenier_gaussian(mimo_channel)
        rng = np.random.default_rng(6)
        y = np.array([0.7, -0.4])
        mean = mimo_channel.gain @ y
        chol = np.linalg.cholesky(mimo_channel.sigma_x_given_y.array())
        x = mean + rng.standard_normal((50_000, 2)) @ chol.T
        pushed = s(y)(x)
        assert gaussian_gof_pvalue(pushed, mimo_channel.sigma_x.array()) > 0.01
        assert np.allclose(pushed.mean(axis=0), 0.0, atol=0.03)


class TestKrGaussian:
    def test_lower_triangular_and_consistent(self, mimo_channel):
        t, s = kr_gaussian(mimo_channel)
        assert np.allclose(t, np.tril(t))
        assert np.all(np.diag(t) > 0)
        res = t @ mimo_channel.sigma_x_given_y.array() @ t.T \
            - mimo_channel.sigma_x.array()
        assert np.linalg.norm(res) < 1e-12

    def test_agrees_with_brenier_when_diagonal(self):
        ch = GaussianChannel(SymMatrix([[2.0, 0.0], [0.0, 1.0]]),
                             SymMatrix(np.eye(2)))
        t, _ = kr_gaussian(ch)
        alpha, _ = brenier_gaussian(ch)
        assert np.allclose(t, alpha.array(), atol=1e-12)

    def test_needs_two_dims(self, awgn_channel):
        with pytest.raises(BadParam):
            kr_gaussian(awgn_channel)


class TestKrGrid:
    def test_pushes_grid_density_to_uniform(self):
        edges = [[0.0, 0.5, 1.0], [0.0, 0.5, 1.0]]
        masses = np.array([[0.4, 0.1], [0.2, 0.3]])
        t = kr_grid(GridDensity(edges, masses))
        rng = np.random.default_rng(7)
        # sample from the density, push forward, test cube uniformity
        cells = rng.choice(4, p=masses.ravel(), size=100_000)
        offs = rng.random((100_000, 2))
        w = np.stack([(cells // 2 + offs[:, 0]) / 2,
                      (cells % 2 + offs[:, 1]) / 2], axis=1)
        v = t.eval_batch(w)
        assert chi2_uniform_cube_pvalue(v, 8) > 0.01

    def test_quadrant_images_have_the_masses(self):
        masses = np.array([[0.4, 0.1], [0.2, 0.3]])
        t = kr_grid(GridDensity([[0.0, 0.5, 1.0], [0.0, 0.5, 1.0]], masses))
        from pmlab.maps import Box
        img = t.push_boxes([Box([[0.0, 0.5], [0.0, 0.5]])])
        assert sum(p.volume() for p in img) == pytest.approx(0.4, abs=1e-12)

    def test_zero_cells_keep_bijection(self):
        masses = np.array([[0.5, 0.0], [0.0, 0.5]])
        t = kr_grid(GridDensity([[0.0, 0.5, 1.0], [0.0, 0.5, 1.0]], masses))
        rng = np.random.default_rng(8)
        # round trips stay tight on the supported cells (the diagonal)
        half = rng.random((500, 2)) * 0.5
        for w_supported in (half, half + 0.5):
            v = t.eval_batch(w_supported)
            assert np.allclose(t.invert_batch(v), w_supported, atol=1e-9)
        # unsupported cells still evaluate and stay inside the cube
        v = t.eval_batch(np.array([[0.25, 0.75], [0.75, 0.25]]))
        assert np.all((v >= 0) & (v <= 1))

    def test_posterior_from_channel(self):
        phi = GridPhi([[0.0, 0.5, 1.0], [0.0, 0.5, 1.0]])
        dens = grid_posterior(qsc(0.3), phi, 2)
        assert dens.masses.ravel()[2] == pytest.approx(0.7)
        assert dens.masses.sum() == pytest.approx(1.0)


class TestCostSchedule:
    def test_brenier_endpoint_all_ones(self):
        assert np.allclose(weighted_cost_schedule(MEpsilonFamily(4), 1.0), 1.0)

    def test_geometric_decay(self):
        assert np.allclose(weighted_cost_schedule(MEpsilonFamily(3), 0.1),
                           [1.0, 0.1, 0.01])

    def test_rejects_out_of_range(self):
        with pytest.raises(BadParam):
            weighted_cost_schedule(MEpsilonFamily(2), 0.0)


class TestMakeKit:
    def test_flavor_channel_compatibility(self, awgn_channel):
        with pytest.raises(BadParam):
            make_kit(awgn_channel, "cdf1d")
        with pytest.raises(BadParam):
            make_kit(bsc(0.2), "brenier")
        with pytest.raises(BadParam):
            make_kit(bsc(0.2), "nonsense")

    def test_cdf1d_defaults_to_blahut_arimoto_optimum(self, bsc02_kit):
        assert np.allclose(bsc02_kit.px_star, 0.5, atol=1e-6)

    def test_kr_grid_binary_and_quaternary(self):
        assert make_kit(bsc(0.2), "kr-grid").d == 1
        assert make_kit(qsc(0.3), "kr-grid").d == 2
