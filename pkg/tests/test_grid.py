"""Grid construction, transforms, multipliers, propagators, dealiasing."""

import numpy as np
import pytest

from conftest import plane_wave, random_dealiased
from oracles import convolution_product
from zklab import (
    SpectralField,
    apply_D_power,
    dealias,
    fourier_multiplier,
    make_grid,
    mass,
    product,
    schrodinger_propagate,
    transform,
    wave_propagate,
)


class TestMakeGrid:
    def test_2d_lattice(self):
        g = make_grid(2, 2 * np.pi, 8)
        assert sorted(g.index_1d.tolist()) == list(range(-4, 4))
        assert g.dxi == pytest.approx(1.0)

    def test_3d_point_count(self):
        g = make_grid(3, 2 * np.pi, 32)
        assert int(np.prod(g.shape)) == 32768

    def test_smallest_frequency_scales_with_box(self):
        g = make_grid(1, 4 * np.pi, 16)
        nonzero = np.abs(g.xi_1d[g.xi_1d != 0])
        assert nonzero.min() == pytest.approx(0.5)

    @pytest.mark.parametrize(
        "d,L,n", [(0, 2 * np.pi, 16), (4, 2 * np.pi, 16), (2, -1.0, 16), (2, 2 * np.pi, 24), (2, 2 * np.pi, 4)]
    )
    def test_rejects_bad_arguments(self, d, L, n):
        with pytest.raises(ValueError):
            make_grid(d, L, n)

    def test_lattice_closed_under_negation_except_nyquist(self):
        g = make_grid(1, 2 * np.pi, 16)
        idx = set(g.index_1d.tolist())
        for m in idx:
            if m == -g.n // 2:
                assert -m not in idx
            else:
                assert -m in idx


class TestTransform:
    def test_zero_field(self, grid2d):
        z = SpectralField.zero(grid2d)
        assert transform(z, "forward").l2_norm() == 0.0

    def test_constant_field_single_coefficient(self, grid2d):
        c = SpectralField.from_physical(grid2d, np.ones(grid2d.shape))
        coeffs = c.coefficients.copy()
        coeffs[0, 0] = 0.0
        assert np.abs(coeffs).max() < 1e-14
        # unit L2 normalization puts everything in the zero mode
        unit = (1.0 / c.l2_norm()) * c
        assert unit.coefficients[0, 0] == pytest.approx(1.0, abs=1e-13)

    def test_roundtrip_random(self, grid2d):
        f = random_dealiased(grid2d, seed=5)
        g = transform(transform(f, "forward"), "inverse")
        assert (g - f).l2_norm() <= 1e-13 * f.l2_norm()

    def test_unitarity_100_random_fields(self, grid2d):
        h = grid2d.dx**grid2d.d
        for seed in range(100):
            f = random_dealiased(grid2d, seed=seed)
            phys = np.sqrt(np.sum(np.abs(f.values) ** 2) * h)
            assert phys == pytest.approx(f.l2_norm(), rel=1e-13)

    def test_bad_direction(self, grid2d):
        with pytest.raises(ValueError):
            transform(random_dealiased(grid2d), "sideways")


class TestFourierMultiplier:
    def test_identity_and_zero(self, grid2d):
        f = random_dealiased(grid2d)
        one = fourier_multiplier(f, lambda xi: np.ones(()))
        assert (one - f).l2_norm() == 0.0
        zero = fourier_multiplier(f, lambda xi: np.zeros(()))
        assert zero.l2_norm() == 0.0

    def test_laplacian_symbol_on_plane_wave(self, grid2d):
        pw = plane_wave(grid2d, (2, 1))
        out = fourier_multiplier(pw, lambda xi: sum(x**2 for x in xi))
        assert (out - 5.0 * pw).l2_norm() < 1e-12

    def test_nonfinite_symbol_names_frequency(self, grid2d):
        pw = plane_wave(grid2d, (0, 0))

        def symbol(xi):
            r2 = sum(x**2 for x in xi)
            with np.errstate(divide="ignore"):
                return 1.0 / r2

        with pytest.raises(ValueError, match="xi="):
            fourier_multiplier(pw, symbol)

    def test_commutes_with_propagator(self, grid2d):
        f = random_dealiased(grid2d, seed=2)
        sym = lambda xi: np.exp(-sum(x**2 for x in xi))  # noqa: E731
        a = fourier_multiplier(schrodinger_propagate(f, 0.37), sym)
        b = schrodinger_propagate(fourier_multiplier(f, sym), 0.37)
        assert (a - b).l2_norm() < 1e-13 * f.l2_norm()


class TestDPower:
    def test_plane_wave_eigenvalue(self, grid2d):
        pw = plane_wave(grid2d, (3, 4))
        out = apply_D_power(pw, 1.0)
        assert (out - 5.0 * pw).l2_norm() < 1e-12

    def test_inverse_pair_on_mean_zero(self, grid2d):
        f = random_dealiased(grid2d, seed=9)
        c = f.coefficients.copy()
        c[0, 0] = 0.0
        f = SpectralField(grid2d, c)
        back = apply_D_power(apply_D_power(f, -1.0), 1.0)
        assert (back - f).l2_norm() <= 1e-12 * f.l2_norm()

    def test_square_equals_minus_laplacian(self, grid2d):
        for index in [(1, 0), (2, 3), (-4, 5)]:
            pw = plane_wave(grid2d, index)
            ev = float(sum(m**2 for m in index))
            assert (apply_D_power(pw, 2.0) - ev * pw).l2_norm() < 1e-11 * max(ev, 1.0)

    def test_cosine_laplacian_eigenvalue(self, grid2d):
        f = SpectralField.from_physical(grid2d, np.cos(grid2d.x_mesh[0]))
        assert (apply_D_power(f, 2.0) - f).l2_norm() < 1e-12

    def test_reject_mode_on_nonzero_mean(self, grid2d):
        f = SpectralField.from_physical(grid2d, np.ones(grid2d.shape))
        with pytest.raises(ValueError, match="mean"):
            apply_D_power(f, -1.0, zero_mode="reject")

    def test_annihilate_warns(self, grid2d):
        f = SpectralField.from_physical(grid2d, np.ones(grid2d.shape))
        with pytest.warns(RuntimeWarning):
            out = apply_D_power(f, -1.0, zero_mode="annihilate")
        assert out.l2_norm() == 0.0


class TestPropagators:
    def test_time_zero_identity(self, grid2d):
        f = random_dealiased(grid2d)
        assert (schrodinger_propagate(f, 0.0) - f).l2_norm() == 0.0
        assert (wave_propagate(f, 0.0, 1.0) - f).l2_norm() == 0.0

    def test_plane_wave_phases(self, grid2d):
        pw = plane_wave(grid2d, (2, 1))
        t, alpha = 0.7, 1.3
        s = schrodinger_propagate(pw, t)
        assert (s - np.exp(1j * t * 5.0) * pw).l2_norm() < 1e-12
        w = wave_propagate(pw, t, alpha)
        assert (w - np.exp(1j * alpha * t * np.sqrt(5.0)) * pw).l2_norm() < 1e-12

    def test_group_law(self, grid2d):
        f = random_dealiased(grid2d, seed=4)
        a = schrodinger_propagate(schrodinger_propagate(f, 0.3), 0.45)
        b = schrodinger_propagate(f, 0.75)
        assert (a - b).l2_norm() <= 1e-12 * f.l2_norm()
        aw = wave_propagate(wave_propagate(f, 0.3, 2.0), 0.45, 2.0)
        bw = wave_propagate(f, 0.75, 2.0)
        assert (aw - bw).l2_norm() <= 1e-12 * f.l2_norm()

    def test_wave_norm_preserved(self, grid2d):
        f = random_dealiased(grid2d, seed=6)
        assert wave_propagate(f, 1.7, 0.5).l2_norm() == pytest.approx(
            f.l2_norm(), rel=1e-13
        )

    def test_wave_rejects_nonpositive_alpha(self, grid2d):
        f = random_dealiased(grid2d)
        with pytest.raises(ValueError):
            wave_propagate(f, 1.0, 0.0)

    def test_gaussian_free_schrodinger_closed_form(self):
        # periodized Gaussian on a large box against the R^d closed form:
        # initial data exp(-|x-x0|^2 / (2 w^2)) evolves to
        # (w^2/(w^2-2it))^{d/2} exp(-|x-x0|^2/(2(w^2-2it)))
        g = make_grid(1, 16 * np.pi, 256)
        w, t = 1.0, 0.5
        x0 = g.box_length / 2.0
        x = g.x_1d
        u0 = SpectralField.from_physical(g, np.exp(-((x - x0) ** 2) / (2 * w**2)))
        ut = schrodinger_propagate(u0, t)
        gamma = w**2 - 2j * t
        exact = (w**2 / gamma) ** 0.5 * np.exp(-((x - x0) ** 2) / (2 * gamma))
        err = np.linalg.norm(ut.values - exact) / np.linalg.norm(exact)
        assert err < 1e-6


class TestDealias:
    def test_idempotent(self, grid2d):
        f = random_dealiased(grid2d, seed=8)
        assert (dealias(f) - f).l2_norm() == 0.0

    def test_survivor_count(self):
        g = make_grid(1, 2 * np.pi, 16)
        rng = np.random.default_rng(0)
        noisy = SpectralField(g, rng.standard_normal(g.shape) + 0j)
        kept = np.nonzero(dealias(noisy).coefficients)[0]
        assert len(kept) == 2 * (g.n // 3) + 1
        assert np.abs(dealias(noisy).coefficients[g.n // 2]) == 0.0  # Nyquist zeroed

    def test_product_matches_convolution_oracle(self, grid2d):
        f = random_dealiased(grid2d, seed=11)
        h = random_dealiased(grid2d, seed=12)
        fast = product(f, h)
        slow = convolution_product(f, h)
        assert (fast - slow).l2_norm() <= 1e-12 * slow.l2_norm()


def test_mass_of_plane_wave(grid2d):
    pw = plane_wave(grid2d, (1, 0), amplitude=2.0)
    assert mass(pw) == pytest.approx(4.0 * grid2d.volume, rel=1e-13)
