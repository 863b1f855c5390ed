"""First-order reduction, conservation, reference solver, Duhamel, Picard,
normal-form residual and contraction diagnostics."""

import numpy as np
import pytest

from conftest import plane_wave, random_dealiased
from oracles import quadrature_hamiltonian
from zklab import (
    DecompositionParams,
    FieldProfile,
    NormSpec,
    SpectralField,
    ZakharovState,
    contraction_diagnostics,
    duhamel,
    from_first_order,
    hamiltonian,
    make_grid,
    mass,
    normal_form_residual,
    picard_solve,
    random_field,
    reference_solve,
    rhs,
    schrodinger_propagate,
    to_first_order,
    wave_propagate,
)
from zklab.zakharov import _phi_map

PARAMS = DecompositionParams(K=5, alpha=1.0)


def real_random(grid, s, value, seed, mean_zero=False, decay=None):
    f = random_field(
        grid,
        FieldProfile(
            kind="sobolev-random",
            decay=decay if decay is not None else s + grid.d / 2 + 1.0,
            seed=seed,
        ),
    )
    g = SpectralField.from_physical(grid, f.values.real.astype(complex))
    from zklab import dealias, sobolev_norm

    g = dealias(g)
    if mean_zero:
        c = g.coefficients.copy()
        c[(0,) * grid.d] = 0.0
        g = SpectralField(grid, c)
    return (value / sobolev_norm(g, s)) * g


class TestFirstOrder:
    def test_zero_velocity(self, grid2d):
        u0 = random_dealiased(grid2d, 1)
        n0 = real_random(grid2d, 0.0, 1.0, 2)
        zero = SpectralField.zero(grid2d)
        st = to_first_order(u0, n0, zero, alpha=1.0)
        assert (st.N - n0).l2_norm() < 1e-13

    def test_cosine_example(self, grid2d):
        # n0 = 0, n1 = alpha cos(x1): D acts as identity on |xi| = 1, N = -i cos(x1)
        alpha = 2.0
        cos = SpectralField.from_physical(grid2d, np.cos(grid2d.x_mesh[0]))
        zero = SpectralField.zero(grid2d)
        st = to_first_order(zero, zero, alpha * cos, alpha=alpha)
        assert (st.N - (-1j) * cos).l2_norm() < 1e-12
        n, ndot = from_first_order(st.N, alpha)
        assert n.l2_norm() < 1e-12
        assert (ndot - alpha * cos).l2_norm() < 1e-12

    def test_round_trip(self, grid2d):
        n0 = real_random(grid2d, 0.0, 1.0, 3)
        n1 = real_random(grid2d, 0.0, 0.7, 4, mean_zero=True)
        st = to_first_order(SpectralField.zero(grid2d), n0, n1, alpha=1.3)
        n, ndot = from_first_order(st.N, 1.3)
        assert (n - n0).l2_norm() < 1e-12
        assert (ndot - n1).l2_norm() < 1e-12

    def test_rejects_complex_density(self, grid2d):
        u0 = SpectralField.zero(grid2d)
        bad = random_dealiased(grid2d, 7)
        with pytest.raises(ValueError, match="real"):
            to_first_order(u0, bad, SpectralField.zero(grid2d), 1.0)

    def test_real_n_gives_zero_velocity(self, grid2d):
        n0 = real_random(grid2d, 0.0, 1.0, 8)
        _, ndot = from_first_order(n0, 1.0)
        assert ndot.l2_norm() < 1e-12


class TestConservedFunctionals:
    def test_mass_zero_and_plane_wave(self, grid2d):
        assert mass(SpectralField.zero(grid2d)) == 0.0
        pw = plane_wave(grid2d, (2, 0), amplitude=1.5)
        assert mass(pw) == pytest.approx(1.5**2 * grid2d.volume, rel=1e-13)

    def test_mass_invariant_under_flow(self, grid2d):
        f = random_dealiased(grid2d, 5)
        assert mass(schrodinger_propagate(f, 0.8)) == pytest.approx(
            mass(f), rel=1e-13
        )

    def test_hamiltonian_cosine(self, grid2d):
        n = SpectralField.from_physical(grid2d, np.cos(grid2d.x_mesh[0]))
        zero = SpectralField.zero(grid2d)
        E = hamiltonian(zero, n, zero, alpha=1.0)
        assert E == pytest.approx(grid2d.volume / 4.0, rel=1e-13)

    def test_hamiltonian_plane_wave(self, grid2d):
        A = 0.7
        pw = plane_wave(grid2d, (2, 1), amplitude=A)
        zero = SpectralField.zero(grid2d)
        E = hamiltonian(pw, zero, zero, alpha=1.0)
        assert E == pytest.approx(5.0 * A**2 * grid2d.volume, rel=1e-13)

    def test_hamiltonian_matches_quadrature_oracle(self, grid2d):
        u = random_dealiased(grid2d, 11)
        n = real_random(grid2d, 0.0, 1.0, 12)
        ndot = real_random(grid2d, 0.0, 0.5, 13, mean_zero=True)
        fast = hamiltonian(u, n, ndot, alpha=0.7)
        slow = quadrature_hamiltonian(u, n, ndot, alpha=0.7)
        assert fast == pytest.approx(slow, rel=1e-12)


class TestRhs:
    def test_free_schrodinger_limit(self, grid2d):
        pw = plane_wave(grid2d, (2, 1))
        st = ZakharovState(pw, SpectralField.zero(grid2d), 0.0, 1.0, "simplified")
        du, dN = rhs(st)
        assert (du - (1j * 5.0) * pw).l2_norm() < 1e-12
        assert dN.l2_norm() < 1e-13

    def test_free_wave_limit(self, grid2d):
        pw = plane_wave(grid2d, (0, 3))
        st = ZakharovState(SpectralField.zero(grid2d), pw, 0.0, 2.0, "simplified")
        du, dN = rhs(st)
        assert du.l2_norm() == 0.0
        assert (dN - (2.0j * 3.0) * pw).l2_norm() < 1e-12

    def test_modes_agree_for_real_N(self, grid2d):
        u = random_dealiased(grid2d, 3)
        N = real_random(grid2d, 0.0, 1.0, 4)
        du_s, dN_s = rhs(ZakharovState(u, N, 0.0, 1.0, "simplified"))
        du_p, dN_p = rhs(ZakharovState(u, N, 0.0, 1.0, "physical"))
        assert (du_s - du_p).l2_norm() < 1e-13
        assert (dN_s - dN_p).l2_norm() < 1e-13


class TestReferenceSolve:
    def test_plane_wave_exact(self):
        g = make_grid(2, 2 * np.pi, 16)
        pw = plane_wave(g, (1, 0))
        st = ZakharovState(pw, SpectralField.zero(g), 0.0, 1.0, "simplified")
        traj = reference_solve(st, 1.0, 1e-2, store_stride=10**9)
        exact = schrodinger_propagate(pw, 1.0)
        assert (traj.us[-1] - exact).l2_norm() < 1e-10
        assert traj.Ns[-1].l2_norm() < 1e-13

    def test_pure_wave_flow(self):
        g = make_grid(2, 2 * np.pi, 16)
        N0 = random_dealiased(g, 2)
        st = ZakharovState(SpectralField.zero(g), N0, 0.0, 1.5, "simplified")
        traj = reference_solve(st, 0.5, 1e-2, store_stride=10**9)
        exact = wave_propagate(N0, 0.5, 1.5)
        assert (traj.Ns[-1] - exact).l2_norm() < 1e-12

    def test_richardson_order_four(self):
        g = make_grid(1, 2 * np.pi, 64)
        rng = np.random.default_rng(3)
        u0 = random_field(
            g, FieldProfile(kind="sobolev-random", decay=3.0), NormSpec(s=1.0, sobolev=True), 1.0, rng=rng
        )
        N0 = real_random(g, 0.0, 1.0, 9, decay=3.0)
        st = ZakharovState(u0, N0, 0.0, 1.0, "simplified")
        T = 0.4
        ends = []
        for dt in (0.01, 0.005, 0.0025):
            traj = reference_solve(st, T, dt, store_stride=10**9, diagnostics_stride=10**9)
            ends.append(traj.us[-1])
        e1 = (ends[0] - ends[1]).l2_norm()
        e2 = (ends[1] - ends[2]).l2_norm()
        order = np.log2(e1 / e2)
        assert abs(order - 4.0) <= 0.3

    def test_blowup_guard(self):
        g = make_grid(1, 2 * np.pi, 64)
        pw = plane_wave(g, (1,), amplitude=1e13)
        st = ZakharovState(pw, SpectralField.zero(g), 0.0, 1.0, "simplified")
        from zklab import BlowUpError

        with pytest.raises(BlowUpError, match="last good time"):
            reference_solve(st, 1.0, 0.1)


class TestDuhamel:
    def test_zero_integrand(self, grid2d):
        times = np.linspace(0.0, 1.0, 9)
        zs = [SpectralField.zero(grid2d)] * 9
        out = duhamel("schrodinger", zs, times, 1.0)
        assert out.l2_norm() == 0.0

    def test_covariant_flow_identity(self, grid2d):
        # S(t-s) S(s) g = S(t) g: the integral is exactly -i t S(t) g
        g0 = random_dealiased(grid2d, 1)
        times = np.linspace(0.0, 0.8, 9)
        fields = [schrodinger_propagate(g0, float(t)) for t in times]
        out = duhamel("schrodinger", fields, times, 0.8)
        expected = -1j * 0.8 * schrodinger_propagate(g0, 0.8)
        assert (out - expected).l2_norm() < 1e-12 * expected.l2_norm()

    def test_polynomial_amplitude_closed_form(self, grid2d):
        # integrand s^3 g at fixed g, schrodinger propagator switched off by
        # evaluating at xi-independent... use wave propagator with phases and
        # compare against the exact antiderivative computed in closed form
        g0 = random_dealiased(grid2d, 2)
        times = np.linspace(0.0, 1.0, 9)
        fields = [float(t) ** 3 * g0 for t in times]
        out = duhamel("wave", fields, times, 1.0, alpha=1.0)
        # exact: int_0^1 e^{i alpha (1-s) |xi|} s^3 ds
        #      = 6 e^{iw}/(iw)^4 - 1/(iw) - 3/(iw)^2 - 6/(iw)^3 - 6/(iw)^4,  w = alpha |xi|
        r = grid2d.abs_xi
        w = 1.0 * r
        with np.errstate(divide="ignore", invalid="ignore"):
            iw = np.where(w > 0, 1j * w, 1.0)
            exact_factor = np.where(
                w > 0,
                6.0 * np.exp(1j * w) / iw**4 - 1 / iw - 3 / iw**2 - 6 / iw**3 - 6 / iw**4,
                0.25,
            )
        expected = SpectralField(grid2d, -1j * exact_factor * g0.coefficients)
        assert (out - expected).l2_norm() < 5e-3 * expected.l2_norm()
        # Simpson is exact for cubic amplitudes up to the composite-rule order;
        # verify the quadrature converges at 4th order under node doubling
        times2 = np.linspace(0.0, 1.0, 17)
        fields2 = [float(t) ** 3 * g0 for t in times2]
        out2 = duhamel("wave", fields2, times2, 1.0, alpha=1.0)
        e1 = (out - expected).l2_norm()
        e2 = (out2 - expected).l2_norm()
        assert e2 < e1 / 8.0

    def test_needs_node(self, grid2d):
        times = np.linspace(0.0, 1.0, 9)
        zs = [SpectralField.zero(grid2d)] * 9
        with pytest.raises(ValueError, match="node"):
            duhamel("schrodinger", zs, times, 0.33)


class XLGrid:
    """d=2 grid with a populated XL region for normal-form tests."""

    @staticmethod
    def make():
        return make_grid(2, np.pi, 64)  # frequency spacing 2, shells up to 6


class TestPicard:
    def test_plane_wave_fixed_point(self):
        g = make_grid(2, 2 * np.pi, 16)
        pw = plane_wave(g, (1, 0), amplitude=0.5)
        traj, diag = picard_solve(
            pw, SpectralField.zero(g), 0.1, PARAMS, iterations=3, nodes=5
        )
        # |u|^2 constant => D|u|^2 = 0 => all nonlinear terms vanish
        assert diag["diffs"][0] < 1e-13
        exact = schrodinger_propagate(pw, 0.1)
        assert (traj.us[-1] - exact).l2_norm() < 1e-12

    def test_zero_iterations_is_linear_flow(self):
        g = XLGrid.make()
        u0 = random_field(
            g,
            FieldProfile(kind="sobolev-random", decay=3.0, seed=1),
            NormSpec(s=1.0, sobolev=True),
            0.02,
        )
        N0 = real_random(g, 0.0, 0.02, 2)
        traj, diag = picard_solve(u0, N0, 0.1, PARAMS, iterations=0, nodes=5)
        assert diag["diffs"] == []
        exact = schrodinger_propagate(u0, 0.1)
        assert (traj.us[-1] - exact).l2_norm() < 1e-13

    def test_small_data_contracts_and_matches_reference(self):
        g = XLGrid.make()
        rng = np.random.default_rng(7)
        u0 = random_field(
            g, FieldProfile(kind="sobolev-random", decay=3.5), NormSpec(s=1.0, sobolev=True), 0.02, rng=rng
        )
        N0 = real_random(g, 0.0, 0.02, 3)
        T = 0.1
        traj, diag = picard_solve(u0, N0, T, PARAMS, iterations=6, nodes=33)
        ratios = diag["ratios"]
        assert ratios and max(ratios[1:], default=0.0) < 0.5
        st = ZakharovState(u0, N0, 0.0, 1.0, "simplified")
        ref = reference_solve(st, T, 1e-3, store_stride=10**9, diagnostics_stride=10**9)
        err = (traj.us[-1] - ref.us[-1]).l2_norm() / ref.us[-1].l2_norm()
        assert err < 1e-3


class TestNormalFormResidual:
    def test_linear_trajectory_floor(self):
        g = XLGrid.make()
        pw = plane_wave(g, (1, 0), amplitude=0.5)
        st = ZakharovState(pw, SpectralField.zero(g), 0.0, 1.0, "simplified")
        traj = reference_solve(st, 8e-3, 1e-3)
        res = normal_form_residual(traj, PARAMS)
        assert res["residual_u"].max() < 1e-8
        assert res["residual_N"].max() < 1e-8
        assert res["unreduced_u"].max() < 1e-8

    def test_rejects_physical_mode(self):
        g = make_grid(2, 2 * np.pi, 16)
        pw = plane_wave(g, (1, 0))
        st = ZakharovState(pw, SpectralField.zero(g), 0.0, 1.0, "physical")
        traj = reference_solve(st, 8e-3, 1e-3)
        with pytest.raises(ValueError, match="simplified"):
            normal_form_residual(traj, PARAMS)

    def test_fourth_order_decay_and_parity_with_unreduced(self):
        g = XLGrid.make()
        rng = np.random.default_rng(5)
        u0 = random_field(
            g, FieldProfile(kind="sobolev-random", decay=2.5), NormSpec(s=1.0, sobolev=True), 0.1, rng=rng
        )
        N0 = real_random(g, 0.0, 0.1, 6)
        st = ZakharovState(u0, N0, 0.0, 1.0, "simplified")
        T = 4e-3
        peaks = []
        for dt in (2.5e-4, 1.25e-4):
            traj = reference_solve(st, T, dt, diagnostics_stride=10**9)
            res = normal_form_residual(traj, PARAMS)
            reduced = float(np.max(res["residual_u"] + res["residual_N"]))
            raw = float(np.max(res["unreduced_u"] + res["unreduced_N"]))
            peaks.append((reduced, raw))
            assert reduced <= 10.0 * raw
        order = np.log2(peaks[0][0] / peaks[1][0])
        assert abs(order - 4.0) <= 0.5


class TestContraction:
    def test_identical_pair_gives_zero_difference(self):
        g = XLGrid.make()
        u0 = random_field(
            g, FieldProfile(kind="sobolev-random", decay=3.0, seed=1), NormSpec(s=1.0, sobolev=True), 0.02
        )
        N0 = real_random(g, 0.0, 0.02, 2)
        times = np.linspace(0.0, 0.1, 5)
        us = [schrodinger_propagate(u0, float(t)) for t in times]
        Ns = [wave_propagate(N0, float(t), 1.0) for t in times]
        a_u, a_N = _phi_map(u0, N0, us, Ns, times, PARAMS)
        b_u, b_N = _phi_map(u0, N0, us, Ns, times, PARAMS)
        assert max((x - y).l2_norm() for x, y in zip(a_u, b_u)) == 0.0
        assert max((x - y).l2_norm() for x, y in zip(a_N, b_N)) == 0.0

    def test_zero_data_zero_fields(self):
        g = make_grid(2, 2 * np.pi, 16)
        zero = SpectralField.zero(g)
        times = np.linspace(0.0, 0.1, 5)
        zs = [zero] * 5
        pu, pN = _phi_map(zero, zero, zs, zs, times, PARAMS)
        assert max(f.l2_norm() for f in pu) == 0.0
        assert max(f.l2_norm() for f in pN) == 0.0

    def test_small_data_lipschitz_below_half(self):
        g = XLGrid.make()
        u0 = random_field(
            g, FieldProfile(kind="sobolev-random", decay=3.0, seed=3), NormSpec(s=1.0, sobolev=True), 0.02
        )
        N0 = real_random(g, 0.0, 0.02, 4)
        rep = contraction_diagnostics(u0, N0, 0.1, PARAMS, samples=8, nodes=9, seed=1)
        assert rep["max_factor"] < 0.5
        assert rep["max_phi_norm_over_eta"] <= 1.0
