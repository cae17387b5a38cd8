import numpy as np
import pytest

from lowreg_gp import (
    BlowUpError,
    Field,
    Grid,
    SchemeId,
    StepConfig,
    apply_exp_laplacian,
    apply_filter_psi,
    apply_phi,
    commutator_C,
    conj_field,
    evolve,
    nonlinearity_f,
    oscillatory_integral_oracle,
    pointwise_mul,
    quadratic_source,
    sobolev_norm,
    step,
    step_baseline,
    step_lri1,
    step_lri2_fd,
    step_lri2_filtered,
)
from lowreg_gp.oracles import constant_solution, lri1_step_by_convolution, plane_wave

from conftest import loglog_slope, max_abs, random_pair

LRI = [SchemeId.LRI1, SchemeId.LRI2_FD, SchemeId.LRI2_FILTERED]
BASELINES = [SchemeId.LIE_SPLIT, SchemeId.STRANG_SPLIT, SchemeId.EXP_EULER]


# Straight Field-level transcriptions, independent of the array-level fast paths.
def _first_order_terms(u, V, tau, kind):
    ubar = conj_field(u)
    uu = pointwise_mul(u, u)
    return pointwise_mul(u, apply_phi(kind, V, 1, tau)) + pointwise_mul(uu, apply_phi(kind, ubar, 2, tau))


def literal_lri1(u, V, tau):
    return apply_exp_laplacian(u - 1j * tau * _first_order_terms(u, V, tau, "phi1"), tau)


def literal_lri2_fd(u, V, tau):
    E = lambda a: apply_exp_laplacian(a, tau)
    line1 = E(u) - 1j * tau * E(_first_order_terms(u, V, tau, "phi1"))
    Eu = E(u)
    line2 = -1j * tau * (
        pointwise_mul(Eu, apply_phi("phi2", E(V), 1, tau))
        + pointwise_mul(pointwise_mul(Eu, Eu), apply_phi("phi2", E(conj_field(u)), 2, tau))
    )
    line3 = 1j * tau * E(_first_order_terms(u, V, tau, "phi2"))
    line4 = -(tau**2 / 2) * E(quadratic_source(u, V))
    return line1 + line2 + line3 + line4


def literal_lri2_filtered(u, V, tau):
    E = lambda a: apply_exp_laplacian(a, tau)
    comm = commutator_C(u, apply_phi("phi2", conj_field(u), 2, tau), apply_phi("phi2", V, 1, tau))
    return (
        E(u)
        - 1j * tau * E(_first_order_terms(u, V, tau, "phi1"))
        - 1j * tau**2 * E(apply_filter_psi(comm, tau))
        - (tau**2 / 2) * E(quadratic_source(u, V))
    )


class TestSchemeId:
    @pytest.mark.parametrize("text", ["lri1", "LRI1", " lri1 "])
    def test_parse(self, text):
        assert SchemeId.parse(text) is SchemeId.LRI1

    def test_parse_member_name(self):
        assert SchemeId.parse("strang_split") is SchemeId.STRANG_SPLIT

    def test_unknown(self):
        with pytest.raises(ValueError, match="unknown scheme"):
            SchemeId.parse("rk4")

    @pytest.mark.parametrize("tau", [0.0, -0.1, 1.5, float("nan")])
    def test_step_config_range(self, tau):
        with pytest.raises(ValueError):
            StepConfig(tau)


class TestNonlinearity:
    def test_zero(self, grid1d):
        assert max_abs(nonlinearity_f(Field.zeros(grid1d), Field.constant(grid1d, 3))) == 0

    def test_constant_one(self, grid1d):
        one = Field.constant(grid1d, 1)
        out = nonlinearity_f(one, Field.zeros(grid1d))
        assert max_abs(out - Field.constant(grid1d, -1j)) < 1e-15
        out = nonlinearity_f(one, one)
        assert max_abs(out - Field.constant(grid1d, -2j)) < 1e-15

    def test_mismatch(self):
        with pytest.raises(ValueError):
            nonlinearity_f(Field.zeros(Grid(1, 8)), Field.zeros(Grid(1, 16)))


class TestCommutator:
    def test_constants(self, grid1d):
        c = Field.constant(grid1d, 2 - 1j)
        assert max_abs(commutator_C(c, c, c)) < 1e-15

    def test_zero_u(self, grid1d):
        u, V = random_pair(grid1d, 1.0, 2)
        assert max_abs(commutator_C(Field.zeros(grid1d), u, V)) == 0

    def test_first_term_example(self):
        g = Grid(1, 16)
        e1 = Field.mode(g, 1)
        out = commutator_C(e1, Field.zeros(g), e1)
        assert max_abs(out - Field.mode(g, 2, 2j)) < 1e-14

    def test_middle_term_readings(self):
        # u = e^{ix}, v = 1: (u')^2 = -e^{2ix}, whereas u' conj(u') = 1
        g = Grid(1, 16)
        u, one = Field.mode(g, 1), Field.constant(g, 1)
        plain = commutator_C(u, one, Field.zeros(g))
        conj = commutator_C(u, one, Field.zeros(g), conjugate_middle=True)
        assert max_abs(plain - Field.mode(g, 2, 2j)) < 1e-14
        assert max_abs(conj - Field.constant(g, -2j)) < 1e-14

    def test_last_term_by_hand(self):
        # u = 1 + e^{ix}: grad(u^2) = 2i e^{ix} + 2i e^{2ix}; v = e^{-ix}: grad v = -i e^{-ix}
        g = Grid(1, 16)
        u = Field.constant(g, 1) + Field.mode(g, 1)
        out = commutator_C(u, Field.mode(g, -1), Field.zeros(g))
        # -2i [ (i e^{ix})^2 e^{-ix} + (2i e^{ix} + 2i e^{2ix})(-i e^{-ix}) ]
        expected = -2j * (-Field.mode(g, 1) + 2 * Field.constant(g, 1) + 2 * Field.mode(g, 1))
        assert max_abs(out - expected) < 1e-13


class TestQuadraticSource:
    def test_values(self, grid1d):
        zero, one = Field.zeros(grid1d), Field.constant(grid1d, 1)
        assert max_abs(quadratic_source(zero, one)) == 0
        assert max_abs(quadratic_source(one, zero) - one) < 1e-15
        assert max_abs(quadratic_source(one, one) - 4 * one) < 1e-14

    def test_complex_constants(self, grid1d):
        c, v = 0.6 + 0.8j, 0.3 - 0.5j
        out = quadratic_source(Field.constant(grid1d, c), Field.constant(grid1d, v))
        m = abs(c) ** 2
        expected = m * m * c + 3 * c * m * v - m * c * np.conj(v) + c * v * v
        assert out.coefficient(0) == pytest.approx(expected, abs=1e-14)


class TestHandEvaluations:
    def test_lri1_constant(self, grid1d):
        out = step_lri1(Field.constant(grid1d, 1), Field.zeros(grid1d), 0.1)
        assert max_abs(out - Field.constant(grid1d, 1 - 0.1j)) < 1e-15

    @pytest.mark.parametrize("c", [1.0, 0.5 + 0.5j, 2.0])
    def test_lri1_constant_general(self, grid1d, c):
        tau = 0.05
        out = step_lri1(Field.constant(grid1d, c), Field.zeros(grid1d), tau)
        assert out.coefficient(0) == pytest.approx(c * (1 - 1j * tau * abs(c) ** 2), abs=1e-14)

    @pytest.mark.parametrize("fn", [step_lri2_fd, step_lri2_filtered])
    @pytest.mark.parametrize("tau", [0.1, 0.01])
    def test_lri2_constant(self, grid1d, fn, tau):
        out = fn(Field.constant(grid1d, 1), Field.zeros(grid1d), tau)
        assert max_abs(out - Field.constant(grid1d, 1 - 1j * tau - tau**2 / 2)) < 1e-15


class TestLiteralTranscription:
    @pytest.mark.parametrize(
        "fast,literal",
        [(step_lri1, literal_lri1), (step_lri2_fd, literal_lri2_fd), (step_lri2_filtered, literal_lri2_filtered)],
    )
    @pytest.mark.parametrize("d,K,theta", [(1, 64, 1.0), (2, 16, 1.5)])
    @pytest.mark.parametrize("tau", [0.2, 1e-3])
    def test_matches(self, fast, literal, d, K, theta, tau):
        u, V = random_pair(Grid(d, K), theta, 13)
        ref = literal(u, V, tau)
        assert max_abs(fast(u, V, tau) - ref) <= 1e-13 * max(1.0, max_abs(ref))

    @pytest.mark.parametrize("fast", [step_lri1, step_lri2_fd])
    def test_dealiased_grid(self, fast):
        # each nonlinear term is truncated once; the free flow of u is not
        plain = Grid(1, 48)
        u, V = random_pair(plain, 1.0, 3)
        cut = Grid(1, 48, dealias=True)
        uc, Vc = Field(cut, u.coeffs), Field(cut, V.coeffs)
        free = apply_exp_laplacian(u, 0.1).coeffs
        increment = np.where(cut.dealias_mask, fast(u, V, 0.1).coeffs - free, 0)
        assert np.abs(fast(uc, Vc, 0.1).coeffs - free - increment).max() < 1e-14

    def test_dealiased_filtered_increment_band_limited(self):
        cut = Grid(1, 48, dealias=True)
        u, V = random_pair(cut, 1.0, 3)
        increment = step_lri2_filtered(u, V, 0.1) - apply_exp_laplacian(u, 0.1)
        assert np.abs(increment.coeffs[~cut.dealias_mask]).max() < 1e-15


class TestConvolutionOracle:
    @pytest.mark.parametrize("seed", range(6))
    @pytest.mark.parametrize("tau", [0.5, 0.05, 1e-4])
    def test_lri1_k8(self, seed, tau):
        u, V = random_pair(Grid(1, 8), 0.5, seed)
        assert max_abs(step_lri1(u, V, tau) - lri1_step_by_convolution(u, V, tau)) <= 1e-12

    def test_lri1_2d(self):
        u, V = random_pair(Grid(2, 4), 0.5, 1)
        assert max_abs(step_lri1(u, V, 0.3) - lri1_step_by_convolution(u, V, 0.3)) <= 1e-12


class TestInvariants:
    @pytest.mark.parametrize("scheme", list(SchemeId))
    def test_zero_fixed_point(self, scheme, grid1d):
        _, V = random_pair(grid1d, 0.5, 8)
        out = step(Field.zeros(grid1d), V, StepConfig(0.3, scheme))
        assert max_abs(out) == 0

    @pytest.mark.parametrize("scheme", [SchemeId.LIE_SPLIT, SchemeId.STRANG_SPLIT])
    @pytest.mark.parametrize("c", [1.0, 0.3 - 1.2j])
    def test_splitting_exact_on_constants(self, scheme, c, grid1d):
        out = step_baseline(Field.constant(grid1d, c), Field.zeros(grid1d), 0.4, scheme)
        assert out.coefficient(0) == pytest.approx(c * np.exp(-0.4j * abs(c) ** 2), abs=1e-15)

    @pytest.mark.parametrize("V0", [0.7, 0.5 + 0.3j])
    def test_splitting_exact_with_constant_potential(self, V0, grid1d):
        c = 0.8 + 0.1j
        exact = constant_solution(grid1d, c, V0, 0.25)
        for scheme in (SchemeId.LIE_SPLIT, SchemeId.STRANG_SPLIT):
            out = step_baseline(Field.constant(grid1d, c), Field.constant(grid1d, V0), 0.25, scheme)
            assert max_abs(out - exact) < 1e-14

    def test_exp_euler_on_constant(self, grid1d):
        out = step_baseline(Field.constant(grid1d, 1), Field.zeros(grid1d), 0.1, "exp_euler")
        assert max_abs(out - Field.constant(grid1d, 1 - 0.1j)) < 1e-15

    def test_baseline_rejects_lri(self, grid1d):
        with pytest.raises(ValueError):
            step_baseline(Field.zeros(grid1d), Field.zeros(grid1d), 0.1, SchemeId.LRI1)

    @pytest.mark.parametrize("scheme", LRI)
    def test_zero_mode_consistency(self, scheme, grid1d):
        c, V0 = 0.9 + 0.2j, 0.6
        taus = [2.0**-j for j in range(3, 8)]
        errs = [
            max_abs(step(Field.constant(grid1d, c), Field.constant(grid1d, V0), StepConfig(t, scheme)) - constant_solution(grid1d, c, V0, t))
            for t in taus
        ]
        expected = 2 if scheme is SchemeId.LRI1 else 3
        assert loglog_slope(taus, errs) == pytest.approx(expected, abs=0.15)

    @pytest.mark.parametrize("scheme", LRI)
    def test_free_flow_limit(self, scheme):
        g = Grid(1, 64)
        u, _ = random_pair(g, 2.0, 9)
        V = Field.zeros(g)
        tau = 0.05
        eps = [0.1, 0.05, 0.025]
        dev = [max_abs(step(e * u, V, StepConfig(tau, scheme)) - e * apply_exp_laplacian(u, tau)) for e in eps]
        assert loglog_slope(eps, dev) == pytest.approx(3.0, abs=0.05)


@pytest.fixture(scope="module")
def defects():
    u, V = random_pair(Grid(1, 128), 4.0, 7)
    taus = [2.0**-j for j in range(6, 11)]
    refs = [evolve(u, V, StepConfig(t / 1000, SchemeId.STRANG_SPLIT), 1000) for t in taus]
    out = {}
    for scheme in LRI:
        out[scheme] = [sobolev_norm(step(u, V, StepConfig(t, scheme)) - r, 0) for t, r in zip(taus, refs)]
    return taus, out


class TestLocalError:
    """One-step defects against Strang with a thousandfold smaller step."""

    @pytest.mark.parametrize("scheme,order", [(SchemeId.LRI1, 2), (SchemeId.LRI2_FD, 3), (SchemeId.LRI2_FILTERED, 3)])
    def test_slope(self, defects, scheme, order):
        taus, out = defects
        assert loglog_slope(taus, out[scheme]) == pytest.approx(order, abs=0.2)

    def test_lri2_pair_difference(self):
        u, V = random_pair(Grid(1, 256), 4.0, 7)
        taus = [2.0**-j for j in range(6, 11)]
        diff = [sobolev_norm(step_lri2_fd(u, V, t) - step_lri2_filtered(u, V, t), 0) for t in taus]
        assert loglog_slope(taus, diff) >= 2.75

    def test_lri2_minus_lri1(self):
        u, V = random_pair(Grid(1, 256), 4.0, 7)
        taus = [2.0**-j for j in range(6, 11)]
        diff = [sobolev_norm(step_lri2_fd(u, V, t) - step_lri1(u, V, t), 0) for t in taus]
        assert loglog_slope(taus, diff) == pytest.approx(2.0, abs=0.15)


class TestOscillatoryOracle:
    def test_zero(self, grid1d):
        _, V = random_pair(grid1d, 1.0, 1)
        assert max_abs(oscillatory_integral_oracle(Field.zeros(grid1d), V, 0.1)) == 0

    def test_small_tau_limit(self, grid1d):
        u, V = random_pair(grid1d, 2.0, 1)
        tau = 1e-7
        integrand = 1j * nonlinearity_f(u, V)
        assert max_abs(oscillatory_integral_oracle(u, V, tau) / tau - integrand) < 1e-5

    def test_converged_in_panels(self):
        u, V = random_pair(Grid(1, 32), 2.0, 4)
        a = oscillatory_integral_oracle(u, V, 0.1, n_quad=16, panels=4)
        b = oscillatory_integral_oracle(u, V, 0.1, n_quad=16, panels=8)
        assert max_abs(a - b) < 1e-13

    def test_invalid(self, grid1d):
        z = Field.zeros(grid1d)
        with pytest.raises(ValueError):
            oscillatory_integral_oracle(z, z, 0.1, n_quad=1)

    def test_remainder_second_order(self):
        u, V = random_pair(Grid(1, 64), 4.0, 7)
        taus = [2.0**-j for j in range(4, 10)]
        errs = []
        for t in taus:
            approx = t * _first_order_terms(u, V, t, "phi1")
            errs.append(sobolev_norm(oscillatory_integral_oracle(u, V, t, n_quad=16, panels=64) - approx, 0))
        assert loglog_slope(taus, errs) >= 1.9


class TestEvolve:
    def test_zero_steps(self, smooth_pair):
        u, V = smooth_pair
        assert evolve(u, V, StepConfig(0.1), 0) is u

    def test_negative_steps(self, smooth_pair):
        with pytest.raises(ValueError):
            evolve(*smooth_pair, StepConfig(0.1), -1)

    @pytest.mark.parametrize("scheme", list(SchemeId))
    def test_composition(self, scheme, smooth_pair):
        u, V = smooth_pair
        cfg = StepConfig(0.01, scheme)
        assert max_abs(evolve(evolve(u, V, cfg, 3), V, cfg, 4) - evolve(u, V, cfg, 7)) == 0

    def test_snapshots(self, smooth_pair):
        u, V = smooth_pair
        final, snaps = evolve(u, V, StepConfig(0.01), 10, snapshot_every=4)
        assert [n for n, _ in snaps] == [0, 4, 8, 10]
        assert snaps[-1][1] is final

    def test_deterministic(self, smooth_pair):
        u, V = smooth_pair
        cfg = StepConfig(0.02, SchemeId.LRI2_FILTERED)
        assert np.array_equal(evolve(u, V, cfg, 5).coeffs, evolve(u, V, cfg, 5).coeffs)

    def test_plane_wave_first_order(self):
        g = Grid(1, 16)
        u0, V = Field.mode(g, 1), Field.zeros(g)
        exact = plane_wave(g, 1, 1.0, 1.0)
        errs = [sobolev_norm(evolve(u0, V, StepConfig(t), round(1 / t)) - exact, 0) for t in (1 / 32, 1 / 64, 1 / 128)]
        assert errs[0] < 0.2
        assert loglog_slope([1 / 32, 1 / 64, 1 / 128], errs) == pytest.approx(1.0, abs=0.1)

    def test_blow_up(self):
        g = Grid(1, 16)
        u0 = Field.constant(g, 3.0)
        with pytest.raises(BlowUpError) as info:
            evolve(u0, Field.zeros(g), StepConfig(1.0, SchemeId.EXP_EULER), 50)
        assert 1 <= info.value.step <= 50
        assert "exp_euler" in str(info.value)
