import numpy as np
import numpy.testing as npt
import pytest

from pwframes.construct import (
    ActivationProfile,
    AngleParameters,
    AngleSlot,
    activation_profile,
    build_construction,
    build_masks,
    check_sys2,
    cross_orthogonality,
    product_certificate,
    random_admissible_slots,
    random_pair_angles,
    solve_rho1,
    solve_sys2_general,
    tilde_from_angles,
    tilde_pair_from_angles,
)
from pwframes.errors import (
    ConstructionPreconditionError,
    DegenerateParameterizationError,
    SingularConfigurationError,
)
from pwframes.haar import (
    compatible_angle_slots,
    haar_chain,
    level1_seeds,
    valuation_seeds,
    wavelet_mask,
)
from pwframes.masks import derive_chain
from pwframes.spectra import DyadicSequence, Spectrum
from pwframes.verdicts import FAIL, PASS


def unit_residual(pair, branch):
    r0, r1 = pair.unit_residuals()
    return r0 if branch == 0 else r1


def constant_chain(top_level, support, value=1.0):
    """Chain with phi_j nonzero everywhere on the support (full activation)."""
    top = Spectrum(-support, np.full(2 * support + 1, value, dtype=complex))
    masks = {
        lvl: DyadicSequence.constant(lvl, 1 / np.sqrt(2)) for lvl in range(2, top_level + 1)
    }
    return derive_chain(top, masks, top_level)


def one_sided_chain(top_level, width=None):
    """Chain with nested one-sided supports {0..2**j-1}; width truncates the top."""
    if width is None:
        width = 1 << top_level
    top = Spectrum(0, np.ones(width, dtype=complex))
    masks = {}
    for lvl in range(2, top_level + 1):
        vals = np.zeros(1 << lvl, dtype=complex)
        vals[: 1 << (lvl - 1)] = 1 / np.sqrt(2)
        masks[lvl] = DyadicSequence(lvl, vals)
    return derive_chain(top, masks, top_level)


class TestTildeFromAngles:
    def test_identity_angles(self):
        pair = tilde_pair_from_angles([0.0, 0.0, 0.0])
        assert pair.a_low == pytest.approx(1.0)
        assert pair.b_low[0] == pytest.approx(0.0)

    def test_symmetric_split(self):
        pair = tilde_pair_from_angles([np.pi / 4, 0.0, 0.0])
        assert abs(pair.a_low) ** 2 == pytest.approx(0.5, abs=1e-15)
        assert abs(pair.b_low[0]) ** 2 == pytest.approx(0.5, abs=1e-15)

    def test_rho3_unit_sphere(self):
        rng = np.random.default_rng(0)
        t0 = rng.uniform(-np.pi, np.pi, 7)
        pair = tilde_pair_from_angles(t0, rho=3)
        assert unit_residual(pair, 0) < 1e-12

    @pytest.mark.parametrize("rho", [1, 2, 3])
    def test_unit_sphere_many_draws(self, rho):
        rng = np.random.default_rng(rho)
        for _ in range(500):
            t0 = rng.uniform(-np.pi, np.pi, 2 * rho + 1)
            t1 = rng.uniform(-np.pi, np.pi, 2 * rho + 1)
            pair = tilde_pair_from_angles(t0, t1, rho)
            r0, r1 = pair.unit_residuals()
            assert r0 < 1e-12 and r1 < 1e-12

    def test_level_assembly_periodization(self):
        rng = np.random.default_rng(5)
        slots = {
            (3, base): AngleSlot(
                tuple(rng.uniform(-np.pi, np.pi, 3)), tuple(rng.uniform(-np.pi, np.pi, 3))
            )
            for base in range(4)
        }
        aux = tilde_from_angles(3, AngleParameters(1, slots))
        assert aux.a_tilde.level == 3
        for base in range(4):
            pair = tilde_pair_from_angles(slots[(3, base)].t0, slots[(3, base)].t1, 1)
            assert aux.a_tilde.at(base) == pytest.approx(pair.a_low)
            assert aux.a_tilde.at(base + 4) == pytest.approx(pair.a_high)
            assert aux.b_tilde[0].at(base) == pytest.approx(pair.b_low[0])


class TestCheckSys2:
    def test_all_zero_angles_flag_unit_cross(self):
        res_c, res_s = check_sys2([0.0, 0.0, 0.0], [0.0, 0.0, 0.0])
        assert res_c == pytest.approx(1.0)
        assert res_s == pytest.approx(0.0)

    def test_solved_family_has_tiny_residuals(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            slot = random_pair_angles(rng)
            res_c, res_s = check_sys2(slot.t0, slot.t1)
            assert abs(res_c) < 1e-12 and abs(res_s) < 1e-12

    def test_residuals_match_direct_cross_sum(self):
        # the two residuals are the real/imag parts of the slot's cross sum
        rng = np.random.default_rng(2)
        for rho in (1, 2, 3):
            for _ in range(100):
                t0 = rng.uniform(-np.pi, np.pi, 2 * rho + 1)
                t1 = rng.uniform(-np.pi, np.pi, 2 * rho + 1)
                res_c, res_s = check_sys2(t0, t1, rho)
                cross = tilde_pair_from_angles(t0, t1, rho).cross_sum()
                npt.assert_allclose(res_c, cross.real, atol=1e-12)
                npt.assert_allclose(abs(res_s), abs(cross.imag), atol=1e-12)

    def test_small_residual_iff_small_cross(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            slot = random_pair_angles(rng)
            pair = tilde_pair_from_angles(slot.t0, slot.t1, 1)
            assert cross_orthogonality(pair) < 1e-11


class TestSolveRho1:
    def test_worked_example(self):
        pair = solve_rho1(np.pi / 4, 0.0, 0.0, 0.0, sign1=1, sign2=-1)
        root_half = np.sqrt(0.5)
        assert pair.a_low == pytest.approx(root_half)
        assert pair.b_low[0] == pytest.approx(root_half)
        assert pair.a_high == pytest.approx(root_half)
        assert pair.b_high[0] == pytest.approx(-root_half)
        assert cross_orthogonality(pair) < 1e-15

    def test_axis_case(self):
        pair = solve_rho1(0.0, 0.7, 0.3, -0.2)
        assert pair.a_low == pytest.approx(np.exp(0.7j))
        assert pair.b_low[0] == pytest.approx(0.0)
        assert pair.a_high == pytest.approx(0.0)
        assert abs(pair.b_high[0]) == pytest.approx(1.0)

    @pytest.mark.parametrize("trial", range(20))
    def test_satisfies_both_constraints(self, trial):
        rng = np.random.default_rng(100 + trial)
        for _ in range(50):
            t01, t02, t03, t12 = rng.uniform(-1.4, 1.4, 4)
            s1 = int(rng.choice([1, -1]))
            pair = solve_rho1(t01, t02, t03, t12, s1, -s1)
            r0, r1 = pair.unit_residuals()
            assert r0 < 1e-12 and r1 < 1e-12
            assert cross_orthogonality(pair) < 1e-12

    def test_rejects_vanishing_scaling_slot(self):
        with pytest.raises(DegenerateParameterizationError):
            solve_rho1(np.pi / 2, 0.0, 0.0, 0.0)

    def test_rejects_equal_signs(self):
        with pytest.raises(ValueError, match="opposite|sign"):
            solve_rho1(np.pi / 4, 0.1, 0.2, 0.3, sign1=1, sign2=1)


class TestSolveSys2General:
    def test_rho1_reduces_to_closed_form_family(self):
        rng = np.random.default_rng(4)
        for _ in range(100):
            t1 = tuple(rng.uniform(-1.2, 1.2, 3))
            t02 = rng.uniform(-np.pi, np.pi)
            slot = solve_sys2_general([np.nan, t02, np.nan], t1, 1)
            res_c, res_s = check_sys2(slot.t0, slot.t1)
            assert abs(res_c) < 1e-12 and abs(res_s) < 1e-12
            got = tilde_pair_from_angles(slot.t0, slot.t1, 1)
            want = solve_rho1(slot.t0[0], t02, slot.t0[2], t1[1], 1, -1)
            npt.assert_allclose(
                [got.a_low, got.a_high, got.b_low[0], got.b_high[0]],
                [want.a_low, want.a_high, want.b_low[0], want.b_high[0]],
                atol=1e-12,
            )

    @pytest.mark.parametrize("trial", range(100))
    def test_rho2_completion_passes_residual_check(self, trial):
        rng = np.random.default_rng(200 + trial)
        t0 = rng.uniform(0.2, 1.2, 5)
        t1 = rng.uniform(0.2, 1.2, 5)
        slot = solve_sys2_general(t0, t1, 2)
        res_c, res_s = check_sys2(slot.t0, slot.t1, 2)
        assert abs(res_c) < 1e-10 and abs(res_s) < 1e-10
        pair = tilde_pair_from_angles(slot.t0, slot.t1, 2)
        assert cross_orthogonality(pair) < 1e-10

    def test_rho3_completion(self):
        rng = np.random.default_rng(17)
        for _ in range(50):
            t0 = rng.uniform(0.2, 1.2, 7)
            t1 = rng.uniform(0.2, 1.2, 7)
            slot = solve_sys2_general(t0, t1, 3)
            res_c, res_s = check_sys2(slot.t0, slot.t1, 3)
            assert abs(res_c) < 1e-10 and abs(res_s) < 1e-10

    def test_anchor_phase_quarter_turn_is_singular(self):
        t1 = [0.4, 0.5, 0.6, 0.7, 0.8]
        t0 = [0.3, 0.4, 0.5, 0.6, 0.8 + np.pi / 2]
        with pytest.raises(SingularConfigurationError):
            solve_sys2_general(t0, t1, 2)

    def test_partner_pole_is_singular(self):
        t1 = [0.0, 0.5, 0.6, 0.7, 0.8]  # t^1_{rho-1} at a pole
        t0 = [0.3, 0.4, 0.5, 0.6, 0.7]
        with pytest.raises(SingularConfigurationError):
            solve_sys2_general(t0, t1, 2)


class TestActivationProfile:
    def test_full_activation_regime(self):
        chain = constant_chain(5, 8)
        profile = activation_profile(chain, {1: level1_seeds()})
        for n in range(-8, 9):
            assert profile.j0_at(n) == 0
            assert profile.j1_at(n) == 1
        assert profile.violations == []

    def test_one_sided_supports_give_log2_activation(self):
        chain = one_sided_chain(6)
        seeds = {1: level1_seeds()}
        for lvl in range(2, 7):
            vals = np.zeros(1 << lvl, dtype=complex)
            vals[1 << (lvl - 1) :] = 1.0
            seeds[lvl] = (DyadicSequence(lvl, vals),)
        profile = activation_profile(chain, seeds)
        for n in range(1, 64):
            assert profile.j0_at(n) + 1 == int(np.ceil(np.log2(n + 1)))
        assert profile.j0_at(0) + 1 == 1

    def test_missing_wavelet_mass_is_flagged_not_raised(self):
        chain = constant_chain(3, 4)
        dead = DyadicSequence(1, [1.0, 0.0])  # no energy at odd frequencies
        profile = activation_profile(chain, {1: (dead,)})
        assert set(profile.violations) == {-3, -1, 1, 3}

    def test_haar_valuation_structure(self):
        chain = haar_chain(6, 32)
        profile = activation_profile(chain, valuation_seeds(6))
        for n in range(-32, 33):
            if n == 0:
                assert profile.j0_at(0) == 0 and profile.j1_at(0) == 1
            else:
                v = 0
                m = abs(n)
                while m % 2 == 0:
                    v += 1
                    m //= 2
                assert profile.j0_at(n) == v
                assert profile.j1_at(n) == v + 1


class TestBuildMasks:
    def test_orthogonal_level1_seed_accepted(self):
        chain = constant_chain(3, 4)
        seeds = {1: level1_seeds()}
        profile = activation_profile(chain, seeds)
        rng = np.random.default_rng(6)
        angles = random_admissible_slots(chain, profile, 3, rng)
        system = build_masks(chain, profile, seeds, angles)
        assert system.rho[0] == 2

    def test_single_generator_level1_rejected(self):
        chain = constant_chain(2, 4)
        bad = DyadicSequence(1, [1.0, 1.0])
        seeds = {1: (bad,)}
        profile = activation_profile(chain, seeds)
        angles = random_admissible_slots(chain, profile, 2, np.random.default_rng(7))
        with pytest.raises(ConstructionPreconditionError, match="two generators"):
            build_masks(chain, profile, seeds, angles)

    def test_haar_compatible_angles_rebuild_haar_exactly(self):
        chain = haar_chain(6, 32)
        seeds = valuation_seeds(6)
        profile = activation_profile(chain, seeds)
        angles = compatible_angle_slots(6)
        result = build_construction(chain, profile, seeds, angles)
        for j in range(1, 6):
            want = wavelet_mask(j + 1).values
            got = result.system.wavelet_masks[j][0].values
            npt.assert_allclose(got, want, atol=1e-12)
        for j in range(1, 7):
            npt.assert_allclose(result.theta.level(j).values.real, 1.0, atol=1e-12)

    def test_zero_padding_between_activations(self):
        # one-sided chain truncated so the 4..7 block can activate late:
        # at level 3 those residues must be forced to zero.
        chain = one_sided_chain(4, width=12)
        seeds = {1: level1_seeds()}
        vals2 = np.zeros(4, dtype=complex)
        vals2[2:] = [1.0, 1.0]
        seeds[2] = (DyadicSequence(2, vals2),)
        vals4 = np.zeros(16, dtype=complex)
        vals4[4:12] = 1.0
        seeds[4] = (DyadicSequence(4, vals4),)
        profile = activation_profile(chain, seeds)
        for n in range(4, 8):
            assert profile.j0_at(n) == 2 and profile.j1_at(n) == 4
        rng = np.random.default_rng(8)
        angles = random_admissible_slots(chain, profile, 4, rng)
        result = build_construction(chain, profile, seeds, angles)
        level3 = result.system.wavelet_masks[2][0].values
        npt.assert_allclose(level3[4:8], 0.0, atol=1e-15)
        level4 = result.system.wavelet_masks[3][0].values
        npt.assert_allclose(level4[4:12], 1.0, atol=1e-15)

    def test_theta_product_identity(self):
        from pwframes.masks import theta_recursion

        chain = haar_chain(7, 64)
        seeds = valuation_seeds(7)
        profile = activation_profile(chain, seeds)
        rng = np.random.default_rng(9)
        angles = random_admissible_slots(chain, profile, 7, rng)
        result = build_construction(chain, profile, seeds, angles)
        independent = theta_recursion(chain, result.system)
        for j in range(8):
            npt.assert_allclose(
                independent.level(j).values, result.theta.level(j).values, rtol=1e-12
            )
        for n in (-37, -8, 0, 1, 6, 20, 33, 64):
            j1 = profile.j1_at(n)
            theta_j1 = result.theta.at(j1, n)
            for j in range(j1 + 1, 8):
                ratio = 1.0
                for r in range(j1 + 1, j + 1):
                    ratio *= (
                        abs(chain.mask(r).at(n)) ** 2
                        / abs(result.a_tilde[r].at(n)) ** 2
                    )
                want = theta_j1 * ratio
                got = result.theta.at(j, n)
                assert abs(got - want) <= 1e-10 * max(1.0, abs(want))

    def test_seed_phase_invariance(self):
        chain = haar_chain(5, 16)
        seeds = valuation_seeds(5)
        profile = activation_profile(chain, seeds)
        rng = np.random.default_rng(10)
        angles = random_admissible_slots(chain, profile, 5, rng)
        base = build_construction(chain, profile, seeds, angles)

        rotated = dict(seeds)
        rotated[1] = tuple(
            DyadicSequence(1, b.values * np.exp(1.234j)) for b in seeds[1]
        )
        rot = build_construction(chain, profile, rotated, angles)
        for j in range(6):
            npt.assert_allclose(
                rot.theta.level(j).values, base.theta.level(j).values, atol=1e-12
            )
        for j in range(5):
            for m in range(len(base.system.wavelet_masks[j])):
                npt.assert_allclose(
                    np.abs(rot.system.wavelet_masks[j][m].values),
                    np.abs(base.system.wavelet_masks[j][m].values),
                    atol=1e-12,
                )
        base_records = product_certificate(chain, profile, seeds, base.a_tilde, 5)
        rot_records = product_certificate(chain, profile, rotated, rot.a_tilde, 5)
        for rb, rr in zip(base_records, rot_records):
            assert rr.verdict == rb.verdict
            if np.isfinite(rb.xi):
                assert rr.xi == pytest.approx(rb.xi, rel=1e-12)

    def test_two_generator_build_certifies(self):
        # general multi-generator route: slots completed by the closed-form
        # solver, scaling phases pinned to the (real positive) chain masks
        from pwframes.certify import check_mask_criterion, parseval_oracle
        from pwframes.verdicts import SKIPPED

        chain = constant_chain(4, 8, value=0.5)
        seeds = {1: level1_seeds()}
        profile = activation_profile(chain, seeds)
        rng = np.random.default_rng(77)
        slots = {}
        for level in range(2, 5):
            for base in range(1 << (level - 1)):
                t0 = np.concatenate([[np.nan, np.nan], rng.uniform(-np.pi, np.pi, 3)])
                t0[2] = 0.0  # scaling phase = arg of the constant mask
                t1 = np.concatenate(
                    [rng.uniform(0.2, 1.2, 2), rng.uniform(-np.pi, np.pi, 3)]
                )
                t1[2] = 0.0
                slots[(level, base)] = solve_sys2_general(t0, t1, 2)
        angles = AngleParameters(2, slots)
        result = build_construction(chain, profile, seeds, angles)
        assert result.system.rho == (2, 2, 2, 2)

        cert = check_mask_criterion(chain, result.system, result.theta)
        active = [r for r in cert.select("mask_cross") if r.verdict != SKIPPED]
        assert active and max(r.residual for r in active) < 1e-10
        oracle = parseval_oracle(
            chain, result.system, 4, trials=5, degree=8,
            rng=np.random.default_rng(3), theta=result.theta, tol=1e-8,
        )
        assert oracle.max_rel_error < 1e-10

    def test_arbitrary_fill_reaches_unconstrained_residues(self):
        # truncating the support leaves level-3 residues 6..7 untouched by
        # any rule; they default to zero unless a fill is configured
        chain = one_sided_chain(3, width=6)
        seeds = {1: level1_seeds()}
        vals2 = np.zeros(4, dtype=complex)
        vals2[2:] = [1.0, 1.0]
        seeds[2] = (DyadicSequence(2, vals2),)
        vals3 = np.zeros(8, dtype=complex)
        vals3[4:6] = 1.0
        seeds[3] = (DyadicSequence(3, vals3),)
        profile = activation_profile(chain, seeds)
        rng = np.random.default_rng(12)
        angles = random_admissible_slots(chain, profile, 3, rng)
        plain = build_construction(chain, profile, seeds, angles)
        npt.assert_allclose(plain.system.wavelet_masks[2][0].values[6:8], 0.0)

        fill = {3: (DyadicSequence(3, np.full(8, 0.25 + 0.1j)),)}
        filled = build_construction(chain, profile, seeds, angles, arbitrary=fill)
        npt.assert_allclose(
            filled.system.wavelet_masks[2][0].values[6:8], 0.25 + 0.1j
        )
        # constrained residues are untouched by the fill
        npt.assert_allclose(
            filled.system.wavelet_masks[2][0].values[:6],
            plain.system.wavelet_masks[2][0].values[:6],
        )

    def test_noncompliant_seed_cross_rejected(self):
        chain = haar_chain(4, 16)
        seeds = valuation_seeds(4)
        profile = activation_profile(chain, seeds)
        rng = np.random.default_rng(11)
        angles = random_admissible_slots(chain, profile, 4, rng)
        # break the forced-axis slot facing the level-2 seed
        slots = dict(angles.slots)
        slots[(2, 0)] = AngleSlot((0.6, 0.1, 0.2))
        with pytest.raises(ConstructionPreconditionError, match="cross-orthogonal"):
            build_masks(chain, profile, seeds, AngleParameters(1, slots))


class TestProductCertificate:
    def test_haar_products_approach_target(self):
        chain = haar_chain(8, 64)
        seeds = valuation_seeds(8)
        profile = activation_profile(chain, seeds)
        angles = compatible_angle_slots(14)
        a_tilde = {lvl: tilde_from_angles(lvl, angles).a_tilde for lvl in range(2, 15)}
        records = product_certificate(chain, profile, seeds, a_tilde, horizon=14)
        by_n = {r.n: r for r in records}
        assert by_n[0].xi == pytest.approx(1.0, abs=1e-14)
        for r in records:
            assert abs(r.xi - 1.0) < 1e-3
            assert r.verdict != FAIL

    def test_unit_products_pass_exactly(self):
        chain = constant_chain(4, 2, value=1 / np.sqrt(2))
        seeds = {1: level1_seeds()}
        profile = activation_profile(chain, seeds)
        a_tilde = {lvl: DyadicSequence.constant(lvl, 1.0) for lvl in range(2, 9)}
        records = product_certificate(chain, profile, seeds, a_tilde, horizon=8, n_values=[0])
        assert records[0].xi == pytest.approx(1.0, abs=1e-15)
        assert records[0].verdict == PASS

    def test_divergent_product_fails(self):
        chain = constant_chain(4, 2, value=1 / np.sqrt(2))
        seeds = {1: level1_seeds()}
        profile = activation_profile(chain, seeds)
        a_tilde = {lvl: DyadicSequence.constant(lvl, 2.0 ** -0.5) for lvl in range(2, 15)}
        records = product_certificate(chain, profile, seeds, a_tilde, horizon=14, n_values=[0])
        assert records[0].verdict == FAIL

    def test_underflowing_product_fails_with_diagnostic(self):
        chain = constant_chain(3, 2, value=1 / np.sqrt(2))
        seeds = {1: level1_seeds()}
        profile = activation_profile(chain, seeds)
        a_tilde = {2: DyadicSequence.constant(2, 0.0), 3: DyadicSequence.constant(3, 1.0)}
        records = product_certificate(chain, profile, seeds, a_tilde, horizon=3, n_values=[0])
        assert records[0].verdict == FAIL
        assert "underflow" in records[0].detail
