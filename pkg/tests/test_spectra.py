import math

import numpy as np
import pytest

from extflow import spectra
from extflow.errors import (
    DynamicRangeExceeded,
    IllPosed,
    InsufficientData,
    InvalidRho,
)

NU25 = math.sqrt(24.75)

# frozen from an independent shooting run (separate solver stack) at
# theta = 0.7: four consecutive ladder rungs
REFERENCE_LADDER = [-24.18009070, -6.83845304, -1.93400638, -0.54696301]


@pytest.fixture(scope="module")
def ladder25():
    return spectra.shoot_negative_eigenvalues(-25.0, 0.7, 4)


class TestSelfAdjointLattice:
    def test_two_pi_interval(self):
        eig = spectra.interval_sa_spectrum(2 * math.pi, 0.0, (-3.5, 3.5))
        assert [v.real for v in eig.values] == pytest.approx([-3, -2, -1, 0, 1, 2, 3])

    def test_theta_shift(self):
        eig = spectra.interval_sa_spectrum(math.pi, math.pi, (0.0, 6.0))
        assert [v.real for v in eig.values] == pytest.approx([1.0, 3.0, 5.0])

    def test_exact_spacing(self):
        eig = spectra.interval_sa_spectrum(0.7, 1.1, (-40.0, 40.0))
        gaps = np.diff([v.real for v in eig.values])
        assert np.allclose(gaps, 2 * math.pi / 0.7, rtol=0, atol=1e-12)

    def test_membership_residual(self):
        eig = spectra.interval_sa_spectrum(1.3, 0.4, (-30.0, 30.0))
        assert max(eig.residuals) < 1e-12

    def test_csv(self, tmp_path):
        eig = spectra.interval_sa_spectrum(1.0, 0.0, (-10.0, 10.0))
        path = tmp_path / "eigenvalues.csv"
        eig.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == len(eig) + 1
        assert lines[0] == "index,re_lambda,im_lambda,residual"


class TestDissipativeLattice:
    def test_nilpotent_case_empty(self):
        eig = spectra.interval_dissipative_lattice(1.0, 0.0, (-10.0, 10.0))
        assert len(eig) == 0

    def test_unit_height_lattice(self):
        eig = spectra.interval_dissipative_lattice(1.0, math.exp(-1), (-20.0, 20.0))
        assert all(v.imag == pytest.approx(1.0, abs=1e-12) for v in eig.values)
        gaps = np.diff([v.real for v in eig.values])
        assert np.allclose(gaps, 2 * math.pi, rtol=0, atol=1e-12)

    def test_eigencondition_residual(self):
        rho = 0.3 - 0.4j
        eig = spectra.interval_dissipative_lattice(2.0, rho, (-15.0, 15.0))
        assert max(eig.residuals) <= 1e-10 * abs(1 / rho)

    def test_upper_half_plane(self):
        eig = spectra.interval_dissipative_lattice(1.5, 0.2 + 0.1j, (-25.0, 25.0))
        assert all(v.imag > 0 for v in eig.values)

    def test_unit_modulus_limit_matches_self_adjoint(self):
        # as |rho| -> 1 the height drops to zero and the real parts match
        theta = 0.9
        rho = (1 - 1e-9) * np.exp(1j * theta)
        diss = spectra.interval_dissipative_lattice(1.0, rho, (-10.0, 10.0))
        sa = spectra.interval_sa_spectrum(1.0, theta, (-10.0, 10.0))
        assert max(abs(v.imag) for v in diss.values) < 1e-8
        assert [v.real for v in diss.values] == pytest.approx(
            [v.real for v in sa.values], abs=1e-8)

    def test_invalid_rho(self):
        with pytest.raises(InvalidRho):
            spectra.interval_dissipative_lattice(1.0, 1.0, (-10.0, 10.0))


class TestShooting:
    def test_matches_independent_reference(self, ladder25):
        assert len(ladder25) == 4
        got = [v.real for v in ladder25.values]
        assert got == pytest.approx(REFERENCE_LADDER, rel=1e-5)

    def test_residuals_small(self, ladder25):
        assert max(ladder25.residuals) < 1e-6

    def test_consecutive_ratio_is_single_step_constant(self, ladder25):
        rep = spectra.progression_ratio(ladder25)
        assert rep.ratio == pytest.approx(math.exp(2 * math.pi / NU25), rel=1e-6)
        assert rep.generator_deviation < 0.05
        # the doubled constant is the square of the consecutive ratio
        assert rep.ratio**2 == pytest.approx(rep.kappa, rel=1e-6)

    def test_set_maps_into_itself_under_kappa(self, ladder25):
        kappa = math.exp(4 * math.pi / NU25)
        values = sorted(v.real for v in ladder25.values)
        for lam in values:
            target = kappa * lam
            if target < values[0] - 0.05 * abs(values[0]):
                continue  # mapped below the retrieved window
            assert any(abs(target - w) <= 0.05 * abs(w) for w in values), (
                f"kappa * {lam} = {target} missing")

    def test_theta_plus_pi_gives_same_spectrum(self, ladder25):
        shifted = spectra.shoot_negative_eigenvalues(-25.0, 0.7 + math.pi, 4)
        for a, b in zip(shifted.values, ladder25.values):
            assert a.real == pytest.approx(b.real, rel=1e-9)

    def test_weak_coupling_ladder(self):
        eig = spectra.shoot_negative_eigenvalues(-1.0, 0.3, 2)
        rep = spectra.progression_ratio(eig)
        assert rep.generator_deviation < 0.10
        assert rep.generator == pytest.approx(math.exp(2 * math.pi / math.sqrt(0.75)),
                                              rel=1e-12)

    def test_requires_oscillatory_coupling(self):
        with pytest.raises(IllPosed):
            spectra.shoot_negative_eigenvalues(0.0, 0.0, 2)

    def test_count_cap(self):
        with pytest.raises(ValueError):
            spectra.shoot_negative_eigenvalues(-25.0, 0.0, 5)

    def test_dynamic_range_guard(self):
        # nu = 0.1: one ladder step alone spans e^{20 pi} >> 1e12
        with pytest.raises(DynamicRangeExceeded):
            spectra.shoot_negative_eigenvalues(-0.26, 0.0, 2)


class TestProgressionRatio:
    def test_constructed_progression(self):
        eig = spectra.EigenList([-1.0 + 0j, -12.5 + 0j, -156.25 + 0j],
                                [0.0, 0.0, 0.0])
        rep = spectra.progression_ratio(eig, nu=NU25)
        assert rep.ratio == pytest.approx(12.5, rel=1e-12)
        assert rep.kappa == pytest.approx(12.502586383667884, rel=1e-12)
        assert rep.kappa_deviation == pytest.approx(abs(12.5 - rep.kappa) / rep.kappa)

    def test_insufficient_data(self):
        eig = spectra.EigenList([-1.0 + 0j], [0.0])
        with pytest.raises(InsufficientData):
            spectra.progression_ratio(eig)


class TestFriedrichsKreinParams:
    def test_zero_coupling(self):
        fk = spectra.friedrichs_krein_params(0.0)
        assert fk.exponents == pytest.approx((1.0, 0.0))
        assert abs(fk.v_friedrichs - 1.0) < 1e-8
        assert abs(fk.v_krein - (-1j)) < 1e-8

    def test_critical_coupling_coincide(self):
        fk = spectra.friedrichs_krein_params(-0.25)
        assert fk.v_friedrichs == fk.v_krein
        assert fk.exponents == pytest.approx((0.5, 0.5))

    def test_half_coupling_exponents(self):
        fk = spectra.friedrichs_krein_params(0.5)
        assert fk.exponents[0] == pytest.approx(0.5 + math.sqrt(3) / 2)
        assert fk.exponents[1] == pytest.approx(0.5 - math.sqrt(3) / 2)
        assert abs(abs(fk.v_friedrichs) - 1) < 1e-8
        assert abs(abs(fk.v_krein) - 1) < 1e-8

    def test_range_check(self):
        with pytest.raises(IllPosed):
            spectra.friedrichs_krein_params(-1.0)


class TestScalingCovariance:
    def test_ladder_invariant_under_generator_step(self, ladder25):
        step = math.exp(2 * math.pi / NU25)
        values = sorted(v.real for v in ladder25.values)
        for lam in values:
            target = step * lam
            if target < values[0] * (1 + 0.05):
                continue
            assert any(abs(target - w) <= 0.05 * abs(w) for w in values)
