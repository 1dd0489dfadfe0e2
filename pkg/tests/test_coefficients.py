import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from pencil_spectra.coefficients import (alpha_coeffs, drho0_dkappa, jets, perturbation_coeffs, rho0,
                                         rho0_kappa, rho12_2, rho21_2, rho_hat)
from pencil_spectra.floquet import monodromy
from pencil_spectra.problem import GammaSpec, PotentialSpec, ProblemSpec, threshold

SIN2 = GammaSpec((0.0, 1.0))
coeffs = st.lists(st.floats(-1.5, 1.5, allow_nan=False), min_size=2, max_size=4)


def test_frozen_values_sin2x():
    # frozen from the independent oracles in tests/oracles.py
    assert rho0_kappa(SIN2, 1).real == pytest.approx(-math.pi / 2, abs=1e-13)
    assert rho_hat(SIN2, 1, 0.0).real == pytest.approx(3.7011016, abs=2e-7)
    assert rho12_2(SIN2, 1).real == pytest.approx(0.49087, abs=1e-5)
    assert rho21_2(SIN2, 1).real == pytest.approx(1.07992, abs=1e-5)
    assert alpha_coeffs(SIN2, 1).alpha1 == pytest.approx(0.0625, abs=1e-12)
    assert drho0_dkappa(SIN2, 1).real == pytest.approx(2.35619, abs=1e-5)


@given(coeffs, st.floats(0.3, 3.0))
def test_rho0_against_quad(c, k):
    assert rho0_kappa(GammaSpec(tuple(c)), k).real == pytest.approx(oracles.quad_rho0(tuple(c), k), abs=1e-11)


def test_rho_hat_against_sobol():
    n = 1
    val = oracles.qmc_triangle((0.0, 1.0), lambda x, t: (math.pi + t - x) * np.sin(2 * n * (t - x)))
    ref = rho0_kappa(SIN2, 1).real ** 2 - val
    assert rho_hat(SIN2, 1, 0.0).real == pytest.approx(ref, abs=1e-5)


def test_drho0_finite_difference():
    g = GammaSpec((0.3, 1.0, -0.4, 0.2))
    h = 1e-5
    fd = (rho0_kappa(g, 2 + h) - rho0_kappa(g, 2 - h)) / (2 * h)
    assert abs(drho0_dkappa(g, 2) - fd) <= 1e-8


@given(coeffs, st.integers(1, 2), st.sampled_from([-0.5, 0.0, 1.0]))
def test_identities(c, n, ks):
    g = GammaSpec(tuple(c) + (0.0,) * 4)
    co = perturbation_coeffs(g, n, ks, with_double_integrals=False)
    res = co.identity_residuals()
    for key in ("trace_rho2", "rho11_2_split", "rho22_2_split", "trace_rho3", "rho0_alpha0"):
        assert res[key] <= 1e-8, key


def test_rho0_on_branch():
    assert rho0(SIN2, threshold(1, 0.0), 0.0) == rho0_kappa(SIN2, 1.0)


@pytest.mark.parametrize("lam", [0.9 + 0.1j, 1.4])
def test_jet_truncation_order(lam):
    g = GammaSpec((0.5, 1.0))
    jv = jets(g, lam, 0.0, order=3)
    well = PotentialSpec("sech2_well", {"v0": 1.0, "mu": 1.0})
    for J in (1, 2):
        r = []
        for eps in (0.02, 0.01):
            A = monodromy(ProblemSpec(0.0, eps, g, well), lam).matrix
            r.append(np.max(np.abs(A - jv.monodromy_partial_sum(eps, J))))
        assert r[0] / r[1] >= 0.8 * 2 ** (J + 1)
