import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from pencil_spectra.floquet import (closed_form_monodromy, decaying_direction, floquet_multipliers,
                                    fundamental_solutions, in_band, monodromy, quasi_momentum)
from pencil_spectra.problem import GammaSpec, PotentialSpec, ProblemSpec

WELL = PotentialSpec("sech2_well", {"v0": 2.0, "mu": 1.0})
coeffs = st.lists(st.floats(-1.5, 1.5, allow_nan=False), min_size=1, max_size=3)
lams = st.complex_numbers(max_magnitude=2.5, allow_nan=False, allow_infinity=False)


@given(coeffs, st.floats(0, 0.3), lams, st.floats(-1, 1))
def test_det_and_multiplier_product(c, eps, lam, ks):
    M = monodromy(ProblemSpec(ks, eps, GammaSpec(tuple(c)), WELL), lam)
    # det is formed from entries of size |A|; roundoff alone gives ~1e-16 |A|^2
    scale = max(1.0, np.max(np.abs(M.matrix)) ** 2)
    assert M.det_residual <= 1e-10 * scale
    fp = floquet_multipliers(M)
    assert abs(fp.mu_plus * fp.mu_minus - 1) <= 1e-10 * scale


@given(coeffs, st.floats(0, 0.3), lams, st.floats(-1, 1))
def test_monodromy_matches_scipy(c, eps, lam, ks):
    M = monodromy(ProblemSpec(ks, eps, GammaSpec(tuple(c)), WELL), lam).matrix
    R = oracles.ivp_monodromy(tuple(c), ks, eps, lam)
    assert np.max(np.abs(M - R)) <= 1e-8 * max(1.0, np.max(np.abs(R)))


@pytest.mark.parametrize("lam", [0.3, 1.7, 0.5 + 0.4j, 2j])
@pytest.mark.parametrize("ks", [-0.5, 0.0, 1.0])
def test_unperturbed_closed_form(lam, ks):
    M = monodromy(ProblemSpec(ks, 0.0, GammaSpec((1.0,)), WELL), lam).matrix
    R = closed_form_monodromy(lam, ks)
    assert np.max(np.abs(M - R)) <= 1e-8 * max(1.0, np.max(np.abs(R)))


def test_fundamental_solutions_identity_at_zero():
    phi, dphi, psi, dpsi = fundamental_solutions(ProblemSpec(0.0, 0.1, GammaSpec((1.0,)), WELL), 0.8, 0.0)
    assert (phi, dphi, psi, dpsi) == (1, 0, 0, 1)


def test_band_membership_and_quasimomentum():
    p = ProblemSpec(0.0, 0.0, GammaSpec((1.0,)), WELL)
    tau = 0.2
    lam = math.sqrt((1 - tau) ** 2)
    M = monodromy(p, lam)
    assert in_band(M)
    assert decaying_direction(M) is None
    assert abs(abs(quasi_momentum(M)) - tau) <= 1e-8


def test_decaying_direction_off_band():
    M = monodromy(ProblemSpec(0.0, 0.1, GammaSpec((1.0,)), WELL), 0.5 + 0.3j)
    d = decaying_direction(M)
    assert d is not None and abs(d.multiplier) < 1
    v = np.asarray(d.eigvec)
    assert np.linalg.norm(M.matrix @ v - d.multiplier * v) <= 1e-9 * np.linalg.norm(v)
