import math

import numpy as np
import pytest

import oracles
from pencil_spectra.coefficients import perturbation_coeffs
from pencil_spectra.oracle import (InBandError, certify_absence, eigenfunction, eigenvalue_defect_order,
                                   find_isolated_eigenvalue, fitted_order, matching, muller, periods_for,
                                   winding_number)
from pencil_spectra.predictor import emergent_prediction
from pencil_spectra.problem import GammaSpec, PotentialSpec, ProblemSpec

WELL2 = PotentialSpec("sech2_well", {"v0": 2.0, "mu": 1.0})
ISO = ProblemSpec(0.5, 0.02, GammaSpec((1.0,)), WELL2)
LAM0 = 1j * math.sqrt(0.5)


@pytest.mark.parametrize("sign", [1, -1])
def test_unperturbed_zero(sign):
    p = ISO.with_epsilon(0.0)
    assert abs(matching(p, sign * LAM0).value) <= 1e-8
    for z in (0.3j, 1.1j, 0.5 + 0.5j):
        assert abs(matching(p, sign * z).value) > 1e-3


def test_unperturbed_recovery():
    p = ISO.with_epsilon(0.0)
    res = find_isolated_eigenvalue(p, LAM0 + 0.01, 0.05)
    assert res.status == "isolated" and abs(res.lam - LAM0) <= 1e-8


@pytest.mark.parametrize("lam", [0.7j, 0.3 + 0.6j, -0.2 + 0.9j])
def test_value_independent_of_box(lam):
    m0 = periods_for(ISO)
    ref = matching(ISO, lam, periods=m0).value
    for m in (m0 + 1, m0 + 3):
        assert abs(matching(ISO, lam, periods=m).value - ref) <= 1e-9


def test_root_independent_of_box():
    roots = []
    for extra in (0, 2):
        m = periods_for(ISO) + extra
        r, _, ok = muller(lambda z: matching(ISO, z, periods=m).value, LAM0 + 1e-3, LAM0 - 1e-3, LAM0)
        assert ok
        roots.append(r)
    assert abs(roots[0] - roots[1]) <= 1e-9


def test_eigenfunction_residual():
    res = find_isolated_eigenvalue(ISO, LAM0, 0.01)
    x, psi, mis = eigenfunction(ISO, res.lam, num=32001)
    assert mis <= 1e-8
    V = oracles.sech2(2.0)
    r = oracles.fd_pencil_residual(V, (1.0,), 0.5, 0.02, res.lam, x, psi)
    assert r <= 1e-6
    # decays towards both ends
    assert abs(psi[0]) <= 1e-6 * np.max(np.abs(psi)) and abs(psi[-1]) <= 1e-6 * np.max(np.abs(psi))


def test_muller_polynomial():
    f = lambda z: (z - 1.5j) * (z + 2) * (z - 3)
    r, _, ok = muller(f, 1.4j, 1.45j, 1.6j)
    assert ok and abs(r - 1.5j) <= 1e-12


def test_winding_counts():
    assert winding_number(ISO, LAM0, 0.05) == 1
    assert winding_number(ISO, 0.3j, 0.05) == 0
    assert winding_number(ISO, -LAM0, 0.05) == 1
    assert winding_number(ISO, LAM0, 0.05, exclude=LAM0 + 0.0013j) == 0


def test_winding_refuses_band():
    with pytest.raises(InBandError):
        winding_number(ISO, 1.0, 0.1)


def test_ladder_must_be_geometric():
    with pytest.raises(ValueError):
        eigenvalue_defect_order(ISO, lambda e: LAM0, [0.04, 0.02, 0.005])
    with pytest.raises(ValueError):
        eigenvalue_defect_order(ISO, lambda e: LAM0, [0.04, 0.02])


def test_fitted_order():
    eps = [0.04, 0.02, 0.01]
    assert abs(fitted_order(eps, [3 * e ** 2 for e in eps]) - 2) <= 1e-12
    assert math.isnan(fitted_order(eps, [1.0, math.nan, 1.0]))


def _threshold_problem(v0):
    return ProblemSpec(0.0, 0.02, GammaSpec((0.0, 1.0)), PotentialSpec("sech2_well", {"v0": v0, "mu": 1.0}))


def test_certify_absence_resonance():
    p = _threshold_problem(3.0)
    pred = emergent_prediction(p, 1, 1, 1)
    r0 = abs(perturbation_coeffs(p.gamma, 1, 0.0).rho0)
    c = certify_absence(p, pred.lambda0, 5 * 0.02 * r0)
    assert c.absent and c.continued and c.radius < c.requested_radius
    # the continued sheet carries a resonance where the series points
    assert min(abs(z - pred.predict(0.02)) for z in c.resonances) <= 1e-6


def test_certify_presence():
    p = _threshold_problem(1.5)
    r0 = abs(perturbation_coeffs(p.gamma, 1, 0.0).rho0)
    c = certify_absence(p, 1.0, 5 * 0.02 * r0)
    assert not c.absent and c.winding == 2 and not c.resonances
