import math
from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pencil_spectra.oracle import find_isolated_eigenvalue, fitted_order, matching, winding_number
from pencil_spectra.predictor import (emergent_prediction, isolated_series, spectrum_enclosure_check,
                                      zero_mode_analysis)
from pencil_spectra.problem import GammaSpec, PotentialSpec, ProblemSpec
from pencil_spectra.scattering import PreconditionError, discrete_spectrum

WELL2 = PotentialSpec("sech2_well", {"v0": 2.0, "mu": 1.0})
ISO = ProblemSpec(0.5, 0.02, GammaSpec((1.0,)), WELL2)
ZERO_EVEN = ProblemSpec(1.0, 0.02, GammaSpec((1.0,)), WELL2)

_grid = np.linspace(-12, 12, 481)
ASYM = PotentialSpec("tabulated", {"grid": list(_grid),
                                   "values": list(-2 / np.cosh(_grid - 0.4) ** 2 - 0.6 * np.exp(-(_grid + 1) ** 2)),
                                   "theta": 1.5})


_WELLS = {"well2": WELL2, "asym": ASYM}


@lru_cache(None)
def _modes(name):
    return discrete_spectrum(_WELLS[name])


def modes(V):
    return _modes("well2" if V is WELL2 else "asym")


@lru_cache(None)
def iso_series(sign):
    return isolated_series(ISO, modes(WELL2)[0], sign)


def test_isolated_series_values():
    s = iso_series(1)
    assert abs(s.lambda0 - 1j * math.sqrt(0.5)) <= 1e-9
    # frozen from the oracle fit below
    assert abs(s.Lambdas[1]) <= 1e-9
    assert abs(s.Lambdas[2] - 0.086712j) <= 1e-5
    assert abs(s.Lambdas[3]) <= 1e-8
    assert max(s.solvability_residuals) <= 1e-8


def test_isolated_series_symmetry():
    # lambda -> -conj(lambda) fixes each imaginary series; x -> -x on the even well gives lambda -> -lambda
    p, m = iso_series(1), iso_series(-1)
    for a, b in zip(p.Lambdas, m.Lambdas):
        assert abs(a + a.conjugate()) <= 1e-9
        assert abs(b + a) <= 1e-9


def test_isolated_series_against_oracle():
    s = iso_series(1)
    eps = [0.08, 0.04, 0.02]
    errs1, errs3 = [], []
    for e in eps:
        res = find_isolated_eigenvalue(ISO.with_epsilon(e), s.partial_sum(e), 10 * e * e + 1e-6)
        assert res.status == "isolated"
        errs1.append(abs(res.lam - s.partial_sum(e, 1)))
        errs3.append(abs(res.lam - s.partial_sum(e, 3)))
    assert fitted_order(eps, errs1) >= 1.7
    assert max(errs3) <= 1e-5
    # pure imaginary: real parts vanish for the even well with odd gamma
    assert abs(res.lam.real) <= 1e-9


def test_first_order_ratio():
    # halving eps reduces the first-order error by at least 3.5
    s = iso_series(1)
    errs = []
    for e in (0.04, 0.02):
        res = find_isolated_eigenvalue(ISO.with_epsilon(e), s.partial_sum(e), 1e-2)
        errs.append(abs(res.lam - s.partial_sum(e, 1)))
    assert errs[0] / errs[1] >= 3.5


def test_isolated_refuses_zero_case():
    with pytest.raises(PreconditionError):
        isolated_series(ZERO_EVEN, modes(WELL2)[0], 1)


def test_zero_mode_even_well_double_zero():
    z = zero_mode_analysis(ZERO_EVEN, modes(WELL2)[0])
    assert abs(z.gamma_moment) <= 1e-10
    assert z.extra is None and z.zero_multiplicity == 2
    for e in (0.04, 0.02):
        p = ZERO_EVEN.with_epsilon(e)
        assert abs(matching(p, 0j).value) <= 1e-8
        assert winding_number(p, 0j, 0.05, exclude=0j, multiplicity=2) == 0


def test_zero_mode_asymmetric_well():
    m = modes(ASYM)[0]
    p = ProblemSpec(-m.kappa_j, 0.02, GammaSpec((1.0, 0.3)), ASYM)
    z = zero_mode_analysis(p, m)
    s = z.extra
    assert z.zero_multiplicity == 1 and s is not None
    assert abs(s.Lambdas[0]) == 0 and abs(s.Lambdas[2]) <= 1e-12
    assert np.max(np.abs(s.correctors[1])) == 0
    assert abs(s.Lambdas[1] - 1j * z.gamma_moment) <= 1e-14
    assert abs(z.gamma_moment) > 0.1
    # agreement is limited by the consistency of kappa_j with the tabulated spline (about 1e-5)
    for e in (0.04, 0.02):
        res = find_isolated_eigenvalue(p.with_epsilon(e), s.partial_sum(e), 0.2 * e * abs(z.gamma_moment))
        assert res.status == "isolated"
        assert abs(res.lam - s.partial_sum(e)) <= 1e-4


def test_enclosure_examples():
    kj = [m.kappa_j for m in modes(WELL2)]
    p0 = ISO.with_epsilon(0.0)
    r = spectrum_enclosure_check(p0, 1j * math.sqrt(0.5), kj, slack=1e-12)
    assert r.inside and abs(r.margin) <= 1e-12
    assert not spectrum_enclosure_check(ISO, 0.3 + 0.3j, kj).inside
    # real lambda maps onto the essential spectrum
    assert spectrum_enclosure_check(p0, 2.0, kj).inside


@given(st.floats(0.0, 0.1), st.integers(0, 3))
def test_predictions_enclosed(eps, k):
    s = iso_series(1)
    kj = [m.kappa_j for m in modes(WELL2)]
    lam = s.partial_sum(eps, k)
    assert spectrum_enclosure_check(ISO.with_epsilon(eps), lam, kj, slack=1e-12).inside


def test_emergent_json_and_mirror():
    p = ProblemSpec(0.0, 0.02, GammaSpec((0.0, 1.0)), PotentialSpec("sech2_well", {"v0": 1.5, "mu": 1.0}))
    a = emergent_prediction(p, 1, 1, 1)
    b = emergent_prediction(p, 1, -1, 1)
    j = a.to_json()
    assert j["condition_id"] == "multiplier" and j["variant"] == "corrected"
    assert emergent_prediction(p, 1, 1, 1, "printed").condition_id in ("7.39", "7.40")
    assert b.mirrored and abs(b.lambda0 + a.lambda0) <= 1e-15
    assert a.exists == "yes"
    with pytest.raises(ValueError):
        emergent_prediction(p, 1, 1, 1, "other")
