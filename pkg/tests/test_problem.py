import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pencil_spectra.problem import (GammaSpec, PotentialSpec, ProblemSpec, SpecError, SpectralParameter,
                                    dumps_problem, envelope_violation, eval_gamma, eval_potential, kappa,
                                    loads_problem, problem_from_dict, problem_to_dict, sup_gamma, threshold)

coeffs = st.lists(st.floats(-2, 2, allow_nan=False), min_size=1, max_size=5)
xs = st.floats(-20, 20, allow_nan=False)


def test_gamma_examples():
    assert eval_gamma(GammaSpec((0.0, 1.0)), math.pi / 4) == pytest.approx(1.0, abs=1e-15)
    assert eval_gamma(GammaSpec((0.3, 0.0, -0.1)), 1.0) == pytest.approx(0.3 * math.sin(1) - 0.1 * math.sin(3), abs=1e-15)


@given(coeffs, xs)
def test_gamma_odd_and_periodic(c, x):
    g = GammaSpec(tuple(c))
    assert eval_gamma(g, 0.0) == 0.0
    assert eval_gamma(g, -x) == pytest.approx(-eval_gamma(g, x), abs=1e-12)
    assert eval_gamma(g, x + 2 * math.pi) == pytest.approx(eval_gamma(g, x), abs=1e-11)


@given(coeffs)
def test_sup_gamma_bounds_samples(c):
    g = GammaSpec(tuple(c))
    s = sup_gamma(g)
    samples = np.abs(eval_gamma(g, np.linspace(-math.pi, math.pi, 10001)))
    assert s >= samples.max() - 1e-12
    assert s <= samples.max() + 1e-4 * (1 + s)


def test_sup_gamma_single_harmonic():
    assert sup_gamma(GammaSpec((0.0, 0.0, 2.5))) == pytest.approx(2.5, abs=1e-12)


@pytest.mark.parametrize("spec", [
    PotentialSpec("sech2_well", {"v0": 2.0, "mu": 1.0}),
    PotentialSpec("gaussian_well", {"v0": 1.0, "sigma": 1.5}),
    PotentialSpec("exp_well", {"v0": 1.2, "theta": 0.8}),
    PotentialSpec("tabulated", {"grid": list(np.linspace(-8, 8, 81)),
                                "values": list(-np.exp(-np.linspace(-8, 8, 81) ** 2)), "theta": 1.0}),
])
def test_envelope_holds(spec):
    assert envelope_violation(spec) <= 0
    assert spec.is_even()


def test_sech2_value_and_tabulated_extrapolation():
    assert eval_potential(PotentialSpec("sech2_well", {"v0": 2.0, "mu": 1.0}), 0.0) == -2.0
    tab = PotentialSpec("tabulated", {"grid": [-2, -1, 1, 2], "values": [0, -1, -1, 0], "theta": 1.0})
    assert eval_potential(tab, 5.0) == 0.0
    with pytest.raises(SpecError):
        eval_potential(tab, 5.0, extrapolate=False)


def test_asymmetric_table_is_not_even():
    grid = list(np.linspace(-6, 6, 61))
    tab = PotentialSpec("tabulated", {"grid": grid, "values": list(-np.exp(-(np.array(grid) - 0.7) ** 2)),
                                      "theta": 1.0})
    assert not tab.is_even()


def test_declared_envelope_violation_rejected():
    d = problem_to_dict(ProblemSpec(0.0, 0.1, GammaSpec((1.0,)), PotentialSpec("sech2_well", {"v0": 2.0, "mu": 1.0})))
    d["potential"]["envelope"] = {"C": 0.5, "theta": 2.0}
    with pytest.raises(SpecError):
        problem_from_dict(d)


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(extra=1),
    lambda d: d["gamma"].update(period=3.0),
    lambda d: d["potential"].update(kind="square_well"),
    lambda d: d["potential"]["params"].update(depth=1.0),
    lambda d: d.pop("epsilon"),
])
def test_unknown_or_missing_keys_rejected(mutate):
    d = problem_to_dict(ProblemSpec(0.0, 0.1, GammaSpec((1.0,)), PotentialSpec("sech2_well", {"v0": 2.0, "mu": 1.0})))
    mutate(d)
    with pytest.raises(SpecError):
        problem_from_dict(d)


@given(st.floats(-3, 3), st.floats(0, 1), coeffs, st.floats(0.1, 4), st.floats(0.2, 3))
def test_roundtrip_bit_exact(ks, eps, c, v0, mu):
    p = ProblemSpec(ks, eps, GammaSpec(tuple(c)), PotentialSpec("sech2_well", {"v0": v0, "mu": mu}))
    q = loads_problem(dumps_problem(p))
    assert problem_to_dict(q) == problem_to_dict(p)
    assert dumps_problem(q) == dumps_problem(p)


@given(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), st.floats(-3, 3))
def test_kappa_branch(lam, ks):
    k = kappa(lam, ks)
    assert abs(k * k - (lam * lam - ks)) <= 1e-12 * (1 + abs(lam) ** 2 + abs(ks))
    assert k.real >= 0
    assert SpectralParameter(lam, ks).kappa_of_lambda == k


def test_kappa_principal_at_one():
    assert kappa(1.0, 0.0) == 1.0
    assert threshold(1, -2.0) == pytest.approx(1j)
