import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from pencil_spectra.bands import (TruncationError, WindowError, asym_center, asym_edge, asym_midband,
                                  band_sweep, bloch_eigenvalues, galerkin_pair, match_pair, unperturbed)
from pencil_spectra.oracle import fitted_order
from pencil_spectra.problem import GammaSpec, PotentialSpec, ProblemSpec

WELL = PotentialSpec("sech2_well", {"v0": 2.0, "mu": 1.0})
LADDER = (0.04, 0.02, 0.01)


def prob(ks, eps, g=(0.0, 1.0)):
    return ProblemSpec(ks, eps, GammaSpec(g), WELL)


@pytest.mark.parametrize("ks", [-0.5, 0.0, 1.0])
def test_unperturbed_bands_exact(ks):
    taus = -0.5 + np.arange(41) / 41
    for n in (0, 1, 2):
        for s in (1, -1):
            curve = band_sweep(prob(ks, 0.0), n, s, taus)
            for p in curve.points:
                assert abs(p.lam - unperturbed(n, s, p.tau, ks)) <= 1e-9


@given(st.floats(-0.5, 0.49), st.floats(0.0, 0.2), st.sampled_from([-0.5, 0.0, 1.0]))
def test_galerkin_satisfies_floquet_trace(tau, eps, ks):
    coeffs = (0.4, 1.0)
    p = prob(ks, eps, coeffs)
    for lam in bloch_eigenvalues(p, tau, (1.2, 1.0)):
        M = oracles.ivp_monodromy(coeffs, ks, eps, lam)
        tr = M[0, 0] + M[1, 1]
        assert abs(tr - 2 * math.cos(2 * math.pi * tau)) <= 1e-7 * max(1.0, abs(tr))


@given(st.floats(-0.5, 0.49), st.floats(0.0, 0.2))
def test_band_set_symmetries(tau, eps):
    # lambda -> -conj(lambda) at fixed tau, lambda -> conj(lambda) at -tau
    p = prob(0.3, eps, (0.4, 1.0))
    ev = bloch_eigenvalues(p, tau, (0.0, 2.5), dedupe=False)
    ev_m = bloch_eigenvalues(p, -tau, (0.0, 2.5), dedupe=False)
    for z in ev:
        assert min(abs(-z.conjugate() - w) for w in ev) <= 1e-8
        assert min(abs(z.conjugate() - w) for w in ev_m) <= 1e-8


def test_truncation_refused():
    with pytest.raises(TruncationError):
        bloch_eigenvalues(prob(0.0, 0.1), 0.1, (10.0, 1.0), n_modes=4)


def test_midband_window_refused():
    with pytest.raises(WindowError):
        asym_midband(1, 1, prob(0.0, 0.1), 0.05)


def test_window_pairs_in_sweep():
    curve = band_sweep(prob(0.0, 0.02), 1, 1, [0.0, 0.2])
    assert sum(1 for p in curve.points if p.tau == 0.0) == 2
    assert sum(1 for p in curve.points if p.tau == 0.2) == 1


def _order(pred, ref_fn):
    errs = [match_pair(pred(e), ref_fn(e)) for e in LADDER]
    return fitted_order(LADDER, errs)


@pytest.mark.parametrize("ks", [0.0, -2.0])
@pytest.mark.parametrize("t", [0.0, 0.05])
def test_center_corrected_order(ks, t):
    base = prob(ks, 0.01)
    lam0 = unperturbed(1, 1, 0.0, ks)
    order = _order(lambda e: asym_center(1, 1, base.with_epsilon(e), t),
                   lambda e: galerkin_pair(base.with_epsilon(e), lam0, e * t))
    assert order >= 2.7


@pytest.mark.parametrize("n", [0, 1])
@pytest.mark.parametrize("t", [0.0, -0.05])
def test_edge_corrected_order(n, t):
    g = (0.6, 1.0, 0.5, 0.3)
    base = prob(0.0, 0.01, g)
    lam0 = math.sqrt((n + 0.5) ** 2)
    order = _order(lambda e: asym_edge(n, 1, base.with_epsilon(e), t),
                   lambda e: galerkin_pair(base.with_epsilon(e), lam0, 0.5 + e * t - 1.0))
    assert order >= 2.7


def test_midband_order():
    base = prob(0.0, 0.01)
    errs = []
    for e in LADDER:
        p = base.with_epsilon(e)
        pred = asym_midband(1, 1, p, 0.3)
        ref = min(bloch_eigenvalues(p, 0.3, (pred, 0.1)), key=lambda z: abs(z - pred))
        errs.append(abs(pred - ref))
    assert fitted_order(LADDER, errs) >= 2.7
