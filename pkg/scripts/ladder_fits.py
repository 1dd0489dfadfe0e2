"""Fitted remainder orders of the band and isolated-eigenvalue asymptotics over an eps ladder.

Usage: python scripts/ladder_fits.py [--ladder 0.04 0.02 0.01]
"""
import argparse

import numpy as np

from pencil_spectra.bands import asym_center, asym_edge, galerkin_pair, match_pair, unperturbed
from pencil_spectra.coefficients import alpha_coeffs
from pencil_spectra.oracle import eigenvalue_defect_order, fitted_order
from pencil_spectra.predictor import isolated_series
from pencil_spectra.problem import GammaSpec, PotentialSpec, ProblemSpec
from pencil_spectra.scattering import discrete_spectrum

WELL = PotentialSpec("sech2_well", {"v0": 2.0, "mu": 1.0})


def band_orders(ladder, gamma=(0.0, 1.0), n=1):
    g = GammaSpec(gamma)
    for ks in (0.0, -2.0):
        base = ProblemSpec(ks, ladder[-1], g, WELL)
        lam0 = unperturbed(n, 1, 0.0, ks)
        lam_e = complex(np.sqrt(complex((n + 0.5) ** 2 + ks)))
        a0 = alpha_coeffs(g, n, ks).alpha0
        for t in (0.0, 0.1 * abs(lam0 * a0)):
            for variant in ("printed", "corrected"):
                c = [match_pair(asym_center(n, 1, base.with_epsilon(e), t, variant),
                                galerkin_pair(base.with_epsilon(e), lam0, e * t)) for e in ladder]
                d = [match_pair(asym_edge(n, 1, base.with_epsilon(e), t, variant),
                                galerkin_pair(base.with_epsilon(e), lam_e, e * t - 0.5)) for e in ladder]
                print(f"kappa*={ks:5.1f} t={t:.4f} {variant:9s} center {fitted_order(ladder, c):5.2f}"
                      f"  edge {fitted_order(ladder, d):5.2f}")


def isolated_orders(ladder, ks=0.5):
    p = ProblemSpec(ks, ladder[-1], GammaSpec((1.0,)), WELL)
    s = isolated_series(p, discrete_spectrum(WELL)[0], 1)
    rep = eigenvalue_defect_order(p, s.partial_sum, ladder, lambda e: 10 * e * e)
    for k in range(1, s.order + 1):
        errs = [abs(z - s.partial_sum(e, k)) for e, z in zip(ladder, rep.oracle)]
        print(f"isolated series to order {k}: fitted order {fitted_order(ladder, errs):5.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ladder", type=float, nargs="+", default=[0.04, 0.02, 0.01])
    args = ap.parse_args()
    band_orders(args.ladder)
    isolated_orders(args.ladder)


if __name__ == "__main__":
    main()
