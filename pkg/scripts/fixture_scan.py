"""Scan (V, kappa*, gamma, n) for threshold problems meeting each existence condition.

Prints one row per (problem, branch) with the printed and corrected verdicts.
Usage: python scripts/fixture_scan.py [--eps 0.02] [--n 1 2]
"""
import argparse
import itertools

from pencil_spectra.predictor import emergent_prediction, threshold_context
from pencil_spectra.problem import GammaSpec, PotentialSpec, ProblemSpec
from pencil_spectra.scattering import PreconditionError

DEPTHS = (0.5, 1.5, 3.0)
KAPPAS = (-2.0, -0.5, 0.0, 1.0)
GAMMAS = ((0.0, 1.0), (1.0, 0.5), (0.0, 1.0, 0.3))


def scan(ns=(1,), eps=0.02):
    for v0, ks, g, n in itertools.product(DEPTHS, KAPPAS, GAMMAS, ns):
        p = ProblemSpec(ks, eps, GammaSpec(g), PotentialSpec("sech2_well", {"v0": v0, "mu": 1.0}))
        try:
            ctx = threshold_context(p, n)
        except PreconditionError:
            continue
        for br in (1, -1):
            pp = emergent_prediction(p, n, 1, br, "printed", ctx)
            pc = emergent_prediction(p, n, 1, br, "corrected", ctx)
            yield p, n, br, pp, pc


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.02)
    ap.add_argument("--n", type=int, nargs="+", default=[1])
    args = ap.parse_args()
    print("v0 kappa* gamma n branch regime printed_id printed corrected")
    for p, n, br, pp, pc in scan(args.n, args.eps):
        print(p.potential.params["v0"], p.kappa_star, list(p.gamma.sine_coeffs), n, br, pp.regime,
              pp.condition_id, pp.exists, pc.exists)


if __name__ == "__main__":
    main()
