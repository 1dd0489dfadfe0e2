"""Compare printed and re-derived existence verdicts with an oracle count near each threshold.

For every fixture of the scan, counts eigenvalues in the disc of radius 5 eps |rho0| around
lambda0, lists continued-sheet resonances, and compares the count with the number of branches
predicted to exist.
Usage: python scripts/emergence_survey.py [--eps 0.02]
"""
import argparse

from fixture_scan import scan
from pencil_spectra.coefficients import perturbation_coeffs
from pencil_spectra.oracle import certify_absence
from pencil_spectra.problem import threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.02)
    args = ap.parse_args()
    rows = {}
    for p, n, br, pp, pc in scan((1,), args.eps):
        key = (p.potential.params["v0"], p.kappa_star, p.gamma.sine_coeffs)
        rows.setdefault(key, (p, n, []))[2].append((br, pp.exists, pc.exists))
    print("v0 kappa* gamma | printed(+,-) corrected(+,-) | oracle count, resonances, radius fraction")
    agree_p = agree_c = 0
    for (v0, ks, g), (p, n, verdicts) in rows.items():
        r0 = abs(perturbation_coeffs(p.gamma, n, ks).rho0)
        c = certify_absence(p, complex(threshold(n, ks)), 5 * args.eps * r0)
        printed = sum(v[1] == "yes" for v in verdicts)
        corrected = sum(v[2] == "yes" for v in verdicts)
        agree_p += printed == c.winding
        agree_c += corrected == c.winding
        print(v0, ks, list(g), "|", [v[1] for v in verdicts], [v[2] for v in verdicts], "|",
              c.winding, len(c.resonances), f"{c.radius / c.requested_radius:.3g}")
    print(f"count agrees with printed verdicts in {agree_p}/{len(rows)}, with re-derived in {agree_c}/{len(rows)}")


if __name__ == "__main__":
    main()
