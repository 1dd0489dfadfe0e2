"""Bloch bands of the pencil by Fourier-Galerkin companion linearization, plus band asymptotics.

Basis e^{ikx}, |k| <= n_modes.  The cell operator at quasimomentum tau acts as
D_k = (k - tau)^2 + kappa*, so the unperturbed bands are +-sqrt((n - tau)^2 + kappa*).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .coefficients import alpha_coeffs, edge_alpha, pair_second_order
from .problem import GammaSpec, ProblemSpec, sup_gamma

VARIANTS = ("printed", "corrected")


class TruncationError(ValueError):
    """Requested window reaches the edge of the Fourier basis."""


class WindowError(ValueError):
    """Asymptotic formula requested outside its validity window."""


def galerkin_matrices(gamma: GammaSpec, kappa_star: float, tau: float, n_modes: int):
    ks = np.arange(-n_modes, n_modes + 1)
    D = np.diag((ks - tau) ** 2 + kappa_star).astype(complex)
    diff = ks[:, None] - ks[None, :]
    G = np.zeros_like(D)
    for m in range(1, gamma.K + 1):
        g = gamma.coeff(m)
        if g:
            G[diff == m] = g / 2j
            G[diff == -m] = -g / 2j
    return ks, D, G


def _required_modes(center: complex, radius: float, kappa_star: float, K: int) -> int:
    k_max = math.ceil(math.sqrt((abs(center) + radius) ** 2 + abs(kappa_star))) + 1
    return 2 * max(k_max, K) + 8


def bloch_eigenvalues(problem: ProblemSpec, tau: float, window: tuple[complex, float],
                      n_modes: int | None = None, dedupe: bool = True) -> list[complex]:
    """Eigenvalues of D + i eps lam G - lam^2 inside the disc window = (center, radius).

    Values closer than 1e-10 are merged unless ``dedupe`` is False (multiplicities kept).
    """
    center, radius = complex(window[0]), float(window[1])
    need = _required_modes(center, radius, problem.kappa_star, problem.gamma.K)
    if n_modes is None:
        n_modes = need
    elif n_modes < need:
        raise TruncationError(f"window needs n_modes >= {need}, got {n_modes}")
    _, D, G = galerkin_matrices(problem.gamma, problem.kappa_star, tau, n_modes)
    N = D.shape[0]
    comp = np.block([[np.zeros((N, N)), np.eye(N)], [D, 1j * problem.epsilon * G]])
    ev = sla.eigvals(comp, overwrite_a=True, check_finite=False)
    ev = ev[np.abs(ev - center) <= radius]
    ev = sorted(ev, key=lambda z: (round(z.real, 9), z.imag))
    out: list[complex] = []
    for z in ev:
        if not dedupe or not any(abs(z - w) < 1e-10 for w in out):
            out.append(complex(z))
    return out


def unperturbed(n: int, sign: int, tau: float, kappa_star: float) -> complex:
    return sign * complex(np.sqrt(complex((n - tau) ** 2 + kappa_star)))


@dataclass(frozen=True)
class BandPoint:
    n: int
    tau: float
    lam: complex
    source: str
    ambiguous: bool = False


@dataclass
class BandCurve:
    n: int
    sign: int
    epsilon: float
    points: list[BandPoint] = field(default_factory=list)

    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])


def default_window_constant(problem: ProblemSpec) -> float:
    return 4.0 * sup_gamma(problem.gamma)


def band_sweep(problem: ProblemSpec, n: int, sign: int, tau_grid, C: float | None = None,
               n_modes: int | None = None) -> BandCurve:
    """Track the band continuing sign*sqrt((n - tau)^2 + kappa*); both pair members in bifurcation windows."""
    eps = problem.epsilon
    if C is None:
        C = default_window_constant(problem)
    curve = BandCurve(n, sign, eps)
    sg = sup_gamma(problem.gamma)
    for tau in tau_grid:
        tau = float(tau)
        if not -0.5 <= tau < 0.5:
            raise ValueError("tau grid must lie in [-1/2, 1/2)")
        seed = unperturbed(n, sign, tau, problem.kappa_star)
        radius = max(1e-6, 4 * eps * sg * (abs(seed) + 1) + 4 * eps * sg)
        cands = bloch_eigenvalues(problem, tau, (seed, radius), n_modes)
        if not cands:
            continue
        cands.sort(key=lambda z: abs(z - seed))
        paired = eps > 0 and (abs(tau) < C * eps or abs(tau) > 0.5 - C * eps)
        take = cands[:2] if paired else cands[:1]
        ambiguous = (not paired and len(cands) > 1
                     and abs(abs(cands[1] - seed) - abs(cands[0] - seed)) < 1e-12 * max(1, abs(seed)))
        for z in sorted(take, key=lambda z: z.imag):
            curve.points.append(BandPoint(n, tau, z, "galerkin", ambiguous))
    return curve


# --- asymptotics ------------------------------------------------------------------

def midband_coupling(gamma: GammaSpec, n: int, tau: float, n_modes: int = 64) -> complex:
    """(gamma psi1, psi0) with psi0 = e^{inx}/sqrt(2pi) and psi1 the orthogonal corrector."""
    e0 = (n - tau) ** 2
    s = 0.0
    for m in range(-gamma.K, gamma.K + 1):
        if m == 0:
            continue
        g = gamma.coeff(abs(m))
        if g:
            s += (g * g / 4) / ((n + m - tau) ** 2 - e0)
    return complex(-s)


def asym_midband(n: int, sign: int, problem: ProblemSpec, tau: float, C: float | None = None) -> complex:
    """lambda0 - eps^2 lambda0 (gamma psi1, psi0)/2 away from the bifurcation windows."""
    eps = problem.epsilon
    if C is None:
        C = default_window_constant(problem)
    if not (C * eps <= abs(tau) <= 0.5 - C * eps):
        raise WindowError("tau inside a bifurcation window")
    lam0 = unperturbed(n, sign, tau, problem.kappa_star)
    return lam0 - eps ** 2 * lam0 * midband_coupling(problem.gamma, n, tau) / 2


def _check_variant(variant: str):
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")


def asym_center(n: int, sign: int, problem: ProblemSpec, t: float,
                variant: str = "corrected") -> tuple[complex, complex]:
    """Pair bifurcating from lambda0 = sign*sqrt(n^2 + kappa*) at tau = eps*t.

    ``printed`` evaluates the published closed form as written; ``corrected`` uses the
    re-derived coefficients (leading splitting i eps/(2 lambda0) and the matching eps^2 term),
    which reproduce the Galerkin pair with an O(eps^3) remainder.
    """
    _check_variant(variant)
    n = abs(n)
    if n < 1:
        raise ValueError("n must be nonzero")
    ks, eps = problem.kappa_star, problem.epsilon
    lam0 = unperturbed(n, sign, 0.0, ks)
    if abs(lam0) == 0:
        raise WindowError("lambda0 = 0")
    al = alpha_coeffs(problem.gamma, n, ks)
    a0, a1 = al.alpha0, al.alpha1
    root = np.sqrt(complex(lam0 ** 2 * a0 ** 2 - 4 * t * t * n * n))
    if variant == "printed":
        first = 1j * eps / (4 * lam0) * root
        second = eps ** 2 / (4 * lam0) * ((2 - n * n / (2 * lam0 ** 2)) * t * t - 7 * a0 ** 2 / 8 + lam0 ** 2 * a1)
    else:
        first = 1j * eps / (2 * lam0) * root
        second = eps ** 2 / (4 * lam0) * ((2 - 2 * n * n / lam0 ** 2) * t * t - a0 ** 2 / 2 + lam0 ** 2 * a1)
    return complex(lam0 + first + second), complex(lam0 - first + second)


def edge_second_order(gamma: GammaSpec, n: int) -> float:
    """Trace of the second-order coupling for the mode pair (-n, n+1) at tau = 1/2."""
    B = pair_second_order(gamma, (-n, n + 1), 0.5)
    return float((B[0, 0] + B[1, 1]).real)


def asym_edge(n: int, sign: int, problem: ProblemSpec, t: float,
              variant: str = "corrected") -> tuple[complex, complex]:
    """Pair at |tau| = 1/2 + eps*t bifurcating from lambda0 = sign*sqrt((n + 1/2)^2 + kappa*)."""
    _check_variant(variant)
    if n < 0:
        raise ValueError("n must be >= 0")
    ks, eps = problem.kappa_star, problem.epsilon
    lam0 = sign * complex(np.sqrt(complex((n + 0.5) ** 2 + ks)))
    if abs(lam0) == 0:
        raise WindowError("lambda0 = 0")
    g = problem.gamma
    if variant == "printed":
        a = g.coeff(2 * n + 2) / 2
        root = np.sqrt(complex((4 * n + 2) ** 2 * t * t + lam0 ** 2 * a * a))
        base = lam0 - eps * t / (2 * lam0)
        half = eps / (4 * lam0) * root
        return complex(base + half), complex(base - half)
    a = edge_alpha(g, n)
    a1 = edge_second_order(g, n)
    m = 2 * n + 1
    root = np.sqrt(complex(m * m * t * t - lam0 ** 2 * a * a))
    half = eps / (2 * lam0) * root
    second = eps ** 2 / (4 * lam0) * ((2 - m * m / (2 * lam0 ** 2)) * t * t - a * a / 2 + lam0 ** 2 * a1)
    return complex(lam0 + half + second), complex(lam0 - half + second)


def galerkin_pair(problem: ProblemSpec, lam0: complex, tau: float, n_modes: int | None = None):
    """The two Galerkin eigenvalues nearest lam0."""
    r = max(0.5, 10 * problem.epsilon * (sup_gamma(problem.gamma) + 1))
    cands = bloch_eigenvalues(problem, tau, (lam0, r), n_modes, dedupe=False)
    cands.sort(key=lambda z: abs(z - lam0))
    return cands[:2]


def match_pair(pred, ref) -> float:
    """Max error under the better of the two pairings."""
    p0, p1 = pred
    r0, r1 = ref
    return min(max(abs(p0 - r0), abs(p1 - r1)), max(abs(p0 - r1), abs(p1 - r0)))
