"""Perturbation coefficients of the monodromy expansion and of the band bifurcations."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.integrate import quad

from .problem import PERIOD, GammaSpec, eval_gamma, kappa, threshold

_GL_X, _GL_W = np.polynomial.legendre.leggauss(256)
_NODES = PERIOD * (_GL_X + 1) / 2
_WEIGHTS = PERIOD * _GL_W / 2


class QuadratureError(RuntimeError):
    pass


def _sin_over(k, x):
    """sin(k x)/k, analytic at k = 0."""
    return x * np.sinc(k * x / np.pi)


def rho0_kappa(gamma: GammaSpec, k: complex) -> complex:
    """rho0 as a function of kappa: int_0^{2pi} gamma(t) sin(k(2pi - 2t))/(2k) dt."""
    k = complex(k)
    g = eval_gamma(gamma, _NODES)
    return complex(np.sum(_WEIGHTS * g * _sin_over(k, PERIOD - 2 * _NODES)) / 2)


def rho0(gamma: GammaSpec, lam: complex, kappa_star: float) -> complex:
    return rho0_kappa(gamma, kappa(lam, kappa_star))


def drho0_dkappa(gamma: GammaSpec, n: int, kappa_star: float = 0.0) -> complex:
    """d rho0 / d kappa at kappa = |n| (kappa* enters only through the evaluation point)."""
    k = float(abs(n))
    y = PERIOD - 2 * _NODES
    g = eval_gamma(gamma, _NODES)
    integrand = y * np.cos(k * y) / (2 * k) - np.sin(k * y) / (2 * k * k)
    return complex(np.sum(_WEIGHTS * g * integrand))


# --- iterated Volterra integrals --------------------------------------------------

@dataclass(frozen=True)
class JetValues:
    """Entries rho_ij^(j) = values at 2pi of the order-j Volterra iterates."""

    lam: complex
    kappa: complex
    phi: tuple[complex, ...]
    dphi: tuple[complex, ...]
    psi: tuple[complex, ...]
    dpsi: tuple[complex, ...]
    error_estimate: float

    def rho(self, i: int, j: int, order: int) -> complex:
        table = {(1, 1): self.phi, (1, 2): self.psi, (2, 1): self.dphi, (2, 2): self.dpsi}
        return table[(i, j)][order]

    def as_map(self) -> dict:
        return {(i, j, o): self.rho(i, j, o) for i in (1, 2) for j in (1, 2) for o in range(len(self.phi))}

    def monodromy_partial_sum(self, epsilon: float, J: int) -> np.ndarray:
        """Sum_{j<=J} (i eps lam)^j [[rho11, rho12], [rho21, rho22]]^(j)."""
        z = 1j * epsilon * self.lam
        out = np.zeros((2, 2), dtype=complex)
        for j in range(J + 1):
            out += z ** j * np.array([[self.phi[j], self.psi[j]], [self.dphi[j], self.dpsi[j]]])
        return out


def jets(gamma: GammaSpec, lam: complex, kappa_star: float, order: int = 3, degree: int = 160) -> JetValues:
    """Iterated Volterra integrals u_j = int_0^x sin(k(x-t))/k gamma(t) u_{j-1}(t) dt.

    Each level is represented by its Chebyshev interpolant on [0, 2pi] and integrated
    cumulatively, so the nested integrals cost one interpolation per level.
    """
    if order > 4:
        raise ValueError("jets are supported up to order 4")
    k = complex(kappa(lam, kappa_star))
    dom = [0.0, PERIOD]
    xs = PERIOD * (1 - np.cos(np.pi * np.arange(degree + 1) / degree)) / 2
    g = eval_gamma(gamma, xs)
    C = np.cos(k * xs)
    S = _sin_over(k, xs)
    err = 0.0

    def cumint(values):
        nonlocal err
        series = cheb.Chebyshev.fit(xs, values, degree, domain=dom)
        tail = np.max(np.abs(series.coef[-6:])) if np.max(np.abs(series.coef)) > 0 else 0.0
        err = max(err, float(tail))
        return series.integ(lbnd=0.0)(xs)

    out = {}
    for name, u0, du0 in (("phi", C, -k * k * S), ("psi", S, C)):
        vals, ders = [u0[-1]], [du0[-1]]
        u = u0
        for _ in range(order):
            cj = cumint(g * u * C)
            tj = cumint(g * u * S)
            u_new = S * cj - C * tj
            du_new = C * cj + k * k * S * tj
            vals.append(u_new[-1])
            ders.append(du_new[-1])
            u = u_new
        out[name] = (tuple(complex(v) for v in vals), tuple(complex(v) for v in ders))
    if err > 1e-10:
        raise QuadratureError(f"Chebyshev tail {err:.2e} above tolerance; raise degree")
    return JetValues(complex(lam), k, out["phi"][0], out["phi"][1], out["psi"][0], out["psi"][1], err)


# --- double integrals by nested adaptive quadrature -----------------------------

def _nested(outer, inner, tol_inner=1e-11, tol_outer=1e-10):
    def f(x):
        return outer(x) * quad(lambda t: inner(x, t), 0.0, x, epsabs=tol_inner, epsrel=tol_inner, limit=200)[0]
    val, err = quad(f, 0.0, PERIOD, epsabs=tol_outer, epsrel=tol_outer, limit=400)
    return val, err


def rho12_2(gamma: GammaSpec, n: int, tol_inner=1e-11, tol_outer=1e-10) -> complex:
    """-int gamma(x) sin(nx)/n int_0^x gamma(t) sin(nt)/n sin(n(x-t))/n dt dx."""
    n = abs(n)
    gam = lambda x: eval_gamma(gamma, x)
    val, _ = _nested(lambda x: gam(x) * math.sin(n * x) / n,
                     lambda x, t: gam(t) * math.sin(n * t) / n * math.sin(n * (x - t)) / n,
                     tol_inner, tol_outer)
    return complex(-val)


def rho21_2(gamma: GammaSpec, n: int, tol_inner=1e-11, tol_outer=1e-10) -> complex:
    """int gamma(x) cos(nx) int_0^x gamma(t) cos(nt) sin(n(x-t))/n dt dx."""
    n = abs(n)
    gam = lambda x: eval_gamma(gamma, x)
    val, _ = _nested(lambda x: gam(x) * math.cos(n * x),
                     lambda x, t: gam(t) * math.cos(n * t) * math.sin(n * (x - t)) / n,
                     tol_inner, tol_outer)
    return complex(val)


def rho_hat(gamma: GammaSpec, n: int, kappa_star: float, tol_inner=1e-11, tol_outer=1e-10) -> complex:
    """(n^2 - k*) rho0^2 - (n + k*/n) int gamma(x) int_0^x gamma(t)(pi + t - x) sin 2n(t - x) dt dx."""
    if n == 0:
        raise ValueError("n must be nonzero")
    if gamma.is_zero():
        return 0j
    r0 = rho0_kappa(gamma, abs(n))
    gam = lambda x: eval_gamma(gamma, x)
    val, _ = _nested(gam, lambda x, t: gam(t) * (math.pi + t - x) * math.sin(2 * n * (t - x)),
                     tol_inner, tol_outer)
    return complex((n * n - kappa_star) * r0 * r0 - (n + kappa_star / n) * val)


# --- Fourier-space coefficients ---------------------------------------------------

def _gamma_conv(gamma: GammaSpec, f: dict) -> dict:
    """Fourier data of gamma * f, with f given as {k: coefficient of e^{ikx}}."""
    out: dict = {}
    for k, c in f.items():
        for m in range(1, gamma.K + 1):
            g = gamma.coeff(m)
            if g == 0.0 or c == 0:
                continue
            for mm, gm in ((m, g / 2j), (-m, -g / 2j)):
                out[k + mm] = out.get(k + mm, 0) + gm * c
    return out


def _inner(f: dict, h: dict) -> complex:
    """L2(-pi, pi) inner product (f, h)."""
    return PERIOD * sum(c * np.conj(h.get(k, 0)) for k, c in f.items())


def pair_second_order(gamma: GammaSpec, modes: tuple[int, int], tau0: float, n_modes: int = 64) -> np.ndarray:
    """B_pq = sum_{k not in modes} ghat_{p-k} ghat_{k-q} / ((k - tau0)^2 - (p - tau0)^2).

    Second-order coupling of the two resonant modes through the rest of the basis.
    """
    p0 = modes[0]
    e0 = (p0 - tau0) ** 2
    B = np.zeros((2, 2), dtype=complex)
    for a, p in enumerate(modes):
        for b, q in enumerate(modes):
            s = 0j
            for k in range(-n_modes, n_modes + 1):
                if k in modes:
                    continue
                s += gamma.fourier(p - k) * gamma.fourier(k - q) / ((k - tau0) ** 2 - e0)
            B[a, b] = s
    return B


@dataclass(frozen=True)
class AlphaCoeffs:
    alpha0: float
    alpha1: float
    alpha1_pp: float
    alpha1_mm: float
    truncation_change: float


def alpha_coeffs(gamma: GammaSpec, n: int, kappa_star: float = 0.0, n_modes: int = 64) -> AlphaCoeffs:
    """alpha0 = (1/2pi) int gamma sin 2nx; alpha1^(++), alpha1^(--) = (gamma u_pm, psi_pm)."""
    if n < 1:
        raise ValueError("n must be >= 1")

    def at(N):
        s = 1 / (2 * math.sqrt(math.pi))
        psi_p = {n: s, -n: s}                 # cos(nx)/sqrt(pi)
        psi_m = {n: s / 1j, -n: -s / 1j}      # sin(nx)/sqrt(pi)
        comps = []
        for psi in (psi_p, psi_m):
            rhs = _gamma_conv(gamma, psi)
            u = {k: c / (k * k - n * n) for k, c in rhs.items() if abs(k) != n and abs(k) <= N}
            comps.append(_inner(_gamma_conv(gamma, u), psi).real)
        return comps

    pp, mm = at(n_modes)
    pp2, mm2 = at(2 * n_modes)
    change = abs(pp2 + mm2 - pp - mm)
    if change > 1e-8:
        raise QuadratureError(f"alpha1 changed by {change:.2e} on doubling the basis")
    return AlphaCoeffs(gamma.coeff(2 * n) / 2, pp + mm, pp, mm, change)


def edge_alpha(gamma: GammaSpec, n: int) -> float:
    """(1/2pi) int gamma sin((2n+1)x): the coupling of the two modes meeting at |tau| = 1/2."""
    return gamma.coeff(2 * n + 1) / 2


@dataclass
class PerturbationCoeffs:
    n: int
    lambda0: complex
    rho0: complex
    drho0_dkappa: complex
    rho_hat: complex
    rho12_2: complex
    rho21_2: complex
    alpha0: float
    alpha1: float
    alpha1_pp: float
    alpha1_mm: float
    jets: dict = field(default_factory=dict)

    def identity_residuals(self) -> dict:
        j = self.jets
        r0 = self.rho0
        return {
            "trace_rho2": abs(r0 * r0 - j[(1, 1, 2)] - j[(2, 2, 2)]),
            "rho11_2_split": abs(j[(1, 1, 2)] - r0 * r0 / 2),
            "rho22_2_split": abs(j[(2, 2, 2)] - r0 * r0 / 2),
            "trace_rho3": abs(j[(1, 1, 3)] + j[(2, 2, 3)]),
            "rho0_alpha0": abs(r0 + math.pi * self.alpha0 / abs(self.n)),
            "rho12_jet": abs(self.rho12_2 - j[(1, 2, 2)]),
            "rho21_jet": abs(self.rho21_2 - j[(2, 1, 2)]),
        }


def perturbation_coeffs(gamma: GammaSpec, n: int, kappa_star: float, sign: int = 1,
                        with_double_integrals: bool = True) -> PerturbationCoeffs:
    """All threshold coefficients at lambda0 = sign * sqrt(n^2 + kappa*)."""
    if n == 0:
        raise ValueError("n must be nonzero")
    m = abs(n)
    lam0 = threshold(m, kappa_star, sign)
    jv = jets(gamma, lam0, kappa_star, order=3)
    al = alpha_coeffs(gamma, m, kappa_star)
    r0 = rho0_kappa(gamma, m)
    if with_double_integrals:
        r12, r21, rh = rho12_2(gamma, m), rho21_2(gamma, m), rho_hat(gamma, m, kappa_star)
    else:
        r12, r21 = jv.psi[2], jv.dphi[2]
        rh = complex("nan")
    return PerturbationCoeffs(m, lam0, r0, drho0_dkappa(gamma, m, kappa_star), rh, r12, r21,
                              al.alpha0, al.alpha1, al.alpha1_pp, al.alpha1_mm, jv.as_map())
