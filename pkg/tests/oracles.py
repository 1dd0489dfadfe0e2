"""Independent reference computations used to check the package (no package numerics inside)."""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.linalg import eigh_tridiagonal
from scipy.stats import qmc

TWO_PI = 2 * math.pi


def gamma_fn(coeffs):
    def g(x):
        return sum(c * np.sin((k + 1) * np.asarray(x)) for k, c in enumerate(coeffs))
    return g


def sech2(v0, mu=1.0):
    return lambda x: -v0 / np.cosh(mu * np.asarray(x)) ** 2


def ivp_monodromy(coeffs, kappa_star, eps, lam, potential=None, x0=0.0, rtol=1e-12):
    """Monodromy over [x0, x0 + 2pi] by scipy DOP853 on the real 8-dimensional system."""
    g = gamma_fn(coeffs)
    V = potential or (lambda x: 0.0)
    lam = complex(lam)

    def q(x):
        return V(x) + kappa_star + 1j * eps * lam * g(x) - lam * lam

    def rhs(x, y):
        u = y[0:4:2] + 1j * y[1:4:2]
        du = y[4:8:2] + 1j * y[5:8:2]
        ddu = q(x) * u
        out = np.empty(8)
        out[0:4:2], out[1:4:2] = du.real, du.imag
        out[4:8:2], out[5:8:2] = ddu.real, ddu.imag
        return out

    y0 = np.zeros(8)
    y0[0] = 1.0     # u1 = 1
    y0[6] = 1.0     # u2' = 1
    sol = solve_ivp(rhs, (x0, x0 + TWO_PI), y0, method="DOP853", rtol=rtol, atol=rtol)
    y = sol.y[:, -1]
    u = y[0:4:2] + 1j * y[1:4:2]
    du = y[4:8:2] + 1j * y[5:8:2]
    return np.array([[u[0], u[1]], [du[0], du[1]]])


def quad_rho0(coeffs, k):
    """int_0^{2pi} gamma(t) sin(k(2pi - 2t))/(2k) dt by adaptive quadrature (real k)."""
    g = gamma_fn(coeffs)
    return quad(lambda t: g(t) * math.sin(k * (TWO_PI - 2 * t)) / (2 * k), 0, TWO_PI,
                epsabs=1e-13, epsrel=1e-13, limit=400)[0]


def qmc_triangle(coeffs, kernel, m=18):
    """int_0^{2pi} int_0^x gamma(x) gamma(t) kernel(x, t) dt dx by scrambled Sobol on the triangle."""
    g = gamma_fn(coeffs)
    pts = qmc.Sobol(d=2, scramble=True, seed=7).random_base2(m)
    x = TWO_PI * pts[:, 0]
    t = x * pts[:, 1]
    vals = g(x) * g(t) * kernel(x, t) * x
    return TWO_PI * float(np.mean(vals))


def fd_bound_states(V, L=25.0, h=0.01):
    """Negative eigenvalues of -d^2/dx^2 + V on [-L, L] (Dirichlet), Richardson-extrapolated in h."""
    def levels(hh):
        x = np.arange(-L + hh, L, hh)
        d = 2 / hh ** 2 + V(x)
        e = -np.ones(len(x) - 1) / hh ** 2
        w = eigh_tridiagonal(d, e, select="v", select_range=(-1e6, -1e-6), eigvals_only=True)
        return np.sort(w)
    a, b = levels(h), levels(h / 2)
    n = min(len(a), len(b))
    return (4 * b[:n] - a[:n]) / 3


def fd_pencil_residual(V, coeffs, kappa_star, eps, lam, x, psi):
    """Relative residual of -psi'' + (V + kappa* + i eps lam gamma - lam^2) psi on interior grid points."""
    h = x[1] - x[0]
    d2 = (psi[2:] - 2 * psi[1:-1] + psi[:-2]) / h ** 2
    xi = x[1:-1]
    r = -d2 + (V(xi) + kappa_star + 1j * eps * lam * gamma_fn(coeffs)(xi) - lam * lam) * psi[1:-1]
    return float(np.linalg.norm(r) / np.linalg.norm(psi))
