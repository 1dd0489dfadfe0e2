"""Periodic cell problem: fundamental solutions, monodromy matrix and Floquet multipliers."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ode
from .problem import PERIOD, ProblemSpec, kappa

DELTA_UNI = 1e-8
DEGENERATE_TOL = 1e-12


def cell_coefficient(problem: ProblemSpec, lam: complex, with_potential: bool = False) -> ode.Coefficient:
    """q(x) with u'' = q u for -u'' + (V + kappa* + i eps lam gamma - lam^2) u = 0."""
    lam = complex(lam)
    return ode.Coefficient(
        problem.kappa_star - lam * lam,
        1j * problem.epsilon * lam,
        problem.gamma.array(),
        1.0 if with_potential else 0.0,
        problem.potential.packed() if with_potential else None,
    )


def fundamental_solutions(problem: ProblemSpec, lam: complex, x_end: float, rtol: float = 1e-11):
    """(Phi, Phi', Psi, Psi') at x_end for the periodic equation without V."""
    Y = ode.integrate(cell_coefficient(problem, lam), 0.0, [1, 0, 0, 1], [float(x_end)], rtol, rtol)[0]
    return complex(Y[0]), complex(Y[1]), complex(Y[2]), complex(Y[3])


@dataclass(frozen=True)
class Monodromy:
    A11: complex
    A12: complex
    A21: complex
    A22: complex
    lam: complex
    epsilon: float
    integrator_tolerance: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.A11, self.A12], [self.A21, self.A22]])

    @property
    def trace(self) -> complex:
        return self.A11 + self.A22

    @property
    def det_residual(self) -> float:
        return abs(self.A11 * self.A22 - self.A12 * self.A21 - 1.0)

    def to_json(self) -> dict:
        out = {}
        for name in ("A11", "A12", "A21", "A22"):
            v = getattr(self, name)
            out[name] = {"re": v.real, "im": v.imag}
        out.update(lam={"re": self.lam.real, "im": self.lam.imag}, epsilon=self.epsilon,
                   det_residual=self.det_residual)
        return out


def monodromy(problem: ProblemSpec, lam: complex, rtol: float = 1e-11) -> Monodromy:
    phi, dphi, psi, dpsi = fundamental_solutions(problem, lam, PERIOD, rtol)
    return Monodromy(phi, psi, dphi, dpsi, complex(lam), problem.epsilon, rtol)


def closed_form_monodromy(lam: complex, kappa_star: float) -> np.ndarray:
    """Unperturbed monodromy: [[cos 2pi k, sin(2pi k)/k], [-k sin 2pi k, cos 2pi k]]."""
    k = complex(kappa(lam, kappa_star))
    c = np.cos(2 * np.pi * k)
    s = np.sin(2 * np.pi * k)
    s_over_k = s / k if abs(k) > 1e-8 else 2 * np.pi * (1 - (2 * np.pi * k) ** 2 / 6)
    return np.array([[c, s_over_k], [-k * s, c]])


@dataclass(frozen=True)
class FloquetPair:
    mu_plus: complex
    mu_minus: complex
    z: int
    trace: complex
    degenerate: bool


def floquet_multipliers(M: Monodromy, z: int = 1) -> FloquetPair:
    """mu = (tr +- z sqrt(tr^2 - 4))/2 with the principal root."""
    if z not in (1, -1):
        raise ValueError("branch z must be +1 or -1")
    tr = M.trace
    disc = tr * tr - 4.0
    root = complex(np.sqrt(complex(disc)))
    mp = (tr + z * root) / 2
    # the smaller-magnitude root is formed as 1/larger to avoid cancellation
    if abs(mp) >= 1 or abs(mp) == 0:
        mm = 1.0 / mp if mp != 0 else (tr - z * root) / 2
    else:
        big = (tr - z * root) / 2
        mp, mm = 1.0 / big, big
    return FloquetPair(mp, mm, z, tr, abs(disc) < DEGENERATE_TOL)


@dataclass(frozen=True)
class DecayingDirection:
    multiplier: complex
    eigvec: tuple[complex, complex]
    side: str  # "+inf": multiplier decays to the right; the reciprocal decays to the left

    @property
    def growing(self) -> complex:
        return 1.0 / self.multiplier


def decaying_direction(M: Monodromy, delta: float = DELTA_UNI) -> DecayingDirection | None:
    """Multiplier with |mu| < 1 and eigenvector (-A12, A11 - mu); None inside a band."""
    pair = floquet_multipliers(M, 1)
    mus = sorted((pair.mu_plus, pair.mu_minus), key=abs)
    mu = mus[0]
    if abs(abs(mu) - 1.0) <= delta:
        return None
    return DecayingDirection(mu, (-M.A12, M.A11 - mu), "+inf")


def in_band(M: Monodromy, delta: float = DELTA_UNI) -> bool:
    return decaying_direction(M, delta) is None


def log_multiplier(mu: complex) -> complex:
    return complex(np.log(complex(mu)))


def quasi_momentum(M: Monodromy) -> float:
    """tau with mu = exp(2 pi i tau) for an in-band multiplier, in [-1/2, 1/2)."""
    mu = floquet_multipliers(M).mu_plus
    t = math.atan2(mu.imag, mu.real) / (2 * math.pi)
    return ((t + 0.5) % 1.0) - 0.5
