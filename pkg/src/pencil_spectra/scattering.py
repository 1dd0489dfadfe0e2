"""Jost solutions, scattering data and threshold constants of -Y'' + V Y - n^2 Y = 0, plus bound states."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import ode
from .coefficients import PerturbationCoeffs
from .problem import PERIOD, PotentialSpec, ProblemSpec, eval_gamma, eval_potential

DELTA_REG = 1e-8
UNITARITY_REJECT = 1e-6


class ScatteringError(RuntimeError):
    pass


class PreconditionError(ValueError):
    """A standing assumption of the threshold analysis fails for this input."""


def _jost_coefficient(V: PotentialSpec, n: int) -> ode.Coefficient:
    return ode.Coefficient(-float(n * n), 0.0, None, 1.0, V.packed())


@dataclass(frozen=True)
class JostData:
    n: int
    L: float
    x: np.ndarray
    Y1: np.ndarray
    dY1: np.ndarray
    Y2: np.ndarray
    dY2: np.ndarray

    def wronskian(self) -> np.ndarray:
        """W[Y2, Y1] = Y2 Y1' - Y2' Y1 on the grid."""
        return self.Y2 * self.dY1 - self.dY2 * self.Y1


def jost_solutions(V: PotentialSpec, n: int, L: float | None = None, num: int = 2001) -> JostData:
    """Y1 integrated leftward from +L with plane-wave data, Y2 rightward from -L."""
    if n < 1:
        raise ValueError("n must be >= 1")
    L = V.support_length if L is None else float(L)
    x = np.linspace(-L, L, num)
    c = _jost_coefficient(V, n)
    e = np.exp(1j * n * L)
    y1 = ode.integrate(c, L, [e, 1j * n * e], x[::-1])[::-1]
    y2 = ode.integrate(c, -L, [e, -1j * n * e], x)
    return JostData(n, L, x, y1[:, 0], y1[:, 1], y2[:, 0], y2[:, 1])


def scattering_coefficients(jost: JostData, n: int | None = None) -> tuple[complex, complex, float]:
    """(a, b, |a|^2 - |b|^2 - 1) from Y2 = a e^{-inx} + b e^{inx} matched at +L."""
    n = jost.n if n is None else n
    L = jost.L
    M = np.array([[np.exp(-1j * n * L), np.exp(1j * n * L)],
                  [-1j * n * np.exp(-1j * n * L), 1j * n * np.exp(1j * n * L)]])
    a, b = np.linalg.solve(M, np.array([jost.Y2[-1], jost.dY2[-1]]))
    res = abs(abs(a) ** 2 - abs(b) ** 2 - 1.0)
    if res > UNITARITY_REJECT:
        raise ScatteringError(f"unitarity residual {res:.2e}; enlarge L or tighten the integrator")
    return complex(a), complex(b), float(res)


@dataclass
class ScatteringData:
    n: int
    a: complex
    b: complex
    unitarity_residual: float
    regime: str = "generic"
    zeta_plus: float = math.nan
    zeta_minus: float = math.nan
    upsilon_plus: complex = complex("nan")
    upsilon_minus: complex = complex("nan")
    zhat_plus: complex = complex("nan")
    zhat_minus: complex = complex("nan")
    s1_plus: complex = complex("nan")
    s1_minus: complex = complex("nan")
    alpha_plus: float = math.nan
    alpha_minus: float = math.nan
    xi_hat_plus: complex = complex("nan")
    xi_hat_minus: complex = complex("nan")
    s2: complex = complex("nan")
    X_samples: dict = field(default_factory=dict)
    # re-derived constants (see module docs of eigen_predictor)
    alpha_tail_plus: float = math.nan
    alpha_tail_minus: float = math.nan
    upsilon_corrected_plus: complex = complex("nan")
    upsilon_corrected_minus: complex = complex("nan")
    s1_corrected_plus: complex = complex("nan")
    s1_corrected_minus: complex = complex("nan")
    zhat_corrected_plus: complex = complex("nan")
    zhat_corrected_minus: complex = complex("nan")
    ix_plus: complex = complex("nan")
    ix_minus: complex = complex("nan")
    ix_converged: bool = True

    @property
    def a_r(self): return self.a.real
    @property
    def a_i(self): return self.a.imag
    @property
    def b_r(self): return self.b.real
    @property
    def b_i(self): return self.b.imag

    @property
    def theta(self) -> float:
        return math.atan2(self.a.imag, self.a.real) % (2 * math.pi)

    def zeta(self, branch: int) -> float:
        return self.zeta_plus if branch > 0 else self.zeta_minus

    def get(self, name: str, branch: int):
        return getattr(self, f"{name}_{'plus' if branch > 0 else 'minus'}")

    def set(self, name: str, branch: int, value):
        setattr(self, f"{name}_{'plus' if branch > 0 else 'minus'}", value)

    def W(self, z: float) -> float:
        return abs(self.a) * math.cos(2 * z + self.theta) - self.b_r

    def dW(self, z: float) -> float:
        return -abs(self.a) * math.sin(2 * z + self.theta)


def scattering_data(V: PotentialSpec, n: int, L: float | None = None) -> tuple[ScatteringData, JostData]:
    """Partial scattering data (a, b, zeta, regime) together with the Jost grid."""
    jd = jost_solutions(V, n, L)
    a, b, res = scattering_coefficients(jd, n)
    sd = ScatteringData(n, a, b, res)
    th = sd.theta
    beta = math.acos(max(-1.0, min(1.0, b.real / abs(a))))
    sd.zeta_plus = -0.5 * (th + beta)
    sd.zeta_minus = -0.5 * (th - beta)
    gap = abs(abs(a.imag) - abs(b.real))
    if gap < DELTA_REG:
        sd.regime = "degenerate_plus" if abs(a.imag + b.real) <= abs(a.imag - b.real) else "degenerate_minus"
    for br in (1, -1):
        z = sd.zeta(br)
        sd.X_samples[br] = 2 * np.real(np.exp(1j * z) * jd.Y1)
    sd.X_samples["x"] = jd.x
    return sd, jd


def tail_amplitude(sd: ScatteringData, jd: JostData, branch: int) -> tuple[float, float]:
    """Fit X = 2 alpha sin(nx - zeta) + 2 beta cos(nx - zeta) over the first period of the grid."""
    n, z = sd.n, sd.zeta(branch)
    x = jd.x
    mask = x <= x[0] + PERIOD
    X = sd.X_samples[branch][mask]
    A = np.column_stack([2 * np.sin(n * x[mask] - z), 2 * np.cos(n * x[mask] - z)])
    (alpha, beta), *_ = np.linalg.lstsq(A, X, rcond=None)
    return float(alpha), float(beta)


# --- limit integrals ----------------------------------------------------------------

_GLX, _GLW = np.polynomial.legendre.leggauss(12)
_PANELS_PER_PERIOD = 32


def _period_nodes(N: int):
    edges = np.linspace(-PERIOD * N, PERIOD * N, 2 * N * _PANELS_PER_PERIOD + 1)
    mid = (edges[:-1] + edges[1:]) / 2
    half = (edges[1:] - edges[:-1]) / 2
    xs = (mid[:, None] + half[:, None] * _GLX[None, :]).ravel()
    ws = (half[:, None] * _GLW[None, :]).ravel()
    return xs, ws


def limit_integral(V: PotentialSpec, gamma, n: int, zeta: float, shift: float,
                   tol: float = 1e-8, n_max: int = 256) -> tuple[complex, bool, list]:
    """lim_N int_{-2piN}^{2piN} (gamma - shift) X^2, X = 2 Re(e^{i zeta} Y1), over N = 1, 2, 4, ..."""
    c = _jost_coefficient(V, n)
    N_start = max(1, math.ceil(V.support_length / PERIOD))
    N = N_start
    history = []
    while True:
        xs, ws = _period_nodes(N)
        L = PERIOD * N
        e = np.exp(1j * n * L)
        order = np.argsort(-xs)
        Y = np.empty(xs.size, complex)
        Y[order] = ode.integrate(c, L, [e, 1j * n * e], xs[order])[:, 0]
        X = 2 * np.real(np.exp(1j * zeta) * Y)
        val = complex(np.sum(ws * (eval_gamma(gamma, xs) - shift) * X ** 2))
        history.append((N, val))
        if len(history) >= 2 and abs(history[-1][1] - history[-2][1]) < tol * max(1.0, abs(val)):
            return val, True, history
        if N >= n_max:
            # Richardson on the last three values (geometric doubling)
            if len(history) >= 3:
                v0, v1, v2 = (h[1] for h in history[-3:])
                den = v2 - 2 * v1 + v0
                if abs(den) > 0:
                    return v2 - (v2 - v1) ** 2 / den, False, history
            return val, False, history
        N *= 2


# --- threshold constants --------------------------------------------------------------

def _wedge(p, q):
    return p[0] * q[1] - p[1] * q[0]


def second_order_matrix(coeffs: PerturbationCoeffs, zeta: float) -> np.ndarray:
    """O(eps^2) block of the monodromy along the threshold curve kappa - n = i eps lam0 rho0 sin(2 zeta)/(2pi)."""
    n, lam0, r0 = coeffs.n, coeffs.lambda0, coeffs.rho0
    s = math.sin(2 * zeta)
    d = 1j * lam0 * r0 * s / PERIOD
    A0pp = np.array([[-4 * math.pi ** 2, -4 * math.pi / n ** 2], [-4 * math.pi, -4 * math.pi ** 2]])
    diag = np.diag([1.0, -1.0])
    A2 = np.array([[r0 * r0 / 2, coeffs.rho12_2], [coeffs.rho21_2, r0 * r0 / 2]])
    return (d * d / 2 * A0pp + 1j * n * d / lam0 * r0 * diag
            + 1j * lam0 * d * coeffs.drho0_dkappa * diag - lam0 ** 2 * A2)


def threshold_constants(sd: ScatteringData, coeffs: PerturbationCoeffs, problem: ProblemSpec,
                        jd: JostData | None = None) -> ScatteringData:
    """Fill the printed constants (Upsilon, alpha, S1, zhat or xi_hat, S2) and the re-derived ones."""
    n = sd.n
    if coeffs.n != n:
        raise ValueError("coefficients computed for a different n")
    lam0, r0 = coeffs.lambda0, coeffs.rho0
    if abs(r0) < 1e-12:
        raise PreconditionError("rho0(lambda0) = 0")
    if abs(lam0) == 0:
        raise PreconditionError("lambda0 = 0")
    V, gamma = problem.potential, problem.gamma
    A, th = abs(sd.a), sd.theta
    bi = sd.b_i
    rh, dr = coeffs.rho_hat, coeffs.drho0_dkappa
    if jd is None:
        jd = jost_solutions(V, n)

    if sd.regime != "generic":
        if abs(bi) < 1e-12:
            raise PreconditionError("degenerate regime requires b_i != 0")
        sd.s2 = -1 / (2 * math.pi * n * lam0 * r0) * (
            (n * n + lam0 ** 2) * r0 ** 2 + n * lam0 ** 2 * r0 * dr - 2 * math.pi * n * n * lam0 ** 2 * coeffs.rho12_2)
        for br in (1, -1):
            z = sd.zeta(br)
            ix, ok, _ = limit_integral(V, gamma, n, z, n * r0 / math.pi)
            sd.ix_converged &= ok
            sd.set("ix", br, ix)
            q = sd.a_r + br * bi
            sd.set("xi_hat", br, -q / (4 * n * bi) * (lam0 * ix - 4 * n * (1 + q * q) * sd.s2))
            sd.set("alpha_tail", br, tail_amplitude(sd, jd, br)[0])
        return sd

    for br in (1, -1):
        z = sd.zeta(br)
        s, c = math.sin(2 * z), math.cos(2 * z)
        sw = math.sin(2 * z + th)
        ix, ok, _ = limit_integral(V, gamma, n, z, n * r0 * s / math.pi)
        sd.ix_converged &= ok
        sd.set("ix", br, ix)

        # printed block
        al = A * math.sin(2 * z - th) + bi
        ups = (A * math.sin(z + th) + bi) / (4 * n * A * sw)
        s1 = 1 / (math.pi * n * lam0 * r0 * c ** 2) * (
            al * lam0 * rh / math.pi * s
            - lam0 ** 2 * r0 ** 2 * (al ** 2 - 1) * s ** 2 * c
            - 2 * n * r0 * (n * r0 + lam0 ** 2 * dr) * (al + (al ** 2 + 1) / 2 * s) * s
            - 2 * math.pi * n * n * lam0 ** 2 * coeffs.rho12_2 * (al * math.cos(z) + math.sin(z)) ** 2
            - 2 * math.pi * lam0 ** 2 * coeffs.rho21_2 * (al * math.sin(z) + math.cos(z)) ** 2)
        sd.set("alpha", br, al)
        sd.set("upsilon", br, complex(ups))
        sd.set("s1", br, complex(s1))
        sd.set("zhat", br, complex(1j * lam0 * ups * ix + 1j * ups * s1))

        # re-derived block
        alt = bi - A * sw
        B2 = second_order_matrix(coeffs, z)
        vR = np.array([math.cos(z), -n * math.sin(z)])
        vL = np.array([-math.sin(z), n * math.cos(z)])
        wr, wl = _wedge(vR, B2 @ vR), _wedge(vL, B2 @ vL)
        ups_c = -1 / (8 * n * alt * A * sw)
        s1_c = 2 * (wr + alt * alt * wl) / (lam0 * r0 * c)
        sd.set("alpha_tail", br, tail_amplitude(sd, jd, br)[0])
        sd.set("upsilon_corrected", br, complex(ups_c))
        sd.set("s1_corrected", br, complex(s1_c))
        sd.set("zhat_corrected", br, complex(1j * lam0 * ups_c * ix + 1j * ups_c * s1_c))
    return sd


def monodromy_multiplier_expansion(sd: ScatteringData, coeffs: PerturbationCoeffs, branch: int,
                                   zhat: complex) -> tuple[complex, complex]:
    """(m1, m2) with the right-decaying multiplier 1 + eps m1 + eps^2 m2 + O(eps^3) along the branch."""
    z = sd.zeta(branch)
    lam0, r0, n = coeffs.lambda0, coeffs.rho0, coeffs.n
    s, c = math.sin(2 * z), math.cos(2 * z)
    B2 = second_order_matrix(coeffs, z)
    vR = np.array([math.cos(z), -n * math.sin(z)])
    vL = np.array([-math.sin(z), n * math.cos(z)])
    beta2 = _wedge(vL, B2 @ vR) / _wedge(vL, vR)
    return complex(1j * lam0 * r0 * c), complex(2j * lam0 * r0 * zhat * s + beta2)


# --- bound states ----------------------------------------------------------------------

@dataclass
class DiscreteMode:
    index: int
    kappa_j: float
    x: np.ndarray
    psi: np.ndarray
    parity: str
    nodes: int

    def spline(self) -> CubicSpline:
        return CubicSpline(self.x, self.psi)


def _shoot(V: PotentialSpec, kap: float, L: float):
    s = math.sqrt(-kap)
    c = ode.Coefficient(-kap, 0.0, None, 1.0, V.packed())
    ur = ode.integrate(c, L, [1.0, -s], [0.0])[0]
    ul = ode.integrate(c, -L, [1.0, s], [0.0])[0]
    return ul, ur


def _mismatch(V: PotentialSpec, kap: float, L: float) -> float:
    ul, ur = _shoot(V, kap, L)
    w = (ul[0] * ur[1] - ul[1] * ur[0]).real
    return w / (np.linalg.norm(ul) * np.linalg.norm(ur))


def _mode(V: PotentialSpec, kap: float, L: float, index: int, num: int) -> DiscreteMode:
    s = math.sqrt(-kap)
    c = ode.Coefficient(-kap, 0.0, None, 1.0, V.packed())
    x = np.linspace(-L, L, num)
    right = x[x >= 0][::-1]
    left = x[x <= 0]
    yr = ode.integrate(c, L, [1.0, -s], right)[::-1, 0].real
    yl = ode.integrate(c, -L, [1.0, s], left)[:, 0].real
    scale = yr[0] / yl[-1] if abs(yl[-1]) > 1e-300 else 1.0
    if abs(yl[-1]) < 1e-8 * np.max(np.abs(yl)):
        # odd mode: match derivatives instead of values
        dr = ode.integrate(c, L, [1.0, -s], [0.0])[0, 1].real
        dl = ode.integrate(c, -L, [1.0, s], [0.0])[0, 1].real
        scale = dr / dl
    psi = np.concatenate([yl[:-1] * scale, yr])
    norm = math.sqrt(np.trapezoid(psi ** 2, x))
    psi = psi / norm
    if psi[np.argmax(np.abs(psi))] < 0:
        psi = -psi
    nodes = int(np.sum(np.diff(np.sign(psi[np.abs(psi) > 1e-10 * np.max(np.abs(psi))])) != 0))
    overlap = float(np.trapezoid(psi * psi[::-1], x))
    parity = "even" if abs(overlap - 1) < 1e-6 else "odd" if abs(overlap + 1) < 1e-6 else "none"
    return DiscreteMode(index, kap, x, psi, parity, nodes)


def discrete_spectrum(V: PotentialSpec, num: int = 4001, scan: int = 400) -> list[DiscreteMode]:
    """Bound states below zero by shooting from +-L with exact exponential tails."""
    vmin = V.minimum()
    if vmin >= 0:
        return []
    L = V.support_length
    smax = math.sqrt(-vmin)
    while True:
        ss = np.linspace(smax, 1e-5, scan)
        ks = -ss ** 2
        vals = np.array([_mismatch(V, k, L) for k in ks])
        roots = []
        for i in range(len(ks) - 1):
            if vals[i] == 0:
                roots.append(ks[i])
            elif vals[i] * vals[i + 1] < 0:
                roots.append(brentq(lambda k: _mismatch(V, k, L), ks[i], ks[i + 1], xtol=1e-15, rtol=1e-15))
        modes = [_mode(V, k, L, j, num) for j, k in enumerate(roots)]
        if all(m.nodes == j for j, m in enumerate(modes)) or scan > 6400:
            return modes
        scan *= 2
