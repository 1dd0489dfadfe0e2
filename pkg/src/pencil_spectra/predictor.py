"""Asymptotic predictors: isolated-eigenvalue series, the zero mode, emergent threshold eigenvalues, enclosure."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import PerturbationCoeffs, perturbation_coeffs
from .problem import ProblemSpec, eval_gamma, eval_potential, sup_gamma, threshold
from .scattering import (DiscreteMode, PreconditionError, ScatteringData, monodromy_multiplier_expansion,
                         scattering_data, threshold_constants)

INDETERMINATE = 1e-10
VARIANTS = ("printed", "corrected")


# --- spectral discretization of H = -d^2/dx^2 + V on a periodic box ---------------------

@dataclass
class SpectralBox:
    x: np.ndarray
    h: float
    energies: np.ndarray
    vectors: np.ndarray  # columns normalized with sum(v^2) h = 1

    def inner(self, f, g) -> complex:
        """Bilinear form int f g dx (no conjugation)."""
        return complex(np.sum(f * g) * self.h)


def spectral_box(problem: ProblemSpec, kappa_j: float, points: int = 1024) -> SpectralBox:
    L = max(problem.support_length, 36.0 / math.sqrt(abs(kappa_j)))
    h = 2 * L / points
    x = -L + h * np.arange(points)
    k = 2 * np.pi * np.fft.fftfreq(points, d=h)
    # -d^2/dx^2 as a dense matrix via the FFT of the identity
    lap = np.real(np.fft.ifft(k[:, None] ** 2 * np.fft.fft(np.eye(points), axis=0), axis=0))
    H = lap + np.diag(eval_potential(problem.potential, x))
    H = (H + H.T) / 2
    e, Q = np.linalg.eigh(H)
    return SpectralBox(x, h, e, Q / math.sqrt(h))


class ReducedResolvent:
    """(H - kappa_j)^{-1} on the complement of Psi_j."""

    def __init__(self, box: SpectralBox, j: int):
        self.box, self.j = box, j
        d = box.energies - box.energies[j]
        d[j] = np.inf
        self.inv = 1.0 / d

    def __call__(self, f):
        Q, h = self.box.vectors, self.box.h
        c = (Q.T @ f) * h
        return Q @ (c * self.inv)


# --- isolated eigenvalues ---------------------------------------------------------------

@dataclass
class IsolatedSeries:
    mode: DiscreteMode
    sign: int
    lambda0: complex
    Lambdas: list[complex]          # Lambdas[k] is the eps^k coefficient, Lambdas[0] = lambda0
    correctors: list[np.ndarray] = field(repr=False)
    x: np.ndarray = field(repr=False)
    zero_case: bool
    kappa_spectral: float
    solvability_residuals: list[float] = field(default_factory=list)

    @property
    def order(self) -> int:
        return len(self.Lambdas) - 1

    def partial_sum(self, eps: float, order: int | None = None) -> complex:
        order = self.order if order is None else order
        return complex(sum(self.Lambdas[k] * eps ** k for k in range(order + 1)))


def _locate_mode(box: SpectralBox, mode: DiscreteMode) -> int:
    j = int(np.argmin(np.abs(box.energies - mode.kappa_j)))
    if abs(box.energies[j] - mode.kappa_j) > 1e-6:
        raise RuntimeError("spectral box does not reproduce the bound state")
    return j


def _series(problem: ProblemSpec, mode: DiscreteMode, sign: int, order: int, lam0: complex,
            points: int = 1024) -> IsolatedSeries:
    box = spectral_box(problem, mode.kappa_j, points)
    j = _locate_mode(box, mode)
    others = np.delete(box.energies, j)
    if np.min(np.abs(others - box.energies[j])) < 1e-6:
        raise PreconditionError("another eigenvalue lies within 1e-6 of kappa_j")
    Psi = box.vectors[:, j].copy()
    if Psi[np.argmax(np.abs(Psi))] < 0:
        Psi = -Psi
    g = eval_gamma(problem.gamma, box.x)
    R = ReducedResolvent(box, j)
    zero = abs(lam0) == 0
    Lam = [complex(lam0)]
    psi = [Psi.astype(complex)]

    def c(l):
        # coefficient of eps^l in lambda^2 - lambda0^2; the 2*Lam_0*Lam_l term drops when Lam_0 = 0
        lo = 1 if zero else 0
        return sum(Lam[m] * Lam[l - m] for m in range(lo, l + 1 - lo))

    def forcing(k):
        # right side of (H - kappa_j) psi_k = sum_l c_l psi_{k-l} - i sum_m Lam_m gamma psi_{k-1-m}
        f = sum(c(l) * psi[k - l] for l in range(1, k + 1)) if k >= 1 else 0
        f = f - 1j * sum(Lam[m] * g * psi[k - 1 - m] for m in range(k))
        return f

    residuals = []
    gpp = box.inner(g * Psi, Psi)
    if not zero:
        for k in range(1, order + 1):
            s = 1j * sum(Lam[m] * box.inner(g * psi[k - 1 - m], Psi) for m in range(k))
            s -= sum(Lam[m] * Lam[k - m] for m in range(1, k))
            Lam.append(s / (2 * lam0))
            f = forcing(k)
            residuals.append(abs(box.inner(f, Psi)))
            psi.append(R(f))
    else:
        psi.append(np.zeros_like(psi[0]))          # psi_1 = 0
        Lam.append(1j * gpp)                        # nonzero root of the order-2 condition
        for k in range(2, order + 1):
            psi.append(R(forcing(k)))
            num = -1j * sum(Lam[m] * box.inner(g * psi[k - m], Psi) for m in range(1, k))
            num += sum(Lam[m] * Lam[k + 1 - m] for m in range(2, k))
            Lam.append(num / Lam[1] if Lam[1] != 0 else complex("nan"))
        for k in range(2, order + 1):
            residuals.append(abs(box.inner(forcing(k), Psi)))
    return IsolatedSeries(mode, sign, complex(lam0), Lam, psi, box.x, zero, float(box.energies[j]), residuals)


def isolated_series(problem: ProblemSpec, mode: DiscreteMode, sign: int, order: int = 3,
                    points: int = 1024) -> IsolatedSeries:
    """lambda = lambda0 + sum_k eps^k Lambda_k for lambda0 = sign*sqrt(kappa_j + kappa*) != 0."""
    if abs(mode.kappa_j + problem.kappa_star) < 1e-9:
        raise PreconditionError("kappa_j + kappa* = 0: use zero_mode_analysis")
    if order > 3:
        raise ValueError("series order is capped at 3")
    lam0 = sign * complex(np.sqrt(complex(mode.kappa_j + problem.kappa_star)))
    return _series(problem, mode, sign, order, lam0, points)


@dataclass
class ZeroModeResult:
    always_eigenvalue: complex
    gamma_moment: complex
    extra: IsolatedSeries | None
    # order of the determinant zero at 0: the extra eigenvalue merges with 0 when the moment vanishes
    zero_multiplicity: int = 1


def zero_mode_analysis(problem: ProblemSpec, mode: DiscreteMode, order: int = 3,
                       points: int = 1024) -> ZeroModeResult:
    """0 is always an eigenvalue; a second one eps*i(gamma Psi, Psi) + O(eps^3) exists iff the moment is nonzero."""
    if abs(mode.kappa_j + problem.kappa_star) > 1e-9:
        raise PreconditionError("kappa_j + kappa* must vanish")
    ser = _series(problem, mode, 1, order, 0j, points)
    moment = ser.Lambdas[1] / 1j
    if abs(moment) <= 1e-10:
        return ZeroModeResult(0j, moment, None, 2)
    return ZeroModeResult(0j, moment, ser)


# --- emergent eigenvalues near thresholds -------------------------------------------------

@dataclass
class EmergencePrediction:
    n: int
    lambda0: complex
    branch: int
    regime: str
    variant: str
    exists: str
    first_order: complex
    Lambda: complex
    condition_value: float
    condition_id: str
    mirrored: bool
    condition_value_printed: float
    condition_value_corrected: float | None
    Lambda_printed: complex
    Lambda_corrected: complex | None
    multiplier_terms: tuple[complex, complex] | None = None

    def predict(self, eps: float, order: int = 2) -> complex:
        val = self.lambda0 + eps * self.first_order
        if order >= 2:
            val += eps ** 2 * self.Lambda
        return complex(val)

    def to_json(self) -> dict:
        def c(z):
            return None if z is None else {"re": complex(z).real, "im": complex(z).imag}
        return {
            "n": self.n, "lambda0": c(self.lambda0), "branch": "zeta_plus" if self.branch > 0 else "zeta_minus",
            "regime": self.regime, "variant": self.variant, "exists": self.exists,
            "first_order": c(self.first_order), "Lambda": c(self.Lambda),
            "condition_value": self.condition_value, "condition_id": self.condition_id,
            "mirrored": self.mirrored,
            "condition_value_printed": self.condition_value_printed,
            "condition_value_corrected": self.condition_value_corrected,
            "Lambda_printed": c(self.Lambda_printed), "Lambda_corrected": c(self.Lambda_corrected),
        }


def _verdict(v: float) -> str:
    if not math.isfinite(v) or abs(v) < INDETERMINATE:
        return "indeterminate"
    return "yes" if v < 0 else "no"


@dataclass
class ThresholdContext:
    """Scattering data and coefficients shared by both branches of one threshold."""
    problem: ProblemSpec
    n: int
    sd: ScatteringData
    coeffs: PerturbationCoeffs


def threshold_context(problem: ProblemSpec, n: int) -> ThresholdContext:
    if n < 1:
        raise ValueError("n must be >= 1 (negative n is covered by the mirror symmetry)")
    lam0 = threshold(n, problem.kappa_star)
    if abs(lam0) < 1e-12:
        raise PreconditionError("lambda0 = 0")
    coeffs = perturbation_coeffs(problem.gamma, n, problem.kappa_star)
    if abs(coeffs.rho0) < 1e-12:
        raise PreconditionError("rho0(lambda0) = 0")
    sd, jd = scattering_data(problem.potential, n)
    threshold_constants(sd, coeffs, problem, jd)
    return ThresholdContext(problem, n, sd, coeffs)


def _branch_prediction(ctx: ThresholdContext, branch: int, variant: str) -> EmergencePrediction:
    sd, co, n = ctx.sd, ctx.coeffs, ctx.n
    lam0, r0, ks = co.lambda0, co.rho0, ctx.problem.kappa_star
    z = sd.zeta(branch)
    s, c = math.sin(2 * z), math.cos(2 * z)
    imaginary = abs(lam0.real) < 1e-14 * max(1.0, abs(lam0))
    first = 1j * n * r0 * s / (2 * math.pi)
    if sd.regime == "generic":
        if imaginary:
            cond_p = (r0 * c * lam0.imag).real
            cid = "7.39" if cond_p < 0 else "7.40"
        else:
            arg = sd.theta + branch * math.acos(max(-1, min(1, sd.b_r / abs(sd.a))))
            cond_p = (co.rho_hat / (2 * math.pi) * math.tan(arg)).real
            cid = "7.39" if cond_p < 0 else "7.40"
        Lam_p = -1j * n * r0 * sd.get("zhat", branch) * c / math.pi - ks * r0 ** 2 * s ** 2 / (8 * math.pi ** 2 * lam0)
        zc = sd.get("zhat_corrected", branch)
        Lam_c = -1j * n * r0 * zc * c / math.pi - ks * r0 ** 2 * s ** 2 / (8 * math.pi ** 2 * lam0)
        m1, m2 = monodromy_multiplier_expansion(sd, co, branch, zc)
        # |mu_R| < 1 decides decay on both sides
        cond_c = m1.real if imaginary else abs(m1) ** 2 + 2 * m2.real
        terms = (m1, m2)
    else:
        xi = sd.get("xi_hat", branch)
        cond_p = (lam0 * r0 * sd.b_i / sd.a_r * (xi - co.rho_hat / (math.pi * lam0 * r0))).real
        cid = "7.77" if cond_p < 0 else "7.87b"
        Lam_p = -(ks * r0 ** 2 + 4 * n * co.rho_hat) / (8 * math.pi ** 2 * lam0)
        Lam_c, cond_c, terms = None, None, None
    if variant == "printed" or cond_c is None:
        cond, Lam, used = cond_p, Lam_p, "printed"
    else:
        cond, Lam, used = cond_c, Lam_c, "corrected"
        cid = "multiplier"
    return EmergencePrediction(n, lam0, branch, sd.regime, used, _verdict(float(cond)), complex(first),
                               complex(Lam), float(cond), cid, False, float(cond_p),
                               None if cond_c is None else float(cond_c), complex(Lam_p),
                               None if Lam_c is None else complex(Lam_c), terms)


def emergent_prediction(problem: ProblemSpec, n: int, sign: int, branch: int, variant: str = "corrected",
                        context: ThresholdContext | None = None) -> EmergencePrediction:
    """Prediction near sign*sqrt(n^2 + kappa*) for the branch zeta_plus (+1) or zeta_minus (-1).

    sign = -1 is obtained from the problem with gamma -> -gamma at +lambda0 and the map lambda -> -lambda.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    if sign not in (1, -1) or branch not in (1, -1):
        raise ValueError("sign and branch must be +1 or -1")
    n = abs(n)
    if sign == 1:
        ctx = context or threshold_context(problem, n)
        return _branch_prediction(ctx, branch, variant)
    ctx = context or threshold_context(problem.with_gamma(problem.gamma.negated()), n)
    p = _branch_prediction(ctx, branch, variant)
    p.lambda0 = -p.lambda0
    p.first_order = -p.first_order
    p.Lambda = -p.Lambda
    p.Lambda_printed = -p.Lambda_printed
    if p.Lambda_corrected is not None:
        p.Lambda_corrected = -p.Lambda_corrected
    p.mirrored = True
    return p


# --- enclosure -----------------------------------------------------------------------

@dataclass(frozen=True)
class EnclosureResult:
    inside: bool
    margin: float
    distance: float
    bound: float


def _dist_to_spectrum(w: complex, discrete) -> float:
    d = abs(w.imag) if w.real >= 0 else abs(w)
    for k in discrete:
        d = min(d, abs(w - k))
    return d


def spectrum_enclosure_check(problem: ProblemSpec, lam: complex, discrete, slack: float = 0.0) -> EnclosureResult:
    """dist(lam^2 - kappa*, {kappa_j} u [0, inf)) <= eps |lam| sup|gamma|."""
    lam = complex(lam)
    w = lam * lam - problem.kappa_star
    d = _dist_to_spectrum(w, [float(k) for k in discrete])
    bound = problem.epsilon * abs(lam) * sup_gamma(problem.gamma)
    margin = bound - d
    return EnclosureResult(margin >= -slack, margin, d, bound)
