"""Direct eigenvalue finder: decaying Floquet data at +-L, integration to 0, root of a matching determinant."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import ode
from .floquet import DELTA_UNI, cell_coefficient, monodromy
from .problem import PERIOD, ProblemSpec

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


class InBandError(ValueError):
    """lambda lies on the essential spectrum: no decaying Floquet direction."""


def periods_for(problem: ProblemSpec, extra: int = 0) -> int:
    return max(1, math.ceil(problem.support_length / PERIOD)) + extra


@dataclass(frozen=True)
class Matching:
    value: complex
    mu_decay: complex
    mu_grow: complex
    UL: np.ndarray
    UR: np.ndarray
    L: float


def _multipliers(problem: ProblemSpec, lam: complex):
    M = monodromy(problem, lam)
    A = M.matrix
    tr = M.trace
    root = cmath.sqrt(tr * tr - 4)
    m1, m2 = (tr + root) / 2, (tr - root) / 2
    mg = m1 if abs(m1) >= abs(m2) else m2
    md = 1.0 / mg
    return A, md, mg


def matching(problem: ProblemSpec, lam: complex, periods: int | None = None,
             delta: float = DELTA_UNI, decay: complex | None = None) -> Matching:
    """Normalized determinant tr(UL^T J UR J)/(|UL| |UR|) at x = 0.

    UL carries the solutions that decay at -infinity (seeded by the columns of A - mu_d I,
    which span the growing Floquet direction), UR those that decay at +infinity.
    ``decay`` forces the root playing the decaying role (analytic continuation across a band).
    """
    lam = complex(lam)
    m = periods_for(problem) if periods is None else int(periods)
    A, md, mg = _multipliers(problem, lam)
    if decay is not None:
        if abs(decay - mg) < abs(decay - md):
            md, mg = mg, md
    elif abs(abs(md) - 1.0) <= delta:
        raise InBandError(f"|mu| = {abs(md):.12f} at lambda = {lam}")
    L = PERIOD * m
    eye = np.eye(2)
    # unit-modulus seeds keeping the phase of mu^-m: tiny seeds would sit below atol, and the
    # normalized value is then independent of L
    ph_g = (mg / abs(mg)) ** (-m) if mg != 0 else 1.0
    ph_d = (md / abs(md)) ** m if md != 0 else 1.0
    Md = (A - md * eye) * ph_g / max(np.linalg.norm(A - md * eye), 1e-300)
    Mg = (A - mg * eye) * ph_d / max(np.linalg.norm(A - mg * eye), 1e-300)
    c = cell_coefficient(problem, lam, with_potential=True)
    ul = ode.integrate(c, -L, Md.T.ravel(), [0.0])[0]
    ur = ode.integrate(c, L, Mg.T.ravel(), [0.0])[0]
    UL = np.array([[ul[0], ul[2]], [ul[1], ul[3]]])
    UR = np.array([[ur[0], ur[2]], [ur[1], ur[3]]])
    D = np.trace(UL.T @ _J @ UR @ _J)
    scale = np.linalg.norm(UL) * np.linalg.norm(UR)
    return Matching(complex(D / scale) if scale else 0j, md, mg, UL, UR, L)


def matching_determinant(problem: ProblemSpec, lam: complex, L: float | None = None) -> complex:
    periods = None if L is None else max(1, math.ceil(L / PERIOD - 1e-12))
    if L is not None and periods * PERIOD < problem.support_length:
        raise ValueError("L must be at least the potential support length")
    return matching(problem, lam, periods).value


def muller(f: Callable[[complex], complex], x0: complex, x1: complex, x2: complex,
           tol: float = 1e-14, max_iter: int = 80):
    """Muller iteration; returns (root, iterations, converged)."""
    f0, f1, f2 = f(x0), f(x1), f(x2)
    for it in range(1, max_iter + 1):
        if f2 == 0:
            return x2, it, True
        h1, h2 = x1 - x0, x2 - x1
        if h1 == 0 or h2 == 0:
            return x2, it, False
        d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = cmath.sqrt(b * b - 4 * f2 * a)
        den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
        step = -2 * f2 / den if den != 0 else h2
        x3 = x2 + step
        x0, x1, x2 = x1, x2, x3
        f0, f1 = f1, f2
        f2 = f(x3)
        if abs(step) < tol * max(1.0, abs(x3)):
            return x3, it, True
    return x2, max_iter, False


@dataclass
class OracleResult:
    lam: complex
    matching_residual: float
    floquet_moduli: tuple[float, float]
    status: str
    winding: int | None = None
    iterations: int = 0
    eigenfunction: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)
    glue_mismatch: float = math.nan

    def to_json(self) -> dict:
        return {
            "lambda": {"re": self.lam.real, "im": self.lam.imag},
            "matching_residual": self.matching_residual,
            "floquet_moduli": list(self.floquet_moduli),
            "status": self.status,
            "winding": self.winding,
            "iterations": self.iterations,
            "glue_mismatch": self.glue_mismatch,
        }


def _swapped(problem: ProblemSpec, a: complex, b: complex) -> bool:
    ma, mb = _multipliers(problem, a)[2], _multipliers(problem, b)[1:]
    return abs(ma - mb[0]) < abs(ma - mb[1])


def _swap_confirmed(problem: ProblemSpec, a: complex, b: complex, depth: int = 6) -> bool:
    """A band crossing swaps the multipliers at every resolution; coarse-sampling artefacts do not."""
    for _ in range(depth):
        mid = (a + b) / 2
        if _swapped(problem, a, mid):
            b = mid
        elif _swapped(problem, mid, b):
            a = mid
        else:
            return False
    return True


def winding_number(problem: ProblemSpec, center: complex, radius: float, samples: int = 256,
                   exclude: complex | None = None, max_samples: int = 8192,
                   multiplicity: int = 1) -> int:
    """Argument-principle count of determinant zeros in the disc, minus ``multiplicity`` zeros at ``exclude``.

    Raises InBandError when the contour meets or crosses a band: there the decaying and growing
    multipliers swap roles and the determinant is not continuous.
    """
    while True:
        t = np.arange(samples) * 2 * math.pi / samples
        pts = center + radius * np.exp(1j * t)
        ms = [matching(problem, z) for z in pts]
        vals = np.array([m.value for m in ms])
        mg = np.array([m.mu_grow for m in ms])
        md = np.array([m.mu_decay for m in ms])
        if exclude is not None:
            vals = vals / (pts - exclude) ** multiplicity
        if np.any(vals == 0):
            raise ValueError("determinant vanishes on the contour")
        jumps = np.angle(np.roll(vals, -1) / vals)
        nxt = np.roll(mg, -1)
        swapped = np.abs(nxt - md) < np.abs(nxt - mg)
        for i in np.flatnonzero(swapped):
            if _swap_confirmed(problem, pts[i], pts[(i + 1) % samples]):
                raise InBandError("contour crosses the essential spectrum")
        if np.max(np.abs(jumps)) <= math.pi / 2 or samples >= max_samples:
            if np.any(swapped):
                raise InBandError("contour crosses the essential spectrum")
            return int(round(np.sum(jumps) / (2 * math.pi)))
        samples *= 2


@dataclass(frozen=True)
class SheetZero:
    lam: complex
    decay_modulus: float
    converged: bool

    @property
    def is_eigenvalue(self) -> bool:
        return self.converged and self.decay_modulus < 1.0


def _tracked_root(problem: ProblemSpec, z_est: complex, cur: complex) -> SheetZero:
    """Muller on the continued determinant, the decaying root followed from ``cur``."""
    state = {"cur": cur}

    def f(z):
        md, mg = _multipliers(problem, z)[1:]
        state["cur"] = md if abs(md - state["cur"]) <= abs(mg - state["cur"]) else mg
        return matching(problem, z, decay=state["cur"]).value

    h = 1e-6 * max(1.0, abs(z_est))
    root, _, ok = muller(f, z_est + h, z_est - h, z_est)
    f(root)
    return SheetZero(complex(root), float(abs(state["cur"])), ok)


def sheet_windings(problem: ProblemSpec, center: complex, radius: float, samples: int = 256,
                   max_samples: int = 8192):
    """Winding numbers of the two analytically continued determinants on the circle.

    The Floquet multipliers are tracked continuously along the contour, starting once from each
    root.  Returns (windings, zeros, clean): zeros lists the located simple zeros of each sheet;
    clean is False when a band-edge branch point (zero of the entire function tr^2 - 4) lies inside
    the disc, in which case the counts are meaningless.
    """
    while True:
        t = np.arange(samples + 1) * 2 * math.pi / samples
        pts = center + radius * np.exp(1j * t)
        roots = [_multipliers(problem, z)[1:] for z in pts]
        disc = np.array([(md + mg) ** 2 - 4 for md, mg in roots])
        dj = np.angle(disc[1:] / disc[:-1])
        ok = bool(np.max(np.abs(dj)) <= math.pi / 2)
        clean = int(round(np.sum(dj) / (2 * math.pi))) == 0
        if ok and not clean:
            return [0, 0], [[], []], False
        out, tracks, logs = [], [], []
        for start in (0, 1):
            cur = roots[0][start]
            vals, path = [], []
            for z, (md, mg) in zip(pts, roots):
                cur = md if abs(md - cur) <= abs(mg - cur) else mg
                vals.append(matching(problem, z, decay=cur).value)
                path.append(cur)
            vals = np.array(vals)
            if np.any(vals == 0):
                raise ValueError("determinant vanishes on the contour")
            jumps = np.angle(vals[1:] / vals[:-1])
            ok = ok and np.max(np.abs(jumps)) <= math.pi / 2
            out.append(int(round(np.sum(jumps) / (2 * math.pi))))
            tracks.append(path)
            logs.append(np.log(np.abs(vals[1:] / vals[:-1])) + 1j * jumps)
        if ok or samples >= max_samples:
            break
        samples *= 2
    zeros: list[list[SheetZero]] = [[], []]
    if clean:
        mids = (pts[1:] + pts[:-1]) / 2 - center
        for k in (0, 1):
            if out[k] == 1:
                est = center + complex(np.sum(mids * logs[k]) / (2j * math.pi))
                i = int(np.argmin(np.abs(pts - est)))
                zeros[k].append(_tracked_root(problem, est, tracks[k][i]))
    return out, zeros, clean


@dataclass(frozen=True)
class AbsenceCertificate:
    winding: int | None
    radius: float
    requested_radius: float
    continued: bool = False
    resonances: tuple[complex, ...] = ()

    @property
    def absent(self) -> bool:
        return self.winding == 0


def _branch_point(problem: ProblemSpec, center: complex, radius: float, samples: int = 256) -> complex | None:
    """Zero of tr^2 - 4 (band edge) inside the disc, from a moment estimate refined by Muller."""
    t = np.arange(samples + 1) * 2 * math.pi / samples
    pts = center + radius * np.exp(1j * t)

    def f(z):
        return monodromy(problem, z).trace ** 2 - 4

    vals = np.array([f(z) for z in pts])
    logs = np.log(np.abs(vals[1:] / vals[:-1])) + 1j * np.angle(vals[1:] / vals[:-1])
    w = int(round((np.sum(logs).imag) / (2 * math.pi)))
    if w < 1:
        return None
    mids = (pts[1:] + pts[:-1]) / 2 - center
    est = center + complex(np.sum(mids * logs) / (2j * math.pi)) / w
    h = 1e-3 * radius
    root, _, ok = muller(f, est + h, est - h, est)
    return complex(root) if ok and abs(root - center) < radius else None


def certify_absence(problem: ProblemSpec, center: complex, radius: float, min_fraction: float = 1 / 1024,
                    exclude: complex | None = None, multiplicity: int = 1) -> AbsenceCertificate:
    """Eigenvalue count in the disc, shrunk (down to min_fraction*radius) when needed.

    A contour inside the resolvent set gives the count directly.  A contour crossing a band is
    counted on both continued sheets; each zero there is located and kept only if its decaying
    multiplier has modulus < 1 (others are resonances).  A disc enclosing a band-edge branch
    point is shrunk to 0.9 of the distance to that point (or halved if it cannot be located);
    any other failure halves the radius.
    """
    r = float(radius)
    while r >= min_fraction * radius:
        try:
            w = winding_number(problem, center, r, exclude=exclude, multiplicity=multiplicity)
            return AbsenceCertificate(w, r, float(radius))
        except InBandError:
            if exclude is None:
                try:
                    ws, zs, clean = sheet_windings(problem, center, r)
                    resolved = all(w in (0, 1) and len(z) == w and all(q.converged for q in z)
                                   for w, z in zip(ws, zs))
                    if clean and resolved:
                        found = [q for z in zs for q in z]
                        eig = sum(q.is_eigenvalue for q in found)
                        res = tuple(q.lam for q in found if not q.is_eigenvalue)
                        return AbsenceCertificate(eig, r, float(radius), True, res)
                    if not clean:
                        bp = _branch_point(problem, center, r)
                        if bp is not None:
                            r = min(r / 2, 0.9 * abs(bp - center))
                            continue
                except (InBandError, ValueError):
                    pass
        except ValueError:
            pass
        r /= 2
    return AbsenceCertificate(None, r, float(radius))


def _safe(problem):
    def f(z):
        try:
            return matching(problem, z).value
        except InBandError:
            return complex(1.0)
    return f


def eigenfunction(problem: ProblemSpec, lam: complex, num: int = 801):
    """Glue the two decaying branches at 0; returns (x, psi, relative mismatch at 0)."""
    mt = matching(problem, lam)
    L = mt.L
    il = int(np.argmax(np.linalg.norm(mt.UL, axis=0)))
    ir = int(np.argmax(np.linalg.norm(mt.UR, axis=0)))
    A, md, mg = _multipliers(problem, lam)
    eye = np.eye(2)
    seed_l = (A - md * eye)[:, il]
    seed_r = (A - mg * eye)[:, ir]
    c = cell_coefficient(problem, lam, with_potential=True)
    x = np.linspace(-L, L, num)
    left = x[x <= 0]
    right = x[x >= 0][::-1]
    yl = ode.integrate(c, -L, seed_l, left)
    yr = ode.integrate(c, L, seed_r, right)[::-1]
    s = np.vdot(yl[-1], yr[0]) / np.vdot(yl[-1], yl[-1])
    mismatch = float(np.linalg.norm(s * yl[-1] - yr[0]) / np.linalg.norm(yr[0]))
    psi = np.concatenate([s * yl[:-1, 0], yr[:, 0]])
    psi = psi / math.sqrt(np.trapezoid(np.abs(psi) ** 2, x))
    return x, psi, mismatch


def find_isolated_eigenvalue(problem: ProblemSpec, lambda_guess: complex, search_radius: float,
                             with_eigenfunction: bool = False, certify: bool = True) -> OracleResult:
    """Root of the matching determinant inside the disc around lambda_guess."""
    g = complex(lambda_guess)
    R = float(search_radius)
    f = _safe(problem)

    def attempt(seed):
        h = 0.05 * R
        root, it, ok = muller(f, seed + h, seed - h, seed)
        return root, it, ok and abs(root - g) <= R

    root, it, ok = attempt(g)
    winding = None
    if not ok and certify:
        try:
            winding = winding_number(problem, g, R)
        except (InBandError, ValueError):
            winding = None
        if winding:
            for k in range(8):
                seed = g + 0.5 * R * cmath.exp(2j * math.pi * k / 8)
                root, it2, ok = attempt(seed)
                it += it2
                if ok:
                    break
    if not ok:
        mu = _multipliers(problem, g)
        return OracleResult(g, math.nan, (abs(mu[2]), abs(mu[1])), "not_found", winding, it)
    try:
        mt = matching(problem, root)
    except InBandError:
        A, md, mg = _multipliers(problem, root)
        return OracleResult(complex(root), math.nan, (abs(mg), abs(md)), "in_band", winding, it)
    res = OracleResult(complex(root), abs(mt.value), (abs(mt.mu_grow), abs(mt.mu_decay)), "isolated", winding, it)
    if with_eigenfunction:
        x, psi, mis = eigenfunction(problem, root)
        res.eigenfunction = (x, psi)
        res.glue_mismatch = mis
    return res


@dataclass
class DefectReport:
    epsilons: list[float]
    oracle: list[complex]
    predicted: list[complex]
    errors: list[float]
    order: float
    contradictions: list[float]

    def to_json(self) -> dict:
        return {
            "epsilons": self.epsilons,
            "oracle": [{"re": z.real, "im": z.imag} for z in self.oracle],
            "predicted": [{"re": z.real, "im": z.imag} for z in self.predicted],
            "errors": self.errors,
            "order": self.order,
            "contradictions": self.contradictions,
        }


def fitted_order(epsilons: Sequence[float], errors: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(eps)."""
    e = np.asarray(errors, float)
    if np.any(~np.isfinite(e)) or np.any(e <= 0):
        return math.nan
    return float(np.polyfit(np.log(epsilons), np.log(e), 1)[0])


def eigenvalue_defect_order(problem: ProblemSpec, prediction: Callable[[float], complex],
                            epsilon_ladder: Sequence[float], radius: Callable[[float], float] | float | None = None,
                            seed: Callable[[float], complex] | None = None) -> DefectReport:
    """Oracle eigenvalues along the ladder versus a prediction lambda(eps); fitted convergence order."""
    eps = [float(e) for e in epsilon_ladder]
    if len(eps) < 3:
        raise ValueError("need at least three epsilon values")
    ratios = [eps[i + 1] / eps[i] for i in range(len(eps) - 1)]
    if max(ratios) - min(ratios) > 1e-9 * max(ratios):
        raise ValueError("ladder must be geometric")
    oracle, pred, errs, bad = [], [], [], []
    for e in eps:
        p = complex(prediction(e))
        s = p if seed is None else complex(seed(e))
        r = radius(e) if callable(radius) else (radius if radius is not None else max(10 * e, 1e-3))
        res = find_isolated_eigenvalue(problem.with_epsilon(e), s, r)
        pred.append(p)
        if res.status != "isolated":
            bad.append(e)
            oracle.append(complex("nan"))
            errs.append(math.nan)
        else:
            oracle.append(res.lam)
            errs.append(abs(res.lam - p))
    return DefectReport(eps, oracle, pred, errs, fitted_order(eps, errs), bad)
