"""Problem data: kappa_star, epsilon, the odd periodic gamma and the decaying potential V."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from . import ode

PERIOD = 2.0 * math.pi
SUPPORT_FLOOR = 1e-12

POTENTIAL_KINDS = ("sech2_well", "gaussian_well", "exp_well", "tabulated")
_PARAM_NAMES = {
    "sech2_well": ("v0", "mu"),
    "gaussian_well": ("v0", "sigma"),
    "exp_well": ("v0", "theta"),
    "tabulated": ("grid", "values", "theta"),
}


class SpecError(ValueError):
    """Malformed or inconsistent problem data."""


@dataclass(frozen=True)
class GammaSpec:
    """gamma(x) = sum_k g_k sin(k x), k = 1..K."""

    sine_coeffs: tuple[float, ...]

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.sine_coeffs)
        if not all(math.isfinite(c) for c in coeffs):
            raise SpecError("gamma coefficients must be finite")
        object.__setattr__(self, "sine_coeffs", coeffs)

    @property
    def K(self) -> int:
        return len(self.sine_coeffs)

    def coeff(self, k: int) -> float:
        """g_k for k >= 1 (zero beyond the stored range)."""
        return self.sine_coeffs[k - 1] if 1 <= k <= self.K else 0.0

    def array(self) -> np.ndarray:
        return np.array(self.sine_coeffs if self.K else (0.0,), dtype=np.float64)

    def fourier(self, m: int) -> complex:
        """Coefficient of e^{imx}: g_m/(2i) for m > 0, -g_|m|/(2i) for m < 0."""
        if m == 0:
            return 0.0j
        g = self.coeff(abs(m))
        return g / 2j if m > 0 else -g / 2j

    def negated(self) -> "GammaSpec":
        return GammaSpec(tuple(-c for c in self.sine_coeffs))

    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.sine_coeffs)


def eval_gamma(spec: GammaSpec, x):
    """Sum of the sine series at x (scalar or array)."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for k, g in enumerate(spec.sine_coeffs, start=1):
        if g != 0.0:
            out = out + g * np.sin(k * x)
    return out if out.ndim else float(out)


def sup_gamma(spec: GammaSpec) -> float:
    """sup over one period of |gamma|, by dense sampling plus local refinement."""
    if spec.is_zero():
        return 0.0
    xs = np.linspace(-math.pi, math.pi, 4097)
    vals = np.abs(eval_gamma(spec, xs))
    i = int(np.argmax(vals))
    h = xs[1] - xs[0]
    res = minimize_scalar(lambda t: -abs(eval_gamma(spec, t)), bounds=(xs[i] - h, xs[i] + h),
                          method="bounded", options={"xatol": 1e-13})
    return float(max(vals[i], -res.fun))


@dataclass(frozen=True)
class PotentialSpec:
    """Real potential with envelope |V(x)| <= C exp(-theta |x|)."""

    kind: str
    params: Mapping[str, Any]
    C: float | None = None
    theta: float | None = None
    _spline: Any = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in POTENTIAL_KINDS:
            raise SpecError(f"unknown potential kind {self.kind!r}")
        names = _PARAM_NAMES[self.kind]
        extra = set(self.params) - set(names)
        missing = set(names) - set(self.params)
        if extra or missing:
            raise SpecError(f"{self.kind} expects params {names}, got {sorted(self.params)}")
        if self.kind == "tabulated":
            grid = tuple(float(v) for v in self.params["grid"])
            values = tuple(float(v) for v in self.params["values"])
            if len(grid) != len(values) or len(grid) < 4:
                raise SpecError("tabulated potential needs >= 4 matching grid/values entries")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise SpecError("tabulated grid must be strictly increasing")
            params = {"grid": grid, "values": values, "theta": float(self.params["theta"])}
            object.__setattr__(self, "_spline", CubicSpline(np.array(grid), np.array(values), bc_type="natural"))
        else:
            params = {k: float(self.params[k]) for k in names}
            if params[names[1]] <= 0:
                raise SpecError(f"{names[1]} must be positive")
        object.__setattr__(self, "params", params)
        C, theta = self._default_envelope()
        if self.C is None:
            object.__setattr__(self, "C", C)
        if self.theta is None:
            object.__setattr__(self, "theta", theta)
        if not (self.theta > 0 and self.C >= 0):
            raise SpecError("envelope needs C >= 0 and theta > 0")

    def _default_envelope(self) -> tuple[float, float]:
        p = self.params
        if self.kind == "sech2_well":
            return 4.0 * abs(p["v0"]), 2.0 * p["mu"]
        if self.kind == "gaussian_well":
            # exp(-x^2/s^2) <= e * exp(-2|x|/s)
            return math.e * abs(p["v0"]), 2.0 / p["sigma"]
        if self.kind == "exp_well":
            return abs(p["v0"]), p["theta"]
        th = p["theta"]
        g = np.array(p["grid"])
        # the spline can overshoot between nodes, so bound it on a dense sample
        xs = np.concatenate([g, np.linspace(g[0], g[-1], 64 * len(g))])
        v = np.abs(self._spline(xs))
        return float(np.max(v * np.exp(th * np.abs(xs)))) * (1 + 1e-9), th

    @property
    def support_length(self) -> float:
        """L_V = max(10/theta, L with C exp(-theta L) < 1e-12)."""
        L = 10.0 / self.theta
        if self.C > SUPPORT_FLOOR:
            L = max(L, math.log(self.C / SUPPORT_FLOOR) / self.theta)
        return L

    def is_even(self) -> bool:
        if self.kind != "tabulated":
            return True
        xs = np.linspace(0, self.support_length, 257)
        return bool(np.allclose(eval_potential(self, xs), eval_potential(self, -xs), atol=1e-12, rtol=0))

    def packed(self):
        """Tuple consumed by the compiled integrator."""
        p = self.params
        if self.kind == "sech2_well":
            return (ode.V_SECH2, np.array([p["v0"], p["mu"]]), np.zeros(2), np.zeros((4, 1)))
        if self.kind == "gaussian_well":
            return (ode.V_GAUSS, np.array([p["v0"], p["sigma"]]), np.zeros(2), np.zeros((4, 1)))
        if self.kind == "exp_well":
            return (ode.V_EXP, np.array([p["v0"], p["theta"]]), np.zeros(2), np.zeros((4, 1)))
        sp = self._spline
        return (ode.V_TABLE, np.zeros(2), np.ascontiguousarray(sp.x), np.ascontiguousarray(sp.c))

    def minimum(self) -> float:
        xs = np.linspace(-self.support_length, self.support_length, 20001)
        return float(np.min(eval_potential(self, xs)))


def eval_potential(spec: PotentialSpec, x, extrapolate: bool = True):
    """V(x). Tabulated data is continued by zero outside its grid when ``extrapolate``."""
    x = np.asarray(x, dtype=np.float64)
    p = spec.params
    if spec.kind == "sech2_well":
        out = -p["v0"] / np.cosh(p["mu"] * x) ** 2
    elif spec.kind == "gaussian_well":
        out = -p["v0"] * np.exp(-(x / p["sigma"]) ** 2)
    elif spec.kind == "exp_well":
        out = -p["v0"] * np.exp(-p["theta"] * np.abs(x))
    else:
        lo, hi = p["grid"][0], p["grid"][-1]
        inside = (x >= lo) & (x <= hi)
        if not extrapolate and not np.all(inside):
            raise SpecError("tabulated potential evaluated outside its grid")
        out = np.where(inside, spec._spline(np.clip(x, lo, hi)), 0.0)
    return out if np.ndim(out) else float(out)


def envelope_violation(spec: PotentialSpec, n: int = 400) -> float:
    """Largest |V(x)| - C exp(-theta|x|) over a log-spaced grid out to 10/theta (<= 0 when the envelope holds)."""
    top = 10.0 / spec.theta
    xs = np.concatenate([[0.0], np.geomspace(1e-4, top, n)])
    xs = np.concatenate([-xs[::-1], xs])
    bound = spec.C * np.exp(-spec.theta * np.abs(xs))
    return float(np.max(np.abs(eval_potential(spec, xs)) - bound * (1 + 1e-12)))


@dataclass(frozen=True)
class ProblemSpec:
    kappa_star: float
    epsilon: float
    gamma: GammaSpec
    potential: PotentialSpec

    def __post_init__(self):
        object.__setattr__(self, "kappa_star", float(self.kappa_star))
        object.__setattr__(self, "epsilon", float(self.epsilon))
        if not self.epsilon >= 0:
            raise SpecError("epsilon must be nonnegative")

    def with_epsilon(self, eps: float) -> "ProblemSpec":
        return ProblemSpec(self.kappa_star, eps, self.gamma, self.potential)

    def with_kappa_star(self, ks: float) -> "ProblemSpec":
        return ProblemSpec(ks, self.epsilon, self.gamma, self.potential)

    def with_gamma(self, gamma: GammaSpec) -> "ProblemSpec":
        return ProblemSpec(self.kappa_star, self.epsilon, gamma, self.potential)

    @property
    def support_length(self) -> float:
        return self.potential.support_length


@dataclass(frozen=True)
class SpectralParameter:
    lam: complex
    kappa_star: float

    @property
    def kappa_of_lambda(self) -> complex:
        return kappa(self.lam, self.kappa_star)


def kappa(lam, kappa_star: float):
    """Principal square root of lambda^2 - kappa_star (so kappa(1, 0) = 1)."""
    return np.sqrt(np.asarray(lam, dtype=np.complex128) ** 2 - kappa_star + 0j)[()]


def threshold(n: int, kappa_star: float, sign: int = 1) -> complex:
    """sign * sqrt(n^2 + kappa_star), principal root."""
    return sign * complex(np.sqrt(complex(n * n + kappa_star)))


# --- serialization ---------------------------------------------------------------

_TOP_KEYS = {"kappa_star", "epsilon", "gamma", "potential"}


def problem_to_dict(spec: ProblemSpec) -> dict:
    pot = spec.potential
    params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in pot.params.items()}
    return {
        "kappa_star": spec.kappa_star,
        "epsilon": spec.epsilon,
        "gamma": {"sine_coeffs": list(spec.gamma.sine_coeffs)},
        "potential": {"kind": pot.kind, "params": params,
                      "envelope": {"C": pot.C, "theta": pot.theta}},
    }


def _check_keys(obj: Mapping, allowed: set, where: str, required: set | None = None):
    if not isinstance(obj, Mapping):
        raise SpecError(f"{where} must be a mapping")
    extra = set(obj) - allowed
    if extra:
        raise SpecError(f"unknown keys in {where}: {sorted(extra)}")
    missing = (allowed if required is None else required) - set(obj)
    if missing:
        raise SpecError(f"missing keys in {where}: {sorted(missing)}")


def problem_from_dict(d: Mapping) -> ProblemSpec:
    _check_keys(d, _TOP_KEYS, "problem")
    _check_keys(d["gamma"], {"sine_coeffs"}, "gamma")
    pot = d["potential"]
    _check_keys(pot, {"kind", "params", "envelope"}, "potential", required={"kind", "params"})
    env = pot.get("envelope") or {}
    _check_keys(env, {"C", "theta"}, "potential.envelope", required=set())
    try:
        gamma = GammaSpec(tuple(d["gamma"]["sine_coeffs"]))
        potential = PotentialSpec(pot["kind"], dict(pot["params"]), env.get("C"), env.get("theta"))
        spec = ProblemSpec(d["kappa_star"], d["epsilon"], gamma, potential)
    except (TypeError, KeyError) as exc:
        raise SpecError(str(exc)) from exc
    if envelope_violation(potential) > 0:
        raise SpecError("potential violates its declared envelope")
    return spec


def dumps_problem(spec: ProblemSpec) -> str:
    return json.dumps(problem_to_dict(spec), indent=2, sort_keys=True)


def loads_problem(text: str) -> ProblemSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON: {exc}") from exc
    return problem_from_dict(data)


def load_problem(path) -> ProblemSpec:
    return loads_problem(Path(path).read_text())


def save_problem(spec: ProblemSpec, path) -> None:
    Path(path).write_text(dumps_problem(spec) + "\n")
