"""Adaptive Dormand-Prince 8(5,3) integrator for u'' = q(x) u, compiled with numba.

The coefficient is q(x) = c0 + c1*gamma(x) + cv*V(x), which covers the periodic
cell equation, the full equation with the potential, and the Jost equation.
Several solutions are carried at once: the state is [u1, u1', u2, u2', ...].
"""
from __future__ import annotations

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _dop

_A = np.ascontiguousarray(_dop.A[:_dop.N_STAGES, :_dop.N_STAGES], dtype=np.float64)
_B = np.ascontiguousarray(_dop.B, dtype=np.float64)
_C = np.ascontiguousarray(_dop.C[:_dop.N_STAGES], dtype=np.float64)
_E3 = np.ascontiguousarray(_dop.E3, dtype=np.float64)
_E5 = np.ascontiguousarray(_dop.E5, dtype=np.float64)
_NST = _dop.N_STAGES

# potential kind codes shared with problem.py
V_NONE, V_SECH2, V_GAUSS, V_EXP, V_TABLE = 0, 1, 2, 3, 4

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_MAXSTEPS = 2


class IntegrationError(RuntimeError):
    """Step size underflow or step budget exhausted."""


@njit(cache=True)
def _gamma(x, gk):
    s = 0.0
    for k in range(gk.shape[0]):
        if gk[k] != 0.0:
            s += gk[k] * np.sin((k + 1) * x)
    return s


@njit(cache=True)
def _pot(x, vkind, vpar, tx, tc):
    if vkind == 1:
        c = np.cosh(vpar[1] * x)
        return -vpar[0] / (c * c)
    elif vkind == 2:
        return -vpar[0] * np.exp(-(x / vpar[1]) ** 2)
    elif vkind == 3:
        return -vpar[0] * np.exp(-vpar[1] * abs(x))
    elif vkind == 4:
        m = tx.shape[0]
        if x < tx[0] or x > tx[m - 1]:
            return 0.0
        i = np.searchsorted(tx, x) - 1
        if i < 0:
            i = 0
        if i > m - 2:
            i = m - 2
        d = x - tx[i]
        return ((tc[0, i] * d + tc[1, i]) * d + tc[2, i]) * d + tc[3, i]
    return 0.0


@njit(cache=True)
def _rhs(x, y, out, c0, c1, cv, gk, vkind, vpar, tx, tc):
    q = c0
    if c1 != 0.0:
        q += c1 * _gamma(x, gk)
    if cv != 0.0:
        q += cv * _pot(x, vkind, vpar, tx, tc)
    for i in range(0, y.shape[0], 2):
        out[i] = y[i + 1]
        out[i + 1] = q * y[i]


@njit(cache=True)
def _integrate(x0, y0, xs, c0, c1, cv, gk, vkind, vpar, tx, tc,
               rtol, atol, max_steps, A, B, C, E3, E5):
    """Integrate from x0 through the monotone output points xs."""
    ns = A.shape[0]
    dim = y0.shape[0]
    nout = xs.shape[0]
    Y = np.zeros((nout, dim), dtype=np.complex128)
    K = np.zeros((ns + 1, dim), dtype=np.complex128)
    y = y0.copy()
    f = np.zeros(dim, dtype=np.complex128)
    ytmp = np.zeros(dim, dtype=np.complex128)
    ynew = np.zeros(dim, dtype=np.complex128)
    fnew = np.zeros(dim, dtype=np.complex128)
    x = x0
    _rhs(x, y, f, c0, c1, cv, gk, vkind, vpar, tx, tc)
    if nout == 0:
        return Y, 0, 0
    direction = 1.0 if xs[nout - 1] >= x0 else -1.0
    scale0 = 0.0
    for i in range(dim):
        scale0 = max(scale0, abs(f[i]) / (atol + abs(y[i]) * rtol))
    h = 0.05 if scale0 == 0.0 else min(0.5, 0.05 / max(scale0 * atol, 1e-300) ** 0.125)
    h = min(max(h, 1e-6), 0.5)
    steps = 0
    for j in range(nout):
        target = xs[j]
        while (target - x) * direction > 0.0:
            if steps >= max_steps:
                return Y, STATUS_MAXSTEPS, steps
            remaining = abs(target - x)
            clipped = h >= remaining
            hs = remaining if clipped else h
            if hs < 1e-14 * max(1.0, abs(x)):
                return Y, STATUS_UNDERFLOW, steps
            hd = hs * direction
            K[0, :] = f
            for s in range(1, ns):
                for i in range(dim):
                    acc = 0.0j
                    for r in range(s):
                        acc += A[s, r] * K[r, i]
                    ytmp[i] = y[i] + hd * acc
                _rhs(x + C[s] * hd, ytmp, K[s], c0, c1, cv, gk, vkind, vpar, tx, tc)
            for i in range(dim):
                acc = 0.0j
                for r in range(ns):
                    acc += B[r] * K[r, i]
                ynew[i] = y[i] + hd * acc
            _rhs(x + hd, ynew, fnew, c0, c1, cv, gk, vkind, vpar, tx, tc)
            K[ns, :] = fnew
            e5 = 0.0
            e3 = 0.0
            for i in range(dim):
                sc = atol + max(abs(y[i]), abs(ynew[i])) * rtol
                a5 = 0.0j
                a3 = 0.0j
                for r in range(ns + 1):
                    a5 += E5[r] * K[r, i]
                    a3 += E3[r] * K[r, i]
                e5 += (abs(a5) / sc) ** 2
                e3 += (abs(a3) / sc) ** 2
            if e5 == 0.0 and e3 == 0.0:
                err = 0.0
            else:
                err = hs * e5 / np.sqrt((e5 + 0.01 * e3) * dim)
            steps += 1
            if err < 1.0:
                if err == 0.0:
                    fac = 10.0
                else:
                    fac = min(10.0, 0.9 * err ** (-1.0 / 8.0))
                x = target if clipped else x + hd
                for i in range(dim):
                    y[i] = ynew[i]
                    f[i] = fnew[i]
                if not clipped:
                    h = hs * fac
            else:
                fac = max(0.2, 0.9 * err ** (-1.0 / 8.0))
                h = hs * fac
        for i in range(dim):
            Y[j, i] = y[i]
    return Y, STATUS_OK, steps


_EMPTY_TX = np.zeros(2)
_EMPTY_TC = np.zeros((4, 1))


class Coefficient:
    """Packed description of q(x) = c0 + c1*gamma(x) + cv*V(x)."""

    __slots__ = ("c0", "c1", "cv", "gk", "vkind", "vpar", "tx", "tc")

    def __init__(self, c0, c1=0.0, gk=None, cv=0.0, potential=None):
        self.c0 = complex(c0)
        self.c1 = complex(c1)
        self.cv = float(cv)
        self.gk = np.zeros(1) if gk is None else np.asarray(gk, dtype=np.float64)
        if potential is None:
            self.vkind, self.vpar, self.tx, self.tc = V_NONE, np.zeros(2), _EMPTY_TX, _EMPTY_TC
        else:
            self.vkind, self.vpar, self.tx, self.tc = potential


def integrate(coef: Coefficient, x0: float, y0, xs, rtol=1e-11, atol=1e-11, max_steps=2_000_000):
    """Return the state at each output point in ``xs`` (monotone away from ``x0``)."""
    xs = np.atleast_1d(np.asarray(xs, dtype=np.float64))
    y0 = np.asarray(y0, dtype=np.complex128)
    Y, status, _ = _integrate(float(x0), y0, xs, coef.c0, coef.c1, coef.cv, coef.gk,
                              coef.vkind, coef.vpar, coef.tx, coef.tc, float(rtol), float(atol),
                              int(max_steps), _A, _B, _C, _E3, _E5)
    if status == STATUS_UNDERFLOW:
        raise IntegrationError("step size underflow")
    if status == STATUS_MAXSTEPS:
        raise IntegrationError("step budget exhausted")
    return Y
