"""Cardinal sine and integer-order Bessel functions J_l and exp(-x) I_l.

Evaluated in-house (power series, Miller downward recurrence, Hankel
asymptotics) so results do not depend on the platform's special-function
library. Orders are limited to ``0 <= l <= MAX_ORDER``.
"""

from __future__ import annotations

import math

import numpy as np

MAX_ORDER = 20

_J_SERIES_MAX = 8.0
_J_ASYMPTOTIC_MIN = 2000.0
_I_SERIES_MAX = 20.0
_I_ASYMPTOTIC_MIN = 1500.0
_RESCALE = 1e250


def _check_order(l) -> int:
    if int(l) != l or not 0 <= l <= MAX_ORDER:
        raise ValueError(f"Bessel order must be an integer in [0, {MAX_ORDER}], got {l}")
    return int(l)


def _as_output(out: np.ndarray, scalar: bool):
    return float(out.reshape(-1)[0]) if scalar else out


def sinc(x):
    """``sin(x)/x`` with ``sinc(0) = 1`` (unnormalized)."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-4
    xs = x[small] ** 2
    out[small] = 1.0 - xs / 6.0 + xs * xs / 120.0
    xl = x[~small]
    out[~small] = np.sin(xl) / xl
    return _as_output(out, scalar)


def _series(l: int, x: np.ndarray, sign: float, terms: int) -> np.ndarray:
    # sum_k sign^k (x/2)^(2k+l) / (k! (k+l)!)
    h = x / 2.0
    t = h**l / math.factorial(l)
    s = t.copy()
    h2 = sign * h * h
    for k in range(1, terms):
        t = t * h2 / (k * (k + l))
        s += t
    return s


def _miller_start(l: int, xmax: float, modified: bool) -> int:
    if modified:
        n = l + 20 + int(math.sqrt(80.0 * xmax))
    else:
        n = max(l, int(xmax)) + 30 + int(12.0 * xmax ** (1.0 / 3.0))
    return n + (n % 2)


def _miller(l: int, x: np.ndarray, modified: bool) -> np.ndarray:
    """Downward recurrence normalized by the Neumann-type sum rule.

    J: ``1 = J_0 + 2 sum J_2k``; I: ``e^x = I_0 + 2 sum I_k`` (returns e^-x I_l).
    """
    n_start = _miller_start(l, float(x.max()), modified)
    sgn = 1.0 if modified else -1.0
    upper = np.zeros_like(x)
    cur = np.full_like(x, 1e-300)
    ans = np.zeros_like(x)
    acc = np.zeros_like(x)
    two_over_x = 2.0 / x
    for k in range(n_start, 0, -1):
        lower = k * two_over_x * cur + sgn * upper
        upper, cur = cur, lower
        km1 = k - 1
        if km1 == l:
            ans = cur.copy()
        if km1 > 0 and (modified or km1 % 2 == 0):
            acc += cur
        big = np.abs(cur) > _RESCALE
        if big.any():
            f = np.where(big, 1.0 / _RESCALE, 1.0)
            cur *= f
            upper *= f
            ans *= f
            acc *= f
    return ans / (cur + 2.0 * acc)


def _hankel_coefficients(l: int, x: np.ndarray, terms: int = 30):
    """Terms ``a_k(l) / x^k`` of the large-argument expansions."""
    mu = 4.0 * l * l
    t = np.ones_like(x)
    out = [t]
    for k in range(1, terms):
        t = t * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        out.append(t)
        if np.all(np.abs(t) < 1e-18):
            break
    return out


def _j_asymptotic(l: int, x: np.ndarray) -> np.ndarray:
    a = _hankel_coefficients(l, x)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for k, ak in enumerate(a):
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += sign * ak
        else:
            q += sign * ak
    chi = x - (0.5 * l + 0.25) * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi))


def _i_asymptotic(l: int, x: np.ndarray) -> np.ndarray:
    a = _hankel_coefficients(l, x)
    s = np.zeros_like(x)
    for k, ak in enumerate(a):
        s += -ak if k % 2 else ak
    return s / np.sqrt(2.0 * math.pi * x)


def bessel_j(l: int, x):
    """Bessel function of the first kind ``J_l(x)``, absolute error <= 1e-12."""
    l = _check_order(l)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("bessel_j requires finite arguments")
    scalar = x.ndim == 0
    xa = np.abs(x).ravel()
    out = np.zeros_like(xa)
    out[xa == 0] = 1.0 if l == 0 else 0.0

    m = (xa > 0) & (xa <= _J_SERIES_MAX)
    if m.any():
        out[m] = _series(l, xa[m], -1.0, 40)
    m = (xa > _J_SERIES_MAX) & (xa <= _J_ASYMPTOTIC_MIN)
    if m.any():
        idx = np.flatnonzero(m)
        xs = xa[idx]
        # bucket by magnitude so small arguments do not pay for the largest start order
        bucket = np.floor(np.log2(xs)).astype(int)
        for b in np.unique(bucket):
            sel = bucket == b
            out[idx[sel]] = _miller(l, xs[sel], modified=False)
    m = xa > _J_ASYMPTOTIC_MIN
    if m.any():
        out[m] = _j_asymptotic(l, xa[m])

    if l % 2:
        out = np.where(x.ravel() < 0, -out, out)
    return _as_output(out.reshape(x.shape), scalar)


def bessel_i_scaled(l: int, x):
    """Exponentially scaled modified Bessel function ``exp(-x) I_l(x)`` for x >= 0.

    Relative error <= 1e-10; never overflows.
    """
    l = _check_order(l)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("bessel_i_scaled requires finite, non-negative arguments")
    scalar = x.ndim == 0
    xa = x.ravel().copy()
    out = np.zeros_like(xa)
    out[xa == 0] = 1.0 if l == 0 else 0.0

    m = (xa > 0) & (xa <= _I_SERIES_MAX)
    if m.any():
        out[m] = _series(l, xa[m], 1.0, 80) * np.exp(-xa[m])
    m = (xa > _I_SERIES_MAX) & (xa <= _I_ASYMPTOTIC_MIN)
    if m.any():
        idx = np.flatnonzero(m)
        xs = xa[idx]
        bucket = np.floor(np.log2(xs)).astype(int)
        for b in np.unique(bucket):
            sel = bucket == b
            out[idx[sel]] = _miller(l, xs[sel], modified=True)
    m = xa > _I_ASYMPTOTIC_MIN
    if m.any():
        out[m] = _i_asymptotic(l, xa[m])
    return _as_output(out.reshape(x.shape), scalar)
