"""Reference implementations that share no code with the package.

Slow and direct on purpose: explicit DFT sums, extended-precision special
functions, quadrature, and loop-based pair distributions.
"""

from __future__ import annotations

import math

import mpmath
import numpy as np
from scipy.integrate import quad


def centered_dft2(values: np.ndarray, sign: int = -1) -> np.ndarray:
    """Unitary DFT with centered indices, as an explicit matrix product."""
    n = values.shape[0]
    k = np.arange(n) - n // 2
    w = np.exp(sign * 2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)
    return w @ values @ w.T


def bessel_j_mp(l: int, x: float) -> float:
    with mpmath.workdps(40):
        return float(mpmath.besselj(l, x))


def bessel_i_scaled_mp(l: int, x: float) -> float:
    with mpmath.workdps(40):
        return float(mpmath.besseli(l, x) * mpmath.exp(-x))


def first_zero_bisection(f, a: float, b: float, tol: float = 1e-15) -> float:
    fa = f(a)
    while b - a > tol * max(1.0, abs(a)):
        m = 0.5 * (a + b)
        fm = f(m)
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def gaussian_ft(q: np.ndarray, w: float) -> np.ndarray:
    """``(1/2pi) int exp(-r^2/w^2) exp(-i q.x) d^2x = (w^2/2) exp(-q^2 w^2/4)``."""
    return 0.5 * w * w * np.exp(-(q * w) ** 2 / 4.0)


def loop_jpd(vp: np.ndarray, vc: np.ndarray, cell: float) -> np.ndarray:
    """``|norm V_p(s) V_c(d)|^2 cell`` scattered to photon indices by loops.

    Photon index (centered) ``m1 = s + d``, ``m2 = s - d``; array index ``m + n``.
    """
    n = vp.shape[0]
    c = n // 2
    p = np.abs(vp) ** 2
    q = np.abs(vc) ** 2
    norm2 = 1.0 / (p.sum() * q.sum() * cell)
    out = np.zeros((2 * n,) * 4)
    for sy in range(n):
        for sx in range(n):
            if p[sy, sx] == 0:
                continue
            for dy in range(n):
                for dx in range(n):
                    v = p[sy, sx] * q[dy, dx]
                    if v == 0:
                        continue
                    s = (sy - c, sx - c)
                    d = (dy - c, dx - c)
                    out[s[0] + d[0] + n, s[1] + d[1] + n, s[0] - d[0] + n, s[1] - d[1] + n] = v * norm2 * cell
    return out


def gauss_vs_sinc_scan(length: float, wavenumber: float, factors=(0.9, 1.0, 1.1)) -> list[float]:
    """Distance between unit-L2 Gaussian and sinc shapes on the sinc main lobe (1D quadrature)."""
    a = length / (4.0 * wavenumber)
    q0 = math.sqrt(math.pi / a)

    def sinc(q):
        x = a * q * q
        return 1.0 if x == 0 else math.sin(x) / x

    ns = math.sqrt(quad(lambda q: sinc(q) ** 2, 0, q0, limit=200)[0])
    out = []
    for f in factors:
        d = f * 0.257 * math.sqrt(a)

        def g(q, d=d):
            return d * math.exp(-0.5 * (d * q) ** 2)

        ng = math.sqrt(quad(lambda q: g(q) ** 2, 0, q0, limit=200)[0])
        out.append(math.sqrt(quad(lambda q: (g(q) / ng - sinc(q) / ns) ** 2, 0, q0, limit=200)[0]))
    return out
