"""Two-photon angular spectrum ``Phi(q1, q2) = V_p(q1 + q2) V_c(q1 - q2)``.

The state is stored in separable form: the pump spectrum on a sum-coordinate
grid and the phase-matching function on a difference-coordinate grid of the
same size and pitch. The pair lattice is the product of the two grids, so
single-photon momenta ``q1 = (q+ + q-)/2`` fall on a lattice of half the
pitch and twice the size (:attr:`TwoPhotonState.photon_grid`).

A state can also be held in position representation (see
:func:`pumpshaping.observables.near_field_state`); there the grids carry the
mean and half-difference coordinates ``(x1 + x2)/2`` and ``(x1 - x2)/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import brentq

from .fourier import ComplexField2D, Domain, Grid2D
from .special import bessel_i_scaled, sinc

# Gaussian width constant relating delta to sqrt(L / 4K)
DELTA_FACTOR = 0.257


class PhaseMatching(str, Enum):
    SINC = "sinc"
    GAUSS = "gauss"


@dataclass(frozen=True)
class CrystalSpec:
    """Nonlinear crystal. ``K`` uses ``refractive_index`` (vacuum by default)."""

    length: float = 2e-3
    wavelength_pump: float = 405e-9
    refractive_index: float = 1.0
    model: PhaseMatching = PhaseMatching.SINC

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"crystal length must be positive, got {self.length}")
        if not self.wavelength_pump > 0:
            raise ValueError(f"pump wavelength must be positive, got {self.wavelength_pump}")
        if not self.refractive_index >= 1.0:
            raise ValueError(f"refractive index must be >= 1, got {self.refractive_index}")
        object.__setattr__(self, "model", PhaseMatching(self.model))

    @property
    def K(self) -> float:
        return 2.0 * math.pi * self.refractive_index / self.wavelength_pump

    @property
    def delta(self) -> float:
        return DELTA_FACTOR * math.sqrt(self.length / (4.0 * self.K))


def phase_matching_sinc(q, crystal: CrystalSpec):
    """``(1/pi) sqrt(2L/K) sinc(L q^2 / 4K)`` for momentum magnitudes ``q``."""
    q = np.asarray(q, dtype=float)
    L, K = crystal.length, crystal.K
    return (1.0 / math.pi) * math.sqrt(2.0 * L / K) * sinc(L * q * q / (4.0 * K))


def phase_matching_gauss(q, crystal: CrystalSpec):
    """Gaussian approximation ``delta * exp(-delta^2 q^2 / 2)``."""
    q = np.asarray(q, dtype=float)
    d = crystal.delta
    return d * np.exp(-0.5 * (d * q) ** 2)


def phase_matching(q, crystal: CrystalSpec):
    if crystal.model is PhaseMatching.SINC:
        return phase_matching_sinc(q, crystal)
    return phase_matching_gauss(q, crystal)


@dataclass(frozen=True)
class TwoPhotonState:
    vp: ComplexField2D
    vc: ComplexField2D
    crystal: CrystalSpec
    norm_constant: float = field(init=False)

    def __post_init__(self):
        if self.vp.grid != self.vc.grid or self.vp.grid.domain is not self.vc.grid.domain:
            raise ValueError("sum and difference grids must share size, pitch and domain")
        p = float(np.sum(np.abs(self.vp.values) ** 2))
        c = float(np.sum(np.abs(self.vc.values) ** 2))
        if not (p > 0 and c > 0):
            raise ValueError("degenerate state: pump spectrum or phase matching is identically zero")
        object.__setattr__(self, "norm_constant", 1.0 / math.sqrt(p * c * self.cell_measure))

    @property
    def grid(self) -> Grid2D:
        return self.vp.grid

    @property
    def domain(self) -> Domain:
        return self.grid.domain

    @property
    def sum_scale(self) -> float:
        """Physical ``q1 + q2`` (or ``x1 + x2``) per unit of grid coordinate."""
        return 1.0 if self.domain is Domain.MOMENTUM else 2.0

    @property
    def cell_measure(self) -> float:
        """``d^2k1 d^2k2`` volume attached to one pair-lattice point.

        The map (grid+, grid-) -> (k1, k2) has Jacobian ``(sum_scale^2 / 2)``
        per axis: 1/4 overall in momentum, 4 overall in position.
        """
        return self.grid.pitch**4 * (self.sum_scale**2 / 2.0) ** 2

    @property
    def photon_grid(self) -> Grid2D:
        """Lattice of single-photon coordinates reachable from the pair lattice."""
        return Grid2D(2 * self.grid.n, 0.5 * self.sum_scale * self.grid.pitch, self.domain)


def build_state(vp: ComplexField2D, crystal: CrystalSpec) -> TwoPhotonState:
    """Separable two-photon state for pump spectrum ``vp``.

    ``V_c`` is sampled on the same grid as ``vp``. Its unpaired Nyquist row
    and column (coordinate ``-n/2``) are set to zero so every sampled
    difference ``q-`` has its mirror ``-q-`` and exchange symmetry is exact.
    """
    if vp.grid.domain is not Domain.MOMENTUM:
        raise ValueError("build_state expects a pump angular spectrum on a momentum grid")
    if not np.any(vp.values != 0):
        raise ValueError("pump spectrum is identically zero")
    vc = np.asarray(phase_matching(vp.grid.radius(), crystal), dtype=complex)
    vc[0, :] = 0.0
    vc[:, 0] = 0.0
    return TwoPhotonState(vp, ComplexField2D(vp.grid, vc), crystal)


def _bilinear(values: np.ndarray, grid: Grid2D, coords: np.ndarray) -> np.ndarray:
    f = grid.fractional_index(coords)  # (..., 2) as (x, y)
    snapped = np.round(f)
    f = np.where(np.abs(f - snapped) < 1e-9, snapped, f)
    if np.any(f < 0) or np.any(f > grid.n - 1):
        raise ValueError("argument lies outside the sampled grid")
    i0 = np.minimum(np.floor(f).astype(int), grid.n - 2)
    t = f - i0
    ix, iy = i0[..., 0], i0[..., 1]
    tx, ty = t[..., 0], t[..., 1]
    return (
        values[iy, ix] * (1 - tx) * (1 - ty)
        + values[iy, ix + 1] * tx * (1 - ty)
        + values[iy + 1, ix] * (1 - tx) * ty
        + values[iy + 1, ix + 1] * tx * ty
    )


def evaluate_amplitude(state: TwoPhotonState, q1, q2):
    """``norm * V_p(q1 + q2) * V_c(q1 - q2)`` for coordinate pairs ``(..., 2)`` as (x, y).

    Values between samples are bilinearly interpolated; on-grid arguments
    reproduce the stored samples exactly. Raises ``ValueError`` outside the grid.
    """
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    if q1.shape[-1:] != (2,) or q2.shape != q1.shape:
        raise ValueError("q1 and q2 must be matching arrays of (x, y) pairs")
    s = (q1 + q2) / state.sum_scale
    d = (q1 - q2) / state.sum_scale
    out = state.norm_constant * _bilinear(state.vp.values, state.grid, s) * _bilinear(state.vc.values, state.grid, d)
    return complex(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class AnalyticBgParams:
    k_r: float
    w_g: float
    delta: float
    l: int = 0

    def __post_init__(self):
        if not (self.k_r > 0 and self.w_g > 0 and self.delta > 0):
            raise ValueError("k_r, w_g and delta must be positive")


def analytic_bg_state(p: AnalyticBgParams, q1, q2):
    """Closed-form state for a zeroth-order Bessel-Gauss pump with Gaussian phase matching.

    Returns, up to a constant factor,
    ``exp(-(|q+|^2 + k_r^2) w_g^2/4) I_0(k_r |q+| w_g^2/2) exp(-delta^2 |q-|^2/2)``,
    i.e. the pump waist enters through ``w0 = 2/w_g``. The overall prefactor
    is convention dependent and left to normalization.
    """
    if p.l != 0:
        raise NotImplementedError("closed form is only available for l = 0")
    q1 = np.asarray(q1, dtype=float)
    q2 = np.asarray(q2, dtype=float)
    qp = np.hypot(*np.moveaxis(q1 + q2, -1, 0))
    qm = np.hypot(*np.moveaxis(q1 - q2, -1, 0))
    a = 0.25 * p.w_g**2
    pump = np.exp(-a * (qp - p.k_r) ** 2) * bessel_i_scaled(0, 2.0 * a * p.k_r * qp)
    out = pump * np.exp(-0.5 * (p.delta * qm) ** 2) + 0j
    return complex(out) if np.ndim(out) == 0 else out


def passband_edge(crystal: CrystalSpec, threshold: float) -> float:
    """Smallest ``|q|`` where the main lobe of ``|V_c|`` drops to ``threshold`` of its peak."""
    if crystal.model is PhaseMatching.GAUSS:
        return math.sqrt(2.0 * math.log(1.0 / threshold)) / crystal.delta
    x = brentq(lambda x: float(sinc(x)) - threshold, 1e-12, math.pi)
    return math.sqrt(4.0 * crystal.K * x / crystal.length)


@dataclass(frozen=True)
class KernelDiagnostics:
    blocked_fraction: float
    observable: bool
    threshold: float


def kernel_check(vp: ComplexField2D, crystal: CrystalSpec, threshold: float = 0.01) -> KernelDiagnostics:
    """Does the phase-matching filter pass the pump's spatial frequencies?

    The passband edge is the ``|q|`` at which the main lobe of ``|V_c|``
    first falls to ``threshold`` times its peak; sinc sidelobes beyond it
    do not count as passed. A pump component at ``|q+|`` at or beyond the
    edge is counted as blocked: pairs that resolve that modulation would
    need ``|q1 - q2| ~ |q+|``, where ``V_c`` has cut off. The state is
    flagged observable when less than half the pump energy is blocked.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    edge = passband_edge(crystal, threshold)
    w = np.abs(vp.values) ** 2
    blocked = float(w[vp.grid.radius() >= edge].sum() / w.sum())
    return KernelDiagnostics(blocked, blocked < 0.5, threshold)
