"""Pump synthesis: SLM phase masks, crystal-plane pump fields and their spectra.

The 4f relay between SLM and crystal is treated as ideal unit-magnification
imaging, so the crystal-plane pump is ``envelope * exp(i * mask.phase)``.
Masks that encode an amplitude pattern on a blazed carrier (the ring mask)
additionally need the relay's Fourier-plane iris, see
:func:`first_order_filter`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .fourier import (
    TWO_PI,
    ComplexField2D,
    Domain,
    Grid2D,
    conjugate_grid,
    fourier_transform,
)
from ._rng import uniform_field
from .special import bessel_i_scaled, bessel_j

PumpField = ComplexField2D
PumpAngularSpectrum = ComplexField2D

# 1/e radius of the autocorrelation of exp(i arg c), c a circular complex Gaussian
# field with correlation exp(-r^2 / (2 s^2)), measured in units of s
_PHASOR_WIDTH_FACTOR = 1.253997336420004

_MASK_STREAM = 1


class MaskKind(str, Enum):
    AXICON = "axicon"
    CHECKERBOARD = "checkerboard"
    RANDOM = "random"
    RING_FOURIER_BESSEL = "ring_fourier_bessel"
    FLAT = "flat"
    CUSTOM = "custom"


_REQUIRED_PARAMS = {
    MaskKind.AXICON: {"k_r"},
    MaskKind.CHECKERBOARD: {"tile_size", "depth"},
    MaskKind.RANDOM: {"seed", "correlation_length"},
    MaskKind.RING_FOURIER_BESSEL: {"k_r", "width", "focal", "wavelength", "radius", "period"},
    MaskKind.FLAT: set(),
    MaskKind.CUSTOM: set(),
}


@dataclass(frozen=True)
class PumpSpec:
    wavelength: float
    waist: float
    grid: Grid2D

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError(f"pump wavelength must be positive, got {self.wavelength}")
        if not self.waist > 0:
            raise ValueError(f"pump waist must be positive, got {self.waist}")
        if self.grid.domain is not Domain.POSITION:
            raise ValueError("pump grid must be a position-domain grid")
        if self.waist < 4 * self.grid.pitch:
            raise ValueError(
                f"waist {self.waist:g} m is undersampled; needs >= 4 pixels ({4 * self.grid.pitch:g} m)"
            )


def default_pump_spec(grid: Grid2D, wavelength: float = 405e-9) -> PumpSpec:
    """Pump with waist a quarter of the grid extent, so field and spectrum are both resolved."""
    return PumpSpec(wavelength, 0.25 * grid.extent, grid)


@dataclass(frozen=True)
class SlmMask:
    grid: Grid2D
    phase: np.ndarray
    kind: MaskKind = MaskKind.CUSTOM
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        kind = MaskKind(self.kind)
        object.__setattr__(self, "kind", kind)
        ph = np.asarray(self.phase, dtype=np.float64)
        if ph.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"mask shape {ph.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(ph)):
            raise ValueError("mask phase must be finite")
        ph = np.mod(ph, TWO_PI)
        ph[ph >= TWO_PI] = 0.0  # mod can round up to exactly 2*pi
        ph.flags.writeable = False
        object.__setattr__(self, "phase", ph)
        missing = _REQUIRED_PARAMS[kind] - set(self.params)
        if missing:
            raise ValueError(f"{kind.value} mask is missing parameters {sorted(missing)}")
        if kind in (MaskKind.FLAT, MaskKind.CUSTOM) and self.params:
            raise ValueError(f"{kind.value} mask takes no parameters")


def gaussian_envelope(spec: PumpSpec) -> ComplexField2D:
    r2 = spec.grid.radius() ** 2
    return ComplexField2D(spec.grid, np.exp(-r2 / spec.waist**2)).normalized()


def flat_mask(grid: Grid2D) -> SlmMask:
    return SlmMask(grid, np.zeros((grid.n, grid.n)), MaskKind.FLAT)


def custom_mask(grid: Grid2D, phase) -> SlmMask:
    return SlmMask(grid, phase, MaskKind.CUSTOM)


def axicon_mask(grid: Grid2D, k_r: float) -> SlmMask:
    """Conical phase ``-k_r * r`` (mod 2pi); its far field is a ring of radius ``k_r``."""
    if k_r < 0:
        raise ValueError("axicon k_r must be non-negative")
    if k_r >= math.pi / grid.pitch:
        raise ValueError(f"axicon k_r={k_r:g} rad/m exceeds the grid Nyquist limit {math.pi / grid.pitch:g}")
    return SlmMask(grid, -k_r * grid.radius(), MaskKind.AXICON, {"k_r": float(k_r)})


def checkerboard_mask(grid: Grid2D, tile_size: int, depth: float) -> SlmMask:
    if int(tile_size) != tile_size or tile_size < 1:
        raise ValueError(f"tile_size must be a positive integer, got {tile_size}")
    if not 0 <= depth < TWO_PI:
        raise ValueError(f"depth must lie in [0, 2pi), got {depth}")
    t = int(tile_size)
    i = np.arange(grid.n) // t
    board = (i[:, None] + i[None, :]) % 2
    return SlmMask(grid, depth * board, MaskKind.CHECKERBOARD, {"tile_size": t, "depth": float(depth)})


def random_mask(grid: Grid2D, seed: int, correlation_length: float) -> SlmMask:
    """Random phase pattern with a prescribed correlation length.

    I.i.d. uniform phases are low-pass filtered as unit phasors (which keeps
    the filtering consistent with phase wrapping) by a Gaussian kernel sized
    so that the autocorrelation of ``exp(i * phase)`` falls to 1/e at
    ``correlation_length``.
    """
    if correlation_length < grid.pitch:
        raise ValueError("correlation_length must be at least one grid pitch")
    theta = TWO_PI * uniform_field(int(seed), _MASK_STREAM, (grid.n, grid.n))
    s = correlation_length / _PHASOR_WIDTH_FACTOR
    q = conjugate_grid(grid).radius()
    # kernel exp(-r^2/s^2) <-> transfer exp(-q^2 s^2 / 4)
    transfer = np.fft.ifftshift(np.exp(-(q * s) ** 2 / 4.0))
    smooth = np.fft.ifft2(np.fft.fft2(np.exp(1j * theta)) * transfer)
    return SlmMask(
        grid,
        np.angle(smooth),
        MaskKind.RANDOM,
        {"seed": int(seed), "correlation_length": float(correlation_length)},
    )


def _first_order_coefficient(depth_fraction, period: int) -> np.ndarray:
    """First Fourier coefficient of a sampled blazed grating of depth ``2pi*M``."""
    k = np.arange(period)
    m = np.asarray(depth_fraction, dtype=float)[..., None]
    return np.mean(np.exp(1j * TWO_PI * (m - 1.0) * k / period), axis=-1)


def fourier_ring_radius(k_r: float, focal: float, wavelength: float) -> float:
    """Radius of the ring that a lens of focal ``focal`` maps to a Bessel beam of wavenumber ``k_r``."""
    return k_r * focal * wavelength / TWO_PI


def ring_fourier_bessel_mask(
    grid: Grid2D,
    k_r: float,
    width: float,
    focal: float = 0.2,
    wavelength: float = 405e-9,
    period: int = 4,
) -> SlmMask:
    """Phase-only hologram of a thin annulus (the Fourier transform of a Bessel beam).

    The annulus ``exp(-((r - rho)/width)^2)`` with
    ``rho = fourier_ring_radius(k_r, focal, wavelength)`` is encoded as the
    first diffraction order of a blazed grating of ``period`` pixels along x:
    the local blaze depth ``M`` is chosen so that the sampled first-order
    coefficient has modulus equal to the target amplitude, and its phase is
    compensated. The crystal-plane pump is then ring shaped and its angular
    spectrum Bessel-like; select the order with :func:`first_order_filter`.
    """
    if int(period) != period or period < 3:
        raise ValueError("carrier period must be an integer >= 3 pixels")
    if not (k_r > 0 and width > 0 and focal > 0 and wavelength > 0):
        raise ValueError("k_r, width, focal and wavelength must be positive")
    rho = fourier_ring_radius(k_r, focal, wavelength)
    if width < 2 * grid.pitch:
        raise ValueError("ring width must span at least two pixels")
    if rho >= 0.5 * grid.extent:
        raise ValueError(f"ring radius {rho:g} m does not fit in the grid half-extent {0.5 * grid.extent:g} m")
    period = int(period)
    amplitude = np.exp(-(((grid.radius() - rho) / width) ** 2))

    table_m = np.linspace(0.0, 1.0, 4097)
    table_c = _first_order_coefficient(table_m, period)
    depth = np.interp(amplitude, np.abs(table_c), table_m)
    compensation = -np.angle(_first_order_coefficient(depth, period))
    saw = (np.arange(grid.n) % period) / period
    phase = TWO_PI * depth * saw[None, :] + compensation
    params = {
        "k_r": float(k_r),
        "width": float(width),
        "focal": float(focal),
        "wavelength": float(wavelength),
        "radius": float(rho),
        "period": period,
    }
    return SlmMask(grid, phase, MaskKind.RING_FOURIER_BESSEL, params)


def ring_target_amplitude(mask: SlmMask) -> np.ndarray:
    """Amplitude pattern the ring mask is meant to deliver in its first order."""
    p = mask.params
    return np.exp(-(((mask.grid.radius() - p["radius"]) / p["width"]) ** 2))


def apply_mask(env: ComplexField2D, mask: SlmMask) -> PumpField:
    """Crystal-plane pump ``env * exp(i * phase)``, renormalized."""
    if env.grid != mask.grid:
        raise ValueError("envelope and mask grids differ")
    return ComplexField2D(env.grid, env.values * np.exp(1j * mask.phase)).normalized()


def _first_order(values: np.ndarray, grid: Grid2D, period: int) -> np.ndarray:
    carrier = TWO_PI / (period * grid.pitch)
    demod = values * np.exp(-1j * TWO_PI * np.arange(grid.n) / period)[None, :]
    q = conjugate_grid(grid).radius()
    iris = np.fft.ifftshift(q < 0.5 * carrier)
    return np.fft.ifft2(np.fft.fft2(demod) * iris)


def first_order_filter(field: ComplexField2D, mask: SlmMask) -> PumpField:
    """Keep the first diffraction order of a carrier-encoded mask (Fourier-plane iris).

    The iris is a disk of radius half the carrier frequency centred on the
    order; the carrier tilt is removed and the result renormalized.
    """
    if "period" not in mask.params:
        raise ValueError(f"{mask.kind.value} mask has no diffraction carrier")
    return ComplexField2D(field.grid, _first_order(field.values, field.grid, mask.params["period"])).normalized()


def first_order_efficiency(env: ComplexField2D, mask: SlmMask) -> float:
    """Fraction of the ideal amplitude-modulated field recovered in the first order.

    ``|<t, E1>|^2 / ||t||^4`` with ``t = amplitude * env`` (what a perfect
    amplitude modulator would deliver) and ``E1`` the unnormalized first order
    of ``env * exp(i * phase)``.
    """
    target = ring_target_amplitude(mask) * env.values
    e1 = _first_order(env.values * np.exp(1j * mask.phase), env.grid, mask.params["period"])
    overlap = np.vdot(target, e1)
    return float(abs(overlap) ** 2 / np.vdot(target, target).real ** 2)


def shape_pump(spec: PumpSpec, mask: SlmMask) -> PumpField:
    """Full SLM-to-crystal chain: Gaussian envelope, mask, and iris when the mask carries one."""
    pump = apply_mask(gaussian_envelope(spec), mask)
    if "period" in mask.params:
        pump = first_order_filter(pump, mask)
    return pump


def pump_angular_spectrum(p: PumpField) -> PumpAngularSpectrum:
    """Normalized pump angular spectrum on the conjugate momentum grid."""
    if p.grid.domain is not Domain.POSITION:
        raise ValueError("pump field must live on a position grid")
    return fourier_transform(p.normalized(), "forward").normalized()


def bessel_gauss_field(spec: PumpSpec, k_r: float, l: int = 0) -> PumpField:
    """Bessel-Gauss beam ``J_l(k_r r) exp(i l phi) exp(-r^2/w_g^2)`` at its waist, normalized."""
    if k_r < 0:
        raise ValueError("k_r must be non-negative")
    x, y = spec.grid.mesh()
    r = np.hypot(x, y)
    values = bessel_j(l, k_r * r) * np.exp(1j * l * np.arctan2(y, x)) * np.exp(-(r**2) / spec.waist**2)
    return ComplexField2D(spec.grid, values).normalized()


def bg_angular_spectrum_analytic(qgrid: Grid2D, l: int, k_r: float, w_g: float) -> ComplexField2D:
    """Closed-form angular spectrum of the order-``l`` Bessel-Gauss beam, normalized.

    With the forward kernel ``exp(-i q.x)`` and spectral waist ``w0 = 2/w_g``::

        V(q, phi_q) = (-i)^l (w_g / w0) exp(i l phi_q) exp(-(q^2 + k_r^2) / w0^2) I_l(2 k_r q / w0^2)

    evaluated as ``exp(-(q - k_r)^2 / w0^2) * [exp(-x) I_l(x)]`` so large
    arguments cannot overflow.
    """
    if qgrid.domain is not Domain.MOMENTUM:
        raise ValueError("analytic spectrum needs a momentum-domain grid")
    if int(l) != l or l < 0:
        raise ValueError(f"order l must be a non-negative integer, got {l}")
    if k_r < 0 or not w_g > 0:
        raise ValueError("k_r must be non-negative and w_g positive")
    w0 = 2.0 / w_g
    qx, qy = qgrid.mesh()
    q = np.hypot(qx, qy)
    radial = np.exp(-((q - k_r) ** 2) / w0**2) * bessel_i_scaled(int(l), 2.0 * k_r * q / w0**2)
    values = (-1j) ** l * (w_g / w0) * np.exp(1j * l * np.arctan2(qy, qx)) * radial
    return ComplexField2D(qgrid, values).normalized()
