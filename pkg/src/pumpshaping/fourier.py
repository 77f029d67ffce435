"""Sampled transverse planes and centered unitary Fourier transforms.

All 2D arrays are indexed ``values[iy, ix]`` (row = y). On an ``n``-point axis
the coordinate of index ``i`` is ``(i - n/2) * pitch`` so the zero coordinate
sits at index ``n/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

TWO_PI = 2.0 * math.pi


class Domain(str, Enum):
    POSITION = "position"
    MOMENTUM = "momentum"

    @property
    def conjugate(self) -> "Domain":
        return Domain.MOMENTUM if self is Domain.POSITION else Domain.POSITION


@dataclass(frozen=True)
class Grid2D:
    """Square, uniformly sampled grid in position (m) or momentum (rad/m)."""

    n: int
    pitch: float
    domain: Domain = Domain.POSITION
    # pitch of the grid this one was conjugated from; keeps conjugation an exact involution
    _dual_pitch: float | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2 or self.n % 2:
            raise ValueError(f"grid size must be a positive even integer, got {self.n}")
        if not (self.pitch > 0 and math.isfinite(self.pitch)):
            raise ValueError(f"grid pitch must be positive, got {self.pitch}")
        object.__setattr__(self, "domain", Domain(self.domain))

    @property
    def extent(self) -> float:
        return self.n * self.pitch

    @property
    def center(self) -> int:
        return self.n // 2

    def coords(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.pitch

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(X, Y)`` coordinate arrays of shape ``(n, n)``."""
        c = self.coords()
        return np.meshgrid(c, c, indexing="xy")

    def radius(self) -> np.ndarray:
        x, y = self.mesh()
        return np.hypot(x, y)

    def fractional_index(self, coord):
        """Continuous index of ``coord`` (scalar or array) along one axis."""
        return np.asarray(coord, dtype=float) / self.pitch + self.n // 2


def make_grid(n: int, extent: float, domain: Domain | str = Domain.POSITION) -> Grid2D:
    if int(n) != n or n < 8 or n % 2:
        raise ValueError(f"n must be an even integer >= 8, got {n}")
    if not extent > 0:
        raise ValueError(f"extent must be positive, got {extent}")
    return Grid2D(int(n), extent / n, Domain(domain))


def conjugate_grid(g: Grid2D) -> Grid2D:
    """Grid sampled by the DFT of a field on ``g`` (pitch ``2*pi/(n*pitch)``)."""
    pitch = g._dual_pitch if g._dual_pitch is not None else TWO_PI / (g.n * g.pitch)
    return Grid2D(g.n, pitch, g.domain.conjugate, _dual_pitch=g.pitch)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ComplexField2D:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.complex128)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"values shape {v.shape} does not match grid n={self.grid.n}")
        object.__setattr__(self, "values", _frozen(v))

    def energy(self) -> float:
        """Discrete L2 norm squared, ``sum |v|^2 * pitch^2``."""
        return float(np.sum(np.abs(self.values) ** 2) * self.grid.pitch**2)

    def normalized(self) -> "ComplexField2D":
        e = self.energy()
        if not e > 0:
            raise ValueError("cannot normalize an all-zero field")
        return ComplexField2D(self.grid, self.values / math.sqrt(e))

    def is_normalized(self, tol: float = 1e-10) -> bool:
        return abs(self.energy() - 1.0) <= tol

    def intensity(self) -> "RealField2D":
        return RealField2D(self.grid, np.abs(self.values) ** 2)


@dataclass(frozen=True)
class RealField2D:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"values shape {v.shape} does not match grid n={self.grid.n}")
        object.__setattr__(self, "values", _frozen(v))

    def total(self) -> float:
        return float(self.values.sum())

    def normalized(self) -> "RealField2D":
        """Scale to unit sum (a discrete probability map)."""
        s = self.total()
        if not s > 0:
            raise ValueError("cannot normalize a field with non-positive sum")
        return RealField2D(self.grid, self.values / s)


def dft2_centered(f: ComplexField2D, direction: str = "forward") -> ComplexField2D:
    """Unitary 2D DFT with the DC sample at the center before and after.

    The result lives on ``conjugate_grid(f.grid)``. ``forward`` uses the
    ``exp(-i q.x)`` kernel, ``inverse`` the ``exp(+i q.x)`` one; both are
    scaled by ``1/n`` so that the transform preserves ``sum |v|^2``.
    """
    v = np.fft.ifftshift(f.values)
    if direction == "forward":
        v = np.fft.fft2(v, norm="ortho")
    elif direction == "inverse":
        v = np.fft.ifft2(v, norm="ortho")
    else:
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    return ComplexField2D(conjugate_grid(f.grid), np.fft.fftshift(v))


def fourier_transform(f: ComplexField2D, direction: str = "forward") -> ComplexField2D:
    """Sampled continuous transform with the ``1/(2 pi)`` unitary convention.

    Differs from :func:`dft2_centered` by the factor ``pitch / conjugate pitch``,
    so ``energy()`` is preserved and samples approximate
    ``(1/2pi) * integral f(x) exp(-i q.x) d^2x`` for well-sampled fields.
    """
    out = dft2_centered(f, direction)
    return ComplexField2D(out.grid, out.values * (f.grid.pitch / out.grid.pitch))


def lens_coordinate(q, focal: float, wavelength: float):
    """Back-focal-plane position of transverse momentum ``q`` for an f-f lens."""
    return focal * wavelength * np.asarray(q) / TWO_PI


def lens_map(qgrid: Grid2D, focal: float, wavelength: float) -> Grid2D:
    """Camera-plane position grid seen through an f-f lens from a momentum grid."""
    if qgrid.domain is not Domain.MOMENTUM:
        raise ValueError("lens_map expects a momentum-domain grid")
    if not (focal > 0 and wavelength > 0):
        raise ValueError("focal length and wavelength must be positive")
    return Grid2D(qgrid.n, focal * wavelength * qgrid.pitch / TWO_PI, Domain.POSITION)


def inverse_lens_map(xgrid: Grid2D, focal: float, wavelength: float) -> Grid2D:
    if xgrid.domain is not Domain.POSITION:
        raise ValueError("inverse_lens_map expects a position-domain grid")
    if not (focal > 0 and wavelength > 0):
        raise ValueError("focal length and wavelength must be positive")
    return Grid2D(xgrid.n, TWO_PI * xgrid.pitch / (focal * wavelength), Domain.MOMENTUM)
