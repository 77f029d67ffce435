"""Projections and correlation maps of the two-photon distribution.

Fast paths exploit the separable form: every projection reduces to sums and
convolutions of ``|V_p|^2`` and ``|V_c|^2``. :func:`brute_force_jpd` is the
direct 4D oracle they are tested against.

Single-photon quantities live on ``state.photon_grid`` (size ``2n``). The
photon index ``m`` (centered, ``m = i - n``) relates to the sum/difference
indices by ``m1 = s + d`` and ``m2 = s - d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import fftconvolve

from .fourier import Domain, Grid2D, RealField2D, fourier_transform, lens_map
from .state import TwoPhotonState, evaluate_amplitude

SumProjection = RealField2D

BRUTE_FORCE_MAX_N = 16
CLUSTER_RADIUS_BINS = 2


class ImagingMode(str, Enum):
    NEAR_FIELD = "near_field"
    FAR_FIELD = "far_field"


@dataclass(frozen=True)
class ImagingConfig:
    """Relay from crystal to camera: 2f-2f (near field) or f-f (far field)."""

    d: float
    mode: ImagingMode = ImagingMode.FAR_FIELD
    wavelength_dc: float = 810e-9

    def __post_init__(self):
        if not self.d > 0:
            raise ValueError(f"crystal-to-sensor distance must be positive, got {self.d}")
        if not self.wavelength_dc > 0:
            raise ValueError("down-converted wavelength must be positive")
        object.__setattr__(self, "mode", ImagingMode(self.mode))

    @property
    def focal(self) -> float:
        return self.d / 4.0 if self.mode is ImagingMode.NEAR_FIELD else self.d / 2.0


def _pair_scale(state: TwoPhotonState) -> float:
    return state.norm_constant**2 * state.cell_measure


def sum_projection(state: TwoPhotonState, normalize: bool = True) -> RealField2D:
    """``A(q+) = sum_{q-} |Phi|^2 = norm^2 |V_p(q+)|^2 sum |V_c|^2`` on the sum grid."""
    a = np.abs(state.vp.values) ** 2 * (np.sum(np.abs(state.vc.values) ** 2) * _pair_scale(state))
    grid = Grid2D(state.grid.n, state.grid.pitch * state.sum_scale, state.domain)
    f = RealField2D(grid, a)
    return f.normalized() if normalize else f


def minus_projection(state: TwoPhotonState, normalize: bool = True) -> RealField2D:
    """``B(q-) = sum_{q+} |Phi|^2``, proportional to ``|V_c|^2``."""
    b = np.abs(state.vc.values) ** 2 * (np.sum(np.abs(state.vp.values) ** 2) * _pair_scale(state))
    grid = Grid2D(state.grid.n, state.grid.pitch * state.sum_scale, state.domain)
    f = RealField2D(grid, b)
    return f.normalized() if normalize else f


@dataclass(frozen=True)
class RowCorrelationMap:
    """``values[i1, i2]``: probability of photon 1 at column ``axis[i1]`` and
    photon 2 at column ``axis[i2]`` on mirrored rows ``y2 = -y1``."""

    values: np.ndarray
    axis: np.ndarray
    bin: float  # spacing of the sum coordinate k_x1 + k_x2

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        a = np.array(self.axis, dtype=float)
        if v.ndim != 2 or v.shape != (a.size, a.size):
            raise ValueError("row map must be square and match its axis")
        v.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "axis", a)


def row_correlation_map(state: TwoPhotonState, exclude_coincident: bool = False) -> RowCorrelationMap:
    """Joint probability summed over symmetric row pairs, normalized to unit sum.

    ``M(kx1, kx2) = sum_{ky1} |Phi((kx1, ky1), (kx2, -ky1))|^2``. Mirrored rows
    force ``q+_y = 0``, so ``M`` is the centre row of ``|V_p|^2`` times the
    column sums of ``|V_c|^2`` scattered onto the photon lattice.

    ``exclude_coincident`` drops events where both photons hit the same
    pixel, which a binary camera cannot register as a pair.
    """
    n = state.grid.n
    c = n // 2
    a = np.abs(state.vp.values[c, :]) ** 2
    b = np.sum(np.abs(state.vc.values) ** 2, axis=0)
    p = np.outer(a, b) * _pair_scale(state)
    if exclude_coincident:
        # same pixel means m1 = m2 in both axes: d = 0 and d_y = 0
        p[:, c] -= a * abs(state.vc.values[c, c]) ** 2 * _pair_scale(state)
    idx = np.arange(n) - c
    m1 = idx[:, None] + idx[None, :]
    m2 = idx[:, None] - idx[None, :]
    out = np.zeros((2 * n, 2 * n))
    out[m1 + n, m2 + n] = p
    out = np.clip(out, 0.0, None)
    total = out.sum()
    if total > 0:
        out /= total
    return RowCorrelationMap(out, state.photon_grid.coords(), state.grid.pitch * state.sum_scale)


def intensity_marginal(state: TwoPhotonState, normalize: bool = True) -> RealField2D:
    """Single-photon distribution ``I(q1) = sum_{q2} |Phi|^2`` on the photon grid.

    Equals the 2D convolution of ``|V_p|^2`` and ``|V_c|^2`` because
    ``q1 = (q+ + q-)/2``.
    """
    n = state.grid.n
    conv = fftconvolve(np.abs(state.vp.values) ** 2, np.abs(state.vc.values) ** 2, mode="full")
    out = np.zeros((2 * n, 2 * n))
    out[: 2 * n - 1, : 2 * n - 1] = np.clip(conv, 0.0, None) * _pair_scale(state)
    f = RealField2D(state.photon_grid, out)
    return f.normalized() if normalize else f


def near_field_state(state: TwoPhotonState) -> TwoPhotonState:
    """Position representation ``psi(x1, x2) = E((x1 + x2)/2) W((x1 - x2)/2)``.

    ``E`` and ``W`` are the inverse transforms of ``V_p`` and ``V_c``. Since
    ``q1.x1 + q2.x2 = q+.(x1 + x2)/2 + q-.(x1 - x2)/2``, the position grids
    carry the mean and half-difference coordinates.
    """
    if state.domain is not Domain.MOMENTUM:
        raise ValueError("near_field_state expects a momentum-space state")
    return TwoPhotonState(
        fourier_transform(state.vp, "inverse"), fourier_transform(state.vc, "inverse"), state.crystal
    )


def far_field_state(state: TwoPhotonState) -> TwoPhotonState:
    """Inverse of :func:`near_field_state`."""
    if state.domain is not Domain.POSITION:
        raise ValueError("far_field_state expects a position-space state")
    return TwoPhotonState(
        fourier_transform(state.vp, "forward"), fourier_transform(state.vc, "forward"), state.crystal
    )


def map_to_camera(field: RealField2D, cfg: ImagingConfig) -> RealField2D:
    """Relabel a crystal-plane or far-field distribution in camera-plane metres.

    Far field: ``x = f lambda_dc q / 2pi`` with ``f = d/2``. Near field: the
    2f-2f relay images at magnification -1, so the map is point-reflected
    about the centre sample (the unpaired Nyquist row wraps onto itself).
    """
    g = field.grid
    if cfg.mode is ImagingMode.FAR_FIELD:
        if g.domain is not Domain.MOMENTUM:
            raise ValueError("far-field imaging needs a momentum-domain distribution")
        return RealField2D(lens_map(g, cfg.focal, cfg.wavelength_dc), field.values)
    if g.domain is not Domain.POSITION:
        raise ValueError("near-field imaging needs a position-domain distribution")
    flipped = np.roll(field.values[::-1, ::-1], 1, axis=(0, 1))
    return RealField2D(Grid2D(g.n, g.pitch, Domain.POSITION), flipped)


@dataclass(frozen=True)
class Ridge:
    offset: float  # k_x1 + k_x2 at the cluster centre
    strength: float  # mean peak value over member columns
    columns: int


@dataclass(frozen=True)
class RidgeReport:
    ridges: tuple[Ridge, ...]
    threshold: float
    bin: float

    @property
    def offsets(self) -> np.ndarray:
        return np.array([r.offset for r in self.ridges])

    @property
    def strengths(self) -> np.ndarray:
        return np.array([r.strength for r in self.ridges])


def _column_peaks(s: np.ndarray, f: np.ndarray, threshold: float) -> list[tuple[int, float]]:
    """Local maxima of ``f`` over consecutive offsets ``s`` (end points excluded)."""
    peaks = []
    cmax = f.max()
    for k in range(1, f.size - 1):
        if f[k] >= f[k - 1] and f[k] >= f[k + 1] and f[k] > 0 and f[k] >= threshold * cmax:
            peaks.append((int(s[k]), float(f[k])))
    # plateaus: keep the member closest to zero offset
    merged: list[tuple[int, float]] = []
    for p in peaks:
        if merged and p[0] == merged[-1][0] + 1 and p[1] == merged[-1][1]:
            if abs(p[0]) < abs(merged[-1][0]):
                merged[-1] = p
            continue
        merged.append(p)
    if threshold >= 1.0 and len(merged) > 1:
        merged = [min(merged, key=lambda p: (-p[1], abs(p[0]), p[0]))]
    return merged


def ridge_extract(
    m: RowCorrelationMap,
    threshold: float = 0.5,
    column_floor: float = 0.05,
    min_columns: int = 1,
    stderr: np.ndarray | None = None,
    z: float = 3.0,
) -> RidgeReport:
    """Locate antidiagonal ridges ``k_x1 + k_x2 = const`` of a row map.

    In each column whose maximum exceeds ``column_floor`` times the global
    maximum, local maxima along the offset ``o = k_x1 + k_x2`` above
    ``threshold`` times the column maximum are collected. Peaks are grouped
    greedily, strongest first, into clusters of radius two offset bins; a
    cluster's offset is the strength-weighted mean of its members. Clusters
    supported by fewer than ``min_columns`` columns are dropped.

    For estimated maps, pass the standard-error map as ``stderr``: entries
    below ``z`` standard errors are treated as zero before peak finding.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    v = m.values
    if v.size == 0 or not np.any(v > 0):
        raise ValueError("row map is empty")
    if stderr is not None:
        se = np.asarray(stderr, dtype=float)
        if se.shape != v.shape:
            raise ValueError("stderr map must match the row map")
        v = np.where(v > z * se, v, 0.0)
        if not np.any(v > 0):
            return RidgeReport((), float(threshold), float(m.bin))
    gmax = v.max()
    o = (m.axis[:, None] + m.axis[None, :]) / m.bin
    so = np.round(o)
    on_lattice = np.abs(o - so) < 1e-6

    found: list[tuple[int, float]] = []
    for i1 in range(v.shape[0]):
        sel = on_lattice[i1]
        f = v[i1, sel]
        if f.size < 3 or f.max() < column_floor * gmax:
            continue
        s = so[i1, sel]
        order = np.argsort(s)
        found.extend(_column_peaks(s[order], f[order], threshold))

    clusters: list[list[tuple[int, float]]] = []
    seeds: list[int] = []
    for off, val in sorted(found, key=lambda p: (-p[1], abs(p[0]), p[0])):
        for k, seed in enumerate(seeds):
            if abs(off - seed) <= CLUSTER_RADIUS_BINS:
                clusters[k].append((off, val))
                break
        else:
            seeds.append(off)
            clusters.append([(off, val)])

    ridges = []
    for members in clusters:
        if len(members) < min_columns:
            continue
        w = np.array([p[1] for p in members])
        offs = np.array([p[0] for p in members], dtype=float)
        ridges.append(Ridge(float(np.dot(w, offs) / w.sum()) * m.bin, float(w.mean()), len(members)))
    ridges.sort(key=lambda r: r.offset)
    return RidgeReport(tuple(ridges), float(threshold), float(m.bin))


def brute_force_jpd(state: TwoPhotonState) -> np.ndarray:
    """``|Phi(q1, q2)|^2 * cell`` on the full photon lattice, shape ``(2n,) * 4``.

    Indexed ``[i1y, i1x, i2y, i2x]``. Every lattice pair whose sum and
    difference land on stored samples is evaluated pointwise through
    :func:`evaluate_amplitude`; all other pairs are outside the support.
    """
    n = state.grid.n
    if n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute-force JPD refused for n={n} > {BRUTE_FORCE_MAX_N}")
    pg = state.photon_grid
    m = np.arange(2 * n) - n
    # (m1 + m2) even and both s, d inside [-n/2, n/2)
    s = (m[:, None] + m[None, :]) / 2
    d = (m[:, None] - m[None, :]) / 2
    ok1 = ((m[:, None] + m[None, :]) % 2 == 0) & (s >= -n // 2) & (s < n // 2) & (d >= -n // 2) & (d < n // 2)
    i1, i2 = np.nonzero(ok1)  # valid (m1, m2) index pairs along one axis
    c = pg.coords()
    out = np.zeros((2 * n,) * 4)
    cell = state.cell_measure
    for a, b in zip(i1, i2):  # y pairs
        q1 = np.stack([c[i1], np.full(i1.size, c[a])], axis=-1)
        q2 = np.stack([c[i2], np.full(i2.size, c[b])], axis=-1)
        amp = evaluate_amplitude(state, q1, q2)
        out[a, i1, b, i2] = np.abs(amp) ** 2 * cell
    return out


def radial_profile(field: RealField2D, bins: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Azimuthal average of ``field`` in rings of width ``pitch``.

    Returns ``(radius, mean)`` with ring centres ``(k + 1/2) * pitch``.
    """
    g = field.grid
    nb = bins if bins is not None else g.n // 2
    r = g.radius().ravel() / g.pitch
    k = np.floor(r).astype(int)
    keep = k < nb
    tot = np.bincount(k[keep], weights=field.values.ravel()[keep], minlength=nb)
    cnt = np.bincount(k[keep], minlength=nb)
    mean = np.divide(tot, cnt, out=np.zeros(nb), where=cnt > 0)
    return (np.arange(nb) + 0.5) * g.pitch, mean


def ring_peak_radius(field: RealField2D) -> float:
    """Radius of the maximum of the azimuthal average (nearest-bin resolution)."""
    g = field.grid
    r = g.radius() / g.pitch
    k = np.rint(r).astype(int)
    nb = g.n // 2
    keep = k < nb
    tot = np.bincount(k[keep], weights=field.values[keep], minlength=nb)
    cnt = np.bincount(k[keep], minlength=nb)
    mean = np.divide(tot, cnt, out=np.zeros(nb), where=cnt > 0)
    return float(np.argmax(mean) * g.pitch)


__all__ = [
    "BRUTE_FORCE_MAX_N",
    "ImagingConfig",
    "ImagingMode",
    "Ridge",
    "RidgeReport",
    "RowCorrelationMap",
    "SumProjection",
    "brute_force_jpd",
    "far_field_state",
    "intensity_marginal",
    "map_to_camera",
    "minus_projection",
    "near_field_state",
    "radial_profile",
    "ridge_extract",
    "ring_peak_radius",
    "row_correlation_map",
    "sum_projection",
]
