"""Photon-counting camera simulation and covariance recovery of pair correlations.

Pairs are sampled exactly from the separable state: ``q+`` from ``|V_p|^2``
and ``q-`` from ``|V_c|^2``, independently. Each photon then lands on the
pixel of its photon-lattice bin, so camera pixels and ``state.photon_grid``
samples coincide.

Random numbers come from counter-based streams keyed by
``(seed, purpose, frame chunk)``; frame contents therefore do not depend on
how the work is chunked or ordered elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ._rng import generator
from .observables import RowCorrelationMap, row_correlation_map, sum_projection
from .state import TwoPhotonState

_PAIR_STREAM = 3
_COUNT_STREAM = 4
_DETECT_STREAM = 5
_DARK_STREAM = 6
CHUNK_FRAMES = 4096


class Observable(str, Enum):
    ROW_MAP = "row_map"
    SUM_PROJECTION = "sum_projection"


@dataclass(frozen=True)
class CameraSpec:
    """Binary photon-counting sensor with ``n`` x ``n`` pixels.

    ``poisson=False`` puts exactly ``pairs_per_frame_mean`` pairs in every
    frame (must then be an integer), which makes occupancy deterministic.
    """

    n: int
    quantum_efficiency: float = 1.0
    dark_count_prob: float = 0.0
    pairs_per_frame_mean: float = 1.0
    poisson: bool = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"camera size must be an integer >= 2, got {self.n}")
        if not 0.0 <= self.quantum_efficiency <= 1.0:
            raise ValueError("quantum efficiency must lie in [0, 1]")
        if not 0.0 <= self.dark_count_prob < 1.0:
            raise ValueError("dark count probability must lie in [0, 1)")
        if not self.pairs_per_frame_mean > 0:
            raise ValueError("mean pairs per frame must be positive")
        if not self.poisson and int(self.pairs_per_frame_mean) != self.pairs_per_frame_mean:
            raise ValueError("fixed-count mode needs an integer number of pairs per frame")


def camera_for(state: TwoPhotonState, **kwargs) -> CameraSpec:
    return CameraSpec(n=state.photon_grid.n, **kwargs)


@dataclass(frozen=True)
class PairSample:
    """Photon pairs as photon-lattice indices ``[..., (iy, ix)]`` and coordinates ``(x, y)``."""

    idx1: np.ndarray
    idx2: np.ndarray
    q1: np.ndarray
    q2: np.ndarray

    def __len__(self) -> int:
        return self.idx1.shape[0]


def _cdf(w: np.ndarray) -> np.ndarray:
    c = np.cumsum(w.ravel())
    if not c[-1] > 0:
        raise ValueError("distribution has empty support")
    return c / c[-1]


def _draw_indices(state: TwoPhotonState, count: int, rng: np.random.Generator):
    n = state.grid.n
    cp = _cdf(np.abs(state.vp.values) ** 2)
    cm = _cdf(np.abs(state.vc.values) ** 2)
    u = rng.random((2, count))
    ks = np.minimum(np.searchsorted(cp, u[0], side="right"), n * n - 1)
    kd = np.minimum(np.searchsorted(cm, u[1], side="right"), n * n - 1)
    s = np.stack(np.divmod(ks, n), axis=-1) - n // 2  # (iy, ix) centered
    d = np.stack(np.divmod(kd, n), axis=-1) - n // 2
    # photon lattice index: m1 = s + d, m2 = s - d, offset by the lattice centre n
    return s + d + n, s - d + n


def sample_pairs(state: TwoPhotonState, count: int, seed: int) -> PairSample:
    """Exact inverse-CDF sampling of ``count`` pairs; deterministic per seed."""
    if int(count) != count or count < 1:
        raise ValueError("count must be a positive integer")
    i1, i2 = _draw_indices(state, int(count), generator(seed, _PAIR_STREAM))
    c = state.photon_grid.coords()
    q1 = np.stack([c[i1[:, 1]], c[i1[:, 0]]], axis=-1)
    q2 = np.stack([c[i2[:, 1]], c[i2[:, 0]]], axis=-1)
    return PairSample(i1, i2, q1, q2)


@dataclass(frozen=True)
class FrameStack:
    """``frames`` binary images of ``n`` x ``n`` pixels, bit-packed along rows."""

    packed: np.ndarray  # (frames, n, ceil(n/8)) uint8
    n: int
    seed: int

    def __post_init__(self):
        p = np.ascontiguousarray(self.packed, dtype=np.uint8)
        if p.ndim != 3 or p.shape[1] != self.n or p.shape[2] != (self.n + 7) // 8:
            raise ValueError("packed frame array does not match the frame size")
        p.flags.writeable = False
        object.__setattr__(self, "packed", p)

    @property
    def frames(self) -> int:
        return self.packed.shape[0]

    def bits(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Unpacked ``(frames, n, n)`` uint8 view of a frame range."""
        return np.unpackbits(self.packed[start:stop], axis=-1, count=self.n)

    @classmethod
    def from_bits(cls, bits: np.ndarray, seed: int = 0) -> "FrameStack":
        b = np.asarray(bits)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise ValueError("frames must have shape (F, n, n)")
        if np.any((b != 0) & (b != 1)):
            raise ValueError("frames must be binary")
        return cls(np.packbits(b.astype(np.uint8), axis=-1), b.shape[1], seed)


def _render_chunk(state: TwoPhotonState, camera: CameraSpec, nf: int, seed: int, chunk: int) -> np.ndarray:
    n = camera.n
    if camera.poisson:
        counts = generator(seed, _COUNT_STREAM, chunk).poisson(camera.pairs_per_frame_mean, nf)
    else:
        counts = np.full(nf, int(camera.pairs_per_frame_mean))
    total = int(counts.sum())
    frame_of = np.repeat(np.arange(nf), counts)
    out = np.zeros((nf, n, n), dtype=np.uint8)
    if total:
        i1, i2 = _draw_indices(state, total, generator(seed, _PAIR_STREAM, chunk))
        keep = generator(seed, _DETECT_STREAM, chunk).random((2, total)) < camera.quantum_efficiency
        out[frame_of[keep[0]], i1[keep[0], 0], i1[keep[0], 1]] = 1
        out[frame_of[keep[1]], i2[keep[1], 0], i2[keep[1], 1]] = 1
    if camera.dark_count_prob > 0:
        g = generator(seed, _DARK_STREAM, chunk)
        lit = g.random((nf, n, n)) < camera.dark_count_prob
        out |= lit.astype(np.uint8)
    return out


def render_frames(state: TwoPhotonState, camera: CameraSpec, frames: int, seed: int) -> FrameStack:
    """Simulate ``frames`` binary camera exposures.

    Per frame: a Poisson (or fixed) number of pairs, each photon detected
    independently with probability ``quantum_efficiency``, every pixel
    firing a dark count with probability ``dark_count_prob``; a pixel reads
    1 if anything arrived (binarization).
    """
    if int(frames) != frames or frames < 1:
        raise ValueError("frames must be a positive integer")
    if camera.n != state.photon_grid.n:
        raise ValueError(f"camera has {camera.n} pixels per axis, state lattice has {state.photon_grid.n}")
    if int(seed) != seed or seed < 0:
        raise ValueError("seed must be a non-negative integer")
    packed = []
    for chunk, start in enumerate(range(0, int(frames), CHUNK_FRAMES)):
        nf = min(CHUNK_FRAMES, int(frames) - start)
        packed.append(np.packbits(_render_chunk(state, camera, nf, int(seed), chunk), axis=-1))
    return FrameStack(np.concatenate(packed), camera.n, int(seed))


def simulate_frames(state: TwoPhotonState, frames: int, seed: int, **camera_kwargs) -> FrameStack:
    return render_frames(state, camera_for(state, **camera_kwargs), frames, seed)


@dataclass(frozen=True)
class CoincidenceEstimate:
    observable: Observable
    values: np.ndarray  # clipped at zero
    raw: np.ndarray  # unclipped covariance sums
    stderr: np.ndarray
    frames_used: int
    axis: np.ndarray = field(repr=False)

    def normalized_raw(self) -> np.ndarray:
        s = self.raw.sum()
        if not s > 0:
            raise ValueError("estimate carries no positive correlation")
        return self.raw / s


def _mirror_rows(n: int) -> np.ndarray:
    # row index i (coordinate i - n/2) pairs with n - i; row 0 has no partner
    return n - np.arange(1, n)


def _row_moments(b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sums over frames of ``s`` and of ``sum_y s[y, :] (x) s[-y, :]``."""
    n = b.shape[1]
    f = b.astype(np.float64)
    top = f[:, 1:, :]
    mir = f[:, _mirror_rows(n), :]
    prod = np.einsum("fyi,fyj->ij", top, mir, optimize=True)
    return f.sum(axis=0), prod


def _row_map(s1: np.ndarray, prod: np.ndarray, nframes: int) -> np.ndarray:
    n = s1.shape[0]
    mean = s1 / nframes
    g = prod / nframes - np.einsum("yi,yj->ij", mean[1:], mean[_mirror_rows(n)])
    # the centre row mirrors onto itself; its diagonal is a single pixel, not a pair
    c = n // 2
    diag = np.arange(n)
    g[diag, diag] -= mean[c] - mean[c] ** 2
    return g


def _sum_moments(b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sums over frames of ``s`` and of the pixel-pair histogram over ``m1 + m2``."""
    n = b.shape[1]
    f = b.astype(np.float64)
    size = 2 * n
    spec = np.fft.rfft2(f, s=(size, size))
    auto = np.fft.irfft2(spec * spec, s=(size, size)).sum(axis=0)
    return f.sum(axis=0), np.rint(auto)


def _sum_map(s1: np.ndarray, auto: np.ndarray, nframes: int) -> np.ndarray:
    n = s1.shape[0]
    size = 2 * n
    mean = s1 / nframes
    ms = np.fft.rfft2(mean, s=(size, size))
    g = auto / nframes - np.fft.irfft2(ms * ms, s=(size, size))
    # remove i == j terms: <s_i^2> - <s_i>^2 sits at index 2 i
    iy, ix = np.indices((n, n))
    np.add.at(g, (2 * iy, 2 * ix), -(mean - mean**2))
    # index k = i1 + i2 holds m1 + m2 = k - n; keep s = (m1 + m2)/2 on the sum grid
    base = n // 2
    ks = 2 * (np.arange(base) - base // 2) + n
    return g[np.ix_(ks, ks)]


def estimate_correlations(
    stack: FrameStack,
    observable: Observable | str = Observable.ROW_MAP,
    blocks: int = 20,
) -> CoincidenceEstimate:
    """Covariance estimate ``<s_i s_j> - <s_i><s_j>`` summed into a projection.

    ``ROW_MAP`` sums pixel pairs on mirrored rows by column (pairs of a pixel
    with itself are excluded); ``SUM_PROJECTION`` sums all distinct pixel
    pairs by the sum coordinate and returns it on the state's sum grid. The
    full pixel-pair covariance is never formed. Standard errors come from a
    delete-one-block jackknife over ``blocks`` contiguous frame blocks.
    """
    obs = Observable(observable)
    nframes = stack.frames
    if nframes < 2:
        raise ValueError("at least two frames are needed for a covariance estimate")
    nb = max(2, min(int(blocks), nframes))
    edges = np.linspace(0, nframes, nb + 1).astype(int)
    moments, finish = (_row_moments, _row_map) if obs is Observable.ROW_MAP else (_sum_moments, _sum_map)

    per_block = []
    for b0, b1 in zip(edges[:-1], edges[1:]):
        acc = None
        for start in range(b0, b1, CHUNK_FRAMES):
            m = moments(stack.bits(start, min(b1, start + CHUNK_FRAMES)))
            acc = m if acc is None else (acc[0] + m[0], acc[1] + m[1])
        per_block.append(acc)
    s1 = sum(p[0] for p in per_block)
    s2 = sum(p[1] for p in per_block)
    raw = finish(s1, s2, nframes)

    loo = np.stack([finish(s1 - p[0], s2 - p[1], nframes - (b1 - b0))
                    for p, b0, b1 in zip(per_block, edges[:-1], edges[1:])])
    stderr = np.sqrt((nb - 1) / nb * np.sum((loo - loo.mean(axis=0)) ** 2, axis=0))

    n = stack.n
    axis = np.arange(n) - n // 2 if obs is Observable.ROW_MAP else np.arange(n // 2) - n // 4
    return CoincidenceEstimate(obs, np.clip(raw, 0.0, None), raw, stderr, nframes, axis)


def estimated_row_map(est: CoincidenceEstimate, state: TwoPhotonState) -> RowCorrelationMap:
    """Wrap a row-map estimate with the axes of the state it was measured from."""
    if est.observable is not Observable.ROW_MAP:
        raise ValueError("estimate is not a row map")
    return RowCorrelationMap(est.values, state.photon_grid.coords(), state.grid.pitch * state.sum_scale)


def exact_reference(state: TwoPhotonState, observable: Observable | str) -> np.ndarray:
    """Noise-free counterpart of :func:`estimate_correlations`, unit sum."""
    obs = Observable(observable)
    if obs is Observable.ROW_MAP:
        return np.asarray(row_correlation_map(state, exclude_coincident=True).values)
    return np.asarray(sum_projection(state).values)


@dataclass(frozen=True)
class ConvergenceReport:
    frame_counts: tuple[int, ...]
    seeds: tuple[int, ...]
    errors: np.ndarray  # (len(frame_counts), len(seeds)) L1 errors
    slope: float

    @property
    def mean_errors(self) -> np.ndarray:
        return self.errors.mean(axis=1)

    def rows(self) -> list[tuple[int, float]]:
        return [(f, float(e)) for f, e in zip(self.frame_counts, self.mean_errors)]


def l1_error(estimate: CoincidenceEstimate, reference: np.ndarray) -> float:
    return float(np.abs(estimate.normalized_raw() - reference).sum())


def convergence_report(
    state: TwoPhotonState,
    camera: CameraSpec,
    frame_counts,
    seeds,
    observable: Observable | str = Observable.ROW_MAP,
) -> ConvergenceReport:
    """L1 error of the estimated observable against the exact one per ``(F, seed)``.

    The slope is a least-squares fit of ``log(mean error)`` against ``log F``.
    """
    fc = tuple(int(f) for f in frame_counts)
    sd = tuple(int(s) for s in seeds)
    if len(fc) < 3 or max(fc) < 10 * min(fc):
        raise ValueError("need at least three frame counts spanning a decade")
    if not sd:
        raise ValueError("need at least one seed")
    ref = exact_reference(state, observable)
    err = np.empty((len(fc), len(sd)))
    for i, f in enumerate(fc):
        for j, s in enumerate(sd):
            est = estimate_correlations(render_frames(state, camera, f, s), observable)
            err[i, j] = l1_error(est, ref)
    slope = float(np.polyfit(np.log(fc), np.log(err.mean(axis=1)), 1)[0])
    return ConvergenceReport(fc, sd, err, slope)


def expected_lit_pixels(camera: CameraSpec) -> float:
    """Mean lit pixels per frame ignoring pile-up: ``2 mu eta + n^2 p_d``."""
    return 2.0 * camera.pairs_per_frame_mean * camera.quantum_efficiency + camera.n**2 * camera.dark_count_prob

