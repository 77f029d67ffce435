"""Inverse design of a phase mask for a target sum-coordinate distribution.

Because the sum-coordinate projection of the pair distribution equals the
normalized ``|V_p|^2``, shaping the autoconvolution is a phase-retrieval
problem: find an SLM phase such that the Gaussian-enveloped pump has the
target far-field intensity. Solved by Gerchberg-Saxton error reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import uniform_field
from .fourier import TWO_PI, Domain, RealField2D, conjugate_grid
from .pump import PumpSpec, SlmMask, custom_mask, gaussian_envelope

_TAILOR_STREAM = 2


@dataclass(frozen=True)
class TailorResult:
    mask: SlmMask
    residual: float
    history: np.ndarray  # residual of the best mask after each iteration


def _residual(spectrum: np.ndarray, target_amp: np.ndarray) -> float:
    a = np.abs(spectrum)
    a = a / np.linalg.norm(a)
    return float(np.linalg.norm(a - target_amp))


def _radial_transport_phase(spec: PumpSpec, target: np.ndarray) -> np.ndarray:
    """Geometric-optics start: phase whose radial gradient maps envelope rings onto target rings.

    Matches the cumulative radial energy of the envelope and of the
    azimuthally averaged target, ``C_env(r) = C_target(q(r))``, and
    integrates ``q(r)`` along r.
    """
    grid = spec.grid
    qgrid = conjugate_grid(grid)
    nb = grid.n // 2
    q_edges = np.arange(nb + 1) * qgrid.pitch
    qr = qgrid.radius().ravel()
    t_hist, _ = np.histogram(qr, bins=q_edges, weights=target.ravel())
    c_t = np.concatenate([[0.0], np.cumsum(t_hist)])
    c_t /= c_t[-1]
    r = np.linspace(0.0, 0.5 * grid.extent * np.sqrt(2.0), 4 * grid.n)
    c_env = 1.0 - np.exp(-2.0 * r**2 / spec.waist**2)
    # strictly increasing abscissa for the inverse interpolation
    keep = np.concatenate([[True], np.diff(c_t) > 0])
    q_of_r = np.interp(c_env, c_t[keep], q_edges[keep])
    phi = np.concatenate([[0.0], np.cumsum(0.5 * (q_of_r[1:] + q_of_r[:-1]) * np.diff(r))])
    return np.interp(grid.radius(), r, phi)


def tailor_pump_to_target(
    target: RealField2D,
    spec: PumpSpec,
    iterations: int = 50,
    seed: int = 0,
) -> TailorResult:
    """Gerchberg-Saxton search for a phase mask whose pump spectrum matches ``target``.

    Alternates between imposing ``sqrt(target)`` as spectral modulus (keeping
    the current spectral phase) and imposing the Gaussian envelope as the
    SLM-plane modulus (phase-only freedom). The residual is the L2 distance
    between unit-norm spectral moduli, ``|| |V|/||V|| - sqrt(T)/||sqrt(T)|| ||``.

    Three starts are iterated: a flat mask, a radial energy-transport phase
    and a uniform random phase drawn from ``seed``. The best mask seen over
    all starts is returned, so ``history`` (best residual after each
    iteration) is non-increasing.
    """
    if int(iterations) != iterations or iterations < 1:
        raise ValueError("iterations must be a positive integer")
    qgrid = conjugate_grid(spec.grid)
    if target.grid.domain is not Domain.MOMENTUM or target.grid.n != qgrid.n or not np.isclose(
        target.grid.pitch, qgrid.pitch, rtol=1e-12
    ):
        raise ValueError("target must live on the pump's conjugate momentum grid")
    t = np.asarray(target.values)
    if np.any(t < 0) or not np.all(np.isfinite(t)) or not t.sum() > 0:
        raise ValueError("target must be finite, non-negative and not all zero")
    target_amp = np.sqrt(t)
    target_amp = target_amp / np.linalg.norm(target_amp)

    env = np.abs(gaussian_envelope(spec).values)

    def forward(ph):
        return np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(env * np.exp(1j * ph))))

    starts = [
        np.zeros_like(env),
        _radial_transport_phase(spec, t),
        TWO_PI * uniform_field(int(seed), _TAILOR_STREAM, env.shape),
    ]
    best_phase, best = None, np.inf
    history = np.full(int(iterations), np.inf)
    for phase in starts:
        spectrum = forward(phase)
        r = _residual(spectrum, target_amp)
        if r < best:
            best, best_phase = r, phase
        history[0] = min(history[0], r)
        for it in range(int(iterations)):
            projected = target_amp * np.exp(1j * np.angle(spectrum))
            back = np.fft.fftshift(np.fft.ifft2(np.fft.ifftshift(projected)))
            phase = np.angle(back)
            spectrum = forward(phase)
            r = _residual(spectrum, target_amp)
            if r < best:
                best, best_phase = r, phase
            history[it] = min(history[it], r)
    history = np.minimum.accumulate(history)
    mask = custom_mask(spec.grid, np.mod(best_phase, TWO_PI))
    return TailorResult(mask, best, history)


def forward_sum_projection(spec: PumpSpec, mask: SlmMask) -> RealField2D:
    """Normalized ``|V_p|^2`` produced by ``mask`` (the autoconvolution it would yield)."""
    env = gaussian_envelope(spec).values
    v = np.fft.fftshift(np.fft.fft2(np.fft.ifftshift(env * np.exp(1j * mask.phase))))
    p = np.abs(v) ** 2
    return RealField2D(conjugate_grid(spec.grid), p / p.sum())
