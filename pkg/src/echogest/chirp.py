"""Linear up-chirp synthesis and continuous two-speaker transmit streams."""

from __future__ import annotations

import numpy as np

from .config import EDGE_TAPER_FRACTION, ChirpSpec, TransmitConfig
from .errors import PreconditionError


def generate_chirp(spec: ChirpSpec) -> np.ndarray:
    """Synthesize one chirp frame.

    The phase is phi(n) = 2*pi*(f_start*n/fs + (f_end-f_start)*n^2/(2*N*fs)),
    so the instantaneous frequency sweeps linearly from f_start at sample 0
    to f_end at sample N. A raised-cosine taper over the first and last 5%
    of samples limits spectral splatter into the sibling band.
    """
    spec.validate()
    n = np.arange(spec.n_samples, dtype=np.float64)
    fs = spec.sample_rate
    sweep = spec.f_end - spec.f_start
    phase = 2.0 * np.pi * (spec.f_start * n / fs + sweep * n**2 / (2.0 * spec.n_samples * fs))
    x = spec.amplitude * np.sin(phase)
    return x * _edge_taper(spec.n_samples)


def _edge_taper(n_samples: int, fraction: float = EDGE_TAPER_FRACTION) -> np.ndarray:
    n_edge = int(round(n_samples * fraction))
    w = np.ones(n_samples, dtype=np.float64)
    if n_edge > 0:
        ramp = 0.5 * (1.0 - np.cos(np.pi * np.arange(n_edge) / n_edge))
        w[:n_edge] = ramp
        w[-n_edge:] = ramp[::-1]
    return w


def transmit_stream(config: TransmitConfig, n_frames: int) -> tuple[np.ndarray, np.ndarray]:
    """Back-to-back chirp repetition for both speakers, no inter-frame gaps."""
    config.validate()
    if n_frames < 1:
        raise PreconditionError(f"n_frames must be >= 1, got {n_frames}")
    return (
        np.tile(generate_chirp(config.tx_a), n_frames),
        np.tile(generate_chirp(config.tx_b), n_frames),
    )
