"""Echo-profile computation: band filtering, frame-synchronous circular
cross-correlation, channel assembly, and consecutive-frame differencing.

An echo frame is the vector of circular cross-correlation values between one
received chirp frame (band-filtered to the transmitter's sweep band) and the
transmitted chirp template, truncated to the first 200 lags. A reflector at
round-trip delay d samples shows up as the peak of |correlation| at bin d.
Subtracting consecutive echo frames cancels static reflections and keeps
signed motion energy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chirp import generate_chirp
from .config import N_CHANNELS, RANGE_BINS, TransmitConfig
from .errors import AlignmentError, InsufficientDataError, PreconditionError

CHANNEL_ORDER = ("tx_a/mic0", "tx_b/mic0", "tx_a/mic1", "tx_b/mic1")


@dataclass
class ReceivedAudio:
    """One microphone's raw capture. mic_id 0 faces outward, 1 faces the body."""

    mic_id: int
    samples: np.ndarray
    sample_rate: float

    def validate(self):
        if self.mic_id not in (0, 1):
            raise PreconditionError(f"mic_id must be 0 or 1, got {self.mic_id}")
        if self.samples.ndim != 1:
            raise PreconditionError("samples must be one-dimensional")
        return self


@dataclass
class EchoProfile:
    """Per-frame, per-channel correlation vectors, shape (frames, 4, 200)."""

    values: np.ndarray
    sample_rate: float

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def channels(self) -> int:
        return self.values.shape[1]

    @property
    def range_bins(self) -> int:
        return self.values.shape[2]


@dataclass
class DifferentialEchoProfile(EchoProfile):
    """Consecutive-frame differences of an EchoProfile; one frame shorter."""


def band_filter(signal: np.ndarray, band: tuple[float, float], sample_rate: float) -> np.ndarray:
    """Brick-wall FFT band-pass along the last axis.

    Zeroes every FFT bin whose frequency falls outside [f_lo, f_hi]
    (negative frequencies mirrored), so the filter has zero group delay and
    the output length equals the input length.
    """
    f_lo, f_hi = band
    if not 0.0 < f_lo < f_hi < sample_rate / 2.0:
        raise PreconditionError(
            f"band ({f_lo}, {f_hi}) must satisfy 0 < f_lo < f_hi < fs/2 = {sample_rate / 2.0}"
        )
    x = np.asarray(signal, dtype=np.float64)
    n = x.shape[-1]
    if n < 2:
        raise PreconditionError(f"signal length must be >= 2, got {n}")
    spectrum = np.fft.rfft(x, axis=-1)
    freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate)
    spectrum *= (freqs >= f_lo) & (freqs <= f_hi)
    return np.fft.irfft(spectrum, n=n, axis=-1)


def echo_frame(rx_frame: np.ndarray, template: np.ndarray, range_bins: int = RANGE_BINS) -> np.ndarray:
    """Circular cross-correlation c[k] = sum_n rx[(n+k) mod L] * template[n],
    truncated to the first `range_bins` lags."""
    rx = np.asarray(rx_frame, dtype=np.float64)
    tpl = np.asarray(template, dtype=np.float64)
    if rx.shape[-1] != tpl.shape[-1]:
        raise AlignmentError(
            f"rx_frame length {rx.shape[-1]} != template length {tpl.shape[-1]}"
        )
    if rx.shape[-1] < range_bins:
        raise PreconditionError(
            f"frame length {rx.shape[-1]} shorter than range_bins {range_bins}"
        )
    n = rx.shape[-1]
    corr = np.fft.irfft(np.fft.rfft(rx, axis=-1) * np.conj(np.fft.rfft(tpl, axis=-1)), n=n, axis=-1)
    return corr[..., :range_bins]


def compute_echo_profile(
    mics: tuple[ReceivedAudio, ReceivedAudio], config: TransmitConfig
) -> EchoProfile:
    """Convert two aligned microphone streams into a 4-channel echo profile.

    For every frame and every (transmitter, microphone) pair the mic frame is
    band-filtered to the transmitter's band and correlated against that
    transmitter's chirp template. Channel order: (tx_a, mic0), (tx_b, mic0),
    (tx_a, mic1), (tx_b, mic1).
    """
    config.validate()
    mic0, mic1 = mics
    mic0.validate()
    mic1.validate()
    if mic0.sample_rate != config.sample_rate or mic1.sample_rate != config.sample_rate:
        raise AlignmentError("microphone sample rates must match the transmit config")
    if len(mic0.samples) != len(mic1.samples):
        raise AlignmentError(
            f"mic streams differ in length: {len(mic0.samples)} vs {len(mic1.samples)}"
        )
    frame_len = config.frame_len
    total = len(mic0.samples)
    if total < frame_len:
        raise InsufficientDataError(
            f"need at least one full frame ({frame_len} samples), got {total}"
        )
    if total % frame_len != 0:
        raise AlignmentError(
            f"stream length {total} is not a multiple of frame_len {frame_len}"
        )
    n_frames = total // frame_len
    templates = (generate_chirp(config.tx_a), generate_chirp(config.tx_b))
    bands = (config.tx_a.band, config.tx_b.band)

    values = np.empty((n_frames, N_CHANNELS, RANGE_BINS), dtype=np.float64)
    for mic in (mic0, mic1):
        frames = np.asarray(mic.samples, dtype=np.float64).reshape(n_frames, frame_len)
        for tx in (0, 1):
            filtered = band_filter(frames, bands[tx], config.sample_rate)
            values[:, 2 * mic.mic_id + tx, :] = echo_frame(filtered, templates[tx])
    return EchoProfile(values=values, sample_rate=config.sample_rate)


def trim_to_frames(samples: np.ndarray, frame_len: int) -> np.ndarray:
    """Drop the trailing partial frame so the stream is frame-aligned."""
    usable = (samples.shape[-1] // frame_len) * frame_len
    return samples[..., :usable]


def differentiate(profile: EchoProfile) -> DifferentialEchoProfile:
    """Signed consecutive-frame differences: out[t] = profile[t+1] - profile[t]."""
    if profile.frames < 2:
        raise InsufficientDataError(
            f"need at least 2 frames to differentiate, got {profile.frames}"
        )
    return DifferentialEchoProfile(
        values=profile.values[1:] - profile.values[:-1],
        sample_rate=profile.sample_rate,
    )
