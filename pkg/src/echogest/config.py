"""Chirp band definitions and frame timing for the two-transmitter front end.

The transmit side runs two simultaneous linear up-chirps in disjoint
ultrasonic bands (18.0-21.0 kHz and 21.5-24.5 kHz). At 50 kHz sampling and
600 samples per chirp frame the frame rate is 83.33 Hz and one correlation
lag corresponds to c/(2*fs) = 3.43 mm of round-trip range, so 200 range bins
span 0.686 m.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import PreconditionError

SPEED_OF_SOUND = 343.0  # m/s, dry air at ~20 C

DEFAULT_SAMPLE_RATE = 50_000.0
DEFAULT_FRAME_LEN = 600
RANGE_BINS = 200
N_CHANNELS = 4  # (tx_a, mic0), (tx_b, mic0), (tx_a, mic1), (tx_b, mic1)

MIN_BAND_GAP_HZ = 400.0
MIN_FRAME_RATE_HZ = 83.0
EDGE_TAPER_FRACTION = 0.05


@dataclass(frozen=True)
class ChirpSpec:
    """One linear up-chirp: sweep band, sample rate, frame length, amplitude."""

    f_start: float
    f_end: float
    sample_rate: float = DEFAULT_SAMPLE_RATE
    n_samples: int = DEFAULT_FRAME_LEN
    amplitude: float = 1.0

    def validate(self):
        if not 0.0 < self.f_start:
            raise PreconditionError(f"f_start must be positive, got {self.f_start}")
        if not self.f_start < self.f_end:
            raise PreconditionError(
                f"need f_start < f_end, got {self.f_start} >= {self.f_end}"
            )
        if not self.f_end < self.sample_rate / 2.0:
            raise PreconditionError(
                f"f_end {self.f_end} violates Nyquist for fs={self.sample_rate}"
            )
        if self.n_samples < 2:
            raise PreconditionError(f"n_samples must be >= 2, got {self.n_samples}")
        if not 0.0 < self.amplitude <= 1.0:
            raise PreconditionError(
                f"amplitude must be in (0, 1], got {self.amplitude}"
            )
        return self

    @property
    def band(self) -> tuple[float, float]:
        return (self.f_start, self.f_end)


def _default_tx_a() -> ChirpSpec:
    return ChirpSpec(18_000.0, 21_000.0)


def _default_tx_b() -> ChirpSpec:
    return ChirpSpec(21_500.0, 24_500.0)


@dataclass(frozen=True)
class TransmitConfig:
    """The two-speaker transmit setup sharing one clock and frame length."""

    tx_a: ChirpSpec = field(default_factory=_default_tx_a)
    tx_b: ChirpSpec = field(default_factory=_default_tx_b)

    def validate(self):
        self.tx_a.validate()
        self.tx_b.validate()
        if self.tx_a.sample_rate != self.tx_b.sample_rate:
            raise PreconditionError("tx_a and tx_b must share one sample rate")
        if self.tx_a.n_samples != self.tx_b.n_samples:
            raise PreconditionError("tx_a and tx_b must share one frame length")
        gap = self.tx_b.f_start - self.tx_a.f_end
        if gap < MIN_BAND_GAP_HZ:
            raise PreconditionError(
                f"band guard gap {gap} Hz is below the required {MIN_BAND_GAP_HZ} Hz"
            )
        if self.frame_rate < MIN_FRAME_RATE_HZ:
            raise PreconditionError(
                f"frame rate {self.frame_rate:.2f} Hz is below {MIN_FRAME_RATE_HZ} Hz"
            )
        return self

    @property
    def sample_rate(self) -> float:
        return self.tx_a.sample_rate

    @property
    def frame_len(self) -> int:
        return self.tx_a.n_samples

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.frame_len

    @property
    def bin_range_m(self) -> float:
        """Round-trip range covered by one correlation lag."""
        return SPEED_OF_SOUND / (2.0 * self.sample_rate)


def default_transmit_config() -> TransmitConfig:
    return TransmitConfig().validate()
