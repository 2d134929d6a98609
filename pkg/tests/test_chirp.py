import numpy as np
import pytest
from scipy.signal import hilbert

from echogest.chirp import generate_chirp, transmit_stream
from echogest.config import ChirpSpec, default_transmit_config
from echogest.errors import PreconditionError


def band_energy_fraction(x, f_lo, f_hi, fs):
    """Independent oracle: fraction of FFT energy inside [f_lo, f_hi]."""
    spec = np.abs(np.fft.rfft(x)) ** 2
    freqs = np.fft.rfftfreq(len(x), 1.0 / fs)
    inside = (freqs >= f_lo) & (freqs <= f_hi)
    return spec[inside].sum() / spec.sum()


def test_chirp_length_and_amplitude():
    spec = ChirpSpec(18000, 21000, 50000, 600, 1.0)
    x = generate_chirp(spec)
    assert x.shape == (600,)
    assert np.abs(x).max() <= 1.0


def test_mid_chirp_instantaneous_frequency():
    # phase-difference estimate via the analytic signal, an oracle that does
    # not share code with the generator
    x = generate_chirp(ChirpSpec(18000, 21000, 50000, 600, 1.0))
    phase = np.unwrap(np.angle(hilbert(x)))
    inst_freq = np.diff(phase) * 50000 / (2 * np.pi)
    assert abs(inst_freq[300] - 19500.0) <= 50.0


def test_degenerate_sweep_rejected():
    with pytest.raises(PreconditionError):
        generate_chirp(ChirpSpec(20000, 20000, 50000, 600, 1.0))


@pytest.mark.parametrize("bad", [
    ChirpSpec(-1, 21000, 50000, 600, 1.0),
    ChirpSpec(18000, 26000, 50000, 600, 1.0),   # beyond Nyquist
    ChirpSpec(18000, 21000, 50000, 1, 1.0),
    ChirpSpec(18000, 21000, 50000, 600, 0.0),
    ChirpSpec(18000, 21000, 50000, 600, 1.5),
])
def test_invalid_specs_rejected(bad):
    with pytest.raises(PreconditionError):
        generate_chirp(bad)


def test_chirp_band_energy_confined():
    x = generate_chirp(ChirpSpec(18000, 21000, 50000, 600, 1.0))
    assert band_energy_fraction(x, 17800, 21200, 50000) >= 0.99


def test_transmit_stream_repeats_frames():
    cfg = default_transmit_config()
    a, b = transmit_stream(cfg, 3)
    assert a.shape == b.shape == (1800,)
    np.testing.assert_array_equal(a[600:1200], a[:600])
    np.testing.assert_array_equal(b[1200:], b[:600])


def test_transmit_stream_83_frames_is_about_one_second():
    cfg = default_transmit_config()
    a, _ = transmit_stream(cfg, 83)
    assert len(a) == 83 * 600
    assert len(a) / cfg.sample_rate == pytest.approx(0.996)


def test_transmit_streams_band_disjoint():
    cfg = default_transmit_config()
    a, b = transmit_stream(cfg, 10)
    # energy of each stream leaking into the sibling band stays under 1%
    assert band_energy_fraction(a, *cfg.tx_b.band, cfg.sample_rate) < 0.01
    assert band_energy_fraction(b, *cfg.tx_a.band, cfg.sample_rate) < 0.01


def test_transmit_stream_rejects_zero_frames():
    with pytest.raises(PreconditionError):
        transmit_stream(default_transmit_config(), 0)
