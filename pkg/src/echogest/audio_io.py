"""Raw two-microphone audio I/O.

Native format `.f32x2`: header-less little-endian float32, interleaved by
microphone (mic0 sample, mic1 sample, ...). Standard 2-channel float WAV is
accepted as input as well.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.io import wavfile

from .errors import FormatError, TruncatedFileError


def write_f32x2(path, stereo: np.ndarray) -> None:
    """Write a (2, n) array as interleaved float32."""
    if stereo.ndim != 2 or stereo.shape[0] != 2:
        raise FormatError(f"expected shape (2, n), got {stereo.shape}")
    interleaved = np.ascontiguousarray(stereo.T, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(interleaved.tobytes())


def read_f32x2(path) -> np.ndarray:
    """Read interleaved float32 back into a (2, n) float64 array."""
    raw = Path(path).read_bytes()
    if len(raw) % 8 != 0:
        raise TruncatedFileError(
            f"{path}: length {len(raw)} is not a whole number of 2-channel float32 frames"
        )
    flat = np.frombuffer(raw, dtype="<f4")
    return flat.reshape(-1, 2).T.astype(np.float64)


def read_stereo(path, expected_rate: float | None = None) -> np.ndarray:
    """Read `.f32x2` or 2-channel float WAV, returning shape (2, n) float64."""
    path = Path(path)
    if path.suffix.lower() == ".wav":
        rate, data = wavfile.read(path)
        if data.ndim != 2 or data.shape[1] != 2:
            raise FormatError(f"{path}: expected 2-channel WAV, got shape {data.shape}")
        if data.dtype.kind != "f":
            raise FormatError(f"{path}: expected float WAV, got dtype {data.dtype}")
        if expected_rate is not None and rate != expected_rate:
            raise FormatError(
                f"{path}: WAV sample rate {rate} does not match expected {expected_rate}"
            )
        return data.T.astype(np.float64)
    return read_f32x2(path)
