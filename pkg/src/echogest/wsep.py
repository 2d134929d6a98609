"""The `.wsep` echo-profile container.

Layout (little-endian throughout):

    bytes 0..3   magic  b"WSEP"
    u32          version (currently 1)
    u32          channels
    u32          range_bins
    u64          frames
    f64          sample_rate
    f32 payload  values in [frame][channel][bin] order

Round-trips are bit-exact: the payload is stored exactly as float32 and read
back without rescaling.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .echo import DifferentialEchoProfile, EchoProfile
from .errors import BadMagicError, TruncatedFileError, VersionError

MAGIC = b"WSEP"
VERSION = 1
_HEADER = struct.Struct("<4sIIIQd")


def write_wsep(path, profile: EchoProfile) -> None:
    """Write an echo profile (raw or differential) as a `.wsep` file."""
    values = np.ascontiguousarray(profile.values, dtype="<f4")
    frames, channels, range_bins = values.shape
    header = _HEADER.pack(MAGIC, VERSION, channels, range_bins, frames, float(profile.sample_rate))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(values.tobytes())


def read_wsep(path, differential: bool | None = None) -> EchoProfile:
    """Read a `.wsep` file back into an EchoProfile (float64 values).

    Pass differential=True to get a DifferentialEchoProfile wrapper; by
    default the file is returned as a plain EchoProfile since the container
    does not distinguish the two.
    """
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise TruncatedFileError(
            f"{path}: header needs {_HEADER.size} bytes, file has {len(raw)}"
        )
    magic, version, channels, range_bins, frames, sample_rate = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise VersionError(f"{path}: unsupported version {version}, expected {VERSION}")
    expected = frames * channels * range_bins * 4
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise TruncatedFileError(
            f"{path}: payload has {len(payload)} bytes, header declares {expected}"
        )
    values = np.frombuffer(payload, dtype="<f4").reshape(frames, channels, range_bins)
    values = values.astype(np.float64)
    cls = DifferentialEchoProfile if differential else EchoProfile
    return cls(values=values, sample_rate=sample_rate)
