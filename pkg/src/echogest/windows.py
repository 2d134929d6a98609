"""Model-input preparation: sliding windows over differential echo profiles,
jittered crops, patch decomposition, Gaussian augmentation, and per-channel
standardization.

Shape chain: (4, 200, 83) window -> (4, 200, 80) crop -> 16 patches x 4000.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .echo import DifferentialEchoProfile
from .errors import InsufficientDataError, PreconditionError

WINDOW_FRAMES = 83   # 1.00 s at the 83.33 Hz frame rate
WINDOW_HOP = 41      # 50% overlap, floor(83/2)
CROP_FRAMES = 80
CROP_MAX_START = WINDOW_FRAMES - CROP_FRAMES  # jitter start in {0..3}
PATCHES_PER_CHANNEL = 4
PATCH_FRAMES = CROP_FRAMES // PATCHES_PER_CHANNEL  # 20
N_PATCHES = 16
PATCH_DIM = 4000  # 200 bins x 20 frames, flattened bin-major


@dataclass
class EchoWindow:
    """One 1.00 s differential-echo slice with label and provenance."""

    values: np.ndarray  # (4, 200, 83)
    label_id: int
    record_id: str = ""
    window_index: int = 0


def sliding_windows(profile: DifferentialEchoProfile, label_id: int, record_id: str = "") -> list[EchoWindow]:
    """Cut a differential profile into 83-frame windows with hop 41.

    Count is floor((frames - 83) / 41) + 1; the trailing partial window is
    discarded.
    """
    frames = profile.frames
    if frames < WINDOW_FRAMES:
        raise InsufficientDataError(
            f"profile has {frames} frames; windows need at least {WINDOW_FRAMES}"
        )
    out = []
    for w, start in enumerate(range(0, frames - WINDOW_FRAMES + 1, WINDOW_HOP)):
        # profile values are [frame][channel][bin]; windows are (channel, bin, frame)
        chunk = profile.values[start:start + WINDOW_FRAMES].transpose(1, 2, 0)
        out.append(EchoWindow(values=chunk, label_id=label_id, record_id=record_id, window_index=w))
    return out


def window_count(frames: int) -> int:
    if frames < WINDOW_FRAMES:
        raise InsufficientDataError(f"{frames} frames < window length {WINDOW_FRAMES}")
    return (frames - WINDOW_FRAMES) // WINDOW_HOP + 1


def _check_window_dims(values: np.ndarray) -> None:
    if values.shape[-3:] != (4, 200, WINDOW_FRAMES):
        raise PreconditionError(
            f"expected window dims (4, 200, {WINDOW_FRAMES}), got {values.shape[-3:]}"
        )


def crop_jitter(values: np.ndarray, mode: str = "eval", rng: np.random.Generator | None = None) -> np.ndarray:
    """Take 80 consecutive frames from an 83-frame window.

    Train mode draws the start uniformly from {0..3} (one draw per window,
    shared by all channels); eval mode is deterministic at start 0.
    """
    _check_window_dims(values)
    if mode == "eval":
        return values[..., :CROP_FRAMES]
    if mode != "train":
        raise PreconditionError(f"mode must be 'train' or 'eval', got {mode!r}")
    if rng is None:
        raise PreconditionError("train-mode cropping needs an rng")
    if values.ndim == 3:
        s = int(rng.integers(0, CROP_MAX_START + 1))
        return values[..., s:s + CROP_FRAMES]
    starts = rng.integers(0, CROP_MAX_START + 1, size=values.shape[0])
    return np.stack([v[..., s:s + CROP_FRAMES] for v, s in zip(values, starts)])


def patchify(cropped: np.ndarray) -> np.ndarray:
    """Split each channel's (200, 80) crop into 4 contiguous 20-frame blocks
    and flatten each block bin-major to a 4000-vector.

    Patch order is channel-major, time-ascending: channel 0 patches 0-3, ...,
    channel 3 patches 12-15.
    """
    if cropped.shape[-3:] != (4, 200, CROP_FRAMES):
        raise PreconditionError(
            f"expected crop dims (4, 200, {CROP_FRAMES}), got {cropped.shape[-3:]}"
        )
    lead = cropped.shape[:-3]
    x = cropped.reshape(*lead, 4, 200, PATCHES_PER_CHANNEL, PATCH_FRAMES)
    x = np.moveaxis(x, -2, -3)  # (..., 4, 4, 200, 20)
    return x.reshape(*lead, N_PATCHES, PATCH_DIM)


def unpatchify(patches: np.ndarray) -> np.ndarray:
    """Inverse of patchify; exact partition round-trip."""
    if patches.shape[-2:] != (N_PATCHES, PATCH_DIM):
        raise PreconditionError(
            f"expected ({N_PATCHES}, {PATCH_DIM}) patches, got {patches.shape[-2:]}"
        )
    lead = patches.shape[:-2]
    x = patches.reshape(*lead, 4, PATCHES_PER_CHANNEL, 200, PATCH_FRAMES)
    x = np.moveaxis(x, -3, -2)  # (..., 4, 200, 4, 20)
    return x.reshape(*lead, 4, 200, CROP_FRAMES)


def augment_gaussian(values: np.ndarray, sigma_rel: float, rng: np.random.Generator) -> np.ndarray:
    """Add white Gaussian noise scaled to sigma_rel times the window's own
    standard deviation. Batched input gets an independent scale per window."""
    if sigma_rel < 0:
        raise PreconditionError(f"sigma_rel must be >= 0, got {sigma_rel}")
    if sigma_rel == 0:
        return values
    _check_window_dims(values)
    noise = rng.standard_normal(values.shape, dtype=np.float32).astype(np.float64)
    if values.ndim == 3:
        return values + noise * (sigma_rel * values.std())
    stds = values.reshape(values.shape[0], -1).std(axis=1)
    return values + noise * (sigma_rel * stds)[:, None, None, None]


@dataclass
class NormStats:
    """Per-channel mean/std fitted on the training split. Channels whose std
    is zero are flagged and divided by 1 instead."""

    mean: np.ndarray  # (4,)
    std: np.ndarray   # (4,)
    flagged: np.ndarray  # (4,) bool

    @classmethod
    def fit(cls, windows: np.ndarray) -> "NormStats":
        """windows: (n, 4, 200, frames) stack of training windows."""
        if windows.ndim != 4 or windows.shape[1] != 4:
            raise PreconditionError(f"expected (n, 4, bins, frames), got {windows.shape}")
        flat = windows.astype(np.float64).transpose(1, 0, 2, 3).reshape(4, -1)
        mean = flat.mean(axis=1)
        std = flat.std(axis=1)
        flagged = std == 0.0
        std = np.where(flagged, 1.0, std)
        return cls(mean=mean, std=std, flagged=flagged)

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Standardize (..., 4, bins, frames) per channel."""
        if values.shape[-3] != 4:
            raise PreconditionError(f"expected channel axis of size 4, got {values.shape}")
        return (values - self.mean[:, None, None]) / self.std[:, None, None]

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {
            "norm.mean": self.mean.astype(np.float64),
            "norm.std": self.std.astype(np.float64),
            "norm.flagged": self.flagged.astype(np.float64),
        }

    @classmethod
    def from_arrays(cls, blobs: dict[str, np.ndarray]) -> "NormStats":
        return cls(
            mean=np.asarray(blobs["norm.mean"], dtype=np.float64),
            std=np.asarray(blobs["norm.std"], dtype=np.float64),
            flagged=np.asarray(blobs["norm.flagged"]) != 0.0,
        )
