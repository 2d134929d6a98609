import numpy as np
import pytest

from echogest.nn import ModelConfig
from echogest.dataset import WindowSet


@pytest.fixture
def tiny_cfg():
    """Small enough for exhaustive finite-difference checks."""
    return ModelConfig(
        embed_dim=32, n_blocks=2, n_heads=4, mlp_hidden=64,
        drop_proj=0.25, drop_cls=0.20, n_classes=3, patch_dim=8, n_patches=2,
    )


def make_toy_windows(n_per_class=24, n_classes=2, seed=0, participants=(0,), sessions=(0,)):
    """Synthetic separable windows: each class lights up its own bin band with
    an oscillation; small additive noise."""
    rng = np.random.default_rng(seed)
    xs, ys, ps, ss = [], [], [], []
    t = np.arange(83)
    for c in range(n_classes):
        for i in range(n_per_class):
            w = rng.normal(0.0, 0.05, size=(4, 200, 83))
            lo = 40 + 30 * c
            pattern = np.sin(2 * np.pi * (2 + c) * t / 83 + rng.uniform(-0.5, 0.5))
            w[c % 4, lo:lo + 12, :] += 2.0 * pattern
            xs.append(w.astype(np.float32))
            ys.append(c)
            ps.append(participants[i % len(participants)])
            ss.append(sessions[i % len(sessions)])
    n = len(xs)
    return WindowSet(
        X=np.stack(xs), y=np.asarray(ys, dtype=np.int64),
        participant=np.asarray(ps, dtype=np.int64), session=np.asarray(ss, dtype=np.int64),
        record_ids=[f"toy{i}" for i in range(n)], window_index=np.zeros(n, dtype=np.int64),
    )


@pytest.fixture
def toy_windows():
    return make_toy_windows()
