"""scikit-learn style wrappers so the pipeline composes with the ecosystem:
`ChannelNormalizer` (fit/transform) and `EchoWindowClassifier` (fit/predict/
predict_proba) both follow the BaseEstimator get_params/set_params contract.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .dataset import WindowSet
from .nn import ModelConfig
from .train import Checkpoint, TrainConfig, predict_windows, train_model
from .windows import WINDOW_FRAMES, NormStats


def _validate_windows(X) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 4 or X.shape[1:] != (4, 200, WINDOW_FRAMES):
        raise ValueError(
            f"X must have shape (n, 4, 200, {WINDOW_FRAMES}), got {X.shape}"
        )
    if not np.isfinite(X).all():
        raise ValueError("X contains non-finite values")
    return X


class ChannelNormalizer(TransformerMixin, BaseEstimator):
    """Per-channel standardization over echo windows.

    Channels with zero variance are flagged and left unscaled (divisor 1).
    """

    def fit(self, X, y=None):
        X = _validate_windows(X)
        self.stats_ = NormStats.fit(X)
        return self

    def transform(self, X):
        check_is_fitted(self, "stats_")
        return self.stats_.apply(_validate_windows(X).astype(np.float64))

    def inverse_transform(self, X):
        check_is_fitted(self, "stats_")
        X = np.asarray(X, dtype=np.float64)
        return X * self.stats_.std[:, None, None] + self.stats_.mean[:, None, None]


class EchoWindowClassifier(ClassifierMixin, BaseEstimator):
    """Transformer gesture classifier over differential echo windows.

    Parameters mirror the model and training configuration; `fit` expects
    X of shape (n, 4, 200, 83) and integer labels y.
    """

    def __init__(
        self,
        embed_dim=768,
        n_blocks=2,
        n_heads=8,
        mlp_hidden=3072,
        drop_proj=0.25,
        drop_cls=0.20,
        lr0=1e-2,
        epochs=50,
        batch_size=64,
        focal_gamma=2.0,
        eta_min=1e-5,
        augment_sigma=0.0,
        seed=0,
    ):
        self.embed_dim = embed_dim
        self.n_blocks = n_blocks
        self.n_heads = n_heads
        self.mlp_hidden = mlp_hidden
        self.drop_proj = drop_proj
        self.drop_cls = drop_cls
        self.lr0 = lr0
        self.epochs = epochs
        self.batch_size = batch_size
        self.focal_gamma = focal_gamma
        self.eta_min = eta_min
        self.augment_sigma = augment_sigma
        self.seed = seed

    def _configs(self, n_classes: int) -> tuple[ModelConfig, TrainConfig]:
        model_cfg = ModelConfig(
            embed_dim=self.embed_dim, n_blocks=self.n_blocks, n_heads=self.n_heads,
            mlp_hidden=self.mlp_hidden, drop_proj=self.drop_proj, drop_cls=self.drop_cls,
            n_classes=n_classes,
        ).validate()
        train_cfg = TrainConfig(
            lr0=self.lr0, epochs=self.epochs, batch=self.batch_size,
            focal_gamma=self.focal_gamma, eta_min=self.eta_min,
            augment_sigma=self.augment_sigma, seed=self.seed,
        ).validate()
        return model_cfg, train_cfg

    def fit(self, X, y):
        X = _validate_windows(X)
        y = np.asarray(y)
        if y.shape != (X.shape[0],):
            raise ValueError(f"y must be one label per window, got shape {y.shape}")
        self.classes_, encoded = np.unique(y, return_inverse=True)
        model_cfg, train_cfg = self._configs(n_classes=len(self.classes_))
        n = X.shape[0]
        windows = WindowSet(
            X=X.astype(np.float32), y=encoded.astype(np.int64),
            participant=np.zeros(n, dtype=np.int64), session=np.zeros(n, dtype=np.int64),
            record_ids=[""] * n, window_index=np.arange(n, dtype=np.int64),
        )
        self.checkpoint_, self.log_ = train_model(windows, model_cfg, train_cfg)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "checkpoint_")
        X = _validate_windows(X)
        return predict_windows(self.checkpoint_, X.astype(np.float32))

    def predict(self, X):
        check_is_fitted(self, "checkpoint_")
        return self.classes_[self.predict_proba(X).argmax(axis=1)]

    @classmethod
    def from_checkpoint(cls, ckpt: Checkpoint) -> "EchoWindowClassifier":
        """Wrap a trained checkpoint as a ready-to-predict estimator."""
        est = cls(
            embed_dim=ckpt.model_cfg.embed_dim, n_blocks=ckpt.model_cfg.n_blocks,
            n_heads=ckpt.model_cfg.n_heads, mlp_hidden=ckpt.model_cfg.mlp_hidden,
            drop_proj=ckpt.model_cfg.drop_proj, drop_cls=ckpt.model_cfg.drop_cls,
            lr0=ckpt.train_cfg.lr0, epochs=ckpt.train_cfg.epochs,
            batch_size=ckpt.train_cfg.batch, focal_gamma=ckpt.train_cfg.focal_gamma,
            eta_min=ckpt.train_cfg.eta_min, augment_sigma=ckpt.train_cfg.augment_sigma,
            seed=ckpt.train_cfg.seed,
        )
        est.checkpoint_ = ckpt
        est.classes_ = np.arange(ckpt.model_cfg.n_classes)
        est.log_ = []
        return est
