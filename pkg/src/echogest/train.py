"""Training stack: focal-loss training with Adam + cosine annealing, macro-F1
evaluation, checkpoint serialization, leave-one-participant-out folds, and
single-session fine-tuning.

Determinism contract: a fixed TrainConfig.seed fixes initialization, batch
shuffling, crop jitter, augmentation, and dropout (four separate RNG streams),
so two runs on identical data produce byte-identical checkpoints and logs.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .dataset import WindowSet
from .errors import (
    BadMagicError,
    PreconditionError,
    ProtocolError,
    TruncatedFileError,
    VersionError,
)
from .metrics import EvalReport, evaluate_predictions
from .nn import (
    ModelConfig,
    backward,
    check_params,
    focal_loss_grad,
    forward,
    init_params,
    make_dropout_masks,
    softmax,
)
from .optim import AdamState, adam_step, cosine_lr
from .windows import NormStats, augment_gaussian, crop_jitter, patchify


@dataclass(frozen=True)
class TrainConfig:
    lr0: float = 1e-2
    epochs: int = 50
    batch: int = 64
    focal_gamma: float = 2.0
    eta_min: float = 1e-5
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    augment_sigma: float = 0.0  # relative Gaussian-noise augmentation, train split only

    def validate(self):
        if not self.lr0 > self.eta_min >= 0:
            raise PreconditionError(f"need lr0 > eta_min >= 0, got {self.lr0}, {self.eta_min}")
        if self.epochs < 1 or self.batch < 1:
            raise PreconditionError("epochs and batch must be >= 1")
        if self.focal_gamma < 0 or self.augment_sigma < 0:
            raise PreconditionError("focal_gamma and augment_sigma must be >= 0")
        return self


@dataclass
class Checkpoint:
    model_cfg: ModelConfig
    train_cfg: TrainConfig
    params: dict
    norm: NormStats
    participants: list[int]
    label_ids: list[int]


@dataclass
class LogRecord:
    epoch: int
    lr: float
    train_loss: float
    train_macro_f1: float

    def line(self) -> str:
        return f"{self.epoch},{self.lr:.10e},{self.train_loss:.10e},{self.train_macro_f1:.6f}"


def _stream(seed: int, tag: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([0x5745_5354, int(seed), tag]))


def _batch_patches(X_f32: np.ndarray, norm: NormStats, mode: str,
                   crop_rng=None, aug_rng=None, aug_sigma: float = 0.0) -> np.ndarray:
    """Raw float32 windows -> normalized float64 patch batch."""
    x = X_f32.astype(np.float64)
    if mode == "train" and aug_sigma > 0:
        x = augment_gaussian(x, aug_sigma, aug_rng)
    # same affine map as NormStats.apply, in place on the owned copy
    x -= norm.mean[:, None, None]
    x /= norm.std[:, None, None]
    x = crop_jitter(x, mode=mode, rng=crop_rng)
    return patchify(x)


def train_model(
    windows: WindowSet,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    log_path=None,
    init: dict | None = None,
    norm: NormStats | None = None,
) -> tuple[Checkpoint, list[LogRecord]]:
    """Train on a window set; returns the checkpoint and per-epoch log.

    Per-epoch `train_macro_f1` is computed from the predictions the model
    made on each shuffled training batch during that epoch.
    """
    model_cfg.validate()
    train_cfg.validate()
    if len(windows) == 0:
        raise PreconditionError("training split is empty")
    if windows.y.min() < 0 or windows.y.max() >= model_cfg.n_classes:
        raise PreconditionError(
            f"labels outside [0, {model_cfg.n_classes}) in the training split"
        )

    init_rng = _stream(train_cfg.seed, 0)
    shuffle_rng = _stream(train_cfg.seed, 1)
    drop_rng = _stream(train_cfg.seed, 2)
    aug_rng = _stream(train_cfg.seed, 3)

    params = {k: v.copy() for k, v in init.items()} if init is not None else init_params(model_cfg, init_rng)
    check_params(params, model_cfg)
    norm = norm if norm is not None else NormStats.fit(windows.X)
    state = AdamState.init(params)

    n = len(windows)
    logs: list[LogRecord] = []
    log_fh = open(log_path, "w", encoding="utf-8") if log_path else None
    try:
        for epoch in range(train_cfg.epochs):
            lr = cosine_lr(epoch, train_cfg.lr0, train_cfg.eta_min, train_cfg.epochs)
            order = shuffle_rng.permutation(n)
            losses, counts = [], []
            preds = np.empty(n, dtype=np.int64)
            for start in range(0, n, train_cfg.batch):
                idx = order[start:start + train_cfg.batch]
                patches = _batch_patches(
                    windows.X[idx], norm, "train",
                    crop_rng=shuffle_rng, aug_rng=aug_rng, aug_sigma=train_cfg.augment_sigma,
                )
                targets = windows.y[idx]
                masks = make_dropout_masks(model_cfg, len(idx), drop_rng)
                logits, cache = forward(patches, params, model_cfg, masks=masks, want_cache=True)
                loss, dlogits = focal_loss_grad(logits, targets, train_cfg.focal_gamma)
                grads = backward(dlogits, cache, params, model_cfg)
                params, state = adam_step(
                    params, grads, state, lr,
                    beta1=train_cfg.beta1, beta2=train_cfg.beta2, eps=train_cfg.eps,
                    inplace=True,
                )
                losses.append(loss * len(idx))
                counts.append(len(idx))
                preds[idx] = logits.argmax(axis=1)
            report = evaluate_predictions(windows.y, preds, model_cfg.n_classes)
            rec = LogRecord(
                epoch=epoch, lr=lr,
                train_loss=float(np.sum(losses) / np.sum(counts)),
                train_macro_f1=report.macro_f1,
            )
            logs.append(rec)
            if log_fh:
                log_fh.write(rec.line() + "\n")
    finally:
        if log_fh:
            log_fh.close()

    ckpt = Checkpoint(
        model_cfg=model_cfg, train_cfg=train_cfg, params=params, norm=norm,
        participants=sorted(set(int(p) for p in windows.participant)),
        label_ids=sorted(set(int(v) for v in windows.y)),
    )
    return ckpt, logs


def predict_windows(ckpt: Checkpoint, X_f32: np.ndarray, batch: int = 256) -> np.ndarray:
    """Eval-mode class probabilities for raw (n, 4, 200, 83) windows."""
    out = []
    for start in range(0, X_f32.shape[0], batch):
        patches = _batch_patches(X_f32[start:start + batch], ckpt.norm, "eval")
        logits = forward(patches, ckpt.params, ckpt.model_cfg)
        out.append(softmax(logits))
    return np.concatenate(out, axis=0)


def evaluate(ckpt: Checkpoint, windows: WindowSet) -> EvalReport:
    """Per-window prediction and macro-F1 report on a split."""
    if len(windows) == 0:
        raise PreconditionError("evaluation split is empty")
    unknown = set(int(v) for v in np.unique(windows.y)) - set(ckpt.label_ids)
    if unknown:
        raise ProtocolError(
            f"split contains labels {sorted(unknown)} the checkpoint was not trained on"
        )
    probs = predict_windows(ckpt, windows.X)
    return evaluate_predictions(windows.y, probs.argmax(axis=1), ckpt.model_cfg.n_classes)


@dataclass
class LopoFold:
    participant: int
    report: EvalReport


@dataclass
class LopoResult:
    folds: list[LopoFold]
    mean_macro_f1: float


def lopo_evaluate(
    windows: WindowSet,
    model_cfg: ModelConfig,
    train_cfg: TrainConfig,
    category_labels: list[int] | None = None,
    log_dir=None,
) -> LopoResult:
    """Leave-one-participant-out: train on all others, test on the held-out
    participant. Optionally restrict to one category's label ids."""
    if category_labels is not None:
        keep = np.isin(windows.y, category_labels)
        windows = windows.select(keep)
    participants = sorted(set(int(p) for p in windows.participant))
    if len(participants) < 2:
        raise ProtocolError(f"LOPO needs >= 2 participants, got {participants}")
    folds = []
    for p in participants:
        test_mask = windows.participant == p
        train_split = windows.select(~test_mask)
        test_split = windows.select(test_mask)
        assert p not in set(int(q) for q in train_split.participant)
        log_path = Path(log_dir) / f"train_p{p}.log" if log_dir else None
        ckpt, _ = train_model(train_split, model_cfg, train_cfg, log_path=log_path)
        assert p not in ckpt.participants
        folds.append(LopoFold(participant=p, report=evaluate(ckpt, test_split)))
    mean = float(np.mean([f.report.macro_f1 for f in folds]))
    return LopoResult(folds=folds, mean_macro_f1=mean)


@dataclass
class FineTuneResult:
    checkpoint: Checkpoint
    before: EvalReport
    after: EvalReport


def fine_tune(
    ckpt: Checkpoint,
    tune_windows: WindowSet,
    eval_windows: WindowSet,
    train_cfg: TrainConfig | None = None,
) -> FineTuneResult:
    """Personalize a user-independent checkpoint with one session of the test
    participant's data; evaluates on the remaining sessions before and after.

    The tuned participant must not appear in the checkpoint's training set.
    Defaults: one tenth of the base learning rate, 10 epochs. Normalization
    stats stay frozen at the base checkpoint's values.
    """
    tune_participants = set(int(p) for p in tune_windows.participant)
    overlap = tune_participants & set(ckpt.participants)
    if overlap:
        raise ProtocolError(
            f"fine-tune participants {sorted(overlap)} were in the base training set"
        )
    if train_cfg is None:
        train_cfg = replace(ckpt.train_cfg, lr0=ckpt.train_cfg.lr0 / 10.0, epochs=10)
    before = evaluate(ckpt, eval_windows)
    if train_cfg.epochs == 0:
        new_ckpt = Checkpoint(
            model_cfg=ckpt.model_cfg, train_cfg=train_cfg,
            params={k: v.copy() for k, v in ckpt.params.items()},
            norm=ckpt.norm,
            participants=sorted(set(ckpt.participants) | tune_participants),
            label_ids=ckpt.label_ids,
        )
        return FineTuneResult(checkpoint=new_ckpt, before=before, after=before)
    tuned, _ = train_model(
        tune_windows, ckpt.model_cfg, train_cfg, init=ckpt.params, norm=ckpt.norm,
    )
    new_ckpt = Checkpoint(
        model_cfg=ckpt.model_cfg, train_cfg=train_cfg, params=tuned.params,
        norm=ckpt.norm,
        participants=sorted(set(ckpt.participants) | tune_participants),
        label_ids=sorted(set(ckpt.label_ids) | set(tuned.label_ids)),
    )
    after = evaluate(new_ckpt, eval_windows)
    return FineTuneResult(checkpoint=new_ckpt, before=before, after=after)


# ---------------------------------------------------------------------------
# checkpoint container: magic WSCK, version, JSON configs, named f64 blobs

_CKPT_MAGIC = b"WSCK"
_CKPT_VERSION = 1


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    meta = {
        "model_cfg": {f: getattr(ckpt.model_cfg, f) for f in ckpt.model_cfg.__dataclass_fields__},
        "train_cfg": {f: getattr(ckpt.train_cfg, f) for f in ckpt.train_cfg.__dataclass_fields__},
        "participants": list(ckpt.participants),
        "label_ids": list(ckpt.label_ids),
    }
    blob_arrays = dict(ckpt.params)
    blob_arrays.update(ckpt.norm.to_arrays())
    payload = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<I", _CKPT_VERSION))
        fh.write(struct.pack("<I", len(payload)))
        fh.write(payload)
        for name in sorted(blob_arrays):
            arr = np.ascontiguousarray(blob_arrays[name], dtype="<f8")
            encoded = name.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<Q", arr.size))
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
            fh.write(arr.tobytes())


def load_checkpoint(path) -> Checkpoint:
    raw = Path(path).read_bytes()
    view = memoryview(raw)
    if len(raw) < 12:
        raise TruncatedFileError(f"{path}: too short for a checkpoint header")
    if bytes(view[:4]) != _CKPT_MAGIC:
        raise BadMagicError(f"{path}: bad magic {bytes(view[:4])!r}, expected {_CKPT_MAGIC!r}")
    (version,) = struct.unpack_from("<I", view, 4)
    if version != _CKPT_VERSION:
        raise VersionError(f"{path}: unsupported checkpoint version {version}")
    (meta_len,) = struct.unpack_from("<I", view, 8)
    off = 12
    if off + meta_len > len(raw):
        raise TruncatedFileError(f"{path}: metadata truncated")
    meta = json.loads(bytes(view[off:off + meta_len]).decode("utf-8"))
    off += meta_len
    blobs: dict[str, np.ndarray] = {}
    while off < len(raw):
        if off + 4 > len(raw):
            raise TruncatedFileError(f"{path}: blob name length truncated")
        (name_len,) = struct.unpack_from("<I", view, off)
        off += 4
        if off + name_len + 9 > len(raw):
            raise TruncatedFileError(f"{path}: blob header truncated")
        name = bytes(view[off:off + name_len]).decode("utf-8")
        off += name_len
        (count,) = struct.unpack_from("<Q", view, off)
        off += 8
        (ndim,) = struct.unpack_from("<B", view, off)
        off += 1
        if off + 8 * ndim > len(raw):
            raise TruncatedFileError(f"{path}: blob shape truncated")
        shape = struct.unpack_from(f"<{ndim}Q", view, off)
        off += 8 * ndim
        nbytes = count * 8
        if off + nbytes > len(raw):
            raise TruncatedFileError(f"{path}: blob {name!r} payload truncated")
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape)
        blobs[name] = arr.copy()
        off += nbytes
    norm = NormStats.from_arrays({k: blobs.pop(k) for k in list(blobs) if k.startswith("norm.")})
    return Checkpoint(
        model_cfg=ModelConfig(**meta["model_cfg"]),
        train_cfg=TrainConfig(**meta["train_cfg"]),
        params=blobs,
        norm=norm,
        participants=[int(p) for p in meta["participants"]],
        label_ids=[int(x) for x in meta["label_ids"]],
    )
