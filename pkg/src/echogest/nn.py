"""The gesture classifier network and its exact reverse-mode gradients.

Architecture: 16 patches of 4000 -> linear projection + LeakyReLU to 768 ->
prepend CLS token -> add sinusoidal positions -> two pre-norm encoder blocks
(8-head self-attention, GELU MLP at 4x width) -> CLS output -> linear head.

Everything runs in float64 numpy with hand-written backprop so gradients can
be checked against central finite differences to tight tolerances and runs
are bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf

from .errors import NumericError, PreconditionError

LN_EPS = 1e-5
LEAKY_SLOPE = 0.01
INIT_STD = 0.02


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 768
    n_blocks: int = 2
    n_heads: int = 8
    mlp_hidden: int = 3072
    drop_proj: float = 0.25
    drop_cls: float = 0.20
    n_classes: int = 22
    patch_dim: int = 4000
    n_patches: int = 16

    def validate(self):
        if self.embed_dim % self.n_heads != 0:
            raise PreconditionError(
                f"embed_dim {self.embed_dim} not divisible by n_heads {self.n_heads}"
            )
        for name in ("drop_proj", "drop_cls"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise PreconditionError(f"{name} must be in [0, 1), got {p}")
        if min(self.n_blocks, self.n_classes, self.patch_dim, self.n_patches, self.mlp_hidden) < 1:
            raise PreconditionError("model dimensions must be positive")
        return self

    @property
    def head_dim(self) -> int:
        return self.embed_dim // self.n_heads

    @property
    def n_tokens(self) -> int:
        return self.n_patches + 1


def positional_encoding(n_tokens: int, dim: int) -> np.ndarray:
    """Sinusoidal 1D encoding: PE[p, 2i] = sin(p / 10000^(2i/dim)),
    PE[p, 2i+1] = cos(same)."""
    if n_tokens < 1:
        raise PreconditionError(f"n_tokens must be >= 1, got {n_tokens}")
    if dim % 2 != 0:
        raise PreconditionError(f"dim must be even, got {dim}")
    pos = np.arange(n_tokens, dtype=np.float64)[:, None]
    i2 = np.arange(0, dim, 2, dtype=np.float64)
    angle = pos / np.power(10_000.0, i2 / dim)
    pe = np.empty((n_tokens, dim), dtype=np.float64)
    pe[:, 0::2] = np.sin(angle)
    pe[:, 1::2] = np.cos(angle)
    return pe


def param_names(cfg: ModelConfig) -> list[str]:
    names = ["proj.W", "proj.b", "cls"]
    for i in range(cfg.n_blocks):
        names += [
            f"block{i}.ln1.g", f"block{i}.ln1.b",
            f"block{i}.attn.Wqkv", f"block{i}.attn.bqkv",
            f"block{i}.attn.Wo", f"block{i}.attn.bo",
            f"block{i}.ln2.g", f"block{i}.ln2.b",
            f"block{i}.mlp.W1", f"block{i}.mlp.b1",
            f"block{i}.mlp.W2", f"block{i}.mlp.b2",
        ]
    names += ["head.W", "head.b"]
    return names


def param_shapes(cfg: ModelConfig) -> dict[str, tuple]:
    d, m = cfg.embed_dim, cfg.mlp_hidden
    shapes = {"proj.W": (cfg.patch_dim, d), "proj.b": (d,), "cls": (d,)}
    for i in range(cfg.n_blocks):
        shapes.update({
            f"block{i}.ln1.g": (d,), f"block{i}.ln1.b": (d,),
            f"block{i}.attn.Wqkv": (d, 3 * d), f"block{i}.attn.bqkv": (3 * d,),
            f"block{i}.attn.Wo": (d, d), f"block{i}.attn.bo": (d,),
            f"block{i}.ln2.g": (d,), f"block{i}.ln2.b": (d,),
            f"block{i}.mlp.W1": (d, m), f"block{i}.mlp.b1": (m,),
            f"block{i}.mlp.W2": (m, d), f"block{i}.mlp.b2": (d,),
        })
    shapes.update({"head.W": (d, cfg.n_classes), "head.b": (cfg.n_classes,)})
    return shapes


def init_params(cfg: ModelConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Gaussian(0, 0.02) weights, zero biases, unit LayerNorm scales."""
    cfg.validate()
    params = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith(".g"):
            params[name] = np.ones(shape)
        elif name.endswith((".b", ".bqkv", ".bo", ".b1", ".b2")):
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.normal(0.0, INIT_STD, size=shape)
    return params


def check_params(params: dict, cfg: ModelConfig) -> None:
    shapes = param_shapes(cfg)
    for name, shape in shapes.items():
        if name not in params:
            raise PreconditionError(f"missing parameter group {name!r}")
        if params[name].shape != shape:
            raise PreconditionError(
                f"parameter {name!r} has shape {params[name].shape}, expected {shape}"
            )
        if not np.isfinite(params[name]).all():
            raise NumericError(f"parameter {name!r} contains non-finite values")


def make_dropout_masks(cfg: ModelConfig, batch: int, rng: np.random.Generator):
    """Inverted-dropout masks for train mode (projection output + CLS vector).

    One fixed draw order so a fixed rng seed reproduces identical masks.
    """
    def mask(shape, p):
        if p == 0.0:
            return np.ones(shape)
        return (rng.random(shape) >= p) / (1.0 - p)

    return {
        "proj": mask((batch, cfg.n_patches, cfg.embed_dim), cfg.drop_proj),
        "cls": mask((batch, cfg.embed_dim), cfg.drop_cls),
    }


def _leaky(x):
    return np.where(x >= 0, x, LEAKY_SLOPE * x)


def _leaky_grad(x):
    return np.where(x >= 0, 1.0, LEAKY_SLOPE)


_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _gelu(x):
    return 0.5 * x * (1.0 + erf(x * _INV_SQRT2))


def _gelu_grad(x):
    return 0.5 * (1.0 + erf(x * _INV_SQRT2)) + x * np.exp(-0.5 * x * x) * _INV_SQRT2PI


def _layer_norm(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(axis=-1, keepdims=True) + LN_EPS)
    xhat = xc * inv
    return g * xhat + b, (xhat, inv)


def _layer_norm_backward(dy, g, xhat, inv):
    dg = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    db = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * g
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dg, db


def _split_heads(x, n_heads):
    b, t, d = x.shape
    return x.reshape(b, t, n_heads, d // n_heads).transpose(0, 2, 1, 3)


def _merge_heads(x):
    b, h, t, dh = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)


def project_patches(patches: np.ndarray, params: dict, cfg: ModelConfig, masks=None):
    """Patch sequence -> token matrix: affine 4000->768, LeakyReLU, dropout
    (train only), CLS prepended, positional encoding added.

    Accepts (n_patches, patch_dim) or a batch (b, n_patches, patch_dim);
    returns tokens with a leading batch axis plus a cache for backprop.
    """
    x = np.asarray(patches, dtype=np.float64)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.shape[1:] != (cfg.n_patches, cfg.patch_dim):
        raise PreconditionError(
            f"expected patches {(cfg.n_patches, cfg.patch_dim)}, got {x.shape[1:]}"
        )
    b = x.shape[0]
    z = x @ params["proj.W"] + params["proj.b"]
    a = _leaky(z)
    h = a * masks["proj"] if masks is not None else a
    tokens = np.concatenate([np.broadcast_to(params["cls"], (b, 1, cfg.embed_dim)), h], axis=1)
    tokens = tokens + positional_encoding(cfg.n_tokens, cfg.embed_dim)
    cache = {"x": x, "z": z, "a": a}
    return tokens, cache


def encoder_forward(tokens: np.ndarray, params: dict, cfg: ModelConfig, want_cache=False):
    """Run the pre-norm encoder blocks on a (b, n_tokens, d) token batch."""
    t = np.asarray(tokens, dtype=np.float64)
    single = t.ndim == 2
    if single:
        t = t[None]
    if t.shape[-1] != cfg.embed_dim:
        raise PreconditionError(f"token dim {t.shape[-1]} != embed_dim {cfg.embed_dim}")
    scale = 1.0 / np.sqrt(cfg.head_dim)
    caches = []
    for i in range(cfg.n_blocks):
        pfx = f"block{i}."
        x_in = t
        u, (xhat1, inv1) = _layer_norm(t, params[pfx + "ln1.g"], params[pfx + "ln1.b"])
        qkv = u @ params[pfx + "attn.Wqkv"] + params[pfx + "attn.bqkv"]
        d = cfg.embed_dim
        q = _split_heads(qkv[..., :d], cfg.n_heads)
        k = _split_heads(qkv[..., d:2 * d], cfg.n_heads)
        v = _split_heads(qkv[..., 2 * d:], cfg.n_heads)
        scores = (q @ k.transpose(0, 1, 3, 2)) * scale
        scores -= scores.max(axis=-1, keepdims=True)
        attn = np.exp(scores)
        attn /= attn.sum(axis=-1, keepdims=True)
        o = _merge_heads(attn @ v)
        attn_out = o @ params[pfx + "attn.Wo"] + params[pfx + "attn.bo"]
        t1 = x_in + attn_out
        w, (xhat2, inv2) = _layer_norm(t1, params[pfx + "ln2.g"], params[pfx + "ln2.b"])
        m1 = w @ params[pfx + "mlp.W1"] + params[pfx + "mlp.b1"]
        gm = _gelu(m1)
        m2 = gm @ params[pfx + "mlp.W2"] + params[pfx + "mlp.b2"]
        t = t1 + m2
        if not np.isfinite(t).all():
            raise NumericError(f"non-finite activations leaving encoder block {i}")
        if want_cache:
            caches.append({
                "x_in": x_in, "xhat1": xhat1, "inv1": inv1, "u": u,
                "q": q, "k": k, "v": v, "attn": attn, "o": o,
                "t1": t1, "xhat2": xhat2, "inv2": inv2, "w": w,
                "m1": m1, "gm": gm,
            })
    out = t[0] if single else t
    return (out, caches) if want_cache else out


def forward(patches: np.ndarray, params: dict, cfg: ModelConfig, masks=None, want_cache=False):
    """Full network: patches -> logits. masks=None means eval mode."""
    tokens, proj_cache = project_patches(patches, params, cfg, masks)
    if want_cache:
        encoded, block_caches = encoder_forward(tokens, params, cfg, want_cache=True)
    else:
        encoded = encoder_forward(tokens, params, cfg)
        block_caches = None
    cls_vec = encoded[:, 0, :]
    cls_dropped = cls_vec * masks["cls"] if masks is not None else cls_vec
    logits = cls_dropped @ params["head.W"] + params["head.b"]
    if not want_cache:
        return logits
    cache = {
        "proj": proj_cache, "blocks": block_caches, "masks": masks,
        "cls_vec": cls_vec, "cls_dropped": cls_dropped,
    }
    return logits, cache


def backward(dlogits: np.ndarray, cache: dict, params: dict, cfg: ModelConfig) -> dict:
    """Exact gradients of the scalar loss (whose dlogits is given) w.r.t.
    every parameter group."""
    grads = {}
    masks = cache["masks"]
    b = dlogits.shape[0]

    grads["head.W"] = cache["cls_dropped"].T @ dlogits
    grads["head.b"] = dlogits.sum(axis=0)
    dcls_dropped = dlogits @ params["head.W"].T
    dcls_vec = dcls_dropped * masks["cls"] if masks is not None else dcls_dropped

    dt = np.zeros((b, cfg.n_tokens, cfg.embed_dim))
    dt[:, 0, :] = dcls_vec

    scale = 1.0 / np.sqrt(cfg.head_dim)
    for i in reversed(range(cfg.n_blocks)):
        pfx = f"block{i}."
        c = cache["blocks"][i]
        # MLP branch
        dm2 = dt
        gm_flat = c["gm"].reshape(-1, cfg.mlp_hidden)
        grads[pfx + "mlp.W2"] = gm_flat.T @ dm2.reshape(-1, cfg.embed_dim)
        grads[pfx + "mlp.b2"] = dm2.sum(axis=(0, 1))
        dgm = dm2 @ params[pfx + "mlp.W2"].T
        dm1 = dgm * _gelu_grad(c["m1"])
        w_flat = c["w"].reshape(-1, cfg.embed_dim)
        grads[pfx + "mlp.W1"] = w_flat.T @ dm1.reshape(-1, cfg.mlp_hidden)
        grads[pfx + "mlp.b1"] = dm1.sum(axis=(0, 1))
        dw = dm1 @ params[pfx + "mlp.W1"].T
        dx_ln2, dg2, db2 = _layer_norm_backward(dw, params[pfx + "ln2.g"], c["xhat2"], c["inv2"])
        grads[pfx + "ln2.g"], grads[pfx + "ln2.b"] = dg2, db2
        dt1 = dt + dx_ln2
        # attention branch
        dattn_out = dt1
        o_flat = c["o"].reshape(-1, cfg.embed_dim)
        grads[pfx + "attn.Wo"] = o_flat.T @ dattn_out.reshape(-1, cfg.embed_dim)
        grads[pfx + "attn.bo"] = dattn_out.sum(axis=(0, 1))
        do = _split_heads(dattn_out @ params[pfx + "attn.Wo"].T, cfg.n_heads)
        dA = do @ c["v"].transpose(0, 1, 3, 2)
        dv = c["attn"].transpose(0, 1, 3, 2) @ do
        dS = c["attn"] * (dA - (dA * c["attn"]).sum(axis=-1, keepdims=True))
        dq = (dS @ c["k"]) * scale
        dk = (dS.transpose(0, 1, 3, 2) @ c["q"]) * scale
        dqkv = np.concatenate([_merge_heads(dq), _merge_heads(dk), _merge_heads(dv)], axis=-1)
        u_flat = c["u"].reshape(-1, cfg.embed_dim)
        grads[pfx + "attn.Wqkv"] = u_flat.T @ dqkv.reshape(-1, 3 * cfg.embed_dim)
        grads[pfx + "attn.bqkv"] = dqkv.sum(axis=(0, 1))
        du = dqkv @ params[pfx + "attn.Wqkv"].T
        dx_ln1, dg1, db1 = _layer_norm_backward(du, params[pfx + "ln1.g"], c["xhat1"], c["inv1"])
        grads[pfx + "ln1.g"], grads[pfx + "ln1.b"] = dg1, db1
        dt = dt1 + dx_ln1

    # projection + CLS (positional encoding is a constant)
    grads["cls"] = dt[:, 0, :].sum(axis=0)
    dh = dt[:, 1:, :]
    da = dh * masks["proj"] if masks is not None else dh
    dz = da * _leaky_grad(cache["proj"]["z"])
    x_flat = cache["proj"]["x"].reshape(-1, cfg.patch_dim)
    grads["proj.W"] = x_flat.T @ dz.reshape(-1, cfg.embed_dim)
    grads["proj.b"] = dz.sum(axis=(0, 1))

    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient in parameter group {name!r}")
    return grads


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def focal_loss(logits: np.ndarray, targets: np.ndarray, gamma: float) -> float:
    """Mean of -(1 - p_t)^gamma * log(p_t); gamma = 0 is cross-entropy."""
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets)
    if logits.ndim != 2 or logits.shape[0] == 0:
        raise PreconditionError(f"logits must be a non-empty (batch, classes) array, got {logits.shape}")
    if targets.shape != (logits.shape[0],):
        raise PreconditionError("targets must be one class id per batch row")
    if targets.min() < 0 or targets.max() >= logits.shape[1]:
        raise PreconditionError("target class ids outside [0, n_classes)")
    if gamma < 0:
        raise PreconditionError(f"gamma must be >= 0, got {gamma}")
    logp = log_softmax(logits)
    rows = np.arange(logits.shape[0])
    logpt = logp[rows, targets]
    pt = np.exp(logpt)
    return float(np.mean(-((1.0 - pt) ** gamma) * logpt))


def focal_loss_grad(logits: np.ndarray, targets: np.ndarray, gamma: float):
    """Loss plus d(loss)/d(logits) for the mean focal loss."""
    loss = focal_loss(logits, targets, gamma)
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets)
    n, c = logits.shape
    logp = log_softmax(logits)
    p = np.exp(logp)
    rows = np.arange(n)
    onehot = np.zeros((n, c))
    onehot[rows, targets] = 1.0
    if gamma == 0.0:
        dlogits = (p - onehot) / n
        return loss, dlogits
    pt = p[rows, targets]
    logpt = logp[rows, targets]
    om = 1.0 - pt
    om_safe = np.where(om > 0, om, 1.0)
    coeff = np.where(om > 0, gamma * pt * logpt * om_safe ** (gamma - 1.0) - om ** gamma, 0.0)
    dlogits = coeff[:, None] * (onehot - p) / n
    return loss, dlogits


def param_gradients(
    patches: np.ndarray,
    targets: np.ndarray,
    params: dict,
    cfg: ModelConfig,
    gamma: float,
    dropout_rng: np.random.Generator | None = None,
):
    """Train-mode loss and exact gradients for one batch.

    Passing a freshly seeded dropout_rng makes the masks (and therefore the
    loss surface) reproducible, which the finite-difference check relies on.
    """
    x = np.asarray(patches, dtype=np.float64)
    if x.ndim != 3 or x.shape[0] == 0:
        raise PreconditionError("patches must be a non-empty (batch, n_patches, patch_dim) array")
    masks = make_dropout_masks(cfg, x.shape[0], dropout_rng) if dropout_rng is not None else None
    logits, cache = forward(x, params, cfg, masks=masks, want_cache=True)
    loss, dlogits = focal_loss_grad(logits, targets, gamma)
    grads = backward(dlogits, cache, params, cfg)
    return loss, grads


def predict_proba(patches: np.ndarray, params: dict, cfg: ModelConfig) -> np.ndarray:
    """Eval-mode class probabilities for a (b, n_patches, patch_dim) batch."""
    logits = forward(patches, params, cfg)
    return softmax(logits)
