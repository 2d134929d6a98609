"""Central finite-difference oracle for every parameter group of the network,
run on a tiny configuration in float64 (this is also acceptance criterion 4).
"""

import numpy as np

from echogest.nn import (
    ModelConfig,
    focal_loss,
    forward,
    init_params,
    make_dropout_masks,
    param_gradients,
    param_names,
)

H_STEP = 1e-5
TOL = 1e-4


def finite_difference_check(cfg, batch=4, seed=7, gamma=2.0, max_per_group=None):
    """Returns {group: max relative error vs central differences}."""
    rng = np.random.default_rng(seed)
    params = init_params(cfg, rng)
    x = rng.standard_normal((batch, cfg.n_patches, cfg.patch_dim))
    y = rng.integers(0, cfg.n_classes, size=batch)

    def loss_at():
        masks = make_dropout_masks(cfg, batch, np.random.default_rng(1234))
        return focal_loss(forward(x, params, cfg, masks=masks), y, gamma)

    _, grads = param_gradients(x, y, params, cfg, gamma, dropout_rng=np.random.default_rng(1234))
    worst = {}
    pick_rng = np.random.default_rng(0)
    for name in param_names(cfg):
        flat = params[name].ravel()
        g = grads[name].ravel()
        if max_per_group is not None and flat.size > max_per_group:
            idx = pick_rng.choice(flat.size, max_per_group, replace=False)
        else:
            idx = np.arange(flat.size)
        errs = []
        for i in idx:
            orig = flat[i]
            flat[i] = orig + H_STEP
            lp = loss_at()
            flat[i] = orig - H_STEP
            lm = loss_at()
            flat[i] = orig
            fd = (lp - lm) / (2 * H_STEP)
            errs.append(abs(fd - g[i]) / max(abs(fd), abs(g[i]), 1e-6))
        worst[name] = max(errs)
    return worst


def test_every_parameter_group_matches_finite_differences(tiny_cfg):
    worst = finite_difference_check(tiny_cfg, max_per_group=64)
    for name, err in worst.items():
        assert err <= TOL, f"group {name} rel err {err:.2e} > {TOL}"


def test_gradcheck_without_dropout():
    cfg = ModelConfig(embed_dim=16, n_blocks=1, n_heads=4, mlp_hidden=32,
                      drop_proj=0.0, drop_cls=0.0, n_classes=3, patch_dim=6, n_patches=2)
    rng = np.random.default_rng(3)
    params = init_params(cfg, rng)
    x = rng.standard_normal((3, 2, 6))
    y = np.array([0, 2, 1])
    _, grads = param_gradients(x, y, params, cfg, gamma=0.0)
    h = 1e-5
    for name in ("proj.W", "cls", "block0.attn.Wqkv", "head.b"):
        flat = params[name].ravel()
        g = grads[name].ravel()
        for i in range(0, flat.size, max(1, flat.size // 10)):
            orig = flat[i]
            flat[i] = orig + h
            lp = focal_loss(forward(x, params, cfg), y, 0.0)
            flat[i] = orig - h
            lm = focal_loss(forward(x, params, cfg), y, 0.0)
            flat[i] = orig
            fd = (lp - lm) / (2 * h)
            assert abs(fd - g[i]) / max(abs(fd), abs(g[i]), 1e-6) <= TOL
