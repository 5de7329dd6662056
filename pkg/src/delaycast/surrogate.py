"""Trainable damage surrogate: (munition, angle, stack, depth) -> predicted rd.

A small MLP with one dense residual block and a sigmoid head, trained on the
generator's label grid with squared error plus a pairwise monotonicity hinge:
predictions on an impedance-hardened twin of an input must not exceed the
prediction on the input itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .checkpoint import Checkpoint, dump_checkpoint
from .optim import AdamState, adam_step, collect_grads
from .physics import LabelRow, Layer, LayerMaterial, LayerStack, Munition
from .rng import stream

FEATURE_NAMES = (
    "impact_energy_mj",
    "penetration_class",
    "mass_t",
    "explosive_t",
    "angle_frac",
    "path_multiplier",
    "thickness_concrete",
    "thickness_granite",
    "thickness_cavity",
    "absorption_total",
    "absorption_to_module",
    "module_depth_m",
    "module_depth_frac",
)


class SurrogateError(ValueError):
    pass


def build_features(
    munition: Munition, angle_deg: float, stack: LayerStack, module_depth_m: float
) -> np.ndarray:
    """Fixed 13-wide feature vector; see FEATURE_NAMES for the layout."""
    path = 1.0 / np.cos(np.radians(angle_deg))
    by_mat = {m: 0.0 for m in LayerMaterial}
    absorb_to_module = 0.0
    top = 0.0
    for layer in stack.layers:
        by_mat[layer.material] += layer.thickness_m
        seg = max(0.0, min(layer.thickness_m, module_depth_m - top))
        absorb_to_module += layer.impedance * seg
        top += layer.thickness_m
    total = stack.total_thickness_m
    return np.array(
        [
            munition.impact_energy_mj,
            munition.penetration_class,
            munition.mass_kg / 1000.0,
            munition.explosive_mass_kg / 1000.0,
            angle_deg / 85.0,
            path,
            by_mat[LayerMaterial.ReinforcedConcrete],
            by_mat[LayerMaterial.Granite],
            by_mat[LayerMaterial.Cavity],
            stack.total_absorption,
            absorb_to_module,
            module_depth_m,
            module_depth_m / total if total > 0 else 0.0,
        ],
        dtype=np.float64,
    )


def harden_stack(stack: LayerStack, factor: float) -> LayerStack:
    """Scale every non-cavity impedance by (1 + factor): the monotonicity probe."""
    layers = tuple(
        Layer(l.material, l.thickness_m, l.impedance * (1.0 + factor)) for l in stack.layers
    )
    return LayerStack(stack.name, layers)


@dataclass(slots=True)
class SurrogateConfig:
    hidden: int = 64
    lr: float = 3e-3
    epochs: int = 400
    seed: int = 0
    mu: float = 1.0
    holdout_fraction: float = 0.2
    probe_factor_range: tuple[float, float] = (0.05, 0.5)
    hinge_margin: float = 0.01  # push hardened-twin predictions strictly below


@dataclass(slots=True)
class SurrogateModel:
    params: dict[str, Tensor]
    feat_mean: np.ndarray
    feat_std: np.ndarray
    config: SurrogateConfig

    def predict(self, features: np.ndarray) -> float:
        f = np.asarray(features, dtype=np.float64)
        if f.shape != self.feat_mean.shape:
            raise SurrogateError(f"feature width {f.shape} != trained width {self.feat_mean.shape}")
        out = _forward_np(self.params, (f - self.feat_mean) / self.feat_std)
        return float(out.reshape(-1)[0])

    def predict_case(
        self, munition: Munition, angle_deg: float, stack: LayerStack, module_depth_m: float
    ) -> float:
        return self.predict(build_features(munition, angle_deg, stack, module_depth_m))


def predict_rd(model: SurrogateModel, features: np.ndarray) -> float:
    return model.predict(features)


def _init_params(rng: np.random.Generator, d_in: int, hidden: int) -> dict[str, Tensor]:
    def glorot(n_in, n_out):
        scale = np.sqrt(6.0 / (n_in + n_out))
        return Tensor(rng.uniform(-scale, scale, size=(n_in, n_out)), requires_grad=True)

    return {
        "w1": glorot(d_in, hidden),
        "b1": Tensor(np.zeros(hidden), requires_grad=True),
        "w2": glorot(hidden, hidden),
        "b2": Tensor(np.zeros(hidden), requires_grad=True),
        "res_w1": glorot(hidden, hidden),
        "res_w2": glorot(hidden, hidden),
        "res_b1": Tensor(np.zeros(hidden), requires_grad=True),
        "w_out": glorot(hidden, 1),
        "b_out": Tensor(np.zeros(1), requires_grad=True),
    }


def _forward(params: dict[str, Tensor], x: Tensor) -> Tensor:
    h = ad.relu(ad.add(ad.matmul(x, params["w1"]), params["b1"]))
    h = ad.relu(ad.add(ad.matmul(h, params["w2"]), params["b2"]))
    r = ad.relu(ad.add(ad.matmul(h, params["res_w1"]), params["res_b1"]))
    h = ad.add(h, ad.matmul(r, params["res_w2"]))
    return ad.sigmoid(ad.add(ad.matmul(h, params["w_out"]), params["b_out"]))


def _forward_np(params: dict[str, Tensor], x: np.ndarray) -> np.ndarray:
    h = np.maximum(x.reshape(1, -1) @ params["w1"].data + params["b1"].data, 0.0)
    h = np.maximum(h @ params["w2"].data + params["b2"].data, 0.0)
    r = np.maximum(h @ params["res_w1"].data + params["res_b1"].data, 0.0)
    h = h + r @ params["res_w2"].data
    z = h @ params["w_out"].data + params["b_out"].data
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(slots=True)
class SurrogateHistory:
    epochs: list[dict] = field(default_factory=list)
    holdout_mae: float = float("nan")
    holdout_ids: tuple[str, ...] = ()


def train_surrogate(
    rows: Sequence[LabelRow], config: SurrogateConfig = SurrogateConfig()
) -> tuple[SurrogateModel, SurrogateHistory]:
    """Fit the surrogate on grid labels; deterministic for a fixed seed."""
    if len(rows) < 100:
        raise SurrogateError(f"need at least 100 label rows, got {len(rows)}")
    labels = np.array([r.rd for r in rows])
    if float(labels.max() - labels.min()) < 1e-12:
        raise SurrogateError("degenerate label table: all rd values identical")

    rng = stream(config.seed, "surrogate", "train")
    feats = np.stack(
        [build_features(r.munition, r.angle_deg, r.stack, r.module_depth_m) for r in rows]
    )
    order = rng.permutation(len(rows))
    n_hold = max(1, int(round(config.holdout_fraction * len(rows))))
    hold_idx, train_idx = order[:n_hold], order[n_hold:]

    mean = feats[train_idx].mean(axis=0)
    std = feats[train_idx].std(axis=0)
    std[std < 1e-9] = 1.0
    norm = (feats - mean) / std

    probe_lo, probe_hi = config.probe_factor_range

    def hardened_batch() -> Tensor:
        # fresh impedance-hardened twins for the monotonicity hinge
        hard = np.stack(
            [
                build_features(
                    rows[i].munition,
                    rows[i].angle_deg,
                    harden_stack(rows[i].stack, float(rng.uniform(probe_lo, probe_hi))),
                    rows[i].module_depth_m,
                )
                for i in train_idx
            ]
        )
        return Tensor((hard - mean) / std)

    x_train = Tensor(norm[train_idx])
    y_train = Tensor(labels[train_idx].reshape(-1, 1))

    params = _init_params(stream(config.seed, "surrogate", "init"), feats.shape[1], config.hidden)
    state = AdamState()
    history = SurrogateHistory()
    for epoch in range(config.epochs):
        ad.zero_grads(params)
        pred = _forward(params, x_train)
        err = ad.sub(pred, y_train)
        loss = ad.mean(ad.mul(err, err))
        if config.mu > 0:
            margin = ad.add(ad.sub(_forward(params, hardened_batch()), pred), Tensor(config.hinge_margin))
            gap = ad.relu(margin)
            loss = ad.add(loss, ad.mul(Tensor(config.mu), ad.mean(ad.mul(gap, gap))))
        ad.backward(loss)
        params, state = adam_step(params, collect_grads(params), state, lr=config.lr)
        if epoch % 50 == 0 or epoch == config.epochs - 1:
            history.epochs.append({"epoch": epoch, "train_loss": loss.item()})

    model = SurrogateModel(params=params, feat_mean=mean, feat_std=std, config=config)
    hold_preds = np.array([model.predict(feats[i]) for i in hold_idx])
    history.holdout_mae = float(np.mean(np.abs(hold_preds - labels[hold_idx])))
    history.holdout_ids = tuple(rows[i].config_id for i in hold_idx)
    return model, history


def monotonicity_violation_rate(
    model: SurrogateModel, rows: Sequence[LabelRow], n_pairs: int = 1000, seed: int = 0
) -> float:
    """Fraction of probe pairs where hardening the stack raises the prediction."""
    rng = stream(seed, "surrogate", "probe")
    violations = 0
    for _ in range(n_pairs):
        row = rows[int(rng.integers(0, len(rows)))]
        factor = float(rng.uniform(0.05, 0.5))
        base = model.predict_case(row.munition, row.angle_deg, row.stack, row.module_depth_m)
        hard = model.predict_case(
            row.munition, row.angle_deg, harden_stack(row.stack, factor), row.module_depth_m
        )
        if hard > base + 1e-12:
            violations += 1
    return violations / n_pairs


# ---------------------------------------------------------------------------
# checkpoint glue
# ---------------------------------------------------------------------------

def surrogate_to_checkpoint(model: SurrogateModel, meta: dict | None = None) -> bytes:
    cfg = {
        "hidden": model.config.hidden,
        "lr": model.config.lr,
        "epochs": model.config.epochs,
        "seed": model.config.seed,
        "mu": model.config.mu,
        "holdout_fraction": model.config.holdout_fraction,
        "probe_factor_range": list(model.config.probe_factor_range),
        "hinge_margin": model.config.hinge_margin,
    }
    params = dict(model.params)
    params["_feat_mean"] = Tensor(model.feat_mean)
    params["_feat_std"] = Tensor(model.feat_std)
    return dump_checkpoint("surrogate", cfg, params, meta)


def surrogate_from_checkpoint(ckpt: Checkpoint) -> SurrogateModel:
    cfg = ckpt.config
    config = SurrogateConfig(
        hidden=int(cfg["hidden"]),
        lr=float(cfg["lr"]),
        epochs=int(cfg["epochs"]),
        seed=int(cfg["seed"]),
        mu=float(cfg["mu"]),
        holdout_fraction=float(cfg["holdout_fraction"]),
        probe_factor_range=tuple(cfg["probe_factor_range"]),
        hinge_margin=float(cfg["hinge_margin"]),
    )
    params = {
        name: Tensor(arr, requires_grad=True)
        for name, arr in ckpt.params.items()
        if not name.startswith("_")
    }
    return SurrogateModel(
        params=params,
        feat_mean=ckpt.params["_feat_mean"],
        feat_std=ckpt.params["_feat_std"],
        config=config,
    )
