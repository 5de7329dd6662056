"""Intervention-conditioned spatio-temporal graph network for delay prediction.

Forward pass: a multi-head additive-attention graph encoder per snapshot, a
causal dilated-convolution temporal stack per node, FiLM conditioning on the
encoded intervention vector, and a bounded head y = 45 + 320 * sigmoid(z) so
every prediction lands inside the label range.

Scenarios are batched along a second axis (padded to the largest node count
in the batch; padded rows keep only their self-loop and are excluded from
readout and regularizers), with time kept on axis 0 for the causal convs.
FiLM conditioning commutes with the mean readout because its scale and shift
are constant across rows, so it is applied to the pooled target vector; that
makes counterfactual heads a cheap re-run of the fusion and head only.

Training minimizes squared error plus a counterfactual-consistency term over
equal-effect intervention pairs and an attention regularizer (entropy plus
drift under resampled non-causal feature noise).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .checkpoint import Checkpoint, dump_checkpoint
from .generator import Dataset, ScenarioRecord
from .graphcore import (
    FEATURE_DIM,
    GraphSnapshot,
    InterventionVector,
    NodeKind,
    Registries,
    Scenario,
    TemporalGraph,
    encode_intervention,
    encoded_width,
    validate,
)
from .optim import AdamState, adam_step, collect_grads
from .rng import stream

NEG_MASK = -1e30
Y_LOW, Y_SPAN = 45.0, 320.0


class ModelError(ValueError):
    pass


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


@dataclass(frozen=True, slots=True)
class ModelConfig:
    heads: int = 4
    embed_dim: int = 32
    gat_layers: int = 2
    temporal_kernel: int = 3
    dilations: tuple[int, ...] = (1, 2, 4)
    lam: float = 0.1
    beta: float = 0.01
    lr: float = 0.01
    lr_decay: float = 0.3
    lr_decay_at: float = 0.6  # fraction of epochs after which lr is scaled
    epochs: int = 35
    batch_size: int = 32
    seed: int = 0
    cf_mode: str = "tagged"  # "tagged" | "all_pairs" (literal consistency loss)
    creg_noise_scale: float = 0.25
    use_intervention: bool = True  # disabled for the intervention-blind ablation

    def __post_init__(self):
        if self.embed_dim % self.heads != 0:
            raise ModelError(f"embed_dim {self.embed_dim} not divisible by heads {self.heads}")
        if self.lam < 0 or self.beta < 0:
            raise ModelError("lam and beta must be >= 0")
        if self.cf_mode not in ("tagged", "all_pairs"):
            raise ModelError(f"unknown cf_mode {self.cf_mode!r}")


@dataclass(slots=True)
class AttentionMap:
    """Per-layer attention arrays of shape (T, dst, src, heads) plus node order."""

    node_ids: tuple[int, ...]
    layers: tuple[np.ndarray, ...]

    def edge_weights(self, layer: int, t: int, head: int) -> dict[tuple[int, int], float]:
        """(src, dst) -> attention, for entries carrying mass."""
        a = self.layers[layer][t - 1, :, :, head]
        out = {}
        for di, dst in enumerate(self.node_ids):
            for si, src in enumerate(self.node_ids):
                if a[di, si] > 0.0:
                    out[(src, dst)] = float(a[di, si])
        return out

    def summary(self, top_k: int = 5) -> list[dict]:
        """Strongest non-self edges of the last layer, averaged over time/heads."""
        a = self.layers[-1].mean(axis=(0, 3))
        items = []
        for di, dst in enumerate(self.node_ids):
            for si, src in enumerate(self.node_ids):
                if si != di and a[di, si] > 0.0:
                    items.append({"src": src, "dst": dst, "weight": float(a[di, si])})
        items.sort(key=lambda e: (-e["weight"], e["src"], e["dst"]))
        return items[:top_k]


@dataclass(slots=True)
class ScenarioTensors:
    """Raw per-scenario arrays, ready for batching."""

    node_ids: tuple[int, ...]
    features: np.ndarray  # (T, N, d)
    mask: np.ndarray  # (T, N_dst, N_src) bool, self-loops included
    target_idx: np.ndarray  # indices of the registry-ordered target modules
    noncausal: np.ndarray  # (N, d) bool: entries the label never reads
    w_enc: np.ndarray  # encoded intervention (m,)


def scenario_tensors(scenario: Scenario, w: InterventionVector | None = None) -> ScenarioTensors:
    snaps = scenario.graph.snapshots
    node_ids = snaps[0].node_ids
    index = {nid: i for i, nid in enumerate(node_ids)}
    n = len(node_ids)
    T = len(snaps)
    feats = np.stack([s.features for s in snaps])
    mask = np.zeros((T, n, n), dtype=bool)
    mask[:, np.arange(n), np.arange(n)] = True
    for t, snap in enumerate(snaps):
        for e in snap.edges:
            mask[t, index[e.dst], index[e.src]] = True
    target_idx = np.array([index[tid] for tid in scenario.registries.target_ids], dtype=np.intp)
    noncausal = np.zeros((n, feats.shape[2]), dtype=bool)
    for nid, kind in snaps[0].nodes:
        if kind in (NodeKind.Platform, NodeKind.PathRelay):
            noncausal[index[nid], 1:] = True
    w_enc = encode_intervention(w or scenario.intervention, scenario.registries)
    return ScenarioTensors(
        node_ids=node_ids,
        features=feats,
        mask=mask,
        target_idx=target_idx,
        noncausal=noncausal,
        w_enc=w_enc,
    )


@dataclass(slots=True)
class Batch:
    """Padded (T, B, N, *) arrays for a list of scenarios."""

    features: np.ndarray  # (T, B, N, d), normalized, padded rows zero
    mask: np.ndarray  # (T, B, N, N) bool
    valid: np.ndarray  # (B, N) bool
    target_rows: np.ndarray  # (B * K,) flat row indices into (B*N, E)
    n_targets: int
    w_enc: np.ndarray  # (B, m)
    noncausal: np.ndarray  # (B, N, d) bool
    size: int
    n_pad: int


def build_batch(model: "DelayNet", items: Sequence[ScenarioTensors]) -> Batch:
    T = items[0].features.shape[0]
    d = items[0].features.shape[2]
    K = len(items[0].target_idx)
    for st in items:
        if st.features.shape[0] != T:
            raise ModelError("all scenarios in a batch must share T")
        if len(st.target_idx) != K:
            raise ModelError("all scenarios in a batch must share the target count")
    B = len(items)
    N = max(st.features.shape[1] for st in items)
    feats = np.zeros((T, B, N, d))
    mask = np.zeros((T, B, N, N), dtype=bool)
    mask[:, :, np.arange(N), np.arange(N)] = True  # self-loop everywhere, incl padding
    valid = np.zeros((B, N), dtype=bool)
    noncausal = np.zeros((B, N, d), dtype=bool)
    w_enc = np.zeros((B, items[0].w_enc.shape[0]))
    target_rows = np.zeros((B, K), dtype=np.intp)
    for b, st in enumerate(items):
        n = st.features.shape[1]
        feats[:, b, :n, :] = (st.features - model.feat_mean) / model.feat_std
        mask[:, b, :n, :n] = st.mask
        valid[b, :n] = True
        noncausal[b, :n] = st.noncausal
        w_enc[b] = st.w_enc
        target_rows[b] = b * N + st.target_idx
    return Batch(
        features=feats,
        mask=mask,
        valid=valid,
        target_rows=target_rows.reshape(-1),
        n_targets=K,
        w_enc=w_enc,
        noncausal=noncausal,
        size=B,
        n_pad=N,
    )


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------

def init_params(config: ModelConfig, d_in: int, w_dim: int) -> dict[str, Tensor]:
    rng = stream(config.seed, "delaynet", "init")
    E, H = config.embed_dim, config.heads
    Eh = E // H

    def glorot(shape):
        scale = np.sqrt(6.0 / (shape[0] + shape[-1]))
        return Tensor(rng.uniform(-scale, scale, size=shape), requires_grad=True)

    params: dict[str, Tensor] = {}
    for layer in range(config.gat_layers):
        dim = d_in if layer == 0 else E
        params[f"gat{layer}.w"] = glorot((dim, E))
        params[f"gat{layer}.b"] = Tensor(np.zeros(E), requires_grad=True)
        params[f"gat{layer}.a_src"] = Tensor(rng.normal(0.0, 0.3, size=(H, Eh)), requires_grad=True)
        params[f"gat{layer}.a_dst"] = Tensor(rng.normal(0.0, 0.3, size=(H, Eh)), requires_grad=True)
    for i, _dil in enumerate(config.dilations):
        kern = np.zeros((config.temporal_kernel, E))
        kern[0] = 1.0  # start near the identity over time
        params[f"tcn{i}.kernel"] = Tensor(kern + rng.normal(0.0, 0.02, size=kern.shape), requires_grad=True)
        params[f"tcn{i}.mix"] = glorot((E, E))
        params[f"tcn{i}.b"] = Tensor(np.zeros(E), requires_grad=True)
    params["film.wg"] = Tensor(np.zeros((w_dim, E)), requires_grad=True)
    params["film.bg"] = Tensor(np.zeros(E), requires_grad=True)
    params["film.wh"] = Tensor(np.zeros((w_dim, E)), requires_grad=True)
    params["film.bh"] = Tensor(np.zeros(E), requires_grad=True)
    params["head.w1"] = glorot((E, E))
    params["head.b1"] = Tensor(np.zeros(E), requires_grad=True)
    params["head.w2"] = glorot((E, 1))
    params["head.b2"] = Tensor(np.zeros(1), requires_grad=True)
    return params


@dataclass(slots=True)
class DelayNet:
    config: ModelConfig
    params: dict[str, Tensor]
    d_in: int
    w_dim: int
    feat_mean: np.ndarray
    feat_std: np.ndarray

    @classmethod
    def create(
        cls,
        config: ModelConfig,
        d_in: int = FEATURE_DIM,
        w_dim: int = 0,
        feat_mean: np.ndarray | None = None,
        feat_std: np.ndarray | None = None,
    ) -> "DelayNet":
        mean = np.zeros(d_in) if feat_mean is None else np.asarray(feat_mean, dtype=np.float64)
        std = np.ones(d_in) if feat_std is None else np.asarray(feat_std, dtype=np.float64)
        return cls(
            config=config,
            params=init_params(config, d_in, w_dim),
            d_in=d_in,
            w_dim=w_dim,
            feat_mean=mean,
            feat_std=std,
        )


def feature_stats(items: Sequence[ScenarioTensors]) -> tuple[np.ndarray, np.ndarray]:
    rows = np.concatenate([st.features.reshape(-1, st.features.shape[2]) for st in items])
    mean = rows.mean(axis=0)
    std = rows.std(axis=0)
    std[std < 1e-9] = 1.0
    return mean, std


# ---------------------------------------------------------------------------
# forward pieces
# ---------------------------------------------------------------------------

def gat_layer(
    params: dict[str, Tensor], config: ModelConfig, layer: int, x: Tensor, mask: np.ndarray
) -> tuple[Tensor, Tensor]:
    """One attention layer over (T, B, N, d) -> (T, B, N, E); alpha (T, B, N, N, H)."""
    T, B, N = x.shape[0], x.shape[1], x.shape[2]
    E, H = config.embed_dim, config.heads
    Eh = E // H
    h = ad.add(ad.matmul(x, params[f"gat{layer}.w"]), params[f"gat{layer}.b"])
    h5 = ad.reshape(h, (T, B, N, H, Eh))
    s_src = ad.sum_(ad.mul(h5, params[f"gat{layer}.a_src"]), axis=-1)  # (T, B, N, H)
    s_dst = ad.sum_(ad.mul(h5, params[f"gat{layer}.a_dst"]), axis=-1)
    scores = ad.leaky_relu(
        ad.add(ad.reshape(s_dst, (T, B, N, 1, H)), ad.reshape(s_src, (T, B, 1, N, H))), 0.2
    )
    alpha = ad.softmax(ad.masked_fill(scores, ~mask[:, :, :, :, None], NEG_MASK), axis=3)
    att = ad.transpose(alpha, (0, 1, 4, 2, 3))  # (T, B, H, dst, src)
    values = ad.transpose(h5, (0, 1, 3, 2, 4))  # (T, B, H, N, Eh)
    msg = ad.matmul(att, values)  # (T, B, H, dst, Eh)
    out = ad.relu(ad.reshape(ad.transpose(msg, (0, 1, 3, 2, 4)), (T, B, N, E)))
    return out, alpha


def temporal_forward(params: dict[str, Tensor], config: ModelConfig, x: Tensor) -> Tensor:
    """Causal dilated stack over axis 0; step t never reads steps > t."""
    for i, dil in enumerate(config.dilations):
        conv = ad.dilated_conv1d(x, params[f"tcn{i}.kernel"], dilation=dil)
        mixed = ad.relu(ad.add(ad.matmul(conv, params[f"tcn{i}.mix"]), params[f"tcn{i}.b"]))
        x = ad.add(x, mixed)
    return x


def fuse_intervention(params: dict[str, Tensor], context: Tensor, w_enc: Tensor) -> Tensor:
    """FiLM conditioning: context * (1 + g(w)) + h(w); identity at zero init.

    ``context`` rows pair with ``w_enc`` rows: (B, E) with (B, m).
    """
    g = ad.add(ad.matmul(w_enc, params["film.wg"]), params["film.bg"])
    h = ad.add(ad.matmul(w_enc, params["film.wh"]), params["film.bh"])
    return ad.add(ad.mul(context, ad.add(Tensor(1.0), g)), h)


def encode(model: DelayNet, bt: Batch, features: np.ndarray | None = None) -> tuple[Tensor, list[Tensor]]:
    feats = bt.features if features is None else features
    if feats.shape[3] != model.d_in:
        raise ModelError(f"feature width {feats.shape[3]} != model width {model.d_in}")
    x = Tensor(feats)
    alphas = []
    for layer in range(model.config.gat_layers):
        x, alpha = gat_layer(model.params, model.config, layer, x, bt.mask)
        alphas.append(alpha)
    context = temporal_forward(model.params, model.config, x)
    return context, alphas


def pooled_readout(context: Tensor, bt: Batch) -> Tensor:
    """(B, E): mean of the final-step target-module rows per scenario."""
    T, B, N = context.shape[0], context.shape[1], context.shape[2]
    last = ad.reshape(context[T - 1], (B * N, context.shape[3]))
    rows = ad.gather_rows(last, bt.target_rows)
    per_scenario = ad.reshape(rows, (B, bt.n_targets, context.shape[3]))
    return ad.mean(per_scenario, axis=1)


def head(model: DelayNet, pooled: Tensor, w_enc: np.ndarray) -> Tensor:
    """Bounded predictions in (45, 365); one row per pooled context row."""
    fused = fuse_intervention(model.params, pooled, Tensor(w_enc)) if model.config.use_intervention else pooled
    hidden = ad.relu(ad.add(ad.matmul(fused, model.params["head.w1"]), model.params["head.b1"]))
    z = ad.add(ad.matmul(hidden, model.params["head.w2"]), model.params["head.b2"])
    return ad.add(Tensor(Y_LOW), ad.mul(Tensor(Y_SPAN), ad.sigmoid(z)))


def forward_batch(model: DelayNet, bt: Batch) -> tuple[Tensor, Tensor, list[Tensor]]:
    context, alphas = encode(model, bt)
    pooled = pooled_readout(context, bt)
    return head(model, pooled, bt.w_enc), pooled, alphas


# single-scenario conveniences ------------------------------------------------

def gat_forward(
    snapshot: GraphSnapshot, model: DelayNet, registries: Registries
) -> tuple[np.ndarray, np.ndarray]:
    """Single-snapshot first-layer embeddings (N, E) and attention (N, N, H)."""
    one = dataclasses.replace(snapshot, t=1)
    sc = Scenario("single", registries, TemporalGraph((one,)))
    st = scenario_tensors(sc)
    bt = build_batch(model, [st])
    out, alpha = gat_layer(model.params, model.config, 0, Tensor(bt.features), bt.mask)
    return np.array(out.data[0, 0]), np.array(alpha.data[0, 0])


def predict_delay(model: DelayNet, scenario: Scenario) -> tuple[float, AttentionMap]:
    problems = validate(scenario.graph, scenario.registries)
    if problems:
        raise ModelError(f"invalid scenario: {problems[0]}")
    st = scenario_tensors(scenario)
    bt = build_batch(model, [st])
    y, _, alphas = forward_batch(model, bt)
    amap = AttentionMap(
        node_ids=st.node_ids, layers=tuple(np.array(a.data[:, 0]) for a in alphas)
    )
    return float(y.data[0, 0]), amap


def counterfactual_predict(
    model: DelayNet, scenario: Scenario, alt_w: InterventionVector
) -> tuple[float, float]:
    """(factual, counterfactual) prediction with only the intervention swapped."""
    st = scenario_tensors(scenario)
    bt = build_batch(model, [st])
    context, _ = encode(model, bt)
    pooled = pooled_readout(context, bt)
    y_fact = head(model, pooled, bt.w_enc)
    alt = encode_intervention(alt_w, scenario.registries).reshape(1, -1)
    y_cf = head(model, pooled, alt)
    return float(y_fact.data[0, 0]), float(y_cf.data[0, 0])


# ---------------------------------------------------------------------------
# losses
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class LossBreakdown:
    total: float
    l_reg: float
    l_cf: float
    l_creg: float


def _masked_attention_entropy(alphas: Sequence[Tensor], bt: Batch) -> Tensor:
    """Mean per-destination entropy over real (non-padded) rows."""
    w = bt.valid[None, :, :, None].astype(np.float64)  # (1, B, N, 1)
    denom = 0.0
    total = None
    for a in alphas:
        plogp = ad.mul(a, ad.log(ad.add(a, Tensor(1e-12))))
        row_ent = ad.neg(ad.sum_(plogp, axis=3))  # (T, B, N, H)
        weighted = ad.sum_(ad.mul(row_ent, Tensor(w)))
        total = weighted if total is None else ad.add(total, weighted)
        denom += a.shape[0] * float(bt.valid.sum()) * a.shape[4]
    return ad.mul(Tensor(1.0 / denom), total)


def _masked_attention_drift(alphas: Sequence[Tensor], alphas_noisy: Sequence[Tensor], bt: Batch) -> Tensor:
    """Mean per-destination L1 drift over real rows under feature-noise resampling."""
    w = bt.valid[None, :, :, None, None].astype(np.float64)
    denom = 0.0
    total = None
    for a, b in zip(alphas, alphas_noisy):
        diff = ad.sub(a, b)
        l1 = ad.add(ad.relu(diff), ad.relu(ad.neg(diff)))
        weighted = ad.sum_(ad.mul(l1, Tensor(w)))
        total = weighted if total is None else ad.add(total, weighted)
        denom += a.shape[0] * float(bt.valid.sum()) * a.shape[4]
    return ad.mul(Tensor(1.0 / denom), total)


def loss_total(
    batch: Sequence[ScenarioRecord],
    model: DelayNet,
    lam: float,
    beta: float,
    noise_rng: np.random.Generator | None = None,
    tensors: Sequence[ScenarioTensors] | None = None,
) -> tuple[Tensor, LossBreakdown]:
    """Hybrid objective over one batch; components reported separately."""
    if not batch:
        raise ModelError("empty batch")
    sts = tensors or [scenario_tensors(rec.scenario) for rec in batch]
    bt = build_batch(model, sts)
    context, alphas = encode(model, bt)
    pooled = pooled_readout(context, bt)
    y_hat = head(model, pooled, bt.w_enc)
    labels = np.array([[rec.y_days] for rec in batch])
    err = ad.sub(y_hat, Tensor(labels))
    l_reg = ad.mean(ad.mul(err, err))
    total = l_reg

    l_cf_val = 0.0
    if lam > 0 and model.config.use_intervention:
        parent_rows: list[int] = []
        alt_encs: list[np.ndarray] = []
        for b, rec in enumerate(batch):
            for cand in rec.cf_candidates:
                if model.config.cf_mode == "tagged" and not cand.tagged:
                    continue
                parent_rows.append(b)
                alt_encs.append(encode_intervention(cand.alt_w, rec.scenario.registries))
        if parent_rows:
            idx = np.array(parent_rows, dtype=np.intp)
            pooled_cf = ad.gather_rows(pooled, idx)
            y_pairs = ad.gather_rows(y_hat, idx)
            y_alt = head(model, pooled_cf, np.stack(alt_encs))
            gap = ad.sub(y_pairs, y_alt)
            l_cf = ad.mean(ad.mul(gap, gap))
            total = ad.add(total, ad.mul(Tensor(lam), l_cf))
            l_cf_val = l_cf.item()

    l_creg_val = 0.0
    if beta > 0:
        ent = _masked_attention_entropy(alphas, bt)
        if noise_rng is not None:
            noise = noise_rng.normal(0.0, model.config.creg_noise_scale, size=bt.features.shape)
            noisy = bt.features + noise * bt.noncausal[None, :, :, :]
            _, alphas_noisy = encode(model, bt, features=noisy)
            l_creg = ad.add(ent, _masked_attention_drift(alphas, alphas_noisy, bt))
        else:
            l_creg = ent
        total = ad.add(total, ad.mul(Tensor(beta), l_creg))
        l_creg_val = l_creg.item()

    return total, LossBreakdown(total=total.item(), l_reg=l_reg.item(), l_cf=l_cf_val, l_creg=l_creg_val)


# ---------------------------------------------------------------------------
# training
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class TrainResult:
    model: DelayNet
    history: list[dict] = field(default_factory=list)
    best_val_mae: float = float("inf")


def train(dataset: Dataset, config: ModelConfig = ModelConfig()) -> TrainResult:
    """Deterministic training run; retains the best-validation parameters."""
    train_recs = dataset.split_records("train")
    val_recs = dataset.split_records("val")
    if not train_recs or not val_recs:
        raise ModelError("dataset must provide non-empty train and val splits")

    train_sts = [scenario_tensors(rec.scenario) for rec in train_recs]
    val_sts = [scenario_tensors(rec.scenario) for rec in val_recs]
    mean, std = feature_stats(train_sts)
    d_in = train_sts[0].features.shape[2]
    w_dim = encoded_width(train_recs[0].scenario.registries)
    model = DelayNet.create(config, d_in, w_dim, feat_mean=mean, feat_std=std)

    state = AdamState()
    order_rng = stream(config.seed, "delaynet", "batches")
    noise_rng = stream(config.seed, "delaynet", "creg_noise")
    result = TrainResult(model=model)
    best_params = {k: Tensor(v.data) for k, v in model.params.items()}

    decay_from = int(np.ceil(config.lr_decay_at * config.epochs))
    for epoch in range(config.epochs):
        lr = config.lr * (config.lr_decay if epoch >= decay_from else 1.0)
        order = order_rng.permutation(len(train_recs))
        sums = np.zeros(3)
        n_batches = 0
        for b0 in range(0, len(order), config.batch_size):
            idx = order[b0 : b0 + config.batch_size]
            recs = [train_recs[i] for i in idx]
            sts = [train_sts[i] for i in idx]
            ad.zero_grads(model.params)
            total, parts = loss_total(recs, model, config.lam, config.beta, noise_rng, sts)
            if not np.isfinite(parts.total):
                raise TrainingDivergedError(epoch, b0 // config.batch_size)
            ad.backward(total)
            model.params, state = adam_step(model.params, collect_grads(model.params), state, lr=lr)
            sums += (parts.l_reg, parts.l_cf, parts.l_creg)
            n_batches += 1
        val_mae = eval_mae(model, val_recs, val_sts)
        result.history.append(
            {
                "epoch": epoch,
                "l_reg": sums[0] / n_batches,
                "l_cf": sums[1] / n_batches,
                "l_creg": sums[2] / n_batches,
                "val_mae": val_mae,
            }
        )
        if val_mae < result.best_val_mae:
            result.best_val_mae = val_mae
            best_params = {k: Tensor(v.data) for k, v in model.params.items()}
    model.params = {k: Tensor(v.data, requires_grad=True) for k, v in best_params.items()}
    result.model = model
    return result


def eval_mae(
    model: DelayNet, recs: Sequence[ScenarioRecord], sts: Sequence[ScenarioTensors] | None = None
) -> float:
    sts = sts or [scenario_tensors(rec.scenario) for rec in recs]
    preds = predict_many(model, sts)
    labels = np.array([rec.y_days for rec in recs])
    return float(np.mean(np.abs(preds - labels)))


def predict_many(model: DelayNet, sts: Sequence[ScenarioTensors], chunk: int = 64) -> np.ndarray:
    out = []
    for i in range(0, len(sts), chunk):
        part = sts[i : i + chunk]
        # group by (T, N) is unnecessary: build_batch pads within the chunk
        bt = build_batch(model, part)
        y, _, _ = forward_batch(model, bt)
        out.append(np.array(y.data[:, 0]))
    return np.concatenate(out)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------

def model_to_checkpoint(model: DelayNet, meta: dict | None = None) -> bytes:
    cfg = {
        "heads": model.config.heads,
        "embed_dim": model.config.embed_dim,
        "gat_layers": model.config.gat_layers,
        "temporal_kernel": model.config.temporal_kernel,
        "dilations": list(model.config.dilations),
        "lam": model.config.lam,
        "beta": model.config.beta,
        "lr": model.config.lr,
        "lr_decay": model.config.lr_decay,
        "lr_decay_at": model.config.lr_decay_at,
        "epochs": model.config.epochs,
        "batch_size": model.config.batch_size,
        "seed": model.config.seed,
        "cf_mode": model.config.cf_mode,
        "creg_noise_scale": model.config.creg_noise_scale,
        "use_intervention": model.config.use_intervention,
        "d_in": model.d_in,
        "w_dim": model.w_dim,
    }
    params = dict(model.params)
    params["_feat_mean"] = Tensor(model.feat_mean)
    params["_feat_std"] = Tensor(model.feat_std)
    return dump_checkpoint("delaynet", cfg, params, meta)


def model_from_checkpoint(ckpt: Checkpoint) -> DelayNet:
    cfg = dict(ckpt.config)
    d_in = int(cfg.pop("d_in"))
    w_dim = int(cfg.pop("w_dim"))
    cfg["dilations"] = tuple(cfg["dilations"])
    config = ModelConfig(**cfg)
    params = {
        name: Tensor(arr, requires_grad=True)
        for name, arr in ckpt.params.items()
        if not name.startswith("_")
    }
    return DelayNet(
        config=config,
        params=params,
        d_in=d_in,
        w_dim=w_dim,
        feat_mean=ckpt.params["_feat_mean"],
        feat_std=ckpt.params["_feat_std"],
    )
