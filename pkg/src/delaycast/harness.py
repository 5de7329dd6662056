"""Experimental apparatus: metrics, baselines, ablations, grids, recommendations.

``evaluate`` is model-agnostic: anything exposing ``predict_delay(scenario,
w=None) -> float`` is scorable. Baselines cover the ablation axes: the same
network with intervention fusion disabled, a non-attention graph-convolution
encoder with a recurrent cell, and a flat regressor on pooled features.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .delaynet import (
    Batch,
    DelayNet,
    ModelConfig,
    ScenarioTensors,
    build_batch,
    counterfactual_predict,
    feature_stats,
    predict_many,
    scenario_tensors,
    train,
)
from .generator import (
    Dataset,
    GeneratorConfig,
    ScenarioRecord,
    ground_truth_delay,
)
from .graphcore import (
    InterventionVector,
    NodeKind,
    Scenario,
)
from .optim import AdamState, adam_step, collect_grads
from .rng import stream

TOP_TAIL_FRACTION = 0.05
TOP_REL_ERR = 0.15


class Predictor(Protocol):
    def predict_delay(self, scenario: Scenario, w: InterventionVector | None = None) -> float: ...


class HarnessError(ValueError):
    pass


@dataclass(slots=True)
class MetricsReport:
    name: str
    mae: float
    rmse: float
    top5_acc: float
    cf_spread: float
    n: int
    split_hash: str
    train_seconds: float = 0.0

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


# ---------------------------------------------------------------------------
# predictors
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class DelayNetPredictor:
    model: DelayNet

    def predict_delay(self, scenario: Scenario, w: InterventionVector | None = None) -> float:
        if w is None:
            st = scenario_tensors(scenario)
            return float(predict_many(self.model, [st])[0])
        _, y_cf = counterfactual_predict(self.model, scenario, w)
        return y_cf

    def predict_records(self, records: Sequence[ScenarioRecord]) -> np.ndarray:
        sts = [scenario_tensors(r.scenario) for r in records]
        return predict_many(self.model, sts)


class OraclePredictor:
    """Noiseless generator labels; the perfect-predictor reference."""

    def __init__(self, config: GeneratorConfig = GeneratorConfig()):
        self.config = config

    def predict_delay(self, scenario: Scenario, w: InterventionVector | None = None) -> float:
        y, _, _ = ground_truth_delay(scenario, w, self.config)
        return y


class ConstantPredictor:
    def __init__(self, value: float):
        self.value = value

    def predict_delay(self, scenario: Scenario, w: InterventionVector | None = None) -> float:
        return self.value


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

def evaluate(
    predictor, records: Sequence[ScenarioRecord], name: str = "model", split_hash: str = ""
) -> MetricsReport:
    """MAE/RMSE, top-tail accuracy, and median counterfactual spread."""
    if not records:
        raise HarnessError("cannot evaluate an empty split")
    if isinstance(predictor, DelayNetPredictor):
        preds = predictor.predict_records(records)
    else:
        preds = np.array([predictor.predict_delay(r.scenario) for r in records])
    labels = np.array([r.y_days for r in records])
    errs = preds - labels
    mae = float(np.mean(np.abs(errs)))
    rmse = float(np.sqrt(np.mean(errs**2)))

    k = max(1, int(np.ceil(TOP_TAIL_FRACTION * len(records))))
    tail = np.argsort(-labels)[:k]
    rel = np.abs(errs[tail]) / labels[tail]
    top5 = float(np.mean(rel <= TOP_REL_ERR))

    spreads = cf_spreads(predictor, records, preds)
    cf_spread = float(np.median(spreads)) if spreads.size else float("nan")
    return MetricsReport(
        name=name,
        mae=mae,
        rmse=rmse,
        top5_acc=top5,
        cf_spread=cf_spread,
        n=len(records),
        split_hash=split_hash,
    )


def cf_spreads(predictor, records: Sequence[ScenarioRecord], preds: np.ndarray | None = None) -> np.ndarray:
    """Relative |y(W) - y(W_alt)| / y(W) over equal-effect tagged pairs."""
    out = []
    for i, rec in enumerate(records):
        tagged = [c for c in rec.cf_candidates if c.tagged]
        if not tagged:
            continue
        y_fact = float(preds[i]) if preds is not None else predictor.predict_delay(rec.scenario)
        for cand in tagged:
            y_alt = predictor.predict_delay(rec.scenario, cand.alt_w)
            out.append(abs(y_fact - y_alt) / y_fact)
    return np.array(out)


def direction_pairs(
    records: Sequence[ScenarioRecord],
    config: GeneratorConfig = GeneratorConfig(),
    min_delta_days: float = 1.0,
) -> list[tuple[ScenarioRecord, InterventionVector, float]]:
    """Weapon-upgrade counterfactuals whose true delay moves by >= min_delta."""
    pairs = []
    for rec in records:
        w = rec.scenario.intervention
        n_weapons = len(rec.scenario.registries.munitions)
        if w.weapon_class + 1 >= n_weapons:
            continue
        alt = dataclasses.replace(w, weapon_class=w.weapon_class + 1)
        y_alt, _, _ = ground_truth_delay(rec.scenario, alt, config)
        delta = y_alt - rec.y_noiseless
        if abs(delta) >= min_delta_days:
            pairs.append((rec, alt, delta))
    return pairs


def direction_agreement(predictor, pairs: Sequence[tuple[ScenarioRecord, InterventionVector, float]]) -> float:
    """Fraction of pairs where the predicted delta has the true delta's sign."""
    if not pairs:
        raise HarnessError("no direction pairs to score")
    agree = 0
    for rec, alt, true_delta in pairs:
        y_fact = predictor.predict_delay(rec.scenario)
        y_alt = predictor.predict_delay(rec.scenario, alt)
        if np.sign(y_alt - y_fact) == np.sign(true_delta):
            agree += 1
    return agree / len(pairs)


# ---------------------------------------------------------------------------
# baselines
# ---------------------------------------------------------------------------

def _bounded_head(z: Tensor) -> Tensor:
    return ad.add(Tensor(45.0), ad.mul(Tensor(320.0), ad.sigmoid(z)))


@dataclass(slots=True)
class FlatRegressor:
    """Feedforward net on mean-pooled node features plus the encoded intervention."""

    params: dict[str, Tensor]
    feat_mean: np.ndarray
    feat_std: np.ndarray

    def _inputs(self, sts: Sequence[ScenarioTensors]) -> np.ndarray:
        rows = []
        for st in sts:
            pooled = ((st.features - self.feat_mean) / self.feat_std).mean(axis=(0, 1))
            rows.append(np.concatenate([pooled, st.w_enc]))
        return np.stack(rows)

    def _forward(self, x: Tensor) -> Tensor:
        h = ad.relu(ad.add(ad.matmul(x, self.params["w1"]), self.params["b1"]))
        h = ad.relu(ad.add(ad.matmul(h, self.params["w2"]), self.params["b2"]))
        z = ad.add(ad.matmul(h, self.params["w3"]), self.params["b3"])
        return _bounded_head(z)

    def predict_delay(self, scenario: Scenario, w: InterventionVector | None = None) -> float:
        st = scenario_tensors(scenario, w)
        return float(self._forward(Tensor(self._inputs([st]))).data[0, 0])


@dataclass(slots=True)
class GcnRecurrentBaseline:
    """Non-attention graph convolution + recurrent cell; intervention-blind."""

    params: dict[str, Tensor]
    feat_mean: np.ndarray
    feat_std: np.ndarray
    embed: int = 32

    def _forward(self, bt: Batch) -> Tensor:
        T, B, N, _ = bt.features.shape
        deg = bt.mask.sum(axis=3, keepdims=True).astype(np.float64)
        a_hat = bt.mask.astype(np.float64) / deg  # row-normalized adjacency + self-loops
        x = Tensor(bt.features)
        h = ad.relu(ad.add(ad.matmul(Tensor(a_hat), ad.matmul(x, self.params["w1"])), self.params["b1"]))
        h = ad.relu(ad.add(ad.matmul(Tensor(a_hat), ad.matmul(h, self.params["w2"])), self.params["b2"]))
        flat = ad.reshape(h, (T * B * N, self.embed))
        # pooled target readout per (t, scenario), then a GRU over time
        rows_per_t = []
        K = bt.n_targets
        for t in range(T):
            idx = bt.target_rows + t * B * N
            rows = ad.gather_rows(flat, idx)
            rows_per_t.append(ad.mean(ad.reshape(rows, (B, K, self.embed)), axis=1))
        hidden = Tensor(np.zeros((B, self.embed)))
        p = self.params
        for t in range(T):
            xt = rows_per_t[t]
            zt = ad.sigmoid(ad.add(ad.add(ad.matmul(xt, p["gru_wz"]), ad.matmul(hidden, p["gru_uz"])), p["gru_bz"]))
            rt = ad.sigmoid(ad.add(ad.add(ad.matmul(xt, p["gru_wr"]), ad.matmul(hidden, p["gru_ur"])), p["gru_br"]))
            nt = ad.tanh(ad.add(ad.add(ad.matmul(xt, p["gru_wn"]), ad.matmul(ad.mul(rt, hidden), p["gru_un"])), p["gru_bn"]))
            one_minus = ad.sub(Tensor(1.0), zt)
            hidden = ad.add(ad.mul(one_minus, nt), ad.mul(zt, hidden))
        z = ad.add(ad.matmul(hidden, p["head_w"]), p["head_b"])
        return _bounded_head(z)

    def predict_delay(self, scenario: Scenario, w: InterventionVector | None = None) -> float:
        st = scenario_tensors(scenario, w)
        shim = _StatsShim(self.feat_mean, self.feat_std)
        bt = build_batch(shim, [st])
        return float(self._forward(bt).data[0, 0])


@dataclass(slots=True)
class _StatsShim:
    """Just enough of the DelayNet surface for build_batch."""

    feat_mean: np.ndarray
    feat_std: np.ndarray

    @property
    def d_in(self) -> int:
        return len(self.feat_mean)


def train_flat(dataset: Dataset, seed: int = 0, epochs: int = 60, lr: float = 0.01, hidden: int = 64) -> FlatRegressor:
    recs = dataset.split_records("train")
    sts = [scenario_tensors(r.scenario) for r in recs]
    mean, std = feature_stats(sts)
    model = FlatRegressor(params={}, feat_mean=mean, feat_std=std)
    x = model._inputs(sts)
    y = np.array([[r.y_days] for r in recs])
    rng = stream(seed, "flat", "init")

    def glorot(shape):
        s = np.sqrt(6.0 / (shape[0] + shape[-1]))
        return Tensor(rng.uniform(-s, s, size=shape), requires_grad=True)

    model.params = {
        "w1": glorot((x.shape[1], hidden)),
        "b1": Tensor(np.zeros(hidden), requires_grad=True),
        "w2": glorot((hidden, hidden)),
        "b2": Tensor(np.zeros(hidden), requires_grad=True),
        "w3": glorot((hidden, 1)),
        "b3": Tensor(np.zeros(1), requires_grad=True),
    }
    state = AdamState()
    xt, yt = Tensor(x), Tensor(y)
    for _ in range(epochs):
        ad.zero_grads(model.params)
        err = ad.sub(model._forward(xt), yt)
        loss = ad.mean(ad.mul(err, err))
        ad.backward(loss)
        model.params, state = adam_step(model.params, collect_grads(model.params), state, lr=lr)
    return model


def train_gcn_recurrent(
    dataset: Dataset, seed: int = 0, epochs: int = 20, lr: float = 0.01, batch_size: int = 32, embed: int = 32
) -> GcnRecurrentBaseline:
    recs = dataset.split_records("train")
    sts = [scenario_tensors(r.scenario) for r in recs]
    mean, std = feature_stats(sts)
    model = GcnRecurrentBaseline(params={}, feat_mean=mean, feat_std=std, embed=embed)
    rng = stream(seed, "gcnrec", "init")

    def glorot(shape):
        s = np.sqrt(6.0 / (shape[0] + shape[-1]))
        return Tensor(rng.uniform(-s, s, size=shape), requires_grad=True)

    d = sts[0].features.shape[2]
    E = embed
    model.params = {
        "w1": glorot((d, E)),
        "b1": Tensor(np.zeros(E), requires_grad=True),
        "w2": glorot((E, E)),
        "b2": Tensor(np.zeros(E), requires_grad=True),
        **{f"gru_w{g}": glorot((E, E)) for g in "zrn"},
        **{f"gru_u{g}": glorot((E, E)) for g in "zrn"},
        **{f"gru_b{g}": Tensor(np.zeros(E), requires_grad=True) for g in "zrn"},
        "head_w": glorot((E, 1)),
        "head_b": Tensor(np.zeros(1), requires_grad=True),
    }
    shim = _StatsShim(mean, std)
    labels = np.array([[r.y_days] for r in recs])
    state = AdamState()
    order_rng = stream(seed, "gcnrec", "batches")
    for _ in range(epochs):
        order = order_rng.permutation(len(recs))
        for b0 in range(0, len(order), batch_size):
            idx = order[b0 : b0 + batch_size]
            bt = build_batch(shim, [sts[i] for i in idx])
            ad.zero_grads(model.params)
            err = ad.sub(model._forward(bt), Tensor(labels[idx]))
            loss = ad.mean(ad.mul(err, err))
            ad.backward(loss)
            model.params, state = adam_step(model.params, collect_grads(model.params), state, lr=lr)
    return model


# ---------------------------------------------------------------------------
# ablations
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class AblationTable:
    rows: list[MetricsReport] = field(default_factory=list)

    def row(self, name: str) -> MetricsReport:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def as_dicts(self) -> list[dict]:
        return [r.as_dict() for r in self.rows]

    def format_table(self) -> str:
        header = f"{'model':<14} {'mae':>8} {'rmse':>8} {'top5':>6} {'cf_spread':>10} {'train_s':>8}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.name:<14} {r.mae:>8.3f} {r.rmse:>8.3f} {r.top5_acc:>6.2f} "
                f"{r.cf_spread:>10.4f} {r.train_seconds:>8.1f}"
            )
        return "\n".join(lines)


def run_ablations(dataset: Dataset, config: ModelConfig = ModelConfig()) -> AblationTable:
    """Full model vs intervention-blind, graph-conv recurrent, and flat baselines."""
    test = dataset.split_records("test")
    split_hash = dataset.split_hash("test")
    table = AblationTable()

    def timed(name: str, builder) -> None:
        t0 = time.monotonic()
        predictor = builder()
        seconds = time.monotonic() - t0
        report = evaluate(predictor, test, name=name, split_hash=split_hash)
        report.train_seconds = seconds
        table.rows.append(report)

    timed("delaynet", lambda: DelayNetPredictor(train(dataset, config).model))
    blind = dataclasses.replace(config, use_intervention=False, lam=0.0)
    timed("st_gnn", lambda: DelayNetPredictor(train(dataset, blind).model))
    timed("gcn_recurrent", lambda: train_gcn_recurrent(dataset, seed=config.seed, epochs=config.epochs))
    timed("flat", lambda: train_flat(dataset, seed=config.seed))
    return table


# ---------------------------------------------------------------------------
# sensitivity grid
# ---------------------------------------------------------------------------

STRUCTURE_VARIANTS = (("softened", 0.7), ("reference", 1.0), ("hardened", 1.4))


@dataclass(slots=True)
class GridResult:
    reference_id: str
    weapon_axis: tuple[int, ...]
    path_axis: tuple[int, ...]
    structure_axis: tuple[str, ...]
    values: np.ndarray  # (n_weapons, n_paths, n_structures)

    def as_dict(self) -> dict:
        return {
            "reference_id": self.reference_id,
            "weapon_axis": list(self.weapon_axis),
            "path_axis": list(self.path_axis),
            "structure_axis": list(self.structure_axis),
            "values": self.values.tolist(),
        }


def _scale_geology(scenario: Scenario, factor: float) -> Scenario:
    """Scenario variant with every geology impedance scaled by ``factor``."""
    if factor == 1.0:
        return scenario
    snaps = []
    for snap in scenario.graph.snapshots:
        feats = np.array(snap.features)
        for i, (nid, kind) in enumerate(snap.nodes):
            if kind is NodeKind.GeologyLayer:
                feats[i, 2] *= factor
        snaps.append(dataclasses.replace(snap, features=feats))
    from .graphcore import TemporalGraph

    return dataclasses.replace(scenario, graph=TemporalGraph(tuple(snaps)))


def sensitivity_grid(
    predictor,
    scenario: Scenario,
    weapons: Sequence[int] | None = None,
    paths: Sequence[int] | None = None,
    structures: Sequence[tuple[str, float]] = STRUCTURE_VARIANTS,
) -> GridResult:
    """Predicted delay over weapon x path x structure, all else at the reference."""
    reg = scenario.registries
    weapons = tuple(weapons if weapons is not None else (m.id for m in reg.munitions))
    paths = tuple(paths if paths is not None else (p.id for p in reg.paths))
    if not weapons or not paths or not structures:
        raise HarnessError("grid axes must be non-empty")
    values = np.zeros((len(weapons), len(paths), len(structures)))
    w0 = scenario.intervention
    for k, (_, factor) in enumerate(structures):
        variant = _scale_geology(scenario, factor)
        for i, weapon in enumerate(weapons):
            for j, path in enumerate(paths):
                w = dataclasses.replace(w0, weapon_class=weapon, path_strategy=path)
                values[i, j, k] = predictor.predict_delay(variant, w)
    return GridResult(
        reference_id=scenario.scenario_id,
        weapon_axis=weapons,
        path_axis=paths,
        structure_axis=tuple(name for name, _ in structures),
        values=values,
    )


# ---------------------------------------------------------------------------
# recommendation
# ---------------------------------------------------------------------------

@dataclass(slots=True)
class Recommendation:
    candidate_id: str
    w: InterventionVector
    score: float
    attention_summary: list[dict]

    def as_dict(self) -> dict:
        from .generator import w_to_obj

        return {
            "candidate_id": self.candidate_id,
            "w": w_to_obj(self.w),
            "score": self.score,
            "attention_summary": self.attention_summary,
        }


def recommend(
    model: DelayNet,
    scenario: Scenario,
    candidates: Sequence[tuple[str, InterventionVector]],
    objective: str = "delay",
    top_k: int | None = None,
    generator_config: GeneratorConfig = GeneratorConfig(),
) -> list[Recommendation]:
    """Rank candidate interventions; deterministic, ties broken by candidate id.

    objective "delay" scores by the model's predicted delay; "sdi" scores by
    the generator-chain SDI under the candidate intervention.
    """
    if not candidates:
        raise HarnessError("need at least one candidate")
    if objective not in ("delay", "sdi"):
        raise HarnessError(f"unknown objective {objective!r}")
    from .delaynet import predict_delay as _predict

    rows = []
    for cid, w in candidates:
        if objective == "delay":
            _, score = counterfactual_predict(model, scenario, w)
        else:
            _, _, score = ground_truth_delay(scenario, w, generator_config)
        swapped = _swap_intervention(scenario, w)
        _, amap = _predict(model, swapped)
        rows.append(Recommendation(candidate_id=cid, w=w, score=score, attention_summary=amap.summary()))
    rows.sort(key=lambda r: (-r.score, r.candidate_id))
    return rows[:top_k] if top_k is not None else rows


def _swap_intervention(scenario: Scenario, w: InterventionVector) -> Scenario:
    snaps = tuple(
        dataclasses.replace(snap, interventions=w) for snap in scenario.graph.snapshots
    )
    from .graphcore import TemporalGraph

    return dataclasses.replace(scenario, graph=TemporalGraph(snaps))
