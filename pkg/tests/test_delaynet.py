"""Model invariants: attention, causality, range, equivariance, training."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from delaycast import autodiff as ad
from delaycast.autodiff import Tensor
from delaycast.checkpoint import load_checkpoint
from delaycast.delaynet import (
    DelayNet,
    ModelConfig,
    ModelError,
    build_batch,
    counterfactual_predict,
    encode,
    forward_batch,
    fuse_intervention,
    gat_forward,
    loss_total,
    model_from_checkpoint,
    model_to_checkpoint,
    predict_delay,
    scenario_tensors,
    temporal_forward,
    train,
)
from delaycast.generator import generate_dataset
from delaycast.graphcore import (
    GraphSnapshot,
    InterventionVector,
    NodeKind,
    Scenario,
    SyncMode,
    TemporalGraph,
    encoded_width,
    feature_row,
)
from delaycast.rng import stream
from delaycast.testkit import TOY_CONFIG, full_model_gradcheck, toy_record, toy_registries, toy_scenario


def toy_model(seed: int = 0) -> DelayNet:
    sc = toy_scenario()
    st = scenario_tensors(sc)
    cfg = dataclasses.replace(TOY_CONFIG, seed=seed)
    from delaycast.delaynet import feature_stats

    mean, std = feature_stats([st])
    return DelayNet.create(cfg, st.features.shape[2], encoded_width(sc.registries), mean, std)


def test_config_invariants():
    with pytest.raises(ModelError):
        ModelConfig(heads=3, embed_dim=32)
    with pytest.raises(ModelError):
        ModelConfig(lam=-0.1)
    with pytest.raises(ModelError):
        ModelConfig(cf_mode="bogus")


def test_attention_rows_sum_to_one():
    model = toy_model()
    st = scenario_tensors(toy_scenario())
    _, _, alphas = forward_batch(model, build_batch(model, [st]))
    for a in alphas:
        sums = a.data.sum(axis=3)
        assert np.all(np.abs(sums - 1.0) < 1e-6)


def test_single_node_attends_to_itself():
    reg = dataclasses.replace(toy_registries(), target_ids=(0,))
    w = InterventionVector(0, 0.0, SyncMode.Synchronized, 0, (0,), False)
    snap = GraphSnapshot(
        t=1,
        nodes=((0, NodeKind.TargetModule),),
        edges=(),
        features=np.array([feature_row(NodeKind.TargetModule, depth_m=10.0, vulnerability=0.5)]),
        interventions=w,
    )
    model = toy_model()
    _, alpha = gat_forward(snap, model, reg)
    assert alpha.shape[0] == alpha.shape[1] == 1
    assert np.allclose(alpha[0, 0, :], 1.0)


def test_symmetric_nodes_get_symmetric_embeddings():
    reg = dataclasses.replace(toy_registries(), target_ids=(0, 1))
    w = InterventionVector(0, 0.0, SyncMode.Synchronized, 0, (0, 1), False)
    row = feature_row(NodeKind.TargetModule, depth_m=20.0, vulnerability=0.5, function_weight=0.5)
    snap = GraphSnapshot(
        t=1,
        nodes=((0, NodeKind.TargetModule), (1, NodeKind.TargetModule)),
        edges=(),
        features=np.array([row, row]),
        interventions=w,
    )
    model = toy_model()
    emb, _ = gat_forward(snap, model, reg)
    assert np.allclose(emb[0], emb[1])


def test_temporal_causality_future_perturbation():
    model = toy_model()
    sc = toy_scenario(T=3)
    st = scenario_tensors(sc)
    bt = build_batch(model, [st])
    ctx, _ = encode(model, bt)
    # perturb the last step's features; context at earlier steps must be bit-identical
    feats = np.array(bt.features)
    feats[2] += 1.5
    ctx2, _ = encode(model, bt, features=feats)
    assert np.array_equal(ctx.data[:2], ctx2.data[:2])
    assert not np.array_equal(ctx.data[2], ctx2.data[2])


def test_receptive_field_is_fifteen_steps():
    # kernel 3 with dilations (1, 2, 4): 1 + sum((k-1) * d) = 15 steps incl. t
    cfg = ModelConfig(temporal_kernel=3, dilations=(1, 2, 4), heads=2, embed_dim=8)
    rng = stream(0, "rf")
    params = {}
    E = 8
    for i in range(3):
        params[f"tcn{i}.kernel"] = Tensor(rng.normal(0.5, 0.2, size=(3, E)))
        params[f"tcn{i}.mix"] = Tensor(rng.normal(0.0, 0.3, size=(E, E)))
        params[f"tcn{i}.b"] = Tensor(np.zeros(E))
    T = 20
    x = rng.normal(size=(T, 1, 2, E))
    base = temporal_forward(params, cfg, Tensor(x)).data
    bumped = np.array(x)
    bumped[0] += 2.0
    out = temporal_forward(params, cfg, Tensor(bumped)).data
    changed = [t for t in range(T) if not np.array_equal(base[t], out[t])]
    assert changed[0] == 0 and changed[-1] == 14  # nothing beyond 14 steps after the bump
    assert np.array_equal(base[15:], out[15:])


def test_fusion_is_identity_at_zero_init():
    model = toy_model()
    ctx = Tensor(stream(1, "x").normal(size=(3, 8)))
    w = Tensor(stream(1, "w").normal(size=(3, model.w_dim)))
    fused = fuse_intervention(model.params, ctx, w)
    assert np.array_equal(fused.data, ctx.data)


def test_fusion_gradients_reach_film_parameters():
    model = toy_model()
    rec = toy_record()
    st = scenario_tensors(rec.scenario)
    total, _ = loss_total([rec], model, lam=0.5, beta=0.0, tensors=[st])
    ad.zero_grads(model.params)
    ad.backward(total)
    assert model.params["film.wg"].grad is not None
    assert np.any(model.params["film.wg"].grad != 0.0)


def test_output_range_is_bounded():
    model = toy_model()
    for seed in range(5):
        sc = toy_scenario(seed=seed)
        y, _ = predict_delay(model, sc)
        assert 45.0 < y < 365.0


def test_prediction_is_pure():
    model = toy_model()
    sc = toy_scenario()
    y1, _ = predict_delay(model, sc)
    y2, _ = predict_delay(model, sc)
    assert y1 == y2


def test_permutation_equivariance():
    model = toy_model()
    sc = toy_scenario()
    y_base, _ = predict_delay(model, sc)

    # relabel node ids (4 -> 9) and reverse node row order with matching features/edges
    def relabel(nid: int) -> int:
        return 9 if nid == 4 else nid

    snaps = []
    for snap in sc.graph.snapshots:
        order = list(range(len(snap.nodes)))[::-1]
        nodes = tuple((relabel(snap.nodes[i][0]), snap.nodes[i][1]) for i in order)
        feats = snap.features[order]
        edges = tuple(
            dataclasses.replace(e, src=relabel(e.src), dst=relabel(e.dst)) for e in snap.edges
        )
        snaps.append(dataclasses.replace(snap, nodes=nodes, edges=edges, features=feats))
    permuted = Scenario(sc.scenario_id, sc.registries, TemporalGraph(tuple(snaps)))
    y_perm, _ = predict_delay(model, permuted)
    assert y_perm == pytest.approx(y_base, abs=1e-9)


def test_counterfactual_identity():
    model = toy_model()
    sc = toy_scenario()
    y_fact, y_cf = counterfactual_predict(model, sc, sc.intervention)
    assert y_fact == y_cf


def test_loss_decomposition():
    model = toy_model()
    rec = toy_record()
    st = scenario_tensors(rec.scenario)
    total, parts = loss_total([rec], model, lam=0.0, beta=0.0, tensors=[st])
    assert parts.total == pytest.approx(parts.l_reg)
    assert parts.l_cf == 0.0 and parts.l_creg == 0.0

    _, with_beta = loss_total([rec], model, lam=0.0, beta=2.0, tensors=[st])
    assert with_beta.total == pytest.approx(with_beta.l_reg + 2.0 * with_beta.l_creg)


def test_identity_cf_pair_contributes_zero():
    model = toy_model()
    rec = toy_record()
    same = dataclasses.replace(
        rec,
        cf_candidates=(
            dataclasses.replace(rec.cf_candidates[0], alt_w=rec.scenario.intervention),
        ),
    )
    st = scenario_tensors(same.scenario)
    _, parts = loss_total([same], model, lam=1.0, beta=0.0, tensors=[st])
    assert parts.l_cf == 0.0


def test_empty_batch_is_an_error():
    model = toy_model()
    with pytest.raises(ModelError, match="empty"):
        loss_total([], model, 0.1, 0.01)


def test_train_loss_decreases_and_is_deterministic():
    ds = generate_dataset(seed=9, n=80)
    cfg = ModelConfig(epochs=6, seed=0, batch_size=16)
    r1 = train(ds, cfg)
    l_reg = [h["l_reg"] for h in r1.history]
    assert all(b < a for a, b in zip(l_reg[:5], l_reg[1:6]))
    r2 = train(ds, cfg)
    for k in r1.model.params:
        assert np.array_equal(r1.model.params[k].data, r2.model.params[k].data)


def test_trained_fusion_distinguishes_interventions(small_model, small_ds):
    rec = small_ds.split_records("test")[0]
    w = rec.scenario.intervention
    other = dataclasses.replace(w, weapon_class=(w.weapon_class + 2) % 4)
    y_fact, y_cf = counterfactual_predict(small_model, rec.scenario, other)
    assert y_fact != y_cf


def test_large_lambda_shrinks_equivalence_spread():
    from delaycast.harness import DelayNetPredictor, cf_spreads

    ds = generate_dataset(seed=16, n=150)
    test = ds.split_records("test")
    base_cfg = ModelConfig(epochs=8, seed=0)
    wild = train(ds, dataclasses.replace(base_cfg, lam=0.0)).model
    tight = train(ds, dataclasses.replace(base_cfg, lam=10.0)).model
    spread_wild = np.median(cf_spreads(DelayNetPredictor(wild), test))
    spread_tight = np.median(cf_spreads(DelayNetPredictor(tight), test))
    assert spread_tight < spread_wild


def test_checkpoint_round_trip_preserves_predictions(small_model, small_ds):
    data = model_to_checkpoint(small_model)
    again = model_from_checkpoint(load_checkpoint(data, expect_kind="delaynet"))
    for rec in small_ds.split_records("test")[:10]:
        y1, _ = predict_delay(small_model, rec.scenario)
        y2, _ = predict_delay(again, rec.scenario)
        assert y1 == y2
    assert model_to_checkpoint(again) == data


def test_full_model_gradcheck_passes():
    report = full_model_gradcheck()
    assert report.passed, report
