"""Damage surrogate: fidelity, monotonicity hinge, checkpoint round-trip."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from delaycast.checkpoint import load_checkpoint
from delaycast.physics import LabelGrid, batch_labels, default_munitions, default_stacks, make_stack, LayerMaterial
from delaycast.surrogate import (
    SurrogateConfig,
    SurrogateError,
    build_features,
    harden_stack,
    monotonicity_violation_rate,
    surrogate_from_checkpoint,
    surrogate_to_checkpoint,
    train_surrogate,
)


def test_holdout_mae_below_spec(surrogate_pair):
    _, history = surrogate_pair
    assert history.holdout_mae <= 0.05


def test_prediction_is_deterministic_and_bounded(surrogate_pair, label_rows):
    model, _ = surrogate_pair
    row = label_rows[17]
    a = model.predict_case(row.munition, row.angle_deg, row.stack, row.module_depth_m)
    b = model.predict_case(row.munition, row.angle_deg, row.stack, row.module_depth_m)
    assert a == b
    assert 0.0 < a < 1.0


def test_overkill_case_predicts_high(surrogate_pair):
    model, _ = surrogate_pair
    cavity = make_stack("cav", [(LayerMaterial.Cavity, 20.0)])
    heavy = default_munitions()[-1]
    assert model.predict_case(heavy, 0.0, cavity, 20.0) > 0.9


def test_unreached_case_predicts_low(surrogate_pair):
    model, _ = surrogate_pair
    light = default_munitions()[0]
    deep = default_stacks()[2]  # generator gives rd = 0 here
    assert model.predict_case(light, 60.0, deep, deep.total_thickness_m) < 0.1


def test_width_mismatch_is_an_error(surrogate_pair):
    model, _ = surrogate_pair
    with pytest.raises(SurrogateError, match="width"):
        model.predict(np.zeros(5))


def test_needs_at_least_100_rows(label_rows):
    with pytest.raises(SurrogateError, match="100"):
        train_surrogate(label_rows[:50])


def test_degenerate_labels_rejected(label_rows):
    flat_rows = [dataclasses.replace(r, rd=0.5) for r in label_rows]
    with pytest.raises(SurrogateError, match="degenerate"):
        train_surrogate(flat_rows)


def test_single_epoch_run_stays_finite(label_rows):
    model, history = train_surrogate(label_rows, SurrogateConfig(epochs=1, seed=3))
    assert np.isfinite(history.epochs[-1]["train_loss"])
    for p in model.params.values():
        assert np.all(np.isfinite(p.data))


def test_monotonicity_rate_no_worse_with_hinge(label_rows):
    base_cfg = SurrogateConfig(seed=1, epochs=250)
    model_mu0, _ = train_surrogate(label_rows, dataclasses.replace(base_cfg, mu=0.0))
    model_mu1, _ = train_surrogate(label_rows, dataclasses.replace(base_cfg, mu=1.0))
    rate0 = monotonicity_violation_rate(model_mu0, label_rows, n_pairs=1000, seed=9)
    rate1 = monotonicity_violation_rate(model_mu1, label_rows, n_pairs=1000, seed=9)
    assert rate1 <= rate0
    assert rate1 <= 0.05


def test_harden_stack_scales_only_impedance(label_rows):
    row = label_rows[0]
    hard = harden_stack(row.stack, 0.5)
    assert hard.total_thickness_m == row.stack.total_thickness_m
    assert hard.total_absorption == pytest.approx(1.5 * row.stack.total_absorption)


def test_feature_vector_is_stable(label_rows):
    row = label_rows[3]
    f1 = build_features(row.munition, row.angle_deg, row.stack, row.module_depth_m)
    f2 = build_features(row.munition, row.angle_deg, row.stack, row.module_depth_m)
    assert np.array_equal(f1, f2)
    assert f1.shape == (13,)


def test_checkpoint_round_trip_is_exact(surrogate_pair, label_rows):
    model, _ = surrogate_pair
    data = surrogate_to_checkpoint(model, meta={"note": "test"})
    again = surrogate_from_checkpoint(load_checkpoint(data, expect_kind="surrogate"))
    for row in label_rows[:20]:
        a = model.predict_case(row.munition, row.angle_deg, row.stack, row.module_depth_m)
        b = again.predict_case(row.munition, row.angle_deg, row.stack, row.module_depth_m)
        assert a == b
    assert surrogate_to_checkpoint(again, meta={"note": "test"}) == data
