"""Small fixed instances for gradient checking and smoke tests.

The toy scenario is the smallest graph the full loss accepts: four target
modules plus one geology layer over three steps. The full-model gradient
check treats every parameter tensor as an input of a frozen-data loss and
compares reverse-mode gradients against central differences.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from .autodiff import GradcheckReport, Tensor, gradcheck
from .delaynet import DelayNet, ModelConfig, loss_total, scenario_tensors
from .generator import CfCandidate, ScenarioRecord, ground_truth_delay
from .graphcore import (
    Edge,
    EdgeKind,
    GraphSnapshot,
    InterventionVector,
    NodeKind,
    PathSpec,
    Registries,
    Scenario,
    SyncMode,
    TemporalGraph,
    encoded_width,
    feature_row,
)
from .physics import Munition
from .rng import stream

TOY_CONFIG = ModelConfig(
    heads=2,
    embed_dim=8,
    gat_layers=2,
    temporal_kernel=2,
    dilations=(1, 2),
    lam=0.5,
    beta=0.1,
    seed=7,
)


def toy_registries() -> Registries:
    return Registries(
        munitions=(
            Munition(0, "light", 400.0, 120.0, 8.0, 0.8),
            Munition(1, "heavy", 2500.0, 800.0, 22.0, 1.3),
        ),
        paths=(PathSpec(0, "direct", 0.0), PathSpec(1, "oblique", 35.0)),
        target_ids=(0, 1, 2, 3),
        max_window_hours=48.0,
    )


def toy_scenario(T: int = 3, seed: int = 5) -> Scenario:
    """Five nodes (four targets + one geology layer), T snapshots."""
    reg = toy_registries()
    rng = stream(seed, "testkit", "toy")
    nodes = tuple((i, NodeKind.TargetModule) for i in range(4)) + ((4, NodeKind.GeologyLayer),)
    depth_fracs = (0.9, 0.5, 0.65, 0.8)
    thickness = 30.0
    w = InterventionVector(1, 6.0, SyncMode.Synchronized, 0, (0, 1, 2, 3), False)
    snaps = []
    for t in range(1, T + 1):
        rows = [
            feature_row(
                NodeKind.TargetModule,
                depth_m=depth_fracs[i] * thickness,
                vulnerability=0.5 + 0.1 * i,
                function_weight=float(rng.uniform(0.2, 1.0)),
            )
            for i in range(4)
        ]
        rows.append(feature_row(NodeKind.GeologyLayer, thickness_m=thickness, impedance=0.3))
        edges = []
        for i in range(4):
            wgt = 0.5 + 0.1 * i
            edges.append(Edge(4, i, EdgeKind.StructuralCoupling, wgt))
            edges.append(Edge(i, 4, EdgeKind.StructuralCoupling, wgt))
        edges.append(Edge(0, 2, EdgeKind.FunctionalDependency, 1.0))
        edges.append(Edge(2, 3, EdgeKind.FunctionalDependency, 1.0))
        snaps.append(
            GraphSnapshot(
                t=t,
                nodes=nodes,
                edges=tuple(edges),
                features=np.array(rows),
                interventions=w,
            )
        )
    return Scenario("toy", reg, TemporalGraph(tuple(snaps)))


def toy_record(seed: int = 5) -> ScenarioRecord:
    scenario = toy_scenario(seed=seed)
    y_raw, _, sdi_score = ground_truth_delay(scenario)
    alt = InterventionVector(1, 12.0, SyncMode.Synchronized, 0, (0, 1, 2, 3), True)
    return ScenarioRecord(
        scenario=scenario,
        y_days=y_raw,
        y_noiseless=y_raw,
        sdi=sdi_score,
        cf_candidates=(CfCandidate(alt_w=alt, delta_days=0.0, tagged=True),),
    )


class _FrozenNoise:
    """Stands in for a Generator so the regularizer noise is FD-stable."""

    def __init__(self, arr: np.ndarray):
        self.arr = arr

    def normal(self, loc: float, scale: float, size) -> np.ndarray:
        assert tuple(size) == self.arr.shape
        return self.arr


def full_model_gradcheck(seed: int = 0, h: float = 1e-4, tol: float = 1e-4) -> GradcheckReport:
    """Central-difference check of the complete training loss on the toy graph."""
    rec = toy_record()
    st = scenario_tensors(rec.scenario)
    config = TOY_CONFIG
    from .delaynet import feature_stats

    mean, std = feature_stats([st])
    base = DelayNet.create(
        config, st.features.shape[2], encoded_width(rec.scenario.registries), feat_mean=mean, feat_std=std
    )
    # jitter zero-initialized tensors so the check probes non-trivial points
    jitter = stream(seed, "testkit", "jitter")
    names = sorted(base.params)
    init = [
        Tensor(base.params[n].data + jitter.normal(0.0, 0.05, size=base.params[n].shape), requires_grad=True)
        for n in names
    ]
    noise = stream(seed, "testkit", "noise").normal(0.0, config.creg_noise_scale, size=(3, 1) + st.features.shape[1:])

    def f(*tensors: Tensor) -> Tensor:
        model = DelayNet(
            config=config,
            params=dict(zip(names, tensors)),
            d_in=base.d_in,
            w_dim=base.w_dim,
            feat_mean=base.feat_mean,
            feat_std=base.feat_std,
        )
        total, _ = loss_total([rec], model, config.lam, config.beta, _FrozenNoise(noise), [st])
        return ad.reshape(total, ())

    return gradcheck(f, init, h=h, tol=tol)
