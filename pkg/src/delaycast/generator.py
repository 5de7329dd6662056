"""Synthetic scenario and label generation.

Scenarios are sampled from seeded streams: a jittered geology stack, four
target modules at different depths, a handful of platforms and relays, and a
random intervention vector. Ground-truth delay comes from running the
penetration generator per module and the recovery chain on top; the label
adds clamped observation noise. Counterfactual candidates are re-labelled
noiselessly and tagged as equal-effect when the delay moves by less than the
tag tolerance.

The intervention vector is causal by construction: weapon class sets the
munition, the path sets the incidence angle, priority rank scales per-module
energy by a falloff factor, and staggered release costs a fixed energy
fraction. Release window and decoy never touch the label, which is what the
equal-effect tags exploit.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass
import numpy as np

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
    feature_row,
    scenario_from_obj,
    scenario_to_obj,
    validate,
)
from .physics import (
    DamageRule,
    Layer,
    LayerMaterial,
    LayerStack,
    default_munitions,
    simulate_penetration,
)
from .recovery import (
    DEFAULT_STAGE_GROUPS,
    SdiConfig,
    default_stages,
    recovery_delay,
    sdi,
    stage_durations,
)
from .rng import stream

DATASET_VERSION = 1

#: target module roles, in registries.target_ids order
MODULE_ROLES = ("main_control", "ventilation", "electrical", "centrifuge")

#: depth of each module as a fraction of total stack thickness (pre-jitter)
ROLE_DEPTH_FRACTION = {"main_control": 0.95, "ventilation": 0.55, "electrical": 0.7, "centrifuge": 0.85}


class GeneratorError(ValueError):
    pass


def default_paths() -> tuple[PathSpec, ...]:
    return (PathSpec(0, "direct", 0.0), PathSpec(1, "oblique", 35.0), PathSpec(2, "circuitous", 55.0))


def default_registries() -> Registries:
    return Registries(
        munitions=default_munitions(),
        paths=default_paths(),
        target_ids=(0, 1, 2, 3),
        max_window_hours=48.0,
    )


@dataclass(frozen=True, slots=True)
class GeneratorConfig:
    T: int = 6
    priority_falloff: float = 0.88
    stagger_energy_factor: float = 0.92
    noise_sigma_days: float = 5.0
    cf_tag_tolerance_days: float = 1.0
    n_cf_candidates: int = 4
    depth_jitter: float = 0.12
    vulnerability_range: tuple[float, float] = (0.4, 1.0)
    damage_rule: DamageRule = DamageRule()
    sdi: SdiConfig = SdiConfig()

    def digest(self) -> str:
        doc = {
            "T": self.T,
            "priority_falloff": self.priority_falloff,
            "stagger_energy_factor": self.stagger_energy_factor,
            "noise_sigma_days": self.noise_sigma_days,
            "cf_tag_tolerance_days": self.cf_tag_tolerance_days,
            "n_cf_candidates": self.n_cf_candidates,
            "depth_jitter": self.depth_jitter,
            "vulnerability_range": list(self.vulnerability_range),
            "damage_rule": [self.damage_rule.k, self.damage_rule.e_half_mj],
            "sdi": [dict(self.sdi.weights), self.sdi.t_window_days, self.sdi.elasticity],
        }
        return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:12]


@dataclass(frozen=True, slots=True)
class CfCandidate:
    alt_w: InterventionVector
    delta_days: float
    tagged: bool


@dataclass(frozen=True, slots=True)
class ScenarioRecord:
    scenario: Scenario
    y_days: float
    y_noiseless: float
    sdi: float
    cf_candidates: tuple[CfCandidate, ...]


@dataclass(frozen=True, slots=True)
class Dataset:
    records: tuple[ScenarioRecord, ...]
    splits: dict[str, tuple[int, ...]]
    seed: int
    generator_digest: str

    def split_records(self, name: str) -> list[ScenarioRecord]:
        return [self.records[i] for i in self.splits[name]]

    def split_hash(self, name: str) -> str:
        ids = ",".join(self.records[i].scenario.scenario_id for i in self.splits[name])
        return hashlib.sha256(ids.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# ground truth
# ---------------------------------------------------------------------------

def _stack_from_scenario(scenario: Scenario) -> LayerStack:
    snap = scenario.graph.snapshots[0]
    layers = []
    for nid, kind in sorted(snap.nodes):
        if kind is not NodeKind.GeologyLayer:
            continue
        row = snap.features[snap.node_ids.index(nid)]
        thickness, impedance = float(row[1]), float(row[2])
        material = LayerMaterial.Cavity if impedance == 0.0 else LayerMaterial.Granite
        layers.append(Layer(material, thickness, impedance))
    if not layers:
        raise GeneratorError(f"scenario {scenario.scenario_id}: no geology nodes")
    return LayerStack("scenario", tuple(layers))


def _module_states(scenario: Scenario) -> dict[str, tuple[float, float]]:
    """role -> (module depth, vulnerability), in registries.target_ids order."""
    snap = scenario.graph.snapshots[0]
    out = {}
    for role, tid in zip(MODULE_ROLES, scenario.registries.target_ids):
        row = snap.features[snap.node_ids.index(tid)]
        out[role] = (float(row[1]), float(row[2]))
    return out


def ground_truth_delay(
    scenario: Scenario,
    w: InterventionVector | None = None,
    config: GeneratorConfig = GeneratorConfig(),
) -> tuple[float, dict[str, float], float]:
    """(raw critical-path delay, stage durations, SDI) for the given intervention."""
    w = w or scenario.intervention
    reg = scenario.registries
    munition = reg.munition(w.weapon_class)
    angle = reg.path(w.path_strategy).angle_deg
    stack = _stack_from_scenario(scenario)
    modules = _module_states(scenario)

    rank = {tid: i for i, tid in enumerate(w.target_priority)}
    sync_mult = 1.0 if w.sync_mode is SyncMode.Synchronized else config.stagger_energy_factor
    damage: dict[str, float] = {}
    for role, tid in zip(MODULE_ROLES, reg.target_ids):
        depth, vulnerability = modules[role]
        depth = min(depth, stack.total_thickness_m)
        mult = sync_mult * config.priority_falloff ** rank[tid]
        eff = dataclasses.replace(munition, impact_energy_mj=munition.impact_energy_mj * mult)
        report = simulate_penetration(eff, stack, angle, depth, config.damage_rule)
        damage[role] = min(1.0, vulnerability * report.rd)

    durations = stage_durations(damage)
    plan = recovery_delay(durations, {st.id: st.dependencies for st in default_stages()})
    score = sdi(durations, DEFAULT_STAGE_GROUPS, config.sdi)
    return plan.total_delay_days, durations, score


def clamp_label(y_raw: float, noise: float = 0.0) -> float:
    return float(min(max(y_raw + noise, 45.0), 365.0))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

_STACK_PRESETS = (
    ((LayerMaterial.ReinforcedConcrete, 8.0, 0.5),),
    ((LayerMaterial.ReinforcedConcrete, 12.0, 0.5), (LayerMaterial.Granite, 25.0, 0.3)),
    ((LayerMaterial.ReinforcedConcrete, 10.0, 0.5), (LayerMaterial.Granite, 45.0, 0.3)),
    (
        (LayerMaterial.ReinforcedConcrete, 15.0, 0.5),
        (LayerMaterial.Cavity, 10.0, 0.0),
        (LayerMaterial.Granite, 30.0, 0.3),
    ),
)


def _sample_stack(rng: np.random.Generator) -> tuple[Layer, ...]:
    preset = _STACK_PRESETS[int(rng.integers(0, len(_STACK_PRESETS)))]
    layers = []
    for material, thickness, impedance in preset:
        th = thickness * float(rng.uniform(0.8, 1.25))
        imp = impedance * float(rng.uniform(0.9, 1.15)) if impedance > 0 else 0.0
        layers.append(Layer(material, th, imp))
    return tuple(layers)


def _sample_intervention(rng: np.random.Generator, reg: Registries) -> InterventionVector:
    return InterventionVector(
        weapon_class=int(rng.integers(0, len(reg.munitions))),
        release_window_h=float(rng.uniform(0.0, reg.max_window_hours)),
        sync_mode=SyncMode.Synchronized if rng.random() < 0.5 else SyncMode.Staggered,
        path_strategy=int(rng.integers(0, len(reg.paths))),
        target_priority=tuple(int(t) for t in rng.permutation(list(reg.target_ids))),
        decoy=bool(rng.random() < 0.5),
    )


def sample_scenario(
    seed: int,
    index: int,
    registries: Registries | None = None,
    config: GeneratorConfig = GeneratorConfig(),
) -> Scenario:
    reg = registries or default_registries()
    rng = stream(seed, "scenario", str(index))
    layers = _sample_stack(rng)
    total = sum(l.thickness_m for l in layers)

    nodes: list[tuple[int, NodeKind]] = []
    rows: list[list[float]] = []
    lo, hi = config.vulnerability_range
    for role, tid in zip(MODULE_ROLES, reg.target_ids):
        frac = ROLE_DEPTH_FRACTION[role] * float(rng.uniform(1 - config.depth_jitter, 1 + config.depth_jitter))
        depth = float(np.clip(frac, 0.1, 1.0)) * total
        nodes.append((tid, NodeKind.TargetModule))
        rows.append(
            feature_row(
                NodeKind.TargetModule,
                depth_m=depth,
                vulnerability=float(rng.uniform(lo, hi)),
                function_weight=float(rng.uniform(0.2, 1.0)),
            )
        )
    geo_ids = []
    next_id = max(reg.target_ids) + 1
    for layer in layers:
        nodes.append((next_id, NodeKind.GeologyLayer))
        rows.append(
            feature_row(NodeKind.GeologyLayer, thickness_m=layer.thickness_m, impedance=layer.impedance)
        )
        geo_ids.append(next_id)
        next_id += 1
    platform_ids = []
    for _ in range(int(rng.integers(2, 5))):
        nodes.append((next_id, NodeKind.Platform))
        rows.append(
            feature_row(
                NodeKind.Platform,
                payload_class=float(rng.integers(0, 4)),
                accuracy=float(rng.uniform(0.5, 1.0)),
            )
        )
        platform_ids.append(next_id)
        next_id += 1
    relay_ids = []
    relay_fuel = []
    for _ in range(int(rng.integers(1, 4))):
        nodes.append((next_id, NodeKind.PathRelay))
        fuel = float(rng.uniform(0.6, 1.0))
        relay_fuel.append(fuel)
        rows.append(
            feature_row(NodeKind.PathRelay, exposure=float(rng.uniform(0.0, 1.0)), fuel_fraction=fuel)
        )
        relay_ids.append(next_id)
        next_id += 1

    edges: list[Edge] = []
    for i, pid in enumerate(platform_ids):
        for qid in platform_ids[i + 1 :]:
            edges.append(Edge(pid, qid, EdgeKind.Coordination, 1.0))
        relay = relay_ids[i % len(relay_ids)]
        edges.append(Edge(pid, relay, EdgeKind.MissionPath, 1.0))
    for rid in relay_ids:
        for tid in reg.target_ids:
            edges.append(Edge(rid, tid, EdgeKind.MissionPath, 1.0))
    for a, b in zip(geo_ids, geo_ids[1:]):
        w = float(rng.uniform(0.5, 1.0))
        edges.append(Edge(a, b, EdgeKind.StructuralCoupling, w))
        edges.append(Edge(b, a, EdgeKind.StructuralCoupling, w))
    deepest = geo_ids[-1]
    for tid in reg.target_ids:
        w = float(rng.uniform(0.5, 1.0))
        edges.append(Edge(deepest, tid, EdgeKind.StructuralCoupling, w))
        edges.append(Edge(tid, deepest, EdgeKind.StructuralCoupling, w))
    t_main, t_vent, t_elec, t_cent = reg.target_ids
    edges.append(Edge(t_main, t_elec, EdgeKind.FunctionalDependency, 1.0))
    edges.append(Edge(t_elec, t_cent, EdgeKind.FunctionalDependency, 1.0))
    edges.append(Edge(t_vent, t_cent, EdgeKind.FunctionalDependency, 1.0))

    w = _sample_intervention(rng, reg)
    snapshots = []
    for t in range(1, config.T + 1):
        frame = [list(r) for r in rows]
        # relays burn fuel over the mission; everything else is static
        for k, rid in enumerate(relay_ids):
            row_idx = [nid for nid, _ in nodes].index(rid)
            frame[row_idx][2] = relay_fuel[k] * (1.0 - 0.5 * (t - 1) / max(config.T - 1, 1))
        snapshots.append(
            GraphSnapshot(
                t=t,
                nodes=tuple(nodes),
                edges=tuple(edges),
                features=np.array(frame, dtype=np.float64),
                interventions=w,
            )
        )
    scenario = Scenario(f"s{seed:08x}-{index:05d}", reg, TemporalGraph(tuple(snapshots)))
    problems = validate(scenario.graph, reg)
    if problems:
        raise GeneratorError(f"sampled scenario failed validation: {problems[0]}")
    return scenario


def _cf_candidates(
    rng: np.random.Generator,
    scenario: Scenario,
    y_base: float,
    config: GeneratorConfig,
) -> tuple[CfCandidate, ...]:
    """Random alternative interventions, re-labelled noiselessly and tagged.

    Candidates are full random draws rather than single-coordinate flips so
    that equal-effect tags cover genuine saturation cases (different weapons
    or paths with identical outcomes), not just the trivially non-causal
    decoy/window coordinates.
    """
    reg = scenario.registries
    alts = [_sample_intervention(rng, reg) for _ in range(config.n_cf_candidates)]
    out = []
    for alt in alts:
        y_alt, _, _ = ground_truth_delay(scenario, alt, config)
        delta = y_alt - y_base
        out.append(CfCandidate(alt_w=alt, delta_days=delta, tagged=abs(delta) < config.cf_tag_tolerance_days))
    return tuple(out)


def generate_dataset(
    seed: int,
    n: int,
    registries: Registries | None = None,
    config: GeneratorConfig = GeneratorConfig(),
    splits: tuple[float, float, float] = (0.7, 0.15, 0.15),
) -> Dataset:
    if n < 1:
        raise GeneratorError("n must be >= 1")
    reg = registries or default_registries()
    if not reg.munitions or not reg.paths:
        raise GeneratorError("registries must be non-empty")
    records = []
    for i in range(n):
        scenario = sample_scenario(seed, i, reg, config)
        y_raw, _, score = ground_truth_delay(scenario, None, config)
        noise_rng = stream(seed, "label_noise", scenario.scenario_id)
        y = clamp_label(y_raw, float(noise_rng.normal(0.0, config.noise_sigma_days)))
        cf_rng = stream(seed, "cf", scenario.scenario_id)
        cfs = _cf_candidates(cf_rng, scenario, y_raw, config)
        records.append(
            ScenarioRecord(scenario=scenario, y_days=y, y_noiseless=y_raw, sdi=score, cf_candidates=cfs)
        )
    order = stream(seed, "splits").permutation(n)
    n_train = int(round(splits[0] * n))
    n_val = int(round(splits[1] * n))
    split_map = {
        "train": tuple(int(i) for i in order[:n_train]),
        "val": tuple(int(i) for i in order[n_train : n_train + n_val]),
        "test": tuple(int(i) for i in order[n_train + n_val :]),
    }
    return Dataset(
        records=tuple(records), splits=split_map, seed=seed, generator_digest=config.digest()
    )


# ---------------------------------------------------------------------------
# dataset files
# ---------------------------------------------------------------------------

def w_to_obj(w: InterventionVector) -> dict:
    return {
        "weapon_class": w.weapon_class,
        "release_window_h": w.release_window_h,
        "sync_mode": w.sync_mode.value,
        "path_strategy": w.path_strategy,
        "target_priority": list(w.target_priority),
        "decoy": w.decoy,
    }


def w_from_obj(obj: dict) -> InterventionVector:
    return InterventionVector(
        weapon_class=int(obj["weapon_class"]),
        release_window_h=float(obj["release_window_h"]),
        sync_mode=SyncMode(obj["sync_mode"]),
        path_strategy=int(obj["path_strategy"]),
        target_priority=tuple(int(t) for t in obj["target_priority"]),
        decoy=bool(obj["decoy"]),
    )


def dataset_to_jsonl(ds: Dataset) -> bytes:
    header = {
        "kind": "delaycast_dataset",
        "dataset_version": DATASET_VERSION,
        "seed": ds.seed,
        "generator_digest": ds.generator_digest,
        "splits": {k: list(v) for k, v in ds.splits.items()},
    }
    lines = [json.dumps(header, sort_keys=True, separators=(",", ":"))]
    for rec in ds.records:
        doc = {
            "scenario": scenario_to_obj(rec.scenario),
            "y_days": rec.y_days,
            "y_noiseless": rec.y_noiseless,
            "sdi": rec.sdi,
            "cf": [
                {"alt_w": w_to_obj(c.alt_w), "delta_days": c.delta_days, "tagged": c.tagged}
                for c in rec.cf_candidates
            ],
        }
        lines.append(json.dumps(doc, sort_keys=True, separators=(",", ":")))
    return ("\n".join(lines) + "\n").encode()


def dataset_from_jsonl(data: bytes) -> Dataset:
    lines = [l for l in data.decode("utf-8").splitlines() if l.strip()]
    if not lines:
        raise GeneratorError("empty dataset file")
    header = json.loads(lines[0])
    if header.get("kind") != "delaycast_dataset":
        raise GeneratorError("not a dataset file (missing header line)")
    if header.get("dataset_version") != DATASET_VERSION:
        raise GeneratorError(f"unsupported dataset_version {header.get('dataset_version')!r}")
    records = []
    for line in lines[1:]:
        doc = json.loads(line)
        records.append(
            ScenarioRecord(
                scenario=scenario_from_obj(doc["scenario"]),
                y_days=float(doc["y_days"]),
                y_noiseless=float(doc["y_noiseless"]),
                sdi=float(doc["sdi"]),
                cf_candidates=tuple(
                    CfCandidate(
                        alt_w=w_from_obj(c["alt_w"]),
                        delta_days=float(c["delta_days"]),
                        tagged=bool(c["tagged"]),
                    )
                    for c in doc["cf"]
                ),
            )
        )
    return Dataset(
        records=tuple(records),
        splits={k: tuple(v) for k, v in header["splits"].items()},
        seed=int(header["seed"]),
        generator_digest=str(header["generator_digest"]),
    )
