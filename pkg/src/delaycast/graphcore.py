"""Data model for time-varying intervention scenario graphs.

A scenario is a sequence of snapshots over a fixed node set (nodes toggle an
active bit rather than disappearing, so tensor shapes stay stable), plus the
intervention vector in force and the registries that give categorical ids
meaning. Scenario files are line-delimited JSON, one scenario object per
line, with a mandatory schema_version; parsing is strict and rejects unknown
fields by name.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Any, Iterable

import numpy as np

from .physics import Munition

SCHEMA_VERSION = 1


class NodeKind(Enum):
    Platform = "Platform"
    TargetModule = "TargetModule"
    GeologyLayer = "GeologyLayer"
    PathRelay = "PathRelay"


class EdgeKind(Enum):
    Coordination = "Coordination"
    MissionPath = "MissionPath"
    StructuralCoupling = "StructuralCoupling"  # undirected: stored as two arcs
    FunctionalDependency = "FunctionalDependency"  # directed


class SyncMode(Enum):
    Synchronized = "Synchronized"
    Staggered = "Staggered"


#: per-kind feature names; every row is [active_bit, *fields] zero-padded to
#: the widest kind, so the feature width d is the same for all nodes.
FIELD_SCHEMA: dict[NodeKind, tuple[str, ...]] = {
    NodeKind.Platform: ("payload_class", "accuracy"),
    NodeKind.TargetModule: ("depth_m", "vulnerability", "function_weight"),
    NodeKind.GeologyLayer: ("thickness_m", "impedance"),
    NodeKind.PathRelay: ("exposure", "fuel_fraction"),
}

FEATURE_DIM = 1 + max(len(v) for v in FIELD_SCHEMA.values())


def feature_row(kind: NodeKind, active: bool = True, **fields: float) -> list[float]:
    """Build one feature row following the fixed per-kind schema."""
    names = FIELD_SCHEMA[kind]
    unknown = set(fields) - set(names)
    if unknown:
        raise ValueError(f"unknown feature fields for {kind.value}: {sorted(unknown)}")
    row = [1.0 if active else 0.0]
    row.extend(float(fields.get(n, 0.0)) for n in names)
    row.extend(0.0 for _ in range(FEATURE_DIM - len(row)))
    return row


class ParseError(ValueError):
    """Scenario text that cannot be decoded; carries a line/field locus."""

    def __init__(self, message: str, line: int | None = None, field_name: str | None = None):
        locus = []
        if line is not None:
            locus.append(f"line {line}")
        if field_name is not None:
            locus.append(f"field {field_name!r}")
        super().__init__(f"{message}" + (f" ({', '.join(locus)})" if locus else ""))
        self.line = line
        self.field_name = field_name


class UnknownRegistryIdError(KeyError):
    def __init__(self, registry: str, value: Any):
        super().__init__(f"{registry} registry has no entry {value!r}")
        self.registry = registry
        self.value = value


@dataclass(frozen=True, slots=True)
class PathSpec:
    """A delivery-path option; its geometry fixes the incidence angle."""

    id: int
    name: str
    angle_deg: float


@dataclass(frozen=True, slots=True)
class Registries:
    munitions: tuple[Munition, ...]
    paths: tuple[PathSpec, ...]
    target_ids: tuple[int, ...]
    max_window_hours: float = 48.0

    def munition(self, weapon_class: int) -> Munition:
        for m in self.munitions:
            if m.id == weapon_class:
                return m
        raise UnknownRegistryIdError("munition", weapon_class)

    def path(self, path_id: int) -> PathSpec:
        for p in self.paths:
            if p.id == path_id:
                return p
        raise UnknownRegistryIdError("path", path_id)


@dataclass(frozen=True, slots=True)
class InterventionVector:
    weapon_class: int
    release_window_h: float
    sync_mode: SyncMode
    path_strategy: int
    target_priority: tuple[int, ...]
    decoy: bool


@dataclass(frozen=True, slots=True)
class Edge:
    src: int
    dst: int
    kind: EdgeKind
    weight: float


@dataclass(frozen=True, slots=True)
class GraphSnapshot:
    t: int
    nodes: tuple[tuple[int, NodeKind], ...]
    edges: tuple[Edge, ...]
    features: np.ndarray
    interventions: InterventionVector

    def __post_init__(self):
        arr = np.ascontiguousarray(self.features, dtype=np.float64)
        arr.flags.writeable = False
        object.__setattr__(self, "features", arr)

    @property
    def node_ids(self) -> tuple[int, ...]:
        return tuple(nid for nid, _ in self.nodes)

    def kind_of(self, nid: int) -> NodeKind:
        for n, k in self.nodes:
            if n == nid:
                return k
        raise KeyError(nid)


@dataclass(frozen=True, slots=True)
class TemporalGraph:
    snapshots: tuple[GraphSnapshot, ...]

    @property
    def T(self) -> int:
        return len(self.snapshots)


@dataclass(frozen=True, slots=True)
class Scenario:
    scenario_id: str
    registries: Registries
    graph: TemporalGraph

    @property
    def intervention(self) -> InterventionVector:
        return self.graph.snapshots[0].interventions


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class Violation:
    snapshot: int | None
    element: str
    rule: str

    def __str__(self) -> str:
        where = f"snapshot {self.snapshot}" if self.snapshot is not None else "graph"
        return f"{where}: {self.element}: {self.rule}"


def validate(graph: TemporalGraph, registries: Registries | None = None) -> list[Violation]:
    """Return every invariant violation (empty list means well formed)."""
    out: list[Violation] = []
    if graph.T < 1:
        return [Violation(None, "snapshots", "a scenario needs at least one snapshot")]

    first = graph.snapshots[0]
    base_ids = first.node_ids
    base_kinds = dict(first.nodes)
    width = first.features.shape[1] if first.features.ndim == 2 else -1

    for i, snap in enumerate(graph.snapshots):
        if snap.t != i + 1:
            out.append(Violation(i + 1, f"t={snap.t}", "snapshot indices must run 1..T in order"))
        ids = snap.node_ids
        if len(set(ids)) != len(ids):
            out.append(Violation(snap.t, "nodes", "duplicate node ids"))
        if set(ids) != set(base_ids):
            out.append(Violation(snap.t, "nodes", "node id set must be stable across snapshots"))
        for nid, kind in snap.nodes:
            if nid in base_kinds and base_kinds[nid] is not kind:
                out.append(Violation(snap.t, f"node {nid}", "node kind must not change over time"))
        id_set = set(ids)
        sc_arcs: dict[tuple[int, int], float] = {}
        for e in snap.edges:
            if e.src not in id_set or e.dst not in id_set:
                out.append(Violation(snap.t, f"edge {e.src}->{e.dst}", "edge endpoint is not a node"))
            if e.kind is EdgeKind.StructuralCoupling:
                sc_arcs[(e.src, e.dst)] = e.weight
        for (src, dst), w in sc_arcs.items():
            back = sc_arcs.get((dst, src))
            if back is None or back != w:
                out.append(
                    Violation(
                        snap.t,
                        f"edge {src}->{dst}",
                        "structural coupling must appear as two directed arcs with equal weight",
                    )
                )
        if snap.features.ndim != 2:
            out.append(Violation(snap.t, "features", "feature matrix must be 2-D"))
        else:
            if snap.features.shape[0] != len(ids):
                out.append(
                    Violation(
                        snap.t,
                        "features",
                        f"feature rows {snap.features.shape[0]} != node count {len(ids)}",
                    )
                )
            if snap.features.shape[1] != width:
                out.append(Violation(snap.t, "features", "feature width d must match across snapshots"))
            if not np.all(np.isfinite(snap.features)):
                out.append(Violation(snap.t, "features", "feature values must be finite"))

        w = snap.interventions
        if w.release_window_h < 0:
            out.append(Violation(snap.t, "interventions.release_window", "release window must be >= 0"))
        target_ids = sorted(nid for nid, kind in snap.nodes if kind is NodeKind.TargetModule)
        if sorted(w.target_priority) != target_ids:
            out.append(
                Violation(
                    snap.t,
                    "interventions.target_priority",
                    "target_priority must be a permutation of the TargetModule ids",
                )
            )
        if registries is not None:
            if not any(m.id == w.weapon_class for m in registries.munitions):
                out.append(Violation(snap.t, "interventions.weapon_class", "unknown munition id"))
            if not any(p.id == w.path_strategy for p in registries.paths):
                out.append(Violation(snap.t, "interventions.path_strategy", "unknown path id"))
    return out


# ---------------------------------------------------------------------------
# intervention encoding
# ---------------------------------------------------------------------------

def encoded_width(reg: Registries) -> int:
    return len(reg.munitions) + 1 + 2 + len(reg.paths) + len(reg.target_ids) + 1


def encode_intervention(w: InterventionVector, reg: Registries) -> np.ndarray:
    """Fixed-width numeric encoding of an intervention.

    Layout: one-hot weapon ++ window / max_window ++ one-hot sync ++ one-hot
    path ++ per-target priority rank / n_targets ++ decoy bit. The window is
    scaled, not clamped, so the map stays injective.
    """
    weapons = [m.id for m in reg.munitions]
    paths = [p.id for p in reg.paths]
    if w.weapon_class not in weapons:
        raise UnknownRegistryIdError("munition", w.weapon_class)
    if w.path_strategy not in paths:
        raise UnknownRegistryIdError("path", w.path_strategy)
    if sorted(w.target_priority) != sorted(reg.target_ids):
        raise UnknownRegistryIdError("target", w.target_priority)

    vec = np.zeros(encoded_width(reg), dtype=np.float64)
    pos = 0
    vec[pos + weapons.index(w.weapon_class)] = 1.0
    pos += len(weapons)
    vec[pos] = w.release_window_h / reg.max_window_hours
    pos += 1
    vec[pos + (0 if w.sync_mode is SyncMode.Synchronized else 1)] = 1.0
    pos += 2
    vec[pos + paths.index(w.path_strategy)] = 1.0
    pos += len(paths)
    n = len(reg.target_ids)
    rank = {tid: i for i, tid in enumerate(w.target_priority)}
    for i, tid in enumerate(reg.target_ids):
        vec[pos + i] = rank[tid] / n
    pos += n
    vec[pos] = 1.0 if w.decoy else 0.0
    return vec


# ---------------------------------------------------------------------------
# serialization (line-delimited JSON, strict keys)
# ---------------------------------------------------------------------------

def _check_keys(obj: dict, allowed: Iterable[str], ctx: str, line: int | None) -> None:
    extra = set(obj) - set(allowed)
    if extra:
        raise ParseError(f"unknown field in {ctx}", line=line, field_name=sorted(extra)[0])
    missing = set(allowed) - set(obj)
    if missing:
        raise ParseError(f"missing field in {ctx}", line=line, field_name=sorted(missing)[0])


def scenario_to_obj(sc: Scenario) -> dict:
    reg = sc.registries
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario_id": sc.scenario_id,
        "registries": {
            "munitions": [
                {
                    "id": m.id,
                    "name": m.name,
                    "mass_kg": m.mass_kg,
                    "explosive_mass_kg": m.explosive_mass_kg,
                    "impact_energy_mj": m.impact_energy_mj,
                    "penetration_class": m.penetration_class,
                }
                for m in reg.munitions
            ],
            "paths": [{"id": p.id, "name": p.name, "angle_deg": p.angle_deg} for p in reg.paths],
            "target_ids": list(reg.target_ids),
            "max_window_hours": reg.max_window_hours,
        },
        "snapshots": [
            {
                "t": snap.t,
                "nodes": [[nid, kind.value] for nid, kind in snap.nodes],
                "edges": [[e.src, e.dst, e.kind.value, e.weight] for e in snap.edges],
                "features": [[float(v) for v in row] for row in snap.features],
                "interventions": {
                    "weapon_class": snap.interventions.weapon_class,
                    "release_window_h": snap.interventions.release_window_h,
                    "sync_mode": snap.interventions.sync_mode.value,
                    "path_strategy": snap.interventions.path_strategy,
                    "target_priority": list(snap.interventions.target_priority),
                    "decoy": snap.interventions.decoy,
                },
            }
            for snap in sc.graph.snapshots
        ],
    }


def scenario_from_obj(obj: dict, line: int | None = None) -> Scenario:
    if not isinstance(obj, dict):
        raise ParseError("scenario must be a JSON object", line=line)
    _check_keys(obj, ("schema_version", "scenario_id", "registries", "snapshots"), "scenario", line)
    if obj["schema_version"] != SCHEMA_VERSION:
        raise ParseError(
            f"unsupported schema_version {obj['schema_version']!r}", line=line, field_name="schema_version"
        )
    reg_obj = obj["registries"]
    _check_keys(reg_obj, ("munitions", "paths", "target_ids", "max_window_hours"), "registries", line)
    try:
        registries = Registries(
            munitions=tuple(
                Munition(
                    id=int(m["id"]),
                    name=str(m["name"]),
                    mass_kg=float(m["mass_kg"]),
                    explosive_mass_kg=float(m["explosive_mass_kg"]),
                    impact_energy_mj=float(m["impact_energy_mj"]),
                    penetration_class=float(m["penetration_class"]),
                )
                for m in reg_obj["munitions"]
            ),
            paths=tuple(
                PathSpec(id=int(p["id"]), name=str(p["name"]), angle_deg=float(p["angle_deg"]))
                for p in reg_obj["paths"]
            ),
            target_ids=tuple(int(t) for t in reg_obj["target_ids"]),
            max_window_hours=float(reg_obj["max_window_hours"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad registries: {exc}", line=line, field_name="registries") from None

    snapshots = []
    for snap_obj in obj["snapshots"]:
        _check_keys(snap_obj, ("t", "nodes", "edges", "features", "interventions"), "snapshot", line)
        iv = snap_obj["interventions"]
        _check_keys(
            iv,
            ("weapon_class", "release_window_h", "sync_mode", "path_strategy", "target_priority", "decoy"),
            "interventions",
            line,
        )
        try:
            snapshots.append(
                GraphSnapshot(
                    t=int(snap_obj["t"]),
                    nodes=tuple((int(nid), NodeKind(kind)) for nid, kind in snap_obj["nodes"]),
                    edges=tuple(
                        Edge(int(s), int(d), EdgeKind(k), float(w)) for s, d, k, w in snap_obj["edges"]
                    ),
                    features=np.array(snap_obj["features"], dtype=np.float64),
                    interventions=InterventionVector(
                        weapon_class=int(iv["weapon_class"]),
                        release_window_h=float(iv["release_window_h"]),
                        sync_mode=SyncMode(iv["sync_mode"]),
                        path_strategy=int(iv["path_strategy"]),
                        target_priority=tuple(int(t) for t in iv["target_priority"]),
                        decoy=bool(iv["decoy"]),
                    ),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad snapshot: {exc}", line=line, field_name="snapshots") from None
    return Scenario(
        scenario_id=str(obj["scenario_id"]),
        registries=registries,
        graph=TemporalGraph(snapshots=tuple(snapshots)),
    )


def write_scenario(sc: Scenario) -> bytes:
    """Canonical single-line encoding (sorted keys, compact separators)."""
    return (json.dumps(scenario_to_obj(sc), sort_keys=True, separators=(",", ":")) + "\n").encode()


def read_scenario(data: bytes) -> Scenario:
    scenarios = read_scenarios(data)
    if len(scenarios) != 1:
        raise ParseError(f"expected exactly one scenario, found {len(scenarios)}")
    return scenarios[0]


def write_scenarios(scenarios: Iterable[Scenario]) -> bytes:
    return b"".join(write_scenario(sc) for sc in scenarios)


def read_scenarios(data: bytes) -> list[Scenario]:
    out: list[Scenario] = []
    for i, raw in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"not valid JSON: {exc.msg}", line=i) from None
        out.append(scenario_from_obj(obj, line=i))
    if not out:
        raise ParseError("no scenarios found in input")
    return out
