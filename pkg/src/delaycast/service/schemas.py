"""Pydantic request/response bodies for the sandbox service.

These mirror the scenario file schema one to one; deep structural checks are
delegated to the core validators after shape validation passes.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class MunitionModel(StrictModel):
    id: int
    name: str
    mass_kg: float
    explosive_mass_kg: float
    impact_energy_mj: float
    penetration_class: float


class PathModel(StrictModel):
    id: int
    name: str
    angle_deg: float


class RegistriesModel(StrictModel):
    munitions: list[MunitionModel]
    paths: list[PathModel]
    target_ids: list[int]
    max_window_hours: float


class InterventionModel(StrictModel):
    weapon_class: int
    release_window_h: float
    sync_mode: Literal["Synchronized", "Staggered"]
    path_strategy: int
    target_priority: list[int]
    decoy: bool


class SnapshotModel(StrictModel):
    t: int
    nodes: list[tuple[int, str]]
    edges: list[tuple[int, int, str, float]]
    features: list[list[float]]
    interventions: InterventionModel


class ScenarioModel(StrictModel):
    schema_version: int
    scenario_id: str
    registries: RegistriesModel
    snapshots: list[SnapshotModel]


class SessionCreateRequest(StrictModel):
    template: str | None = None
    scenario: ScenarioModel | None = None


class SessionCreatedResponse(StrictModel):
    session_id: str
    scenario_id: str


class AttentionEdge(StrictModel):
    src: int
    dst: int
    weight: float


class PredictResponse(StrictModel):
    y_hat_days: float
    sdi: float
    attention_summary: list[AttentionEdge]


class CounterfactualRequest(StrictModel):
    alt_w: InterventionModel


class CounterfactualResponse(StrictModel):
    y_factual: float
    y_counterfactual: float
    delta: float


class SensitivityRequest(StrictModel):
    weapons: list[int] | None = None
    paths: list[int] | None = None
    structures: list[str] | None = None


class SensitivityResponse(StrictModel):
    reference_id: str
    weapon_axis: list[int]
    path_axis: list[int]
    structure_axis: list[str]
    values: list[list[list[float]]]


class CandidateModel(StrictModel):
    id: str
    w: InterventionModel


class RecommendRequest(StrictModel):
    candidates: list[CandidateModel] = Field(min_length=1)
    objective: Literal["delay", "sdi"] = "delay"
    top_k: int | None = None


class RecommendationRow(StrictModel):
    candidate_id: str
    w: InterventionModel
    score: float
    attention_summary: list[AttentionEdge]


class RecommendResponse(StrictModel):
    objective: str
    ranking: list[RecommendationRow]


class AttentionLayerSlice(StrictModel):
    layer: int
    t: int
    head: int
    edges: list[AttentionEdge]


class AttentionResponse(StrictModel):
    node_ids: list[int]
    slices: list[AttentionLayerSlice]


class HistoryEntry(StrictModel):
    step: int
    kind: str
    request: dict
    result: dict


class SessionStateResponse(StrictModel):
    session_id: str
    scenario_id: str
    intervention: InterventionModel
    history_length: int


class HealthResponse(StrictModel):
    status: str
    model_id: str | None
    package_version: str
    scenario_schema_version: int


class ErrorResponse(StrictModel):
    detail: str
    violations: list[str] = []
