/** Wire types mirroring the sandbox service schemas, one to one. */

export type SyncMode = 'Synchronized' | 'Staggered';
export type NodeKind = 'Platform' | 'TargetModule' | 'GeologyLayer' | 'PathRelay';
export type EdgeKind = 'Coordination' | 'MissionPath' | 'StructuralCoupling' | 'FunctionalDependency';

export interface Intervention {
  weapon_class: number;
  release_window_h: number;
  sync_mode: SyncMode;
  path_strategy: number;
  target_priority: number[];
  decoy: boolean;
}

export interface Munition {
  id: number;
  name: string;
  mass_kg: number;
  explosive_mass_kg: number;
  impact_energy_mj: number;
  penetration_class: number;
}

export interface PathSpec {
  id: number;
  name: string;
  angle_deg: number;
}

export interface Registries {
  munitions: Munition[];
  paths: PathSpec[];
  target_ids: number[];
  max_window_hours: number;
}

export interface Snapshot {
  t: number;
  nodes: [number, NodeKind][];
  edges: [number, number, EdgeKind, number][];
  features: number[][];
  interventions: Intervention;
}

export interface Scenario {
  schema_version: number;
  scenario_id: string;
  registries: Registries;
  snapshots: Snapshot[];
}

export interface AttentionEdge {
  src: number;
  dst: number;
  weight: number;
}

export interface PredictResponse {
  y_hat_days: number;
  sdi: number;
  attention_summary: AttentionEdge[];
}

export interface CounterfactualResponse {
  y_factual: number;
  y_counterfactual: number;
  delta: number;
}

export interface SensitivityResponse {
  reference_id: string;
  weapon_axis: number[];
  path_axis: number[];
  structure_axis: string[];
  values: number[][][];
}

export interface RecommendationRow {
  candidate_id: string;
  w: Intervention;
  score: number;
  attention_summary: AttentionEdge[];
}

export interface RecommendResponse {
  objective: string;
  ranking: RecommendationRow[];
}

export interface AttentionSlice {
  layer: number;
  t: number;
  head: number;
  edges: AttentionEdge[];
}

export interface AttentionResponse {
  node_ids: number[];
  slices: AttentionSlice[];
}

export interface HistoryEntry {
  step: number;
  kind: string;
  request: Record<string, unknown>;
  result: Record<string, unknown>;
}

export interface Health {
  status: string;
  model_id: string | null;
  package_version: string;
  scenario_schema_version: number;
}
