/** Minimal observable store for the sandbox UI. */

import type {
  AttentionResponse,
  CounterfactualResponse,
  HistoryEntry,
  Intervention,
  PredictResponse,
  RecommendResponse,
  Scenario,
  SensitivityResponse,
} from './types';

export interface AppState {
  serviceUp: boolean;
  modelId: string | null;
  sessionId: string | null;
  scenario: Scenario | null;
  intervention: Intervention | null;
  altIntervention: Intervention | null;
  prediction: PredictResponse | null;
  comparison: CounterfactualResponse | null;
  sensitivity: SensitivityResponse | null;
  recommendation: RecommendResponse | null;
  attention: AttentionResponse | null;
  attentionLayer: number;
  attentionHead: number;
  attentionStep: number;
  history: HistoryEntry[];
  error: string | null;
}

export function initialState(): AppState {
  return {
    serviceUp: false,
    modelId: null,
    sessionId: null,
    scenario: null,
    intervention: null,
    altIntervention: null,
    prediction: null,
    comparison: null,
    sensitivity: null,
    recommendation: null,
    attention: null,
    attentionLayer: 0,
    attentionHead: 0,
    attentionStep: 1,
    history: [],
    error: null,
  };
}

type Listener = (state: AppState) => void;

export class Store {
  private state: AppState = initialState();
  private listeners: Listener[] = [];

  get(): AppState {
    return this.state;
  }

  subscribe(fn: Listener): () => void {
    this.listeners.push(fn);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== fn);
    };
  }

  update(patch: Partial<AppState>): void {
    this.state = { ...this.state, ...patch };
    for (const fn of this.listeners) fn(this.state);
  }

  /** Service loss clears every fetched number; the views then render blanks. */
  markServiceDown(message: string): void {
    this.update({
      serviceUp: false,
      error: message,
      prediction: null,
      comparison: null,
      sensitivity: null,
      recommendation: null,
      attention: null,
    });
  }
}
