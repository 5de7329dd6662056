/** Sandbox UI wiring: controls mutate the session through the API, responses
 * land in the store, and subscribed renderers repaint. */

import './style.css';
import { ApiClient, ServiceError } from './api';
import { forceLayout } from './layout';
import { Store } from './state';
import type { Intervention, Scenario } from './types';
import {
  drawScenario,
  renderBanner,
  renderComparator,
  renderHeatmap,
  renderNormalizationCheck,
  renderPrediction,
  renderRecommendations,
  renderTimeline,
  schemaMismatch,
  sliceFor,
} from './views';

const BASE_URL = (import.meta as { env?: Record<string, string> }).env?.VITE_API_BASE ?? '';
/** Scenario schema generation this client was written against. */
export const EXPECTED_SCHEMA_VERSION = 1;
const api = new ApiClient(BASE_URL);
const store = new Store();

const $ = <T extends HTMLElement = HTMLElement>(sel: string): T => {
  const el = document.querySelector<T>(sel);
  if (!el) throw new Error(`missing element ${sel}`);
  return el;
};

function currentIntervention(): Intervention {
  const s = store.get();
  if (!s.intervention) throw new Error('no intervention loaded');
  return s.intervention;
}

function readInterventionForm(prefix: string): Intervention {
  const base = currentIntervention();
  const weapon = Number($<HTMLSelectElement>(`#${prefix}-weapon`).value);
  const path = Number($<HTMLSelectElement>(`#${prefix}-path`).value);
  const window_ = Number($<HTMLInputElement>(`#${prefix}-window`).value);
  const sync = $<HTMLSelectElement>(`#${prefix}-sync`).value as Intervention['sync_mode'];
  const decoy = $<HTMLInputElement>(`#${prefix}-decoy`).checked;
  const priority = $<HTMLInputElement>(`#${prefix}-priority`)
    .value.split(',')
    .map((v) => Number(v.trim()));
  return {
    ...base,
    weapon_class: weapon,
    path_strategy: path,
    release_window_h: window_,
    sync_mode: sync,
    decoy,
    target_priority: priority,
  };
}

function fillInterventionForm(prefix: string, w: Intervention, scenario: Scenario): void {
  const weaponSel = $<HTMLSelectElement>(`#${prefix}-weapon`);
  weaponSel.replaceChildren(
    ...scenario.registries.munitions.map((m) => new Option(`${m.name} (#${m.id})`, String(m.id))),
  );
  weaponSel.value = String(w.weapon_class);
  const pathSel = $<HTMLSelectElement>(`#${prefix}-path`);
  pathSel.replaceChildren(
    ...scenario.registries.paths.map((p) => new Option(`${p.name} (#${p.id})`, String(p.id))),
  );
  pathSel.value = String(w.path_strategy);
  $<HTMLInputElement>(`#${prefix}-window`).value = String(w.release_window_h.toFixed(1));
  $<HTMLSelectElement>(`#${prefix}-sync`).value = w.sync_mode;
  $<HTMLInputElement>(`#${prefix}-decoy`).checked = w.decoy;
  $<HTMLInputElement>(`#${prefix}-priority`).value = w.target_priority.join(',');
}

async function guard<T>(work: () => Promise<T>): Promise<T | null> {
  try {
    const out = await work();
    store.update({ serviceUp: true, error: null });
    return out;
  } catch (err) {
    if (err instanceof ServiceError && err.status !== null) {
      store.update({ error: `${err.message}${err.violations.length ? ` [${err.violations[0]}]` : ''}` });
    } else {
      store.markServiceDown(err instanceof Error ? err.message : String(err));
    }
    return null;
  }
}

async function refreshHistory(): Promise<void> {
  const s = store.get();
  if (!s.sessionId) return;
  const history = await guard(() => api.history(s.sessionId!));
  if (history) store.update({ history });
}

async function boot(): Promise<void> {
  const health = await guard(() => api.health());
  if (!health) return;
  const drift = schemaMismatch(health.scenario_schema_version, EXPECTED_SCHEMA_VERSION);
  if (drift) {
    store.markServiceDown(drift);
    return;
  }
  store.update({ serviceUp: true, modelId: health.model_id });
  const sessionId = await guard(() => api.createSession('default'));
  if (!sessionId) return;
  const scenario = await guard(() => api.getScenario(sessionId));
  if (!scenario) return;
  const w = scenario.snapshots[0].interventions;
  store.update({ sessionId, scenario, intervention: w, altIntervention: { ...w } });
  fillInterventionForm('iv', w, scenario);
  fillInterventionForm('alt', w, scenario);
  await refreshHistory();
}

function wireControls(): void {
  $('#apply-intervention').addEventListener('click', async () => {
    const s = store.get();
    if (!s.sessionId) return;
    const w = readInterventionForm('iv');
    const ok = await guard(() => api.putIntervention(s.sessionId!, w));
    if (ok) store.update({ intervention: w, prediction: null, comparison: null });
    await refreshHistory();
  });

  $('#predict').addEventListener('click', async () => {
    const s = store.get();
    if (!s.sessionId) return;
    const prediction = await guard(() => api.predict(s.sessionId!));
    if (prediction) store.update({ prediction });
    await refreshHistory();
  });

  $('#compare').addEventListener('click', async () => {
    const s = store.get();
    if (!s.sessionId) return;
    const altW = readInterventionForm('alt');
    const comparison = await guard(() => api.counterfactual(s.sessionId!, altW));
    if (comparison) store.update({ comparison, altIntervention: altW });
    await refreshHistory();
  });

  $('#run-sensitivity').addEventListener('click', async () => {
    const s = store.get();
    if (!s.sessionId) return;
    const sensitivity = await guard(() => api.sensitivity(s.sessionId!));
    if (sensitivity) store.update({ sensitivity });
    await refreshHistory();
  });

  $('#run-recommend').addEventListener('click', async () => {
    const s = store.get();
    if (!s.sessionId || !s.scenario || !s.intervention) return;
    const candidates = s.scenario.registries.munitions.map((m) => ({
      id: `weapon-${m.name}`,
      w: { ...s.intervention!, weapon_class: m.id },
    }));
    const objective = $<HTMLSelectElement>('#objective').value as 'delay' | 'sdi';
    const recommendation = await guard(() => api.recommend(s.sessionId!, candidates, objective));
    if (recommendation) store.update({ recommendation });
    await refreshHistory();
  });

  $('#load-attention').addEventListener('click', async () => {
    const s = store.get();
    if (!s.sessionId) return;
    const attention = await guard(() => api.attention(s.sessionId!));
    if (attention) store.update({ attention });
  });

  for (const [id, key] of [
    ['att-layer', 'attentionLayer'],
    ['att-head', 'attentionHead'],
    ['att-step', 'attentionStep'],
  ] as const) {
    $(`#${id}`).addEventListener('change', () => {
      store.update({ [key]: Number($<HTMLInputElement>(`#${id}`).value) } as never);
    });
  }
}

function repaint(): void {
  const state = store.get();
  renderBanner($('#banner'), state);
  $('#model-id').textContent = state.modelId ?? '--';
  renderPrediction($('#prediction'), state);
  renderComparator($('#comparator'), state);
  renderHeatmap($('#heatmap'), state, 1 in (state.sensitivity?.structure_axis ?? []) ? 1 : 0);
  renderRecommendations($('#recommendations'), state);
  renderTimeline($('#timeline'), state.history);

  const canvas = $<HTMLCanvasElement>('#graph');
  if (state.scenario) {
    const snap = state.scenario.snapshots[0];
    const ids = snap.nodes.map(([id]) => id);
    const edges = snap.edges.map(([src, dst]) => [src, dst] as [number, number]);
    const positions = new Map(
      forceLayout(ids, edges, canvas.width, canvas.height, 7).map((n) => [n.id, { x: n.x, y: n.y }]),
    );
    const slice = state.attention
      ? sliceFor(state.attention, state.attentionLayer, state.attentionStep, state.attentionHead)
      : null;
    drawScenario(canvas, state.scenario, positions, slice);
    renderNormalizationCheck($('#att-check'), slice);
  }
}

export function start(): void {
  wireControls();
  store.subscribe(repaint);
  void boot();
  // keep the banner honest: poll health and blank numbers on failure
  setInterval(async () => {
    try {
      await api.health();
      if (!store.get().serviceUp) void boot();
    } catch {
      store.markServiceDown('health check failed');
    }
  }, 5000);
}

if (typeof document !== 'undefined' && document.getElementById('app-root')) {
  start();
}
