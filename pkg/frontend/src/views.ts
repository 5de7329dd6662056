/** Pure view helpers: every function maps fetched state onto DOM or plain
 * data. Nothing here computes model numbers; values are displayed verbatim.
 */

import { BLANK, fmtDays, fmtDelta, fmtScore } from './format';
import type { AppState } from './state';
import type {
  AttentionResponse,
  AttentionSlice,
  HistoryEntry,
  NodeKind,
  Scenario,
  SensitivityResponse,
} from './types';

export const KIND_COLORS: Record<NodeKind, string> = {
  Platform: '#4f83cc',
  TargetModule: '#cc4f4f',
  GeologyLayer: '#8a7f5c',
  PathRelay: '#58a177',
};

// --- prediction panel -------------------------------------------------------

export function renderPrediction(el: HTMLElement, state: AppState): void {
  const p = state.prediction;
  el.querySelector('[data-metric="yhat"]')!.textContent = fmtDays(p?.y_hat_days ?? null);
  el.querySelector('[data-metric="sdi"]')!.textContent = fmtScore(p?.sdi ?? null);
}

// --- counterfactual comparator ---------------------------------------------

export interface ComparatorCells {
  factual: string;
  counterfactual: string;
  delta: string;
}

/** The delta cell is the API's delta field, never recomputed client-side. */
export function comparatorCells(state: AppState): ComparatorCells {
  const c = state.comparison;
  return {
    factual: fmtDays(c?.y_factual ?? null),
    counterfactual: fmtDays(c?.y_counterfactual ?? null),
    delta: fmtDelta(c?.delta ?? null),
  };
}

export function renderComparator(el: HTMLElement, state: AppState): void {
  const cells = comparatorCells(state);
  el.querySelector('[data-metric="factual"]')!.textContent = cells.factual;
  el.querySelector('[data-metric="counterfactual"]')!.textContent = cells.counterfactual;
  el.querySelector('[data-metric="delta"]')!.textContent = cells.delta;
}

// --- sensitivity heatmap ----------------------------------------------------

/** Exact passthrough of one grid entry; the display contract is equality. */
export function heatmapCellValue(
  grid: SensitivityResponse,
  weaponIdx: number,
  pathIdx: number,
  structureIdx: number,
): number {
  return grid.values[weaponIdx][pathIdx][structureIdx];
}

export function heatmapColor(value: number, min: number, max: number): string {
  const t = max > min ? (value - min) / (max - min) : 0.5;
  const hue = 220 - 180 * t; // cool (low delay) to warm (high delay)
  return `hsl(${hue.toFixed(0)}, 70%, 55%)`;
}

export function renderHeatmap(el: HTMLElement, state: AppState, structureIdx: number): void {
  const grid = state.sensitivity;
  el.replaceChildren();
  if (!grid) {
    el.textContent = BLANK;
    return;
  }
  const flat = grid.values.flat(2);
  const min = Math.min(...flat);
  const max = Math.max(...flat);
  const table = document.createElement('table');
  table.className = 'heatmap';
  const head = table.insertRow();
  head.insertCell().textContent = `weapon \\ path (${grid.structure_axis[structureIdx]})`;
  for (const p of grid.path_axis) head.insertCell().textContent = `path ${p}`;
  grid.weapon_axis.forEach((w, i) => {
    const row = table.insertRow();
    row.insertCell().textContent = `weapon ${w}`;
    grid.path_axis.forEach((_p, j) => {
      const v = heatmapCellValue(grid, i, j, structureIdx);
      const cell = row.insertCell();
      cell.textContent = v.toFixed(1);
      cell.dataset.value = String(v);
      cell.style.background = heatmapColor(v, min, max);
    });
  });
  el.appendChild(table);
}

// --- recommendations --------------------------------------------------------

export function renderRecommendations(el: HTMLElement, state: AppState): void {
  el.replaceChildren();
  const rec = state.recommendation;
  if (!rec) {
    el.textContent = BLANK;
    return;
  }
  const table = document.createElement('table');
  const head = table.insertRow();
  for (const col of ['#', 'candidate', 'score', 'weapon', 'path', 'sync', 'decoy']) {
    head.insertCell().textContent = col;
  }
  rec.ranking.forEach((row, i) => {
    const tr = table.insertRow();
    tr.insertCell().textContent = String(i + 1);
    tr.insertCell().textContent = row.candidate_id;
    const score = tr.insertCell();
    score.textContent = fmtScore(row.score, 2);
    score.dataset.metric = 'score';
    tr.insertCell().textContent = String(row.w.weapon_class);
    tr.insertCell().textContent = String(row.w.path_strategy);
    tr.insertCell().textContent = row.w.sync_mode;
    tr.insertCell().textContent = row.w.decoy ? 'yes' : 'no';
  });
  el.appendChild(table);
}

// --- history timeline -------------------------------------------------------

export interface TimelineRow {
  step: number;
  kind: string;
  summary: string;
}

/** Same renderer for live history and replayed journals: identical inputs
 * produce identical timelines. */
export function timelineFromEntries(entries: HistoryEntry[]): TimelineRow[] {
  return [...entries]
    .sort((a, b) => a.step - b.step)
    .map((e) => {
      let summary = '';
      if (typeof e.result?.y_hat_days === 'number') {
        summary = `y=${(e.result.y_hat_days as number).toFixed(1)} d`;
      } else if (typeof e.result?.delta === 'number') {
        summary = `delta=${(e.result.delta as number).toFixed(1)} d`;
      }
      return { step: e.step, kind: e.kind, summary };
    });
}

export function renderTimeline(el: HTMLElement, entries: HistoryEntry[]): void {
  el.replaceChildren();
  const list = document.createElement('ol');
  for (const row of timelineFromEntries(entries)) {
    const li = document.createElement('li');
    li.textContent = `${row.kind}${row.summary ? ` (${row.summary})` : ''}`;
    list.appendChild(li);
  }
  el.appendChild(list);
}

// --- attention --------------------------------------------------------------

export function sliceFor(
  att: AttentionResponse,
  layer: number,
  t: number,
  head: number,
): AttentionSlice | null {
  return att.slices.find((s) => s.layer === layer && s.t === t && s.head === head) ?? null;
}

/** Per-destination incoming attention mass, for the rendered sum-to-1 check. */
export function attentionSumsByDst(slice: AttentionSlice): Map<number, number> {
  const sums = new Map<number, number>();
  for (const e of slice.edges) {
    sums.set(e.dst, (sums.get(e.dst) ?? 0) + e.weight);
  }
  return sums;
}

export function renderNormalizationCheck(el: HTMLElement, slice: AttentionSlice | null): void {
  if (!slice) {
    el.textContent = BLANK;
    return;
  }
  const sums = [...attentionSumsByDst(slice).values()];
  const worst = Math.max(...sums.map((s) => Math.abs(s - 1)));
  el.textContent = `incoming attention sums to 1 per node: worst |err| = ${worst.toExponential(1)} ${
    worst < 1e-6 ? 'OK' : 'VIOLATION'
  }`;
}

// --- scenario canvas --------------------------------------------------------

export function drawScenario(
  canvas: HTMLCanvasElement,
  scenario: Scenario,
  positions: Map<number, { x: number; y: number }>,
  attention: AttentionSlice | null,
): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const snap = scenario.snapshots[0];
  const maxW = attention ? Math.max(...attention.edges.map((e) => e.weight), 1e-9) : 1;
  ctx.lineWidth = 1;
  for (const [src, dst] of snap.edges) {
    const a = positions.get(src);
    const b = positions.get(dst);
    if (!a || !b) continue;
    let alpha = 0.25;
    let width = 1;
    if (attention) {
      const att = attention.edges.find((e) => e.src === src && e.dst === dst);
      const w = att ? att.weight / maxW : 0;
      alpha = 0.1 + 0.9 * w;
      width = 0.5 + 4 * w;
    }
    ctx.strokeStyle = `rgba(200, 80, 40, ${alpha.toFixed(3)})`;
    ctx.lineWidth = width;
    ctx.beginPath();
    ctx.moveTo(a.x, a.y);
    ctx.lineTo(b.x, b.y);
    ctx.stroke();
  }
  for (const [id, kind] of snap.nodes) {
    const p = positions.get(id);
    if (!p) continue;
    ctx.fillStyle = KIND_COLORS[kind];
    ctx.beginPath();
    ctx.arc(p.x, p.y, 9, 0, Math.PI * 2);
    ctx.fill();
    ctx.fillStyle = '#e8e8e8';
    ctx.font = '10px sans-serif';
    ctx.fillText(String(id), p.x - 3, p.y + 3);
  }
}

// --- service banner ---------------------------------------------------------

/** Non-null when the service speaks a different scenario schema generation. */
export function schemaMismatch(
  serviceVersion: number,
  expectedVersion: number,
): string | null {
  if (serviceVersion === expectedVersion) return null;
  return `schema version mismatch: service speaks v${serviceVersion}, this client expects v${expectedVersion}`;
}

export function renderBanner(el: HTMLElement, state: AppState): void {
  if (state.serviceUp) {
    el.classList.add('hidden');
    el.textContent = '';
  } else {
    el.classList.remove('hidden');
    el.textContent = `service unavailable${state.error ? `: ${state.error}` : ''} (retrying)`;
  }
}
