/** Display-contract tests: every number shown is the API's number, the
 * comparator delta is the API delta, heatmap cells equal grid entries, and a
 * dead service blanks all numeric readouts. */

import { beforeEach, describe, expect, it } from 'vitest';

import { ApiClient, ServiceError } from '../src/api';
import { BLANK } from '../src/format';
import { initialState, Store } from '../src/state';
import type { AppState } from '../src/state';
import type {
  AttentionSlice,
  CounterfactualResponse,
  HistoryEntry,
  SensitivityResponse,
} from '../src/types';
import {
  attentionSumsByDst,
  comparatorCells,
  heatmapCellValue,
  renderComparator,
  renderHeatmap,
  renderPrediction,
  renderBanner,
  timelineFromEntries,
} from '../src/views';

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

function stateWith(patch: Partial<AppState>): AppState {
  return { ...initialState(), ...patch };
}

describe('counterfactual comparator', () => {
  it('shows exactly the API delta, never a recomputed one', async () => {
    const body: CounterfactualResponse = {
      y_factual: 120.25,
      y_counterfactual: 145.75,
      delta: 25.5,
    };
    const api = new ApiClient('', async () => jsonResponse(body));
    const resp = await api.counterfactual('s', {} as never);
    const cells = comparatorCells(stateWith({ comparison: resp }));
    expect(cells.delta).toBe('+25.5 d');
    expect(cells.factual).toBe('120.3 d');
    expect(cells.counterfactual).toBe('145.8 d');
  });

  it('renders delta 0 for the identity counterfactual', () => {
    const cells = comparatorCells(
      stateWith({ comparison: { y_factual: 90, y_counterfactual: 90, delta: 0 } }),
    );
    expect(cells.delta).toBe('0.0 d');
  });
});

describe('sensitivity heatmap', () => {
  const grid: SensitivityResponse = {
    reference_id: 'ref',
    weapon_axis: [0, 1],
    path_axis: [0, 2],
    structure_axis: ['softened', 'reference'],
    values: [
      [
        [100.5, 101.5],
        [110.25, 111.25],
      ],
      [
        [200.125, 201.125],
        [210.0625, 211.0625],
      ],
    ],
  };

  it('cell accessor is an exact passthrough of the matrix entry', () => {
    expect(heatmapCellValue(grid, 1, 0, 1)).toBe(201.125);
    expect(heatmapCellValue(grid, 0, 1, 0)).toBe(110.25);
  });

  it('rendered cells carry the exact grid values', () => {
    const el = document.createElement('div');
    renderHeatmap(el, stateWith({ sensitivity: grid }), 0);
    const cells = [...el.querySelectorAll('td[data-value]')];
    expect(cells.length).toBe(4);
    expect(Number(cells[0].getAttribute('data-value'))).toBe(grid.values[0][0][0]);
    expect(Number(cells[3].getAttribute('data-value'))).toBe(grid.values[1][1][0]);
  });
});

describe('service loss blanks every numeric display', () => {
  let prediction: HTMLElement;
  let comparator: HTMLElement;
  let banner: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = `
      <div id="banner" class="banner hidden"></div>
      <div id="p">
        <span data-metric="yhat"></span><span data-metric="sdi"></span>
      </div>
      <div id="c">
        <span data-metric="factual"></span><span data-metric="counterfactual"></span><span data-metric="delta"></span>
      </div>`;
    prediction = document.getElementById('p')!;
    comparator = document.getElementById('c')!;
    banner = document.getElementById('banner')!;
  });

  it('renders fetched numbers while the service is up', () => {
    const state = stateWith({
      serviceUp: true,
      prediction: { y_hat_days: 150.5, sdi: 0.9, attention_summary: [] },
      comparison: { y_factual: 150.5, y_counterfactual: 120.5, delta: -30 },
    });
    renderPrediction(prediction, state);
    renderComparator(comparator, state);
    renderBanner(banner, state);
    expect(prediction.querySelector('[data-metric="yhat"]')!.textContent).toBe('150.5 d');
    expect(banner.classList.contains('hidden')).toBe(true);
  });

  it('clears all numbers and shows the banner after markServiceDown', () => {
    const store = new Store();
    store.update({
      serviceUp: true,
      prediction: { y_hat_days: 150.5, sdi: 0.9, attention_summary: [] },
      comparison: { y_factual: 150.5, y_counterfactual: 120.5, delta: -30 },
      sensitivity: {} as never,
      recommendation: {} as never,
    });
    store.markServiceDown('connection refused');
    const state = store.get();
    renderPrediction(prediction, state);
    renderComparator(comparator, state);
    renderBanner(banner, state);
    for (const el of document.querySelectorAll('[data-metric]')) {
      expect(el.textContent).toBe(BLANK);
    }
    expect(banner.classList.contains('hidden')).toBe(false);
    expect(banner.textContent).toContain('service unavailable');
    expect(state.prediction).toBeNull();
    expect(state.sensitivity).toBeNull();
  });
});

describe('attention normalization check', () => {
  it('sums incoming weights per destination exactly as reported', () => {
    const slice: AttentionSlice = {
      layer: 0,
      t: 1,
      head: 0,
      edges: [
        { src: 0, dst: 0, weight: 0.25 },
        { src: 1, dst: 0, weight: 0.75 },
        { src: 1, dst: 1, weight: 1.0 },
      ],
    };
    const sums = attentionSumsByDst(slice);
    expect(sums.get(0)).toBeCloseTo(1.0, 12);
    expect(sums.get(1)).toBeCloseTo(1.0, 12);
  });
});

describe('journal replay', () => {
  it('reproduces the same timeline from journal entries as from live history', () => {
    const history: HistoryEntry[] = [
      { step: 1, kind: 'session.create', request: {}, result: {} },
      { step: 2, kind: 'predict', request: {}, result: { y_hat_days: 123.4, sdi: 0.8 } },
      { step: 3, kind: 'counterfactual', request: {}, result: { delta: -10.05 } },
    ];
    // journals are line-ordered on disk but may be read in any order
    const journal = [history[2], history[0], history[1]];
    expect(timelineFromEntries(journal)).toEqual(timelineFromEntries(history));
    expect(timelineFromEntries(history)[1].summary).toBe('y=123.4 d');
  });
});

describe('schema drift', () => {
  it('is silent when versions match and explicit when they differ', async () => {
    const { schemaMismatch } = await import('../src/views');
    expect(schemaMismatch(1, 1)).toBeNull();
    const msg = schemaMismatch(2, 1);
    expect(msg).toContain('mismatch');
    expect(msg).toContain('v2');
    expect(msg).toContain('v1');
  });
});

describe('api client error mapping', () => {
  it('maps network failure to a null-status ServiceError', async () => {
    const api = new ApiClient('', async () => {
      throw new TypeError('fetch failed');
    });
    await expect(api.health()).rejects.toMatchObject({ status: null });
  });

  it('surfaces schema-violation loci from 400 bodies', async () => {
    const api = new ApiClient('', async () =>
      jsonResponse({ detail: 'schema violation', violations: ['body.alt_w.weapon_class: invalid'] }, 400),
    );
    try {
      await api.predict('s');
      throw new Error('expected rejection');
    } catch (err) {
      expect(err).toBeInstanceOf(ServiceError);
      expect((err as ServiceError).status).toBe(400);
      expect((err as ServiceError).violations[0]).toContain('weapon_class');
    }
  });
});
