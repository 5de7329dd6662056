import { describe, expect, it } from 'vitest';

import { forceLayout, mulberry32 } from '../src/layout';

describe('deterministic layout', () => {
  const ids = [0, 1, 2, 3, 4];
  const edges: [number, number][] = [
    [0, 1],
    [1, 2],
    [2, 3],
    [3, 4],
    [4, 0],
  ];

  it('same graph and seed give identical positions', () => {
    const a = forceLayout(ids, edges, 400, 300, 7);
    const b = forceLayout(ids, edges, 400, 300, 7);
    expect(a).toEqual(b);
  });

  it('a different seed moves the nodes', () => {
    const a = forceLayout(ids, edges, 400, 300, 7);
    const b = forceLayout(ids, edges, 400, 300, 8);
    expect(a).not.toEqual(b);
  });

  it('positions stay inside the canvas', () => {
    for (const n of forceLayout(ids, edges, 400, 300, 7)) {
      expect(n.x).toBeGreaterThanOrEqual(20);
      expect(n.x).toBeLessThanOrEqual(380);
      expect(n.y).toBeGreaterThanOrEqual(20);
      expect(n.y).toBeLessThanOrEqual(280);
    }
  });

  it('mulberry32 streams are reproducible', () => {
    const a = mulberry32(42);
    const b = mulberry32(42);
    for (let i = 0; i < 10; i++) expect(a()).toBe(b());
  });
});
