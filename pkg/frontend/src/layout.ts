/** Deterministic force-directed layout.
 *
 * Seeded mulberry32 PRNG for initial placement plus a fixed number of
 * spring/repulsion iterations: the same graph and seed always produce the
 * same picture, so screenshots are reproducible.
 */

export interface LayoutNode {
  id: number;
  x: number;
  y: number;
}

export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function forceLayout(
  nodeIds: number[],
  edges: [number, number][],
  width: number,
  height: number,
  seed = 7,
  iterations = 200,
): LayoutNode[] {
  const rand = mulberry32(seed);
  const nodes: LayoutNode[] = nodeIds.map((id) => ({
    id,
    x: width * (0.15 + 0.7 * rand()),
    y: height * (0.15 + 0.7 * rand()),
  }));
  const index = new Map(nodeIds.map((id, i) => [id, i]));
  const springLength = Math.min(width, height) / 4;
  for (let it = 0; it < iterations; it++) {
    const fx = new Array(nodes.length).fill(0);
    const fy = new Array(nodes.length).fill(0);
    for (let i = 0; i < nodes.length; i++) {
      for (let j = i + 1; j < nodes.length; j++) {
        const dx = nodes[i].x - nodes[j].x;
        const dy = nodes[i].y - nodes[j].y;
        const d2 = Math.max(dx * dx + dy * dy, 1);
        const rep = 2000 / d2;
        const d = Math.sqrt(d2);
        fx[i] += (dx / d) * rep;
        fy[i] += (dy / d) * rep;
        fx[j] -= (dx / d) * rep;
        fy[j] -= (dy / d) * rep;
      }
    }
    for (const [src, dst] of edges) {
      const i = index.get(src);
      const j = index.get(dst);
      if (i === undefined || j === undefined || i === j) continue;
      const dx = nodes[j].x - nodes[i].x;
      const dy = nodes[j].y - nodes[i].y;
      const d = Math.max(Math.sqrt(dx * dx + dy * dy), 1);
      const pull = 0.02 * (d - springLength);
      fx[i] += (dx / d) * pull;
      fy[i] += (dy / d) * pull;
      fx[j] -= (dx / d) * pull;
      fy[j] -= (dy / d) * pull;
    }
    const step = 0.5 * (1 - it / iterations) + 0.05;
    for (let i = 0; i < nodes.length; i++) {
      nodes[i].x = Math.min(width - 20, Math.max(20, nodes[i].x + step * fx[i]));
      nodes[i].y = Math.min(height - 20, Math.max(20, nodes[i].y + step * fy[i]));
    }
  }
  return nodes;
}
