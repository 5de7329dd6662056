"""Independent brute-force oracles used to check the library's answers.

The SCM oracle builds the full joint table world by world and answers every
query from that table alone; it never calls the library's inference path.
"""

from __future__ import annotations

import itertools

import numpy as np

from delaycast.scm import CausalGraph, CausalNode, NodeCategory


def full_joint(g: CausalGraph) -> dict[tuple[str, ...], float]:
    """World -> probability, worlds keyed in g.nodes order."""
    ids = [n.id for n in g.nodes]
    table: dict[tuple[str, ...], float] = {}
    for combo in itertools.product(*(n.states for n in g.nodes)):
        world = dict(zip(ids, combo))
        p = 1.0
        for n in g.nodes:
            parent_states = tuple(world[par] for par in n.parents)
            p *= n.cpt[parent_states][n.states.index(world[n.id])]
        table[combo] = p
    return table


def oracle_conditional(g: CausalGraph, target: str, evidence: dict[str, str]) -> dict[str, float]:
    ids = [n.id for n in g.nodes]
    tnode = next(n for n in g.nodes if n.id == target)
    mass = {s: 0.0 for s in tnode.states}
    z = 0.0
    for world, p in full_joint(g).items():
        w = dict(zip(ids, world))
        if all(w[k] == v for k, v in evidence.items()):
            mass[w[target]] += p
            z += p
    if z == 0.0:
        raise ZeroDivisionError("oracle: zero-probability evidence")
    return {s: m / z for s, m in mass.items()}


def oracle_mutilate(g: CausalGraph, do_assign: dict[str, str]) -> CausalGraph:
    nodes = []
    for n in g.nodes:
        if n.id in do_assign:
            dist = tuple(1.0 if s == do_assign[n.id] else 0.0 for s in n.states)
            nodes.append(CausalNode(n.id, n.category, n.states, (), {(): dist}))
        else:
            nodes.append(n)
    return CausalGraph(nodes)


def oracle_expectation(g: CausalGraph, outcome: str, evidence: dict[str, str]) -> float:
    dist = oracle_conditional(g, outcome, evidence)
    return sum(float(s) * p for s, p in dist.items())


def oracle_do_expectation(g: CausalGraph, treatment: str, state: str, outcome: str) -> float:
    return oracle_expectation(oracle_mutilate(g, {treatment: state}), outcome, {})


def oracle_mediated_te(
    g: CausalGraph, treatment: str, mediator: str, outcome: str, do_state: str
) -> float:
    med = oracle_conditional(oracle_mutilate(g, {treatment: do_state}), mediator, {})
    total = 0.0
    for r, p in med.items():
        if p == 0.0:
            continue
        try:
            total += p * oracle_expectation(g, outcome, {mediator: r})
        except ZeroDivisionError:
            continue
    return total


def random_binary_dag(rng: np.random.Generator, n_nodes: int, edge_prob: float = 0.5) -> CausalGraph:
    """Random DAG over binary numeric-state nodes with Dirichlet CPT rows."""
    cats = list(NodeCategory)
    nodes = []
    ids = [f"n{i}" for i in range(n_nodes)]
    for i, nid in enumerate(ids):
        parents = tuple(p for p in ids[:i] if rng.random() < edge_prob)
        cpt = {}
        for combo in itertools.product(*(("0", "1") for _ in parents)):
            p1 = float(rng.uniform(0.05, 0.95))
            cpt[combo] = (1.0 - p1, p1)
        nodes.append(CausalNode(nid, cats[i % len(cats)], ("0", "1"), parents, cpt))
    return CausalGraph(nodes)
