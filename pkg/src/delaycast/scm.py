"""Discrete structural causal model with exact enumeration inference.

Nodes carry finite ordered state domains and conditional probability tables;
queries enumerate every world, so answers are exact and serve as ground
truth for everything downstream. Interventions follow do-semantics: cut the
incoming arcs and pin the node to the assigned state. Graphs are small by
design and construction enforces a hard world-count cap.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

MAX_NODES = 20
MAX_WORLDS = 1 << 20
ROW_SUM_TOL = 1e-9


class CausalGraphError(ValueError):
    pass


class ZeroProbabilityEvidenceError(ValueError):
    def __init__(self, evidence: Mapping[str, str]):
        super().__init__(f"evidence has probability zero: {dict(evidence)}")


class NonNumericOutcomeError(ValueError):
    def __init__(self, node: str, state: str):
        super().__init__(f"outcome node {node!r} has non-numeric state {state!r}")


class ZeroProbabilityMediatorWarning(UserWarning):
    pass


class NodeCategory(Enum):
    PlatformMission = "PlatformMission"
    DeliveryParameter = "DeliveryParameter"
    TargetStructure = "TargetStructure"
    DamageResponse = "DamageResponse"
    RecoveryDelay = "RecoveryDelay"


Assignment = Mapping[str, str]


@dataclass(frozen=True, slots=True)
class CausalNode:
    id: str
    category: NodeCategory
    states: tuple[str, ...]
    parents: tuple[str, ...]
    #: parent-state combination (in ``parents`` order) -> distribution over states
    cpt: dict[tuple[str, ...], tuple[float, ...]]

    def __post_init__(self):
        if len(self.states) < 2:
            raise CausalGraphError(f"node {self.id!r} needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise CausalGraphError(f"node {self.id!r} has duplicate states")


class CausalGraph:
    """Immutable DAG of :class:`CausalNode`; queries are pure functions."""

    def __init__(self, nodes: Iterable[CausalNode]):
        self.nodes: tuple[CausalNode, ...] = tuple(nodes)
        self._by_id = {n.id: n for n in self.nodes}
        if len(self._by_id) != len(self.nodes):
            raise CausalGraphError("duplicate node ids")
        if len(self.nodes) > MAX_NODES:
            raise CausalGraphError(f"graph has {len(self.nodes)} nodes, cap is {MAX_NODES}")
        worlds = 1
        for n in self.nodes:
            worlds *= len(n.states)
            if worlds > MAX_WORLDS:
                raise CausalGraphError(f"state space exceeds {MAX_WORLDS} worlds")
        self._order = self._toposort()
        self._validate_cpts()

    def node(self, node_id: str) -> CausalNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise CausalGraphError(f"unknown node {node_id!r}") from None

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return tuple((p, n.id) for n in self.nodes for p in n.parents)

    def _toposort(self) -> tuple[str, ...]:
        state: dict[str, int] = {}
        order: list[str] = []

        def visit(nid: str, trail: tuple[str, ...]) -> None:
            mark = state.get(nid, 0)
            if mark == 1:
                raise CausalGraphError(f"cycle: {' -> '.join(trail + (nid,))}")
            if mark == 2:
                return
            state[nid] = 1
            for p in self.node(nid).parents:
                if p not in self._by_id:
                    raise CausalGraphError(f"node {nid!r} lists unknown parent {p!r}")
                visit(p, trail + (nid,))
            state[nid] = 2
            order.append(nid)

        for n in self.nodes:
            visit(n.id, ())
        return tuple(order)

    def _validate_cpts(self) -> None:
        for n in self.nodes:
            combos = list(itertools.product(*(self.node(p).states for p in n.parents)))
            if set(n.cpt.keys()) != set(combos):
                raise CausalGraphError(
                    f"node {n.id!r}: CPT rows do not cover exactly the parent-state combinations"
                )
            for combo, dist in n.cpt.items():
                if len(dist) != len(n.states):
                    raise CausalGraphError(f"node {n.id!r}: CPT row {combo} has wrong arity")
                if any(p < 0 for p in dist):
                    raise CausalGraphError(f"node {n.id!r}: negative probability in row {combo}")
                if abs(sum(dist) - 1.0) > ROW_SUM_TOL:
                    raise CausalGraphError(
                        f"node {n.id!r}: CPT row {combo} sums to {sum(dist)}, expected 1"
                    )


def _check_assignment(g: CausalGraph, assign: Assignment) -> None:
    for nid, state in assign.items():
        node = g.node(nid)
        if state not in node.states:
            raise CausalGraphError(f"state {state!r} not in domain of node {nid!r}")


def _worlds(g: CausalGraph, fixed: Assignment) -> Iterable[tuple[dict[str, str], float]]:
    """All worlds consistent with ``fixed``, with their joint probabilities."""
    order = g._order
    domains = [(nid, (fixed[nid],) if nid in fixed else g.node(nid).states) for nid in order]
    for combo in itertools.product(*(d for _, d in domains)):
        world = dict(zip((nid for nid, _ in domains), combo))
        p = 1.0
        for nid in order:
            node = g.node(nid)
            row = node.cpt[tuple(world[par] for par in node.parents)]
            p *= row[node.states.index(world[nid])]
            if p == 0.0:
                break
        yield world, p


def joint_query(g: CausalGraph, target: str, evidence: Assignment) -> dict[str, float]:
    """Exact conditional distribution P(target | evidence)."""
    _check_assignment(g, evidence)
    tnode = g.node(target)
    mass = {s: 0.0 for s in tnode.states}
    total = 0.0
    for world, p in _worlds(g, evidence):
        mass[world[target]] += p
        total += p
    if total <= 0.0:
        raise ZeroProbabilityEvidenceError(evidence)
    return {s: mass[s] / total for s in tnode.states}


def intervene(g: CausalGraph, do_assign: Assignment) -> CausalGraph:
    """Graph mutilation: cut incoming arcs, pin each intervened node."""
    _check_assignment(g, do_assign)
    new_nodes = []
    for n in g.nodes:
        if n.id in do_assign:
            dist = tuple(1.0 if s == do_assign[n.id] else 0.0 for s in n.states)
            new_nodes.append(
                CausalNode(id=n.id, category=n.category, states=n.states, parents=(), cpt={(): dist})
            )
        else:
            new_nodes.append(n)
    return CausalGraph(new_nodes)


def _numeric_states(g: CausalGraph, node_id: str) -> dict[str, float]:
    node = g.node(node_id)
    values = {}
    for s in node.states:
        try:
            values[s] = float(s)
        except ValueError:
            raise NonNumericOutcomeError(node_id, s) from None
    return values


def expectation(g: CausalGraph, outcome: str, evidence: Assignment) -> float:
    values = _numeric_states(g, outcome)
    dist = joint_query(g, outcome, evidence)
    return sum(values[s] * p for s, p in dist.items())


def causal_effect(g: CausalGraph, treatment: str, w1: str, w0: str, outcome: str) -> float:
    """E[outcome | do(treatment=w1)] - E[outcome | do(treatment=w0)]."""
    e1 = expectation(intervene(g, {treatment: w1}), outcome, {})
    e0 = expectation(intervene(g, {treatment: w0}), outcome, {})
    return e1 - e0


def mediated_total_effect(
    g: CausalGraph, treatment: str, mediator: str, outcome: str, do_state: str
) -> float:
    """Sum over mediator states r of P(r | do(treatment)) * E[outcome | r]."""
    _numeric_states(g, outcome)
    med_dist = joint_query(intervene(g, {treatment: do_state}), mediator, {})
    total = 0.0
    for r, p in med_dist.items():
        if p == 0.0:
            warnings.warn(
                f"mediator state {mediator}={r!r} has probability 0 under do({treatment}={do_state})",
                ZeroProbabilityMediatorWarning,
                stacklevel=2,
            )
            continue
        try:
            total += p * expectation(g, outcome, {mediator: r})
        except ZeroProbabilityEvidenceError:
            warnings.warn(
                f"mediator state {mediator}={r!r} is observationally impossible; term dropped",
                ZeroProbabilityMediatorWarning,
                stacklevel=2,
            )
    return total


def do_vs_observe_gap(g: CausalGraph, treatment: str, state: str, outcome: str) -> tuple[float, float]:
    """(E[outcome | do(treatment=state)], E[outcome | treatment=state])."""
    p_do = expectation(intervene(g, {treatment: state}), outcome, {})
    p_obs = expectation(g, outcome, {treatment: state})
    return p_do, p_obs


def fit_cpts(skeleton: CausalGraph, rows: Sequence[Assignment], alpha: float = 1.0) -> CausalGraph:
    """Maximum-likelihood CPTs with Laplace smoothing; structure is kept as is."""
    if alpha < 0:
        raise CausalGraphError("alpha must be >= 0")
    new_nodes = []
    for n in skeleton.nodes:
        combos = list(itertools.product(*(skeleton.node(p).states for p in n.parents)))
        counts = {c: [alpha] * len(n.states) for c in combos}
        for row in rows:
            try:
                combo = tuple(row[p] for p in n.parents)
                counts[combo][n.states.index(row[n.id])] += 1.0
            except (KeyError, ValueError):
                raise CausalGraphError(f"data row {dict(row)} does not cover node {n.id!r}") from None
        cpt = {}
        for combo, cs in counts.items():
            total = sum(cs)
            if total == 0:
                cpt[combo] = tuple(1.0 / len(cs) for _ in cs)
            else:
                cpt[combo] = tuple(c / total for c in cs)
        new_nodes.append(
            CausalNode(id=n.id, category=n.category, states=n.states, parents=n.parents, cpt=cpt)
        )
    return CausalGraph(new_nodes)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def format_ctg(g: CausalGraph) -> str:
    """Node-block text form; parse_ctg inverts it exactly."""
    lines: list[str] = []
    for n in g.nodes:
        lines.append(f"node {n.id}")
        lines.append(f"  category {n.category.value}")
        lines.append(f"  states {' '.join(n.states)}")
        lines.append(f"  parents {' '.join(n.parents)}".rstrip())
        for combo in sorted(n.cpt.keys()):
            items = ["cpt"]
            items.extend(f"{p}={v}" for p, v in zip(n.parents, combo))
            items.extend(repr(x) for x in n.cpt[combo])
            lines.append("  " + " ".join(items))
        lines.append("")
    return "\n".join(lines)


def parse_ctg(text: str) -> CausalGraph:
    nodes: list[CausalNode] = []
    current: dict | None = None

    def flush(line_no: int) -> None:
        nonlocal current
        if current is None:
            return
        for key in ("category", "states", "parents"):
            if key not in current:
                raise CausalGraphError(f"line {line_no}: node {current['id']!r} is missing {key!r}")
        nodes.append(
            CausalNode(
                id=current["id"],
                category=current["category"],
                states=current["states"],
                parents=current["parents"],
                cpt=current["cpt"],
            )
        )
        current = None

    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kw = parts[0]
        if kw == "node":
            flush(i)
            if len(parts) != 2:
                raise CausalGraphError(f"line {i}: expected 'node <id>'")
            current = {"id": parts[1], "cpt": {}}
            continue
        if current is None:
            raise CausalGraphError(f"line {i}: {kw!r} outside a node block")
        if kw == "category":
            try:
                current["category"] = NodeCategory(parts[1])
            except (IndexError, ValueError):
                raise CausalGraphError(f"line {i}: unknown category") from None
        elif kw == "states":
            current["states"] = tuple(parts[1:])
        elif kw == "parents":
            current["parents"] = tuple(parts[1:])
        elif kw == "cpt":
            if "parents" not in current or "states" not in current:
                raise CausalGraphError(f"line {i}: cpt before parents/states")
            n_par = len(current["parents"])
            assigns = parts[1 : 1 + n_par]
            combo = []
            for expected, item in zip(current["parents"], assigns):
                if "=" not in item:
                    raise CausalGraphError(f"line {i}: expected '{expected}=<state>', got {item!r}")
                name, _, value = item.partition("=")
                if name != expected:
                    raise CausalGraphError(
                        f"line {i}: cpt assignment order must follow parents ({expected!r} expected)"
                    )
                combo.append(value)
            try:
                probs = tuple(float(x) for x in parts[1 + n_par :])
            except ValueError:
                raise CausalGraphError(f"line {i}: non-numeric probability") from None
            if len(probs) != len(current["states"]):
                raise CausalGraphError(f"line {i}: expected {len(current['states'])} probabilities")
            current["cpt"][tuple(combo)] = probs
        else:
            raise CausalGraphError(f"line {i}: unknown keyword {kw!r}")
    flush(len(text.splitlines()))
    if not nodes:
        raise CausalGraphError("no node blocks found")
    return CausalGraph(nodes)
