"""Exact inference, interventions, and effects against the enumeration oracle."""

from __future__ import annotations

import importlib.resources

import numpy as np
import pytest

from delaycast.scm import (
    CausalGraph,
    CausalGraphError,
    CausalNode,
    NodeCategory,
    NonNumericOutcomeError,
    ZeroProbabilityEvidenceError,
    ZeroProbabilityMediatorWarning,
    causal_effect,
    do_vs_observe_gap,
    expectation,
    fit_cpts,
    format_ctg,
    intervene,
    joint_query,
    mediated_total_effect,
    parse_ctg,
)

from .oracles import (
    oracle_conditional,
    oracle_do_expectation,
    oracle_expectation,
    oracle_mediated_te,
    random_binary_dag,
)


def bundled(name: str) -> CausalGraph:
    text = importlib.resources.files("delaycast").joinpath(f"data/{name}.ctg").read_text()
    return parse_ctg(text)


def chain() -> CausalGraph:
    return bundled("chain")


def confounder() -> CausalGraph:
    return bundled("confounder")


# ---------------------------------------------------------------------------
# joint_query
# ---------------------------------------------------------------------------

def test_chain_observational_query():
    dist = joint_query(chain(), "Y", {"W": "1"})
    assert dist["1"] == pytest.approx(0.73, abs=1e-12)


def test_root_without_evidence_returns_prior():
    dist = joint_query(chain(), "W", {})
    assert dist == {"0": pytest.approx(0.5), "1": pytest.approx(0.5)}


def test_evidence_on_all_parents_returns_cpt_row():
    dist = joint_query(chain(), "Y", {"M": "1"})
    assert dist["1"] == pytest.approx(0.8, abs=1e-12)
    assert dist["0"] == pytest.approx(0.2, abs=1e-12)


def test_zero_probability_evidence_raises():
    g = CausalGraph(
        [
            CausalNode("A", NodeCategory.PlatformMission, ("0", "1"), (), {(): (1.0, 0.0)}),
            CausalNode(
                "B",
                NodeCategory.RecoveryDelay,
                ("0", "1"),
                ("A",),
                {("0",): (0.5, 0.5), ("1",): (0.5, 0.5)},
            ),
        ]
    )
    with pytest.raises(ZeroProbabilityEvidenceError):
        joint_query(g, "B", {"A": "1"})


def test_distribution_sums_to_one():
    rng = np.random.default_rng(0)
    for _ in range(20):
        g = random_binary_dag(rng, 5)
        dist = joint_query(g, g.nodes[-1].id, {})
        assert abs(sum(dist.values()) - 1.0) < 1e-9


# ---------------------------------------------------------------------------
# intervene
# ---------------------------------------------------------------------------

def test_do_on_root_only_pins_the_prior():
    g = intervene(chain(), {"W": "1"})
    assert g.node("W").cpt[()] == (0.0, 1.0)
    assert g.node("M").cpt == chain().node("M").cpt
    assert joint_query(g, "Y", {})["1"] == pytest.approx(0.73, abs=1e-12)


def test_do_removes_confounder_arc():
    g = intervene(confounder(), {"W": "1"})
    assert g.node("W").parents == ()
    assert expectation(g, "Y", {}) == pytest.approx(0.5, abs=1e-12)


def test_intervene_everything_gives_point_mass():
    g = intervene(chain(), {"W": "1", "M": "0", "Y": "1"})
    assert joint_query(g, "Y", {})["1"] == pytest.approx(1.0)
    assert joint_query(g, "M", {})["0"] == pytest.approx(1.0)


def test_intervene_is_idempotent():
    g1 = intervene(chain(), {"M": "1"})
    g2 = intervene(g1, {"M": "1"})
    for n1, n2 in zip(g1.nodes, g2.nodes):
        assert n1 == n2


# ---------------------------------------------------------------------------
# causal_effect
# ---------------------------------------------------------------------------

def test_chain_effect_matches_frozen_values():
    g = chain()
    assert expectation(intervene(g, {"W": "1"}), "Y", {}) == pytest.approx(0.73, abs=1e-12)
    assert expectation(intervene(g, {"W": "0"}), "Y", {}) == pytest.approx(0.24, abs=1e-12)
    assert causal_effect(g, "W", "1", "0", "Y") == pytest.approx(0.49, abs=1e-12)


def test_effect_zero_without_directed_path():
    # Y -> W ordering: intervening on W cannot move Y
    g = CausalGraph(
        [
            CausalNode("Y", NodeCategory.RecoveryDelay, ("0", "1"), (), {(): (0.3, 0.7)}),
            CausalNode(
                "W",
                NodeCategory.PlatformMission,
                ("0", "1"),
                ("Y",),
                {("0",): (0.9, 0.1), ("1",): (0.2, 0.8)},
            ),
        ]
    )
    assert causal_effect(g, "W", "1", "0", "Y") == pytest.approx(0.0, abs=1e-12)


def test_effect_zero_when_states_equal():
    assert causal_effect(chain(), "W", "1", "1", "Y") == 0.0


def test_effect_antisymmetry():
    rng = np.random.default_rng(2)
    for _ in range(20):
        g = random_binary_dag(rng, 5)
        t, y = g.nodes[0].id, g.nodes[-1].id
        assert causal_effect(g, t, "1", "0", y) == pytest.approx(
            -causal_effect(g, t, "0", "1", y), abs=1e-12
        )


def test_non_numeric_outcome_rejected():
    g = CausalGraph(
        [CausalNode("A", NodeCategory.DamageResponse, ("low", "high"), (), {(): (0.5, 0.5)})]
    )
    with pytest.raises(NonNumericOutcomeError):
        expectation(g, "A", {})


# ---------------------------------------------------------------------------
# mediated total effect
# ---------------------------------------------------------------------------

def test_full_mediation_identity_on_chain():
    g = chain()
    te = mediated_total_effect(g, "W", "M", "Y", "1")
    assert te == pytest.approx(0.9 * 0.8 + 0.1 * 0.1, abs=1e-12)
    assert te == pytest.approx(expectation(intervene(g, {"W": "1"}), "Y", {}), abs=1e-12)


def test_te_with_mediator_independent_of_treatment():
    g = CausalGraph(
        [
            CausalNode("W", NodeCategory.PlatformMission, ("0", "1"), (), {(): (0.5, 0.5)}),
            CausalNode("M", NodeCategory.DamageResponse, ("0", "1"), (), {(): (0.3, 0.7)}),
            CausalNode(
                "Y",
                NodeCategory.RecoveryDelay,
                ("0", "1"),
                ("M",),
                {("0",): (0.9, 0.1), ("1",): (0.2, 0.8)},
            ),
        ]
    )
    te = mediated_total_effect(g, "W", "M", "Y", "1")
    assert te == pytest.approx(expectation(g, "Y", {}), abs=1e-12)


def confounded_mediator_graph() -> CausalGraph:
    # U confounds the M -> Y link, so conditioning on M is not the same as
    # intervening on it and the TE formula departs from E[Y | do(W)].
    return CausalGraph(
        [
            CausalNode("W", NodeCategory.PlatformMission, ("0", "1"), (), {(): (0.5, 0.5)}),
            CausalNode("U", NodeCategory.TargetStructure, ("0", "1"), (), {(): (0.5, 0.5)}),
            CausalNode(
                "M",
                NodeCategory.DamageResponse,
                ("0", "1"),
                ("W", "U"),
                {
                    ("0", "0"): (0.9, 0.1),
                    ("0", "1"): (0.5, 0.5),
                    ("1", "0"): (0.4, 0.6),
                    ("1", "1"): (0.05, 0.95),
                },
            ),
            CausalNode(
                "Y",
                NodeCategory.RecoveryDelay,
                ("0", "1"),
                ("M", "U"),
                {
                    ("0", "0"): (0.95, 0.05),
                    ("0", "1"): (0.5, 0.5),
                    ("1", "0"): (0.4, 0.6),
                    ("1", "1"): (0.05, 0.95),
                },
            ),
        ]
    )


def test_te_differs_from_do_under_confounded_mediator():
    g = confounded_mediator_graph()
    te = mediated_total_effect(g, "W", "M", "Y", "1")
    do = expectation(intervene(g, {"W": "1"}), "Y", {})
    assert te == pytest.approx(oracle_mediated_te(g, "W", "M", "Y", "1"), abs=1e-12)
    assert abs(te - do) > 0.005


def test_zero_probability_mediator_warns_and_drops():
    g = CausalGraph(
        [
            CausalNode("W", NodeCategory.PlatformMission, ("0", "1"), (), {(): (0.5, 0.5)}),
            CausalNode(
                "M",
                NodeCategory.DamageResponse,
                ("0", "1"),
                ("W",),
                {("0",): (1.0, 0.0), ("1",): (1.0, 0.0)},
            ),
            CausalNode(
                "Y",
                NodeCategory.RecoveryDelay,
                ("0", "1"),
                ("M",),
                {("0",): (0.3, 0.7), ("1",): (0.1, 0.9)},
            ),
        ]
    )
    with pytest.warns(ZeroProbabilityMediatorWarning):
        te = mediated_total_effect(g, "W", "M", "Y", "1")
    assert te == pytest.approx(0.7, abs=1e-12)


# ---------------------------------------------------------------------------
# do vs observe
# ---------------------------------------------------------------------------

def test_confounder_gap_frozen_values():
    p_do, p_obs = do_vs_observe_gap(confounder(), "W", "1", "Y")
    assert p_do == pytest.approx(0.5, abs=1e-12)
    assert p_obs == pytest.approx(0.74, abs=1e-12)


def test_gap_closes_when_treatment_is_a_root():
    p_do, p_obs = do_vs_observe_gap(chain(), "W", "1", "Y")
    assert p_do == pytest.approx(p_obs, abs=1e-12)


def test_deterministic_cpts_equal_iff_no_open_backdoor():
    det = CausalGraph(
        [
            CausalNode("W", NodeCategory.PlatformMission, ("0", "1"), (), {(): (0.5, 0.5)}),
            CausalNode(
                "Y",
                NodeCategory.RecoveryDelay,
                ("0", "1"),
                ("W",),
                {("0",): (1.0, 0.0), ("1",): (0.0, 1.0)},
            ),
        ]
    )
    p_do, p_obs = do_vs_observe_gap(det, "W", "1", "Y")
    assert p_do == p_obs == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# random graphs vs oracle
# ---------------------------------------------------------------------------

def test_queries_match_oracle_on_random_dags():
    rng = np.random.default_rng(77)
    for _ in range(40):
        n = int(rng.integers(2, 7))
        g = random_binary_dag(rng, n)
        ids = [node.id for node in g.nodes]
        target = ids[int(rng.integers(0, n))]
        treatment = ids[int(rng.integers(0, n))]

        dist = joint_query(g, target, {})
        oracle = oracle_conditional(g, target, {})
        for s in dist:
            assert dist[s] == pytest.approx(oracle[s], abs=1e-12)

        if treatment != target:
            got = expectation(intervene(g, {treatment: "1"}), target, {})
            want = oracle_do_expectation(g, treatment, "1", target)
            assert got == pytest.approx(want, abs=1e-12)
            eff = causal_effect(g, treatment, "1", "0", target)
            want_eff = want - oracle_do_expectation(g, treatment, "0", target)
            assert eff == pytest.approx(want_eff, abs=1e-12)

        mediator = ids[int(rng.integers(0, n))]
        if len({treatment, mediator, target}) == 3:
            te = mediated_total_effect(g, treatment, mediator, target, "1")
            assert te == pytest.approx(oracle_mediated_te(g, treatment, mediator, target, "1"), abs=1e-12)


# ---------------------------------------------------------------------------
# construction and fitting
# ---------------------------------------------------------------------------

def test_cycle_rejected():
    with pytest.raises(CausalGraphError, match="cycle"):
        CausalGraph(
            [
                CausalNode(
                    "A",
                    NodeCategory.PlatformMission,
                    ("0", "1"),
                    ("B",),
                    {("0",): (0.5, 0.5), ("1",): (0.5, 0.5)},
                ),
                CausalNode(
                    "B",
                    NodeCategory.DamageResponse,
                    ("0", "1"),
                    ("A",),
                    {("0",): (0.5, 0.5), ("1",): (0.5, 0.5)},
                ),
            ]
        )


def test_cpt_row_sum_enforced():
    with pytest.raises(CausalGraphError, match="sums to"):
        CausalGraph([CausalNode("A", NodeCategory.PlatformMission, ("0", "1"), (), {(): (0.6, 0.6)})])


def test_node_cap_enforced():
    nodes = [
        CausalNode(f"n{i}", NodeCategory.PlatformMission, ("0", "1"), (), {(): (0.5, 0.5)})
        for i in range(21)
    ]
    with pytest.raises(CausalGraphError, match="cap"):
        CausalGraph(nodes)


def test_fit_cpts_recovers_frequencies():
    skeleton = chain()
    rng = np.random.default_rng(3)
    rows = []
    for _ in range(4000):
        w = "1" if rng.random() < 0.5 else "0"
        m = "1" if rng.random() < (0.9 if w == "1" else 0.2) else "0"
        y = "1" if rng.random() < (0.8 if m == "1" else 0.1) else "0"
        rows.append({"W": w, "M": m, "Y": y})
    fitted = fit_cpts(skeleton, rows, alpha=1.0)
    assert fitted.node("M").cpt[("1",)][1] == pytest.approx(0.9, abs=0.05)
    assert fitted.node("Y").cpt[("0",)][1] == pytest.approx(0.1, abs=0.05)


def test_fit_cpts_laplace_smoothing_on_unseen_rows():
    skeleton = chain()
    fitted = fit_cpts(skeleton, [{"W": "0", "M": "0", "Y": "0"}], alpha=1.0)
    # unseen parent combination falls back to the uniform Laplace prior
    assert fitted.node("Y").cpt[("1",)] == (0.5, 0.5)


# ---------------------------------------------------------------------------
# text format
# ---------------------------------------------------------------------------

def test_format_parse_round_trip():
    for name in ("chain", "confounder", "tactical"):
        g = bundled(name)
        again = parse_ctg(format_ctg(g))
        for a, b in zip(g.nodes, again.nodes):
            assert a == b


def test_parse_error_reports_line():
    with pytest.raises(CausalGraphError, match="line 3"):
        parse_ctg("node A\n  category PlatformMission\n  bogus x\n")


def test_parse_rejects_orphan_directive():
    with pytest.raises(CausalGraphError, match="outside"):
        parse_ctg("category PlatformMission\n")


def test_tactical_graph_covers_all_five_categories():
    g = bundled("tactical")
    assert {n.category for n in g.nodes} == set(NodeCategory)
    assert len(NodeCategory) == 5
