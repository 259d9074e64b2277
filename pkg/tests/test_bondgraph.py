import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from circuitgnn.bondgraph import (JUNCTIONS, VIRTUAL_SWITCH, BgNodeKind, apply_dcm_virtual_switch,
                                  apply_switch_cells, continuous_part, switch_duties, to_bond_graph)
from circuitgnn.errors import DutyOverflow, InvalidCircuit, ModeRequiresSwitch, NoSuchInductor
from circuitgnn.netlist import ElementKind, Mode, parse_netlist, render

from conftest import continuous_circuits

KIND_OF = {ElementKind.VoltageSource: "Se", ElementKind.CurrentSource: "Sf",
           ElementKind.Resistor: "R", ElementKind.Inductor: "I", ElementKind.Capacitor: "C"}

BUCK = """V1 1 0 12
S1 1 2 0.6
S2 2 0 0.4
L1 2 3 100u
C1 3 0 10u
R1 3 0 5
.freq 100k
.mode CCM
"""


def labelled_structure(graph):
    """Graph as a set of labelled edges, independent of node ids."""
    name = {n.id: (n.kind.value, n.label, n.control) for n in graph.nodes}
    return sorted((tuple(sorted([name[e.a], name[e.b]])), e.weight) for e in graph.edges)


def expected_structure(circuit):
    """Rule oracle written from the construction rules, not from the builder."""
    edges = []
    for el in circuit.elements:
        j1 = ("1", el.name, False)
        edges.append((tuple(sorted([j1, (KIND_OF[el.kind], el.name, False)])), 1.0))
        for net in (el.net_pos, el.net_neg):
            edges.append((tuple(sorted([j1, ("0", net, False)])), 1.0))
    return sorted(edges)


def check_degrees(graph, circuit):
    for n in graph.nodes:
        if n.kind is BgNodeKind.Junction1:
            assert graph.degree(n.id) == 3
        elif n.kind not in JUNCTIONS:
            assert graph.degree(n.id) == 1
            (nb,) = graph.neighbors(n.id)
            assert graph.nodes[nb].label == n.label
    assert len(graph.nodes) == len(circuit.nets) + 2 * len(circuit.elements)
    assert len(graph.edges) == 3 * len(circuit.elements)


def test_voltage_source_and_resistor():
    c = parse_netlist("V1 1 0 5\nR1 1 0 10")
    g = to_bond_graph(c)
    assert [n.kind for n in g.nodes] == [BgNodeKind.Junction0, BgNodeKind.Junction0,
                                         BgNodeKind.Junction1, BgNodeKind.Se,
                                         BgNodeKind.Junction1, BgNodeKind.R]
    assert [n.label for n in g.nodes[:2]] == ["0", "1"]
    assert len(g.edges) == 6
    assert all(e.weight == 1.0 for e in g.edges)
    check_degrees(g, c)
    assert labelled_structure(g) == expected_structure(c)


def test_series_loop():
    c = parse_netlist("V1 1 0 1\nR1 1 2 1\nL1 2 3 1e-3\nC1 3 0 1e-6")
    g = to_bond_graph(c)
    assert len(g.nodes) == 12 and len(g.edges) == 12
    assert sum(n.kind is BgNodeKind.Junction0 for n in g.nodes) == 4
    assert sum(n.kind is BgNodeKind.Junction1 for n in g.nodes) == 4
    check_degrees(g, c)


def test_single_node_circuit_is_invalid():
    with pytest.raises(InvalidCircuit):
        to_bond_graph(parse_netlist("V1 1 1 5"))


@settings(max_examples=200, deadline=None)
@given(continuous_circuits())
def test_structure_matches_rule_oracle(circuit):
    g = to_bond_graph(circuit)
    check_degrees(g, circuit)
    assert labelled_structure(g) == expected_structure(circuit)
    assert all(e.a < e.b for e in g.edges)
    assert len({(e.a, e.b) for e in g.edges}) == len(g.edges)
    assert all(n.value == 0 and n.phase == 0 for n in g.nodes if n.kind in JUNCTIONS)


def test_deterministic():
    c = parse_netlist(BUCK)
    assert to_bond_graph(c) == to_bond_graph(c)


# ---------------------------------------------------------------------------
# isomorphism under element reordering

def _adjacency(graph):
    n = len(graph.nodes)
    a = np.zeros((n, n))
    for e in graph.edges:
        a[e.a, e.b] = a[e.b, e.a] = e.weight
    return a


def isomorphic(g1, g2) -> bool:
    """Backtracking search for a kind- and value-preserving node bijection."""
    if len(g1.nodes) != len(g2.nodes) or len(g1.edges) != len(g2.edges):
        return False
    a1, a2 = _adjacency(g1), _adjacency(g2)
    sig1 = [(n.kind, n.value) for n in g1.nodes]
    sig2 = [(n.kind, n.value) for n in g2.nodes]
    n = len(sig1)
    mapping = [-1] * n
    used = [False] * n

    def extend(i):
        if i == n:
            return True
        for j in range(n):
            if used[j] or sig1[i] != sig2[j]:
                continue
            if any(a1[i, k] != a2[j, mapping[k]] for k in range(i)):
                continue
            mapping[i], used[j] = j, True
            if extend(i + 1):
                return True
            mapping[i], used[j] = -1, False
        return False

    return extend(0)


@settings(max_examples=40, deadline=None)
@given(continuous_circuits(max_nets=2, max_extra=2), st.randoms(use_true_random=False))
def test_permuted_elements_give_isomorphic_graphs(circuit, rnd):
    g = to_bond_graph(circuit)
    assert len(g.nodes) <= 12
    elements = list(circuit.elements)
    rnd.shuffle(elements)
    g2 = to_bond_graph(replace(circuit, elements=tuple(elements)))
    assert isomorphic(g, g2)


def test_isomorphism_check_rejects_different_circuits():
    g1 = to_bond_graph(parse_netlist("V1 1 0 1\nR1 1 2 1\nR2 2 0 1"))
    g2 = to_bond_graph(parse_netlist("V1 1 0 1\nR1 1 0 1\nR2 1 0 1"))
    assert not isomorphic(g1, g2)


# ---------------------------------------------------------------------------
# switches

def test_buck_duties():
    g = to_bond_graph(parse_netlist(BUCK))
    s1 = g.find("S1", BgNodeKind.Junction1s)
    s2 = g.find("S2", BgNodeKind.Junction1s)
    w1 = {e.weight for e in g.edges if s1.id in (e.a, e.b)}
    w2 = {e.weight for e in g.edges if s2.id in (e.a, e.b)}
    assert w1 == {0.6} and w2 == {0.4}
    assert switch_duties(g) == {"S1": 0.6, "S2": 0.4}
    assert sum(switch_duties(g).values()) == 1.0
    for n in g.nodes:
        if n.control:
            assert n.kind is BgNodeKind.Sf and n.value == 0.0 and n.frequency == 1e5
    # the switched junction has the same degree as an element's 1-junction
    assert g.degree(s1.id) == 3


def test_switch_phase():
    g = to_bond_graph(parse_netlist(BUCK + f".phase S1 {math.pi / 2!r}\n"))
    ctl = {n.label: n for n in g.nodes if n.control}
    assert ctl["S1"].phase == math.pi / 2
    assert ctl["S2"].phase == 0.0


def test_no_switched_junctions_in_continuous_mode():
    g = to_bond_graph(parse_netlist("V1 1 0 1\nR1 1 0 1"))
    assert not any(n.kind in (BgNodeKind.Junction1s, BgNodeKind.Junction0s) for n in g.nodes)


def test_switch_cells_need_switching_mode():
    c = parse_netlist("V1 1 0 1\nR1 1 0 1")
    with pytest.raises(ModeRequiresSwitch):
        apply_switch_cells(c, continuous_part(c))


def _dcm_graph(d1=0.3, d2=0.5):
    text = BUCK.replace(".mode CCM", ".mode DCM").replace("0.6", str(d1)).replace("0.4", str(d2))
    c = parse_netlist(text)
    return c, apply_switch_cells(c, continuous_part(c))


def test_dcm_virtual_switch_weight():
    _, g = _dcm_graph()
    g = apply_dcm_virtual_switch(g, "L1", 0.3, 0.5)
    vs = g.find(VIRTUAL_SWITCH, BgNodeKind.Junction1s)
    weights = [e.weight for e in g.edges if vs.id in (e.a, e.b)]
    assert len(weights) == 3
    assert all(w == pytest.approx(0.2) for w in weights)
    # bridges exactly the inductor's two terminal junctions
    terminals = {g.nodes[n].label for n in g.neighbors(vs.id) if not g.nodes[n].control}
    assert terminals == {"2", "3"}


def test_dcm_boundary_keeps_zero_weight_switch():
    _, g = _dcm_graph(0.3, 0.7)
    g = apply_dcm_virtual_switch(g, "L1", 0.3, 0.7)
    vs = g.find(VIRTUAL_SWITCH, BgNodeKind.Junction1s)
    assert [e.weight for e in g.edges if vs.id in (e.a, e.b)] == [0.0, 0.0, 0.0]


def test_dcm_duty_overflow():
    _, g = _dcm_graph()
    with pytest.raises(DutyOverflow):
        apply_dcm_virtual_switch(g, "L1", 0.6, 0.6)


def test_dcm_unknown_inductor():
    _, g = _dcm_graph()
    with pytest.raises(NoSuchInductor):
        apply_dcm_virtual_switch(g, "L9", 0.3, 0.5)


def test_dcm_end_to_end_duties_sum_to_one():
    c, _ = _dcm_graph(0.375, 0.25)
    g = to_bond_graph(c)
    duties = switch_duties(g)
    assert set(duties) == {"S1", "S2", VIRTUAL_SWITCH}
    assert duties["S1"] + duties["S2"] + duties[VIRTUAL_SWITCH] == 1.0


def test_render_then_convert_is_stable():
    c = parse_netlist(BUCK)
    assert to_bond_graph(parse_netlist(render(c))) == to_bond_graph(c)
    assert c.mode is Mode.CCM
