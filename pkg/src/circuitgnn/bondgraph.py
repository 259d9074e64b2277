"""
Circuit to bond-graph conversion.

Every net becomes a 0-junction, every two-terminal element a 1-junction with
the element node hanging off it. Switches (CCM/DCM) become switched
1-junctions (``Junction1s``) whose flow-decider bond goes to a zero-valued
flow source acting as the control signal; all bonds touching a switched
junction carry the duty ratio of that control signal as their weight. In
DCM a virtual switch bridges the inductor terminals for the remaining
fraction ``d3 = 1 - d1 - d2`` of the cycle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from .errors import DutyOverflow, InvalidCircuit, ModeRequiresSwitch, NoSuchInductor
from .netlist import Circuit, ElementKind, Mode, net_sort_key, validate


class BgNodeKind(enum.Enum):
    Se = "Se"
    Sf = "Sf"
    R = "R"
    I = "I"  # noqa: E741  (inertance, i.e. inductor)
    C = "C"
    Junction1 = "1"
    Junction0 = "0"
    Junction1s = "1s"
    Junction0s = "0s"


ELEMENT_TO_NODE = {
    ElementKind.VoltageSource: BgNodeKind.Se,
    ElementKind.CurrentSource: BgNodeKind.Sf,
    ElementKind.Resistor: BgNodeKind.R,
    ElementKind.Inductor: BgNodeKind.I,
    ElementKind.Capacitor: BgNodeKind.C,
}

JUNCTIONS = frozenset({BgNodeKind.Junction1, BgNodeKind.Junction0,
                       BgNodeKind.Junction1s, BgNodeKind.Junction0s})
SWITCHED = frozenset({BgNodeKind.Junction1s, BgNodeKind.Junction0s})


@dataclass(frozen=True)
class BgNode:
    id: int
    kind: BgNodeKind
    value: float = 0.0
    phase: float = 0.0
    frequency: float = 0.0
    label: str = ""
    control: bool = False

    @property
    def is_junction(self) -> bool:
        return self.kind in JUNCTIONS


@dataclass(frozen=True)
class BgEdge:
    a: int
    b: int
    weight: float = 1.0


@dataclass(frozen=True)
class BondGraph:
    nodes: tuple[BgNode, ...]
    edges: tuple[BgEdge, ...]
    mode: Mode = Mode.Continuous
    class_label: int | None = None
    frequency: float = 1.0
    resonance: float | None = None

    def neighbors(self, node_id: int) -> list[int]:
        out = []
        for e in self.edges:
            if e.a == node_id:
                out.append(e.b)
            elif e.b == node_id:
                out.append(e.a)
        return out

    def degree(self, node_id: int) -> int:
        return sum(1 for e in self.edges if node_id in (e.a, e.b))

    def find(self, label: str, kind: BgNodeKind | None = None) -> BgNode:
        for n in self.nodes:
            if n.label == label and (kind is None or n.kind is kind):
                return n
        raise KeyError(label)


class _Builder:
    def __init__(self, graph: BondGraph | None = None):
        self.nodes: list[BgNode] = list(graph.nodes) if graph else []
        self.edges: list[BgEdge] = list(graph.edges) if graph else []

    def node(self, kind: BgNodeKind, **attrs) -> int:
        nid = len(self.nodes)
        self.nodes.append(BgNode(nid, kind, **attrs))
        return nid

    def edge(self, a: int, b: int, weight: float = 1.0) -> None:
        assert a != b, "self-edge"
        self.edges.append(BgEdge(min(a, b), max(a, b), weight))


def _junction0_ids(graph: BondGraph) -> dict[str, int]:
    return {n.label: n.id for n in graph.nodes if n.kind is BgNodeKind.Junction0}


def continuous_part(circuit: Circuit) -> BondGraph:
    """0-junction per net, (1-junction, element) per non-switch element."""
    b = _Builder()
    j0 = {}
    for net in sorted(circuit.nets, key=net_sort_key):
        j0[net] = b.node(BgNodeKind.Junction0, label=net)
    for el in circuit.elements:
        if el.kind is ElementKind.Switch:
            continue
        kind = ELEMENT_TO_NODE[el.kind]
        is_source = el.kind in (ElementKind.VoltageSource, ElementKind.CurrentSource)
        j1 = b.node(BgNodeKind.Junction1, label=el.name)
        en = b.node(kind, value=el.value, label=el.name,
                    frequency=circuit.frequency if is_source else 0.0)
        b.edge(j1, en)
        b.edge(j1, j0[el.net_pos])
        b.edge(j1, j0[el.net_neg])
    return BondGraph(tuple(b.nodes), tuple(b.edges), circuit.mode, circuit.class_label,
                     circuit.frequency)


def to_bond_graph(circuit: Circuit) -> BondGraph:
    """Convert a valid circuit into its bond graph.

    For DCM the virtual switch bridges the first inductor in netlist order;
    ``d1``/``d2`` are the duties of the first and second switch (``d2 = 0``
    when the circuit has a single switch).
    """
    violations = validate(circuit)
    if violations:
        raise InvalidCircuit(violations)
    graph = continuous_part(circuit)
    if circuit.mode is Mode.Continuous:
        return graph
    graph = apply_switch_cells(circuit, graph)
    if circuit.mode is Mode.DCM:
        inductors = circuit.of_kind(ElementKind.Inductor)
        if not inductors:
            raise NoSuchInductor("DCM circuit has no inductor to bridge")
        sw = circuit.switches
        d1 = sw[0].value
        d2 = sw[1].value if len(sw) > 1 else 0.0
        graph = apply_dcm_virtual_switch(graph, inductors[0].name, d1, d2)
    return graph


def apply_switch_cells(circuit: Circuit, graph: BondGraph) -> BondGraph:
    """Append one switched 1-junction plus zero-valued control source per switch."""
    if circuit.mode not in (Mode.CCM, Mode.DCM) or not circuit.switches:
        raise ModeRequiresSwitch(
            f"switch cells need mode CCM/DCM and at least one switch (mode {circuit.mode.value}, "
            f"{len(circuit.switches)} switches)")
    j0 = _junction0_ids(graph)
    b = _Builder(graph)
    for sw in circuit.switches:
        duty = sw.value
        j1s = b.node(BgNodeKind.Junction1s, label=sw.name)
        ctl = b.node(BgNodeKind.Sf, value=0.0, phase=sw.phase, frequency=circuit.frequency,
                     label=sw.name, control=True)
        b.edge(j1s, ctl, duty)
        b.edge(j1s, j0[sw.net_pos], duty)
        b.edge(j1s, j0[sw.net_neg], duty)
    return replace(graph, nodes=tuple(b.nodes), edges=tuple(b.edges))


VIRTUAL_SWITCH = "__virtual__"


def apply_dcm_virtual_switch(graph: BondGraph, inductor: str, d1: float, d2: float) -> BondGraph:
    """Bridge the inductor's terminal 0-junctions with a virtual switch of duty 1-d1-d2."""
    if graph.mode is not Mode.DCM:
        raise ModeRequiresSwitch(f"virtual switch only applies to DCM graphs, got {graph.mode.value}")
    if d1 < 0 or d2 < 0:
        raise DutyOverflow(f"duties must be non-negative, got d1={d1}, d2={d2}")
    if d1 + d2 > 1:
        raise DutyOverflow(f"d1 + d2 = {d1 + d2} exceeds 1")
    try:
        ind = graph.find(inductor, BgNodeKind.I)
    except KeyError:
        raise NoSuchInductor(f"no inductor named {inductor!r}") from None
    (j1,) = graph.neighbors(ind.id)
    terminals = [n for n in graph.neighbors(j1) if n != ind.id]
    d3 = 1.0 - (d1 + d2)
    b = _Builder(graph)
    vs = b.node(BgNodeKind.Junction1s, label=VIRTUAL_SWITCH)
    ctl = b.node(BgNodeKind.Sf, value=0.0, frequency=graph.frequency, label=VIRTUAL_SWITCH,
                 control=True)
    b.edge(vs, ctl, d3)
    for t in terminals:
        b.edge(vs, t, d3)
    return replace(graph, nodes=tuple(b.nodes), edges=tuple(b.edges))


def switch_duties(graph: BondGraph) -> dict[str, float]:
    """Duty of every switched junction, read off its control bond."""
    by_id = {n.id: n for n in graph.nodes}
    out = {}
    for e in graph.edges:
        na, nb = by_id[e.a], by_id[e.b]
        for j, other in ((na, nb), (nb, na)):
            if j.kind in SWITCHED and other.control:
                out[j.label] = e.weight
    return out


def to_dict(graph: BondGraph) -> dict:
    """JSON-ready representation (used by the ``convert`` command)."""
    return {
        "mode": graph.mode.value,
        "frequency": graph.frequency,
        "class_label": graph.class_label,
        "nodes": [
            {"id": n.id, "kind": n.kind.value, "label": n.label, "value": n.value,
             "phase": n.phase, "frequency": n.frequency, "control": n.control}
            for n in graph.nodes
        ],
        "edges": [[e.a, e.b, e.weight] for e in graph.edges],
    }


def summary(graph: BondGraph) -> str:
    counts: dict[str, int] = {}
    for n in graph.nodes:
        counts[n.kind.value] = counts.get(n.kind.value, 0) + 1
    kinds = ", ".join(f"{k}:{v}" for k, v in counts.items())
    lines = [f"bond graph: {len(graph.nodes)} nodes, {len(graph.edges)} edges, mode {graph.mode.value}",
             f"  kinds: {kinds}"]
    for e in graph.edges:
        na, nb = graph.nodes[e.a], graph.nodes[e.b]
        lines.append(f"  {e.a:3d} {na.kind.value:>2}({na.label}) -- {e.b:3d} {nb.kind.value:>2}({nb.label})"
                     f"  w={e.weight:g}")
    return "\n".join(lines)
