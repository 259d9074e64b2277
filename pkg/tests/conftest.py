"""Shared strategies and helpers."""

from __future__ import annotations

import numpy as np
from hypothesis import strategies as st

from circuitgnn.netlist import Circuit, Element, ElementKind, GROUND

PASSIVE = (ElementKind.Resistor, ElementKind.Inductor, ElementKind.Capacitor)


@st.composite
def continuous_circuits(draw, max_nets: int = 5, max_extra: int = 5) -> Circuit:
    """Random valid continuous circuits: a spanning chain plus extra branches."""
    n_nets = draw(st.integers(1, max_nets))
    nets = [GROUND] + [str(i) for i in range(1, n_nets + 1)]
    values = st.floats(1e-9, 1e3, allow_nan=False, allow_infinity=False)
    elements = []
    src = draw(st.sampled_from((ElementKind.VoltageSource, ElementKind.CurrentSource)))
    elements.append(Element(f"{src.value}1", src, nets[1], GROUND, draw(values)))
    counter = {k: 0 for k in ElementKind}
    counter[src] = 1

    def add(kind, a, b):
        counter[kind] += 1
        elements.append(Element(f"{kind.value}{counter[kind]}", kind, a, b, draw(values)))

    # chain keeps every net reachable from ground
    for i in range(2, n_nets + 1):
        add(draw(st.sampled_from(PASSIVE)), nets[i - 1], nets[i])
    for _ in range(draw(st.integers(0, max_extra))):
        a, b = draw(st.lists(st.sampled_from(nets), min_size=2, max_size=2, unique=True))
        add(draw(st.sampled_from(PASSIVE)), a, b)
    return Circuit(tuple(elements), frozenset(nets))


def random_sample(rng: np.random.Generator, n: int, d: int, density: float = 0.4):
    from circuitgnn.featurize import GraphSample

    x = rng.normal(size=(n, d))
    a = np.triu((rng.random((n, n)) < density) * rng.random((n, n)), k=1)
    a = a + a.T
    return GraphSample(x, a, int(rng.integers(0, 3)))


# ---------------------------------------------------------------------------
# acceptance reporting: one line per criterion in the terminal summary

_CRITERIA: list[str] = []


def record_criterion(name: str, passed: bool, detail: str) -> None:
    _CRITERIA.append(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    print(_CRITERIA[-1])


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
