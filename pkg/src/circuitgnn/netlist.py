"""
Minimal SPICE-like netlist parser and circuit data model.

Grammar (one statement per line, ``*`` starts a comment)::

    <Name> <net+> <net-> <value>     Name starts with V, I, R, L, C or S
    .freq <hz>
    .mode CONT|CCM|DCM
    .duty <switch> <d>               d in [0, 1]
    .phase <switch> <radians>

Switch lines carry the duty ratio as their value. Values accept the usual
SPICE engineering suffixes (``10k``, ``4.7u``, ``1meg``...).
"""

from __future__ import annotations

import enum
import re
from collections import deque
from dataclasses import dataclass

from .errors import DuplicateName, NetlistSyntaxError, UnknownKindPrefix

GROUND = "0"


class ElementKind(enum.Enum):
    VoltageSource = "V"
    CurrentSource = "I"
    Resistor = "R"
    Inductor = "L"
    Capacitor = "C"
    Switch = "S"


class Mode(enum.Enum):
    Continuous = "CONT"
    CCM = "CCM"
    DCM = "DCM"


SOURCE_KINDS = (ElementKind.VoltageSource, ElementKind.CurrentSource)


@dataclass(frozen=True)
class Element:
    name: str
    kind: ElementKind
    net_pos: str
    net_neg: str
    value: float
    phase: float = 0.0


@dataclass(frozen=True)
class Circuit:
    elements: tuple[Element, ...]
    nets: frozenset[str]
    frequency: float = 1.0
    mode: Mode = Mode.Continuous
    class_label: int | None = None

    def element(self, name: str) -> Element:
        for e in self.elements:
            if e.name == name:
                return e
        raise KeyError(name)

    def of_kind(self, kind: ElementKind) -> list[Element]:
        return [e for e in self.elements if e.kind is kind]

    @property
    def switches(self) -> list[Element]:
        return self.of_kind(ElementKind.Switch)


@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    element: str | None = None


# ---------------------------------------------------------------------------
# value parsing

_SUFFIXES = {
    "t": 1e12, "g": 1e9, "meg": 1e6, "k": 1e3, "m": 1e-3, "mil": 25.4e-6,
    "u": 1e-6, "µ": 1e-6, "n": 1e-9, "p": 1e-12, "f": 1e-15,
}
_VALUE_RE = re.compile(
    r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(meg|mil|[tgkmuµnpf])?[a-z]*$",
    re.IGNORECASE,
)


def parse_value(token: str) -> float:
    """Parse a number with an optional SPICE suffix; raises ValueError."""
    m = _VALUE_RE.match(token.strip())
    if not m:
        raise ValueError(f"not a number: {token!r}")
    number = float(m.group(1))
    suffix = m.group(2)
    if suffix:
        number *= _SUFFIXES[suffix.lower()]
    return number


# ---------------------------------------------------------------------------
# parsing

_KINDS = {k.value: k for k in ElementKind}


def parse_netlist(text: str) -> Circuit:
    """Parse netlist text into a :class:`Circuit`.

    Directives are applied after all element lines are read, so they may
    appear anywhere. The result is not validated; call :func:`validate`.
    """
    elements: list[Element] = []
    names: set[str] = set()
    frequency = 1.0
    mode = Mode.Continuous
    duties: list[tuple[int, str, float]] = []
    phases: list[tuple[int, str, float]] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line or line.startswith("*"):
            continue
        tokens = line.split()
        if tokens[0].startswith("."):
            directive = tokens[0].lower()
            args = tokens[1:]
            if directive == ".freq":
                _expect_args(lineno, directive, args, 1)
                frequency = _number(lineno, args[0])
                if frequency <= 0:
                    raise NetlistSyntaxError(lineno, "frequency must be positive")
            elif directive == ".mode":
                _expect_args(lineno, directive, args, 1)
                try:
                    mode = Mode(args[0].upper())
                except ValueError:
                    raise NetlistSyntaxError(lineno, f"unknown mode {args[0]!r}") from None
            elif directive == ".duty":
                _expect_args(lineno, directive, args, 2)
                duties.append((lineno, args[0], _number(lineno, args[1])))
            elif directive == ".phase":
                _expect_args(lineno, directive, args, 2)
                phases.append((lineno, args[0], _number(lineno, args[1])))
            else:
                raise NetlistSyntaxError(lineno, f"unknown directive {tokens[0]!r}")
            continue

        name = tokens[0]
        kind = _KINDS.get(name[0].upper())
        if kind is None:
            raise UnknownKindPrefix(lineno, f"unknown element prefix {name[0]!r} in {name!r}")
        if len(tokens) != 4:
            raise NetlistSyntaxError(lineno, f"expected '<name> <net+> <net-> <value>', got {len(tokens)} fields")
        if name in names:
            raise DuplicateName(lineno, f"duplicate element name {name!r}")
        names.add(name)
        elements.append(Element(name, kind, tokens[1], tokens[2], _number(lineno, tokens[3])))

    by_name = {e.name: i for i, e in enumerate(elements)}

    def _switch_index(lineno: int, name: str) -> int:
        idx = by_name.get(name)
        if idx is None or elements[idx].kind is not ElementKind.Switch:
            raise NetlistSyntaxError(lineno, f"{name!r} is not a switch")
        return idx

    for lineno, name, duty in duties:
        i = _switch_index(lineno, name)
        elements[i] = Element(name, elements[i].kind, elements[i].net_pos, elements[i].net_neg,
                              duty, elements[i].phase)
    for lineno, name, phase in phases:
        i = _switch_index(lineno, name)
        e = elements[i]
        elements[i] = Element(e.name, e.kind, e.net_pos, e.net_neg, e.value, phase)

    nets = frozenset(n for e in elements for n in (e.net_pos, e.net_neg))
    return Circuit(tuple(elements), nets, frequency, mode)


def _expect_args(lineno: int, directive: str, args: list[str], n: int) -> None:
    if len(args) != n:
        raise NetlistSyntaxError(lineno, f"{directive} takes {n} argument(s), got {len(args)}")


def _number(lineno: int, token: str) -> float:
    try:
        return parse_value(token)
    except ValueError as exc:
        raise NetlistSyntaxError(lineno, str(exc)) from None


def render(circuit: Circuit) -> str:
    """Canonical text form; ``parse_netlist(render(c)) == c`` for valid circuits."""
    lines = [f"{e.name} {e.net_pos} {e.net_neg} {e.value!r}" for e in circuit.elements]
    lines.append(f".freq {circuit.frequency!r}")
    lines.append(f".mode {circuit.mode.value}")
    for e in circuit.elements:
        if e.kind is ElementKind.Switch and e.phase != 0.0:
            lines.append(f".phase {e.name} {e.phase!r}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# validation

def validate(circuit: Circuit) -> list[Violation]:
    """Return every invariant violation of ``circuit`` (empty when valid)."""
    out: list[Violation] = []
    referenced = {n for e in circuit.elements for n in (e.net_pos, e.net_neg)}

    if GROUND not in circuit.nets:
        out.append(Violation("MissingGround", "ground net '0' is not present"))
    for n in sorted(referenced - circuit.nets):
        out.append(Violation("UnknownNet", f"net {n!r} is referenced but not declared"))
    if not any(e.kind in SOURCE_KINDS for e in circuit.elements):
        out.append(Violation("MissingSource", "circuit has no voltage or current source"))

    for e in circuit.elements:
        if e.net_pos == e.net_neg:
            out.append(Violation("SelfLoop", f"{e.name} connects net {e.net_pos!r} to itself", e.name))
        if e.kind is ElementKind.Switch:
            if not 0.0 <= e.value <= 1.0:
                out.append(Violation("DutyOutOfRange", f"{e.name} duty {e.value} not in [0, 1]", e.name))
        elif not e.value > 0:
            out.append(Violation("NonPositiveValue", f"{e.name} value {e.value} must be > 0", e.name))

    n_switch = len(circuit.switches)
    if circuit.mode in (Mode.CCM, Mode.DCM) and n_switch == 0:
        out.append(Violation("ModeRequiresSwitch", f"mode {circuit.mode.value} needs at least one switch"))
    if circuit.mode is Mode.Continuous and n_switch > 0:
        out.append(Violation("SwitchRequiresMode", "switches present but mode is CONT"))
    if not circuit.frequency > 0:
        out.append(Violation("NonPositiveFrequency", f"frequency {circuit.frequency} must be > 0"))

    if GROUND in circuit.nets:
        unreached = circuit.nets - _reachable(circuit, GROUND)
        if unreached:
            out.append(Violation("Disconnected", f"nets not reachable from ground: {sorted(unreached)}"))
    return out


def _reachable(circuit: Circuit, start: str) -> set[str]:
    adj: dict[str, set[str]] = {n: set() for n in circuit.nets}
    for e in circuit.elements:
        adj.setdefault(e.net_pos, set()).add(e.net_neg)
        adj.setdefault(e.net_neg, set()).add(e.net_pos)
    seen = {start}
    queue = deque([start])
    while queue:
        for m in adj[queue.popleft()]:
            if m not in seen:
                seen.add(m)
                queue.append(m)
    return seen


def net_sort_key(net: str) -> tuple[int, int, str]:
    """Numeric nets first in numeric order, then named nets alphabetically."""
    return (0, int(net), net) if net.isdigit() else (1, 0, net)
