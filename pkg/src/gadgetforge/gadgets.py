"""Unbounded-state gadgets, systems of gadgets, and their step semantics.

A *counter gadget* holds a natural number and offers tunnels/switches whose
traversability depends on that number:

    Inc[a,b]     tunnel, always open; crossing adds some i in [a,b]
    DecNZ[c,d]   tunnel, open iff state >= c; crossing subtracts i in
                 [c, min(state, d)] (never goes negative, never free)
    Dec[a,b]     tunnel, always open; subtracts i in [a,b] saturating at 0
    PZ           tunnel, open iff state == 0; state unchanged
    PNZ          tunnel, open iff state >= 1; state unchanged
    JZ           switch: one entrance, zero-exit taken iff state == 0,
                 nonzero-exit otherwise; state unchanged
    JZDec        switch: zero-exit iff state == 0; otherwise nonzero-exit
                 and the state decrements by 1

A gadget *spec* is a named bundle of such components with named ports.
Using one port name in several components merges those locations (that is
how "combine the entrances" constructions are expressed).  Finite-state
gadget specs (explicit state/location/transition tables) are also supported
so that constructions like self-closing doors can be stated as targets.

A *system* instantiates specs, adds free-standing connection nodes, and
joins endpoints with undirected edges (free travel).  The agent's position
is the connectivity class of its endpoint; a move is a single component
traversal from a class containing the component's entrance to the class of
the chosen exit.  The agent is angelic: ``successors`` enumerates every
choice as a separate labeled transition.

Two state modes share all of this machinery:

- concrete: counter-gadget states are naturals;
- interval: states are (lo, hi) pairs meaning "every value in [lo, hi] is
  possible here".  Component rules are the exact possible-set transformers
  (e.g. DecNZ[c,d] applies iff hi >= c and maps to [max(lo-d,0), hi-c]).
  With [1,1] ranges intervals stay singletons, so the modes coincide.

Endpoint strings: ``node:NAME`` for a connection node, ``INSTANCE.PORT``
for a gadget port.  Instance ids must not contain dots.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import NamedTuple, Union

log = logging.getLogger(__name__)

__all__ = [
    "IncRange", "DecNZRange", "DecRange", "PZ", "PNZ", "JZSwitch", "JZDecSwitch",
    "ComponentKind", "Component", "CounterGadgetSpec", "FiniteGadgetSpec", "GadgetSpec",
    "GadgetInstance", "SystemOfGadgets", "SystemFormatError",
    "Configuration", "Traversal", "SystemIndex",
    "node_endpoint", "port_endpoint", "split_endpoint",
    "canonicalize", "successors", "initial_config",
    "serialize_system", "parse_system", "parse_spec", "to_dot",
    "spec_inc_dec_jz", "spec_inc_jzdec", "spec_inc_decnz", "spec_inc_decnz_pz",
    "spec_inc_decnz_pz_merged", "spec_inc_decnz_decnz", "spec_inc_ab",
    "spec_inc_ab_multi", "spec_sscd", "spec_two_tunnel", "catalog",
]


class SystemFormatError(ValueError):
    """Malformed spec/system description (construction or JSON)."""


# ---------------------------------------------------------------------------
# component kinds

Interval = tuple[int, int]


def _check_range(lo: int, hi: int) -> None:
    if not (1 <= lo <= hi):
        raise SystemFormatError(f"need 1 <= lo <= hi, got [{lo}, {hi}]")


@dataclass(frozen=True)
class IncRange:
    """Always-open tunnel adding a chosen amount in [lo, hi]."""

    lo: int
    hi: int
    exits = 1
    tag = "inc"

    def __post_init__(self) -> None:
        _check_range(self.lo, self.hi)

    def moves(self, s: int) -> list[tuple[int, int, int]]:
        return [(i, s + i, 0) for i in range(self.lo, self.hi + 1)]

    def interval_moves(self, iv: Interval) -> list[tuple[int, Interval, int]]:
        lo, hi = iv
        return [(0, (lo + self.lo, hi + self.hi), 0)]


@dataclass(frozen=True)
class DecNZRange:
    """Tunnel open iff state >= lo; subtracts a chosen amount in
    [lo, min(state, hi)] so the state never goes negative."""

    lo: int
    hi: int
    exits = 1
    tag = "decnz"

    def __post_init__(self) -> None:
        _check_range(self.lo, self.hi)

    def moves(self, s: int) -> list[tuple[int, int, int]]:
        if s < self.lo:
            return []
        return [(i, s - i, 0) for i in range(self.lo, min(s, self.hi) + 1)]

    def interval_moves(self, iv: Interval) -> list[tuple[int, Interval, int]]:
        lo, hi = iv
        if hi < self.lo:
            return []
        return [(0, (max(lo - self.hi, 0), hi - self.lo), 0)]


@dataclass(frozen=True)
class DecRange:
    """Always-open tunnel subtracting a chosen amount in [lo, hi],
    saturating at 0."""

    lo: int
    hi: int
    exits = 1
    tag = "dec"

    def __post_init__(self) -> None:
        _check_range(self.lo, self.hi)

    def moves(self, s: int) -> list[tuple[int, int, int]]:
        return [(i, max(s - i, 0), 0) for i in range(self.lo, self.hi + 1)]

    def interval_moves(self, iv: Interval) -> list[tuple[int, Interval, int]]:
        lo, hi = iv
        return [(0, (max(lo - self.hi, 0), max(hi - self.lo, 0)), 0)]


@dataclass(frozen=True)
class PZ:
    """Tunnel open iff state == 0."""

    exits = 1
    tag = "pz"

    def moves(self, s: int) -> list[tuple[int, int, int]]:
        return [(0, 0, 0)] if s == 0 else []

    def interval_moves(self, iv: Interval) -> list[tuple[int, Interval, int]]:
        return [(0, (0, 0), 0)] if iv[0] == 0 else []


@dataclass(frozen=True)
class PNZ:
    """Tunnel open iff state >= 1."""

    exits = 1
    tag = "pnz"

    def moves(self, s: int) -> list[tuple[int, int, int]]:
        return [(0, s, 0)] if s >= 1 else []

    def interval_moves(self, iv: Interval) -> list[tuple[int, Interval, int]]:
        lo, hi = iv
        return [(0, (max(lo, 1), hi), 0)] if hi >= 1 else []


@dataclass(frozen=True)
class JZSwitch:
    """One entrance, two exits: exit 0 iff state == 0, exit 1 otherwise.
    Behaviorally PZ and PNZ glued at the entrance."""

    exits = 2
    tag = "jz"

    def moves(self, s: int) -> list[tuple[int, int, int]]:
        return [(0, 0, 0)] if s == 0 else [(0, s, 1)]

    def interval_moves(self, iv: Interval) -> list[tuple[int, Interval, int]]:
        lo, hi = iv
        out = []
        if lo == 0:
            out.append((0, (0, 0), 0))
        if hi >= 1:
            out.append((1, (max(lo, 1), hi), 1))
        return out


@dataclass(frozen=True)
class JZDecSwitch:
    """Like JZ, but taking the nonzero exit decrements the state.
    Behaviorally PZ and DecNZ[1,1] glued at the entrance."""

    exits = 2
    tag = "jzdec"

    def moves(self, s: int) -> list[tuple[int, int, int]]:
        return [(0, 0, 0)] if s == 0 else [(0, s - 1, 1)]

    def interval_moves(self, iv: Interval) -> list[tuple[int, Interval, int]]:
        lo, hi = iv
        out = []
        if lo == 0:
            out.append((0, (0, 0), 0))
        if hi >= 1:
            out.append((1, (max(lo, 1) - 1, hi - 1), 1))
        return out


ComponentKind = Union[IncRange, DecNZRange, DecRange, PZ, PNZ, JZSwitch, JZDecSwitch]

_RANGED_TAGS = {"inc": IncRange, "decnz": DecNZRange, "dec": DecRange}
_PLAIN_TAGS = {"pz": PZ, "pnz": PNZ, "jz": JZSwitch, "jzdec": JZDecSwitch}


# ---------------------------------------------------------------------------
# specs

@dataclass(frozen=True)
class Component:
    """A kind with its port names.  Tunnels take exits=(out,); switches take
    exits=(zero_exit, nonzero_exit)."""

    kind: ComponentKind
    entry: str
    exit_ports: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.exit_ports) != self.kind.exits:
            raise SystemFormatError(
                f"{self.kind.tag} needs {self.kind.exits} exit port(s), "
                f"got {self.exit_ports!r}")


@dataclass(frozen=True)
class CounterGadgetSpec:
    """A named bundle of counter components over one shared natural state."""

    name: str
    components: tuple[Component, ...]

    @property
    def locations(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for comp in self.components:
            seen.setdefault(comp.entry)
            for p in comp.exit_ports:
                seen.setdefault(p)
        return tuple(seen)


@dataclass(frozen=True)
class FiniteGadgetSpec:
    """Explicit finite gadget: states, locations, and one-step traversals
    (state, entry-location) -> (state', exit-location)."""

    name: str
    states: tuple[str, ...]
    locations: tuple[str, ...]
    transitions: tuple[tuple[str, str, str, str], ...]

    def __post_init__(self) -> None:
        for (s, a, s2, b) in self.transitions:
            if s not in self.states or s2 not in self.states:
                raise SystemFormatError(f"{self.name}: unknown state in {(s, a, s2, b)}")
            if a not in self.locations or b not in self.locations:
                raise SystemFormatError(f"{self.name}: unknown location in {(s, a, s2, b)}")


GadgetSpec = Union[CounterGadgetSpec, FiniteGadgetSpec]


# ---------------------------------------------------------------------------
# systems

@dataclass(frozen=True)
class GadgetInstance:
    id: str
    spec: str
    initial: int | str


@dataclass(frozen=True)
class SystemOfGadgets:
    specs: tuple[GadgetSpec, ...]
    instances: tuple[GadgetInstance, ...]
    nodes: tuple[str, ...] = ()
    edges: tuple[tuple[str, str], ...] = ()
    start: str | None = None
    goal: str | None = None
    boundary: tuple[str, ...] = ()

    def spec_named(self, name: str) -> GadgetSpec:
        for s in self.specs:
            if s.name == name:
                return s
        raise SystemFormatError(f"no spec named {name!r}")


def node_endpoint(name: str) -> str:
    return f"node:{name}"


def port_endpoint(instance_id: str, port: str) -> str:
    return f"{instance_id}.{port}"


def split_endpoint(ep: str) -> tuple[str, str]:
    """-> ("node", name) or (instance_id, port)."""
    if ep.startswith("node:"):
        return ("node", ep[5:])
    inst, dot, port = ep.partition(".")
    if not dot or not inst or not port:
        raise SystemFormatError(f"bad endpoint {ep!r}")
    return (inst, port)


class Configuration(NamedTuple):
    """Agent position (connectivity-class id) + per-instance state vector."""

    position: int
    states: tuple


@dataclass(frozen=True)
class Traversal:
    """One component traversal: the label on a system transition."""

    instance: str
    entry: str
    exit: str
    choice: int
    before: int | str | Interval
    after: int | str | Interval


class _UnionFind:
    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def add(self, x: str) -> None:
        self.parent.setdefault(x, x)

    def find(self, x: str) -> str:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: str, b: str) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


class SystemIndex:
    """canonicalize() result: connectivity classes + fast successor lookup.

    Classes are numbered deterministically (sorted by their lexicographically
    least endpoint), and per-class component entrances are listed in
    (instance declaration order, component order) so successor enumeration
    is reproducible byte for byte.
    """

    def __init__(self, system: SystemOfGadgets) -> None:
        self.system = system
        _validate(system)
        uf = _UnionFind()
        for name in system.nodes:
            uf.add(node_endpoint(name))
        spec_of = {}
        for inst in system.instances:
            spec = system.spec_named(inst.spec)
            spec_of[inst.id] = spec
            locs = spec.locations
            for loc in locs:
                uf.add(port_endpoint(inst.id, loc))
        for (a, b) in system.edges:
            uf.union(a, b)

        members: dict[str, list[str]] = {}
        for ep in uf.parent:
            members.setdefault(uf.find(ep), []).append(ep)
        classes = sorted((sorted(eps) for eps in members.values()), key=lambda eps: eps[0])
        self.classes: list[tuple[str, ...]] = [tuple(eps) for eps in classes]
        self.class_of: dict[str, int] = {}
        for cid, eps in enumerate(self.classes):
            for ep in eps:
                self.class_of[ep] = cid

        # per-class entrance table: (instance index, component index) for
        # counter specs, (instance index, transition index) for finite ones
        self._spec_of = spec_of
        self.entries: dict[int, list[tuple[int, int]]] = {}
        for i, inst in enumerate(system.instances):
            spec = spec_of[inst.id]
            if isinstance(spec, CounterGadgetSpec):
                for ci, comp in enumerate(spec.components):
                    cid = self.class_of[port_endpoint(inst.id, comp.entry)]
                    self.entries.setdefault(cid, []).append((i, ci))
            else:
                for ti, (s, a, s2, b) in enumerate(spec.transitions):
                    cid = self.class_of[port_endpoint(inst.id, a)]
                    self.entries.setdefault(cid, []).append((i, ti))

        self.start_class = self.class_of[system.start] if system.start else None
        self.goal_class = self.class_of[system.goal] if system.goal else None
        self.boundary_classes: dict[int, str] = {}
        for ep in system.boundary:
            cid = self.class_of[ep]
            if cid in self.boundary_classes:
                raise SystemFormatError(
                    f"boundary endpoints {self.boundary_classes[cid]!r} and {ep!r} "
                    "fell into the same connectivity class")
            self.boundary_classes[cid] = ep

    def endpoint_class(self, ep: str) -> int:
        return self.class_of[ep]

    def initial_states(self, mode: str = "concrete") -> tuple:
        out = []
        for inst in self.system.instances:
            if mode == "interval" and isinstance(inst.initial, int):
                out.append((inst.initial, inst.initial))
            else:
                out.append(inst.initial)
        return tuple(out)

    def start_config(self, mode: str = "concrete") -> Configuration:
        if self.start_class is None:
            raise SystemFormatError("system has no start endpoint")
        return Configuration(self.start_class, self.initial_states(mode))

    def successors(self, config: Configuration, mode: str = "concrete"
                   ) -> list[tuple[Traversal, Configuration]]:
        system = self.system
        out: list[tuple[Traversal, Configuration]] = []
        for (i, key) in self.entries.get(config.position, ()):
            inst = system.instances[i]
            spec = self._spec_of[inst.id]
            state = config.states[i]
            if isinstance(spec, CounterGadgetSpec):
                comp = spec.components[key]
                moves = (comp.kind.interval_moves(state) if mode == "interval"
                         else comp.kind.moves(state))
                for (choice, s2, exit_idx) in moves:
                    port = comp.exit_ports[exit_idx]
                    q = self.class_of[port_endpoint(inst.id, port)]
                    states = config.states[:i] + (s2,) + config.states[i + 1:]
                    out.append((Traversal(inst.id, comp.entry, port, choice, state, s2),
                                Configuration(q, states)))
            else:
                (s, a, s2, b) = spec.transitions[key]
                if s == state:
                    q = self.class_of[port_endpoint(inst.id, b)]
                    states = config.states[:i] + (s2,) + config.states[i + 1:]
                    out.append((Traversal(inst.id, a, b, key, state, s2),
                                Configuration(q, states)))
        return out


def _validate(system: SystemOfGadgets) -> None:
    names = set()
    for spec in system.specs:
        if spec.name in names:
            raise SystemFormatError(f"duplicate spec name {spec.name!r}")
        names.add(spec.name)
    ids = set()
    for inst in system.instances:
        if "." in inst.id or not inst.id:
            raise SystemFormatError(f"bad instance id {inst.id!r} (no dots, nonempty)")
        if inst.id in ids:
            raise SystemFormatError(f"duplicate instance id {inst.id!r}")
        ids.add(inst.id)
        spec = system.spec_named(inst.spec)
        if isinstance(spec, CounterGadgetSpec):
            if not (isinstance(inst.initial, int) and inst.initial >= 0):
                raise SystemFormatError(
                    f"{inst.id}: counter gadget initial state must be a natural, "
                    f"got {inst.initial!r}")
        elif inst.initial not in spec.states:
            raise SystemFormatError(
                f"{inst.id}: {inst.initial!r} is not a state of {spec.name}")
    node_set = set(system.nodes)
    if len(node_set) != len(system.nodes):
        raise SystemFormatError("duplicate node name")
    if node_set & ids:
        raise SystemFormatError("node names and instance ids overlap")

    def check_ep(ep: str) -> None:
        kind, rest = split_endpoint(ep)
        if kind == "node":
            if rest not in node_set:
                raise SystemFormatError(f"unknown node in endpoint {ep!r}")
        else:
            if kind not in ids:
                raise SystemFormatError(f"unknown instance in endpoint {ep!r}")
            inst = next(i for i in system.instances if i.id == kind)
            if rest not in system.spec_named(inst.spec).locations:
                raise SystemFormatError(f"unknown port in endpoint {ep!r}")

    for (a, b) in system.edges:
        check_ep(a)
        check_ep(b)
    for ep in (system.start, system.goal):
        if ep is not None:
            check_ep(ep)
    for ep in system.boundary:
        check_ep(ep)


def canonicalize(system: SystemOfGadgets) -> SystemIndex:
    """Validate + compute connectivity classes and successor tables."""
    return SystemIndex(system)


def initial_config(system: SystemOfGadgets, mode: str = "concrete") -> Configuration:
    return canonicalize(system).start_config(mode)


def successors(system: SystemOfGadgets | SystemIndex, config: Configuration,
               mode: str = "concrete") -> list[tuple[Traversal, Configuration]]:
    """Convenience wrapper; build a SystemIndex once for bulk exploration."""
    index = system if isinstance(system, SystemIndex) else canonicalize(system)
    return index.successors(config, mode)


# ---------------------------------------------------------------------------
# JSON round trip

def _kind_to_json(kind: ComponentKind) -> dict:
    d: dict = {"kind": kind.tag}
    if isinstance(kind, (IncRange, DecNZRange, DecRange)):
        d["lo"] = kind.lo
        d["hi"] = kind.hi
    return d


def _kind_from_json(d: dict) -> ComponentKind:
    tag = d.get("kind")
    if tag in _RANGED_TAGS:
        try:
            return _RANGED_TAGS[tag](int(d["lo"]), int(d["hi"]))
        except KeyError as exc:
            raise SystemFormatError(f"{tag} component needs lo/hi") from exc
    if tag in _PLAIN_TAGS:
        return _PLAIN_TAGS[tag]()
    raise SystemFormatError(f"unknown component kind {tag!r}")


def _spec_to_json(spec: GadgetSpec) -> dict:
    if isinstance(spec, CounterGadgetSpec):
        return {
            "name": spec.name,
            "type": "counter",
            "components": [
                _kind_to_json(c.kind) | {"entry": c.entry, "exits": list(c.exit_ports)}
                for c in spec.components
            ],
        }
    return {
        "name": spec.name,
        "type": "finite",
        "states": list(spec.states),
        "locations": list(spec.locations),
        "transitions": [list(t) for t in spec.transitions],
    }


def _spec_from_json(d: dict) -> GadgetSpec:
    try:
        name = d["name"]
        if d["type"] == "counter":
            comps = tuple(
                Component(_kind_from_json(c), c["entry"], tuple(c["exits"]))
                for c in d["components"])
            return CounterGadgetSpec(name, comps)
        if d["type"] == "finite":
            return FiniteGadgetSpec(
                name,
                tuple(str(s) for s in d["states"]),
                tuple(d["locations"]),
                tuple((str(a), b, str(c), e) for (a, b, c, e) in d["transitions"]),
            )
    except (KeyError, TypeError, ValueError) as exc:
        raise SystemFormatError(f"bad spec entry: {exc}") from exc
    raise SystemFormatError(f"unknown spec type {d.get('type')!r}")


def serialize_system(system: SystemOfGadgets) -> str:
    """Deterministic JSON: equal systems serialize to identical bytes."""
    doc = {
        "specs": [_spec_to_json(s) for s in system.specs],
        "instances": [
            {"id": i.id, "spec": i.spec, "initial": i.initial}
            for i in system.instances
        ],
        "nodes": list(system.nodes),
        "edges": [list(e) for e in system.edges],
        "start": system.start,
        "goal": system.goal,
        "boundary": list(system.boundary),
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def parse_system(text: str) -> SystemOfGadgets:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SystemFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SystemFormatError("top level must be an object")
    try:
        system = SystemOfGadgets(
            specs=tuple(_spec_from_json(s) for s in doc.get("specs", [])),
            instances=tuple(
                GadgetInstance(i["id"], i["spec"], i["initial"])
                for i in doc.get("instances", [])),
            nodes=tuple(doc.get("nodes", [])),
            edges=tuple((a, b) for (a, b) in doc.get("edges", [])),
            start=doc.get("start"),
            goal=doc.get("goal"),
            boundary=tuple(doc.get("boundary", [])),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SystemFormatError):
            raise
        raise SystemFormatError(f"bad system document: {exc}") from exc
    _validate(system)
    return system


def parse_spec(doc: dict) -> GadgetSpec:
    """Parse one gadget spec from its JSON object form (the shape used in a
    system document's ``specs`` list)."""
    try:
        return _spec_from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SystemFormatError):
            raise
        raise SystemFormatError(f"bad spec document: {exc}") from exc


# ---------------------------------------------------------------------------
# DOT export

def _q(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(system: SystemOfGadgets) -> str:
    """Undirected DOT graph: one cluster per instance (a node per port),
    one box node per connection node, free-travel edges between them."""
    lines = ["graph system {", "  node [shape=circle, fontsize=10];"]
    for n, inst in enumerate(system.instances):
        spec = system.spec_named(inst.spec)
        lines.append(f"  subgraph cluster_{n} {{")
        lines.append(f"    label={_q(f'{inst.id} : {inst.spec} = {inst.initial}')};")
        for loc in spec.locations:
            ep = port_endpoint(inst.id, loc)
            lines.append(f"    {_q(ep)} [label={_q(loc)}];")
        lines.append("  }")
    for name in system.nodes:
        ep = node_endpoint(name)
        shape = "box"
        extra = ""
        if ep == system.goal:
            extra = ", peripheries=2"
        lines.append(f"  {_q(ep)} [shape={shape}, label={_q(name)}{extra}];")
    for (a, b) in system.edges:
        lines.append(f"  {_q(a)} -- {_q(b)};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# standard specs

def spec_inc_dec_jz() -> CounterGadgetSpec:
    """Inc[1,1] + Dec[1,1] (saturating) + JZ switch, separate entrances."""
    return CounterGadgetSpec("inc-dec-jz", (
        Component(IncRange(1, 1), "inc_in", ("inc_out",)),
        Component(DecRange(1, 1), "dec_in", ("dec_out",)),
        Component(JZSwitch(), "jz_in", ("jz_out_zero", "jz_out_nonzero")),
    ))


def spec_inc_jzdec() -> CounterGadgetSpec:
    """Inc[1,1] + JZDec switch (decrement folded into the nonzero branch)."""
    return CounterGadgetSpec("inc-jzdec", (
        Component(IncRange(1, 1), "inc_in", ("inc_out",)),
        Component(JZDecSwitch(), "jz_in", ("jz_out_zero", "jz_out_nonzero")),
    ))


def spec_inc_decnz() -> CounterGadgetSpec:
    """Inc[1,1] + DecNZ[1,1]: decrement refuses to cross at zero."""
    return CounterGadgetSpec("inc-decnz", (
        Component(IncRange(1, 1), "inc_in", ("inc_out",)),
        Component(DecNZRange(1, 1), "dec_in", ("dec_out",)),
    ))


def spec_inc_decnz_pz() -> CounterGadgetSpec:
    """Inc[1,1] + DecNZ[1,1] + PZ, all with their own entrances."""
    return CounterGadgetSpec("inc-decnz-pz", (
        Component(IncRange(1, 1), "inc_in", ("inc_out",)),
        Component(DecNZRange(1, 1), "dec_in", ("dec_out",)),
        Component(PZ(), "pz_in", ("pz_out",)),
    ))


def spec_inc_decnz_pz_merged() -> CounterGadgetSpec:
    """Inc + DecNZ + PZ with the DecNZ and PZ entrances merged.  Port names
    deliberately match spec_inc_jzdec(): the shared entrance behaves exactly
    like the JZDec switch entrance (zero goes out the PZ side, nonzero out
    the DecNZ side), so the two specs are drop-in substitutes."""
    return CounterGadgetSpec("inc-decnz-pz-merged", (
        Component(IncRange(1, 1), "inc_in", ("inc_out",)),
        Component(DecNZRange(1, 1), "jz_in", ("jz_out_nonzero",)),
        Component(PZ(), "jz_in", ("jz_out_zero",)),
    ))


def spec_inc_decnz_decnz() -> CounterGadgetSpec:
    """Inc[1,1] + two DecNZ[1,1] tunnels: the "flow" gadget that sequences
    instruction execution in the machine reduction."""
    return CounterGadgetSpec("inc-decnz-decnz", (
        Component(IncRange(1, 1), "inc_in", ("inc_out",)),
        Component(DecNZRange(1, 1), "d0_in", ("d0_out",)),
        Component(DecNZRange(1, 1), "d1_in", ("d1_out",)),
    ))


def spec_inc_ab(a: int, b: int, c: int, d: int) -> CounterGadgetSpec:
    """Inc[a,b] + DecNZ[c,d] + PZ with separate entrances."""
    return CounterGadgetSpec(f"inc[{a},{b}]-decnz[{c},{d}]-pz", (
        Component(IncRange(a, b), "inc_in", ("inc_out",)),
        Component(DecNZRange(c, d), "dec_in", ("dec_out",)),
        Component(PZ(), "pz_in", ("pz_out",)),
    ))


def spec_inc_ab_multi(a: int, b: int, c: int, d: int,
                      n_inc: int, n_dec: int) -> CounterGadgetSpec:
    """Like spec_inc_ab but with n_inc Inc tunnels (ports inc0_in...) and
    n_dec DecNZ tunnels (dec0_in...), all over the one shared counter."""
    comps = [Component(IncRange(a, b), f"inc{k}_in", (f"inc{k}_out",))
             for k in range(n_inc)]
    comps += [Component(DecNZRange(c, d), f"dec{k}_in", (f"dec{k}_out",))
              for k in range(n_dec)]
    comps.append(Component(PZ(), "pz_in", ("pz_out",)))
    return CounterGadgetSpec(
        f"inc[{a},{b}]x{n_inc}-decnz[{c},{d}]x{n_dec}-pz", tuple(comps))


def spec_sscd() -> FiniteGadgetSpec:
    """Symmetric self-closing door: crossing L1->R1 closes tunnel 1 and
    opens tunnel 2, and vice versa."""
    return FiniteGadgetSpec(
        "sscd",
        states=("1", "2"),
        locations=("L1", "R1", "L2", "R2"),
        transitions=(("1", "L1", "2", "R1"), ("2", "L2", "1", "R2")),
    )


def spec_two_tunnel() -> FiniteGadgetSpec:
    """Two always-open independent tunnels, no state change; the contract a
    tunnel duplicator has to meet."""
    return FiniteGadgetSpec(
        "two-tunnel",
        states=("idle",),
        locations=("In0", "Out0", "In1", "Out1"),
        transitions=(("idle", "In0", "idle", "Out0"),
                     ("idle", "In1", "idle", "Out1")),
    )


def catalog() -> dict[str, GadgetSpec]:
    """The fixed named specs (parameterized families excluded)."""
    specs = [
        spec_inc_dec_jz(), spec_inc_jzdec(), spec_inc_decnz(),
        spec_inc_decnz_pz(), spec_inc_decnz_pz_merged(),
        spec_inc_decnz_decnz(), spec_sscd(), spec_two_tunnel(),
    ]
    return {s.name: s for s in specs}
