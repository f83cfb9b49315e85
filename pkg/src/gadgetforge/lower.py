"""Lowering passes: counter machines down to systems of weaker gadgets.

The passes compose, and every pass emits a LoweringArtifact: the wired
system plus the bookkeeping needed to audit it (which instance plays which
role, how an abstract state maps onto gadget states, and which construction
with which parameters produced it).

The chain, top to bottom:

  machine program          compile_machine_to_incdecjz: one Inc-Dec-JZ
                           gadget per counter, one flow gadget per
                           instruction, goal node reachable iff some HALT
                           executes
  inc-dec-jz               sim_incdecjz_via_incjzdec: five Inc-JZDec
                           gadgets replace one Inc-Dec-JZ gadget
  inc-jzdec                sim_incjzdec_via_incdecnzpz: merging the DecNZ
                           and PZ entrances of one Inc-DecNZ-PZ gadget is
                           already a JZDec switch
  inc-decnz-pz             sim_incdecnzpz_via_incab: two Inc[a,b]-
                           DecNZ[c,d]-PZ gadgets, tunnels chained so each
                           abstract step moves a fixed product of the range
                           parameters; verified in interval semantics
  (tunnel duplication)     build_edge_duplicator: two wrapper gadgets give
                           two interchangeable copies of one tunnel

plus build_sscd_from_incdecnz (a symmetric self-closing door from two
Inc-DecNZ gadgets) and emit_initializer (machine code that builds large
counter values in logarithmically many instructions, for talking about
succinct inputs).

Substitution is name-based: an artifact that simulates spec S names its
boundary nodes exactly after S's locations, so splicing it in place of an
S-instance is purely mechanical (``substitute``).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field

from .gadgets import (
    CounterGadgetSpec,
    FiniteGadgetSpec,
    GadgetInstance,
    GadgetSpec,
    SystemFormatError,
    SystemOfGadgets,
    node_endpoint,
    port_endpoint,
    spec_inc_ab,
    spec_inc_ab_multi,
    spec_inc_dec_jz,
    spec_inc_decnz,
    spec_inc_decnz_decnz,
    spec_inc_decnz_pz_merged,
    spec_inc_jzdec,
    spec_sscd,
    spec_two_tunnel,
)
from .machine import Dec, Fragment, Halt, Inc, Jz, Program

log = logging.getLogger(__name__)

__all__ = [
    "Encoding", "LoweringArtifact", "substitute",
    "compile_machine_to_incdecjz", "build_inc_decnz_decnz",
    "sim_incdecjz_via_incjzdec", "sim_incjzdec_via_incdecnzpz",
    "build_sscd_from_incdecnz", "build_edge_duplicator",
    "sim_incdecnzpz_via_incab", "emit_initializer", "pipeline",
    "export_artifact", "PIPELINE_TARGETS",
]


@dataclass(frozen=True)
class Encoding:
    """Maps an abstract (spec gadget or counter) state to the at-rest state
    vector of an implementation system, aligned with its instance order.

    kinds:
      affine            state_for(q) = (scale*q + offset per instance)
      table             explicit map, for finite state sets
      interval-affine   interval mode gets ((ls*q+lo, hs*q+ho) per
                        instance); concrete mode gets the canonical
                        representative from ``concrete``
    """

    kind: str
    affine: tuple[tuple[int, int], ...] | None = None
    table: tuple[tuple[int | str, tuple], ...] | None = None
    iaffine: tuple[tuple[tuple[int, int], tuple[int, int]], ...] | None = None
    concrete: tuple[tuple[int, int], ...] | None = None

    def state_for(self, q, mode: str = "concrete") -> tuple:
        if self.kind == "affine":
            return tuple(s * q + o for (s, o) in self.affine)
        if self.kind == "table":
            for key, vec in self.table:
                if key == q:
                    return tuple(vec)
            raise KeyError(f"no encoding for state {q!r}")
        if self.kind == "interval-affine":
            if mode == "interval":
                return tuple(((ls * q + lo), (hs * q + ho))
                             for ((ls, lo), (hs, ho)) in self.iaffine)
            return tuple(s * q + o for (s, o) in self.concrete)
        raise SystemFormatError(f"unknown encoding kind {self.kind!r}")

    def to_json(self) -> dict:
        if self.kind == "affine":
            return {"kind": "affine", "per_instance": [list(p) for p in self.affine]}
        if self.kind == "table":
            return {"kind": "table",
                    "map": [[k, list(v)] for k, v in self.table]}
        return {"kind": "interval-affine",
                "per_instance": [[list(l), list(h)] for (l, h) in self.iaffine],
                "concrete": [list(p) for p in self.concrete]}

    @staticmethod
    def from_json(doc: dict) -> "Encoding":
        try:
            kind = doc["kind"]
            if kind == "affine":
                return Encoding("affine", affine=tuple(
                    (int(s), int(o)) for (s, o) in doc["per_instance"]))
            if kind == "table":
                return Encoding("table", table=tuple(
                    (k, tuple(v)) for (k, v) in doc["map"]))
            if kind == "interval-affine":
                return Encoding(
                    "interval-affine",
                    iaffine=tuple(((int(a), int(b)), (int(c), int(d)))
                                  for ((a, b), (c, d)) in doc["per_instance"]),
                    concrete=tuple((int(s), int(o)) for (s, o) in doc["concrete"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SystemFormatError(f"bad encoding document: {exc}") from exc
        raise SystemFormatError(f"unknown encoding kind {doc.get('kind')!r}")


@dataclass
class LoweringArtifact:
    """A lowered system plus its audit trail."""

    system: SystemOfGadgets
    roles: dict[str, str] = field(default_factory=dict)
    encoding: Encoding | None = None
    provenance: dict = field(default_factory=dict)

    def suggested_mode(self) -> str:
        return "interval" if (self.encoding is not None
                              and self.encoding.kind == "interval-affine") else "concrete"


def _node(name: str) -> str:
    return node_endpoint(name)


def _dedupe_specs(specs) -> tuple[GadgetSpec, ...]:
    out: list[GadgetSpec] = []
    seen: dict[str, GadgetSpec] = {}
    for s in specs:
        if s.name in seen:
            if seen[s.name] != s:
                raise SystemFormatError(
                    f"conflicting definitions for spec {s.name!r}")
            continue
        seen[s.name] = s
        out.append(s)
    return tuple(out)


# ---------------------------------------------------------------------------
# flow gadget: Inc-DecNZ-DecNZ out of three Inc-Dec-JZ

def build_inc_decnz_decnz() -> LoweringArtifact:
    """One Inc[1,1]-DecNZ[1,1]-DecNZ[1,1] gadget built from three Inc-Dec-JZ
    gadgets.  The held value lives in ``top``.  Each DecNZ tunnel is entered
    by depositing a token in its own guard counter (mid/bot); the guard's JZ
    forces the token back out through the matching exit, and top's JZ blocks
    the crossing entirely at zero, which is exactly DecNZ's refusal."""
    idj = spec_inc_dec_jz()
    ids = ("top", "mid", "bot")
    ports = ("inc_in", "inc_out", "d0_in", "d0_out", "d1_in", "d1_out")
    edges = (
        (_node("inc_in"), port_endpoint("top", "inc_in")),
        (port_endpoint("top", "inc_out"), _node("inc_out")),
        (_node("d0_in"), port_endpoint("mid", "inc_in")),
        (port_endpoint("mid", "inc_out"), port_endpoint("top", "jz_in")),
        (_node("d1_in"), port_endpoint("bot", "inc_in")),
        (port_endpoint("bot", "inc_out"), port_endpoint("top", "jz_in")),
        (port_endpoint("top", "jz_out_nonzero"), port_endpoint("top", "dec_in")),
        (port_endpoint("top", "dec_out"), port_endpoint("mid", "jz_in")),
        (port_endpoint("top", "dec_out"), port_endpoint("bot", "jz_in")),
        (port_endpoint("mid", "jz_out_nonzero"), port_endpoint("mid", "dec_in")),
        (port_endpoint("mid", "dec_out"), _node("d0_out")),
        (port_endpoint("bot", "jz_out_nonzero"), port_endpoint("bot", "dec_in")),
        (port_endpoint("bot", "dec_out"), _node("d1_out")),
    )
    system = SystemOfGadgets(
        specs=(idj,),
        instances=tuple(GadgetInstance(i, idj.name, 0) for i in ids),
        nodes=ports,
        edges=edges,
        boundary=tuple(_node(p) for p in ports),
    )
    return LoweringArtifact(
        system,
        roles={"top": "value", "mid": "d0-return-guard", "bot": "d1-return-guard"},
        encoding=Encoding("affine", affine=((1, 0), (0, 0), (0, 0))),
        provenance={"construction": "flow-from-inc-dec-jz",
                    "simulates": spec_inc_decnz_decnz().name},
    )


# ---------------------------------------------------------------------------
# Inc-Dec-JZ out of five Inc-JZDec

def sim_incdecjz_via_incjzdec() -> LoweringArtifact:
    """One Inc-Dec-JZ gadget from five Inc-JZDec gadgets.

    g0 and g1 hold the value twice, in lockstep.  Saturating Dec tests g0
    (its JZDec zero exit doubles as the free pass at 0); the real decrement
    then happens on g1, with h2 escorting the agent so it cannot leave
    early.  JZ bumps h0 (a one-way turnstile that hides the test's entrance
    from the outside), tests g1, and on the nonzero branch h1 escorts the
    agent while g1 is restored via its Inc.  h0 only ever grows; h1 and h2
    always return to 0 between visits."""
    spec = spec_inc_jzdec()
    ports = ("inc_in", "inc_out", "dec_in", "dec_out",
             "jz_in", "jz_out_zero", "jz_out_nonzero")
    ids = ("g0", "g1", "h0", "h1", "h2")
    p = port_endpoint
    edges = (
        (_node("inc_in"), p("g0", "inc_in")),
        (p("g0", "inc_out"), p("g1", "inc_in")),
        (p("h1", "inc_out"), p("g1", "inc_in")),
        (p("g1", "inc_out"), p("h1", "jz_in")),
        (p("h1", "jz_out_zero"), _node("inc_out")),
        (p("h1", "jz_out_nonzero"), _node("jz_out_nonzero")),
        (_node("dec_in"), p("g0", "jz_in")),
        (p("g0", "jz_out_zero"), _node("dec_out")),
        (p("h2", "jz_out_nonzero"), _node("dec_out")),
        (p("g0", "jz_out_nonzero"), p("h2", "inc_in")),
        (p("h2", "inc_out"), p("g1", "jz_in")),
        (p("h0", "inc_out"), p("g1", "jz_in")),
        (_node("jz_in"), p("h0", "inc_in")),
        (p("g1", "jz_out_zero"), _node("jz_out_zero")),
        (p("g1", "jz_out_nonzero"), p("h2", "jz_in")),
        (p("h2", "jz_out_zero"), p("h1", "inc_in")),
    )
    system = SystemOfGadgets(
        specs=(spec,),
        instances=tuple(GadgetInstance(i, spec.name, 0) for i in ids),
        nodes=ports,
        edges=edges,
        boundary=tuple(_node(q) for q in ports),
    )
    return LoweringArtifact(
        system,
        roles={"g0": "value-copy-0", "g1": "value-copy-1",
               "h0": "jz-entry-turnstile", "h1": "restore-escort",
               "h2": "decrement-escort"},
        encoding=Encoding("affine",
                          affine=((1, 0), (1, 0), (0, 0), (0, 0), (0, 0))),
        provenance={"construction": "inc-dec-jz-from-inc-jzdec",
                    "simulates": spec_inc_dec_jz().name},
    )


# ---------------------------------------------------------------------------
# Inc-JZDec out of Inc-DecNZ-PZ with merged entrances

def sim_incjzdec_via_incdecnzpz() -> LoweringArtifact:
    """Routing DecNZ and PZ through one shared entrance *is* the JZDec
    switch: at 0 only the PZ side is open, at >=1 only the DecNZ side."""
    spec = spec_inc_decnz_pz_merged()
    ports = ("inc_in", "inc_out", "jz_in", "jz_out_zero", "jz_out_nonzero")
    system = SystemOfGadgets(
        specs=(spec,),
        instances=(GadgetInstance("g", spec.name, 0),),
        nodes=ports,
        edges=tuple((_node(q), port_endpoint("g", q)) for q in ports),
        boundary=tuple(_node(q) for q in ports),
    )
    return LoweringArtifact(
        system,
        roles={"g": "counter"},
        encoding=Encoding("affine", affine=((1, 0),)),
        provenance={"construction": "jzdec-from-merged-entrances",
                    "simulates": spec_inc_jzdec().name},
    )


# ---------------------------------------------------------------------------
# symmetric self-closing door out of two Inc-DecNZ

def build_sscd_from_incdecnz() -> LoweringArtifact:
    """Crossing tunnel 1 drains latch a (one-shot: DecNZ refuses at 0) and
    arms latch b, which is what opens tunnel 2, and symmetrically."""
    spec = spec_inc_decnz()
    p = port_endpoint
    system = SystemOfGadgets(
        specs=(spec,),
        instances=(GadgetInstance("a", spec.name, 1),
                   GadgetInstance("b", spec.name, 0)),
        nodes=("L1", "R1", "L2", "R2"),
        edges=(
            (_node("L1"), p("a", "dec_in")),
            (p("a", "dec_out"), p("b", "inc_in")),
            (p("b", "inc_out"), _node("R1")),
            (_node("L2"), p("b", "dec_in")),
            (p("b", "dec_out"), p("a", "inc_in")),
            (p("a", "inc_out"), _node("R2")),
        ),
        boundary=(_node("L1"), _node("R1"), _node("L2"), _node("R2")),
    )
    return LoweringArtifact(
        system,
        roles={"a": "door-1-latch", "b": "door-2-latch"},
        encoding=Encoding("table", table=(("1", (1, 0)), ("2", (0, 1)))),
        provenance={"construction": "sscd-from-inc-decnz",
                    "simulates": spec_sscd().name},
    )


# ---------------------------------------------------------------------------
# tunnel duplication

def _duplicator_edges(prefix: str, w0: str, w1: str,
                      shared_entry: str | None,
                      shared_exit: str | None) -> tuple[list, list]:
    """Nodes and edges for one duplicator stage.  The duplicated tunnel is
    spliced between nodes E0 and E1; pass its endpoints to wire it in, or
    None to leave the splice points open."""
    n = lambda x: f"{prefix}{x}"  # noqa: E731
    p = port_endpoint
    nodes = [n("In0"), n("Out0"), n("In1"), n("Out1"), n("E0"), n("E1")]
    edges = [
        (_node(n("In0")), p(w0, "inc_in")),
        (p(w0, "inc_out"), _node(n("E0"))),
        (_node(n("In1")), p(w1, "inc_in")),
        (p(w1, "inc_out"), _node(n("E0"))),
        (_node(n("E1")), p(w0, "dec_in")),
        (_node(n("E1")), p(w1, "dec_in")),
        (p(w0, "dec_out"), p(w0, "pz_in")),
        (p(w0, "pz_out"), _node(n("Out0"))),
        (p(w1, "dec_out"), p(w1, "pz_in")),
        (p(w1, "pz_out"), _node(n("Out1"))),
    ]
    if shared_entry is not None:
        edges.append((_node(n("E0")), shared_entry))
    if shared_exit is not None:
        edges.append((shared_exit, _node(n("E1"))))
    return nodes, edges


def _require_overlap(a: int, b: int, c: int, d: int) -> None:
    if max(a, c) > min(b, d):
        raise SystemFormatError(
            f"tunnel duplication needs [a,b] and [c,d] to overlap "
            f"(the wrapper must draw an amount it can pay back exactly); "
            f"got [{a},{b}] and [{c},{d}]")


def build_edge_duplicator(a: int, b: int, c: int, d: int) -> LoweringArtifact:
    """Two interchangeable copies of one tunnel, from two Inc[a,b]-
    DecNZ[c,d]-PZ wrapper gadgets.

    The tunnel to duplicate gets spliced between nodes E0 and E1 (entry
    side E0).  Interface i is Ini -> Outi: the wrapper draws an amount s in
    [a,b] n [c,d], the agent crosses the shared tunnel once, pays s back
    exactly (anything else strands it before the PZ), and leaves.  The idle
    wrapper's DecNZ is shut at 0, so there is no cross talk; with the shared
    tunnel blocked the agent strands at E0 and no boundary transition
    exists at all."""
    _require_overlap(a, b, c, d)
    wrap = spec_inc_ab(a, b, c, d)
    # standalone artifact: E0/E1 stay open splice points, no shared tunnel yet
    nodes, edges = _duplicator_edges("", "w0", "w1", None, None)
    system = SystemOfGadgets(
        specs=(wrap,),
        instances=(GadgetInstance("w0", wrap.name, 0),
                   GadgetInstance("w1", wrap.name, 0)),
        nodes=tuple(nodes),
        edges=tuple(edges),
        boundary=(_node("In0"), _node("Out0"), _node("In1"), _node("Out1")),
    )
    return LoweringArtifact(
        system,
        roles={"w0": "interface-0-wrapper", "w1": "interface-1-wrapper"},
        encoding=Encoding("table", table=(("idle", (0, 0)),)),
        provenance={"construction": "edge-duplicator",
                    "a": a, "b": b, "c": c, "d": d,
                    "splice": ["E0", "E1"],
                    "simulates": spec_two_tunnel().name},
    )


# ---------------------------------------------------------------------------
# Inc-DecNZ-PZ out of Inc[a,b]-DecNZ[c,d]-PZ

def _chain(edges: list, head: str, hops: list[tuple[str, str]], tail: str) -> None:
    cur = head
    for (entry, exit_) in hops:
        edges.append((cur, entry))
        cur = exit_
    edges.append((cur, tail))


def sim_incdecnzpz_via_incab(a: int, b: int, c: int, d: int, *,
                             merged: bool = False,
                             expand: str = "direct") -> LoweringArtifact:
    """Inc[1,1]-DecNZ[1,1]-PZ behavior out of Inc[a,b]-DecNZ[c,d]-PZ
    gadgets (a,c >= 1).

    Two counters g0, g1 hold value n as possible-value intervals anchored at
    max(g0) = min(g1) = abcd*n.  Simulated Inc crosses a*c*d Inc tunnels of
    g0 then b*c*d of g1 (raising both anchors by abcd); simulated DecNZ
    crosses a*b*d DecNZ tunnels of g0 then a*b*c of g1; simulated PZ crosses
    g1's PZ first (min(g1) = 0 forces n = 0) then g0's.

    expand="direct" uses multi-tunnel gadget variants; "via-duplicators"
    uses single-tunnel gadgets and stacks of edge duplicators (needs
    [a,b] n [c,d] nonempty).  merged=True exposes the JZDec-style boundary
    (jz_in feeding both the DecNZ chain and the PZ chain) instead of
    separate dec/pz ports."""
    if min(a, c) < 1:
        raise SystemFormatError(
            f"range parameters need a > 0 and c > 0 (Inc must add and DecNZ "
            f"must subtract at least 1); got a={a}, c={c}")
    if a > b or c > d:
        raise SystemFormatError(f"need a <= b and c <= d; got ({a},{b},{c},{d})")
    acd, abd, bcd, abc = a * c * d, a * b * d, b * c * d, a * b * c
    abcd = a * b * c * d
    p = port_endpoint

    specs: list[GadgetSpec] = []
    instances: list[GadgetInstance] = []
    nodes: list[str] = []
    edges: list = []
    roles: dict[str, str] = {"g0": "low-anchor", "g1": "high-anchor"}

    if expand == "direct":
        g0spec = spec_inc_ab_multi(a, b, c, d, acd, abd)
        g1spec = spec_inc_ab_multi(a, b, c, d, bcd, abc)
        specs += [g0spec, g1spec]
        instances += [GadgetInstance("g0", g0spec.name, 0),
                      GadgetInstance("g1", g1spec.name, 0)]
        inc_hops = ([(p("g0", f"inc{k}_in"), p("g0", f"inc{k}_out")) for k in range(acd)]
                    + [(p("g1", f"inc{k}_in"), p("g1", f"inc{k}_out")) for k in range(bcd)])
        dec_hops = ([(p("g0", f"dec{k}_in"), p("g0", f"dec{k}_out")) for k in range(abd)]
                    + [(p("g1", f"dec{k}_in"), p("g1", f"dec{k}_out")) for k in range(abc)])
    elif expand == "via-duplicators":
        _require_overlap(a, b, c, d)
        base = spec_inc_ab(a, b, c, d)
        wrap = base
        specs += [base]
        instances += [GadgetInstance("g0", base.name, 0),
                      GadgetInstance("g1", base.name, 0)]

        def leaves(gid: str, tunnel: str, count: int, tag: str
                   ) -> list[tuple[str, str]]:
            """count interchangeable copies of one tunnel of gadget gid,
            stacking count-1 duplicators."""
            cur = (p(gid, f"{tunnel}_in"), p(gid, f"{tunnel}_out"))
            if count == 1:
                return [cur]
            out = []
            for j in range(count - 1):
                prefix = f"{gid}/{tag}{j}/"
                w0, w1 = f"{gid}-{tag}{j}-w0", f"{gid}-{tag}{j}-w1"
                instances.append(GadgetInstance(w0, wrap.name, 0))
                instances.append(GadgetInstance(w1, wrap.name, 0))
                roles[w0] = roles[w1] = f"duplicator-wrapper/{gid}/{tunnel}"
                dn, de = _duplicator_edges(prefix, w0, w1, cur[0], cur[1])
                nodes.extend(dn)
                edges.extend(de)
                out.append((_node(f"{prefix}In0"), _node(f"{prefix}Out0")))
                cur = (_node(f"{prefix}In1"), _node(f"{prefix}Out1"))
            out.append(cur)
            return out

        inc_hops = leaves("g0", "inc", acd, "i") + leaves("g1", "inc", bcd, "i")
        dec_hops = leaves("g0", "dec", abd, "d") + leaves("g1", "dec", abc, "d")
    else:
        raise SystemFormatError(f"unknown expand mode {expand!r}")

    pz_hops = [(p("g1", "pz_in"), p("g1", "pz_out")),
               (p("g0", "pz_in"), p("g0", "pz_out"))]

    if merged:
        ports = ("inc_in", "inc_out", "jz_in", "jz_out_zero", "jz_out_nonzero")
        nodes[:0] = ports
        _chain(edges, _node("inc_in"), inc_hops, _node("inc_out"))
        _chain(edges, _node("jz_in"), dec_hops, _node("jz_out_nonzero"))
        _chain(edges, _node("jz_in"), pz_hops, _node("jz_out_zero"))
        simulates = spec_inc_decnz_pz_merged().name
    else:
        ports = ("inc_in", "inc_out", "dec_in", "dec_out", "pz_in", "pz_out")
        nodes[:0] = ports
        _chain(edges, _node("inc_in"), inc_hops, _node("inc_out"))
        _chain(edges, _node("dec_in"), dec_hops, _node("dec_out"))
        _chain(edges, _node("pz_in"), pz_hops, _node("pz_out"))
        from .gadgets import spec_inc_decnz_pz
        simulates = spec_inc_decnz_pz().name

    n_wrappers = len(instances) - 2
    ia = [((a * acd, 0), (abcd, 0)), ((abcd, 0), (b * bcd, 0))]
    ia += [((0, 0), (0, 0))] * n_wrappers
    conc = [(abcd, 0), (abcd, 0)] + [(0, 0)] * n_wrappers
    system = SystemOfGadgets(
        specs=_dedupe_specs(specs),
        instances=tuple(instances),
        nodes=tuple(nodes),
        edges=tuple(edges),
        boundary=tuple(_node(q) for q in ports),
    )
    return LoweringArtifact(
        system,
        roles=roles,
        encoding=Encoding("interval-affine", iaffine=tuple(ia), concrete=tuple(conc)),
        provenance={"construction": "inc-decnz-pz-from-inc-ab",
                    "a": a, "b": b, "c": c, "d": d,
                    "expand": expand, "merged": merged,
                    "anchor": abcd, "simulates": simulates},
    )


# ---------------------------------------------------------------------------
# machine -> gadgets

def compile_machine_to_incdecjz(program: Program,
                                initial: dict[str, int] | None = None,
                                flow: str = "primitive") -> LoweringArtifact:
    """One Inc-Dec-JZ gadget per counter, one flow gadget per non-HALT
    instruction, a start node wired to instruction 0 and a goal node
    standing in for every HALT.  The agent can reach the goal iff the
    machine run (from the given initial counter values) executes a HALT;
    falling off the end strands the agent instead.

    Flow gadget i guards instruction i: entering crosses its Inc (arming
    it), the counter operation happens, and the only way onward is back
    through one of i's DecNZ tunnels.  Counter exits are pooled: every
    counter exit connects to the d0 return of *every* instruction gadget
    (and every jz zero exit to every d1 return), which is safe because all
    unarmed instructions' returns are shut.  d1 carries the jump branch of
    JZ instructions, d0 everything else.

    flow="primitive" keeps flow gadgets as single Inc-DecNZ-DecNZ
    instances; flow="expanded" builds each from three more Inc-Dec-JZ
    gadgets (build_inc_decnz_decnz), leaving a pure Inc-Dec-JZ system.
    """
    initial = dict(initial or {})
    unknown = set(initial) - set(program.counters)
    if unknown:
        raise SystemFormatError(f"initial values for unknown counters {sorted(unknown)}")
    idj = spec_inc_dec_jz()
    flow_spec = spec_inc_decnz_decnz()
    p = port_endpoint

    instances = [GadgetInstance(f"c:{name}", idj.name, initial.get(name, 0))
                 for name in program.counters]
    roles = {f"c:{name}": f"counter:{name}" for name in program.counters}
    flows: dict[int, str] = {}
    for i, ins in enumerate(program.instructions):
        if isinstance(ins, Halt):
            continue
        fid = f"i:{i}"
        flows[i] = fid
        instances.append(GadgetInstance(fid, flow_spec.name, 0))
        roles[fid] = f"instruction:{i}:{type(ins).__name__.lower()}"

    def entrance(i: int) -> str:
        """Endpoint standing for 'control arrives at instruction i'.
        Empty string means falling off the end: no edge at all."""
        if i >= len(program.instructions):
            return ""
        if isinstance(program.instructions[i], Halt):
            return _node("goal")
        return p(flows[i], "inc_in")

    edges: list[tuple[str, str]] = []

    def wire(src: str, dst: str) -> None:
        if src and dst:
            edges.append((src, dst))

    wire(_node("start"), entrance(0))
    # instruction gadget -> its counter's operation entrance
    for i, ins in enumerate(program.instructions):
        if isinstance(ins, Halt):
            continue
        cid = f"c:{ins.counter}"
        op_in = {"Inc": "inc_in", "Dec": "dec_in", "Jz": "jz_in"}[type(ins).__name__]
        wire(p(flows[i], "inc_out"), p(cid, op_in))
    # pooled returns: every counter exit to every instruction gadget's
    # matching return tunnel
    for i in sorted(flows):
        for name in program.counters:
            cid = f"c:{name}"
            wire(p(cid, "inc_out"), p(flows[i], "d0_in"))
            wire(p(cid, "dec_out"), p(flows[i], "d0_in"))
            wire(p(cid, "jz_out_nonzero"), p(flows[i], "d0_in"))
            wire(p(cid, "jz_out_zero"), p(flows[i], "d1_in"))
    # fall-through chain and jump targets
    for i in sorted(flows):
        if i < len(program.instructions) - 1:
            wire(p(flows[i], "d0_out"), entrance(i + 1))
    for i in sorted(flows):
        ins = program.instructions[i]
        if isinstance(ins, Jz):
            wire(p(flows[i], "d1_out"), entrance(ins.target))

    system = SystemOfGadgets(
        specs=_dedupe_specs([idj] + ([flow_spec] if flows else [])),
        instances=tuple(instances),
        nodes=("start", "goal"),
        edges=tuple(edges),
        start=_node("start"),
        goal=_node("goal"),
    )
    artifact = LoweringArtifact(
        system,
        roles=roles,
        encoding=None,
        provenance={"construction": "machine-to-gadgets", "flow": flow,
                    "instructions": len(program.instructions),
                    "counters": list(program.counters)},
    )
    if flow == "expanded":
        if flows:
            artifact = substitute(artifact, flow_spec.name, build_inc_decnz_decnz())
        artifact.provenance["flow"] = "expanded"
    elif flow != "primitive":
        raise SystemFormatError(f"unknown flow mode {flow!r}")
    return artifact


# ---------------------------------------------------------------------------
# substitution

def substitute(host: LoweringArtifact, spec_name: str,
               part: LoweringArtifact) -> LoweringArtifact:
    """Replace every instance of ``spec_name`` in the host with a copy of
    the ``part`` artifact (which must simulate that spec: its boundary
    nodes are named after the spec's locations).  Copies are namespaced by
    the replaced instance's id; the replaced instance's state seeds the
    copy through the part's encoding."""
    hsys = host.system
    target_spec = hsys.spec_named(spec_name)
    psys = part.system
    if psys.start or psys.goal:
        raise SystemFormatError("substitution part must not carry start/goal")
    part_boundary_names = {ep[5:] if ep.startswith("node:") else None
                           for ep in psys.boundary}
    if None in part_boundary_names:
        raise SystemFormatError("substitution part boundary must be nodes")
    if part_boundary_names != set(target_spec.locations):
        raise SystemFormatError(
            f"part boundary {sorted(part_boundary_names)} does not match "
            f"{spec_name} locations {sorted(target_spec.locations)}")
    if part.encoding is None:
        raise SystemFormatError("substitution part needs an encoding")

    replaced = [inst for inst in hsys.instances if inst.spec == spec_name]
    kept = [inst for inst in hsys.instances if inst.spec != spec_name]

    out_instances: list[GadgetInstance] = list(kept)
    out_nodes: list[str] = list(hsys.nodes)
    out_edges: list[tuple[str, str]] = []
    roles = {i.id: host.roles.get(i.id, "") for i in kept}

    def remap_host(ep: str) -> str:
        if ep.startswith("node:"):
            return ep
        inst_id, port = ep.split(".", 1)
        if any(inst_id == r.id for r in replaced):
            return _node(f"{inst_id}/{port}")
        return ep

    for x in replaced:
        prefix = f"{x.id}/"
        seed = part.encoding.state_for(x.initial, "concrete")
        if len(seed) != len(psys.instances):
            raise SystemFormatError("part encoding arity mismatch")
        for sub, s0 in zip(psys.instances, seed):
            out_instances.append(GadgetInstance(prefix + sub.id, sub.spec, s0))
            sub_role = part.roles.get(sub.id, "")
            roles[prefix + sub.id] = (
                f"{host.roles.get(x.id, x.id)}/{sub_role}" if sub_role
                else host.roles.get(x.id, x.id))
        for n in psys.nodes:
            out_nodes.append(prefix + n)
        for (ea, eb) in psys.edges:
            out_edges.append((_remap_part(ea, prefix), _remap_part(eb, prefix)))

    for (ea, eb) in hsys.edges:
        out_edges.append((remap_host(ea), remap_host(eb)))

    needed = {i.spec for i in out_instances}
    out_specs = _dedupe_specs(
        [s for s in hsys.specs if s.name in needed]
        + [s for s in psys.specs if s.name in needed])

    system = SystemOfGadgets(
        specs=out_specs,
        instances=tuple(out_instances),
        nodes=tuple(out_nodes),
        edges=tuple(out_edges),
        start=remap_host(hsys.start) if hsys.start else None,
        goal=remap_host(hsys.goal) if hsys.goal else None,
        boundary=tuple(remap_host(ep) for ep in hsys.boundary),
    )
    provenance = dict(host.provenance)
    subs = list(provenance.get("substitutions", []))
    subs.append({"replaced": spec_name,
                 "with": part.provenance.get("construction", "?"),
                 "copies": len(replaced)})
    provenance["substitutions"] = subs
    return LoweringArtifact(system, roles=roles, encoding=host.encoding,
                            provenance=provenance)


def _remap_part(ep: str, prefix: str) -> str:
    if ep.startswith("node:"):
        return _node(prefix + ep[5:])
    inst_id, port = ep.split(".", 1)
    return port_endpoint(prefix + inst_id, port)


# ---------------------------------------------------------------------------
# initializer fragments

def emit_initializer(values) -> Fragment:
    """Machine code that sets counters to the given values and falls
    through.  ``values`` is a dict name -> value or a list (counters then
    named c0, c1, ...).

    Values up to 7 are plain INC runs.  Larger values are built in binary,
    most significant bit first: double by draining between the target and
    one scratch counter (init_tmp), add one INC per set bit.  The doubling
    loop's backward jump needs a counter that is always 0; init_zero is
    reserved for that.  Instruction count is O(log value) per counter,
    inside 8*(floor(log2(v+1)) + 1)."""
    if not isinstance(values, dict):
        values = {f"c{i}": v for i, v in enumerate(values)}
    for name, v in values.items():
        if not isinstance(v, int) or v < 0:
            raise SystemFormatError(f"{name}: initializer values must be naturals")
    if {"init_tmp", "init_zero"} & set(values):
        raise SystemFormatError("counter names init_tmp/init_zero are reserved")

    code: list = []
    counters = list(values)
    helpers_needed = any(v > 7 for v in values.values())
    if helpers_needed:
        counters += ["init_tmp", "init_zero"]

    for name, v in values.items():
        if v == 0:
            continue
        if v <= 7:
            code.extend(Inc(name) for _ in range(v))
            continue
        bits = bin(v)[2:]
        # value must land in `name` after len(bits)-1 ping-pong doublings
        here = name if (len(bits) - 1) % 2 == 0 else "init_tmp"
        other = "init_tmp" if here == name else name
        code.append(Inc(here))  # the leading 1 bit
        src, dst = here, other
        for bit in bits[1:]:
            loop = len(code)
            code.append(Jz(src, loop + 5))   # drained -> continue below
            code.append(Dec(src))
            code.append(Inc(dst))
            code.append(Inc(dst))
            code.append(Jz("init_zero", loop))  # unconditional back jump
            if bit == "1":
                code.append(Inc(dst))
            src, dst = dst, src
        assert src == name, "doubling parity bug"
    return Fragment(tuple(counters), tuple(code))


# ---------------------------------------------------------------------------
# pipeline

PIPELINE_TARGETS = ("inc-dec-jz", "inc-jzdec", "inc-decnz-pz", "inc-ab")


def pipeline(program: Program, target: str,
             initial: dict[str, int] | None = None,
             range_params: tuple[int, int, int, int] | None = None,
             expand: str = "direct") -> LoweringArtifact:
    """Compile a machine all the way down to the chosen gadget family.

    inc-dec-jz keeps the primitive flow gadget.  Every further target first
    expands flows into pure Inc-Dec-JZ, then substitutes construction by
    construction: five Inc-JZDec per Inc-Dec-JZ; one merged-entrance
    Inc-DecNZ-PZ per Inc-JZDec; two chained Inc[a,b]-DecNZ[c,d]-PZ counters
    per merged gadget (inc-ab needs range_params=(a,b,c,d))."""
    if target not in PIPELINE_TARGETS:
        raise SystemFormatError(
            f"unknown target {target!r}; expected one of {PIPELINE_TARGETS}")
    if target == "inc-ab" and range_params is None:
        raise SystemFormatError("target inc-ab needs range_params=(a,b,c,d)")
    if target == "inc-dec-jz":
        return compile_machine_to_incdecjz(program, initial, flow="primitive")

    def sub(art: LoweringArtifact, name: str,
            part: LoweringArtifact) -> LoweringArtifact:
        # a program with no counters compiles to a bare start->goal system;
        # there is then nothing to replace and the stage is a no-op
        if any(s.name == name for s in art.system.specs):
            return substitute(art, name, part)
        return art

    art = compile_machine_to_incdecjz(program, initial, flow="expanded")
    art = sub(art, spec_inc_dec_jz().name, sim_incdecjz_via_incjzdec())
    if target == "inc-jzdec":
        return art
    art = sub(art, spec_inc_jzdec().name, sim_incjzdec_via_incdecnzpz())
    if target == "inc-decnz-pz":
        return art
    a, b, c, d = range_params
    part = sim_incdecnzpz_via_incab(a, b, c, d, merged=True, expand=expand)
    return sub(art, spec_inc_decnz_pz_merged().name, part)


# ---------------------------------------------------------------------------
# artifact export

def export_artifact(artifact: LoweringArtifact, path: str) -> tuple[str, str]:
    """Write system JSON to ``path`` and the audit sidecar (roles, encoding,
    provenance, identity port map, suggested verification mode) next to it.
    Returns (system_path, meta_path)."""
    from .gadgets import serialize_system
    with open(path, "w") as fh:
        fh.write(serialize_system(artifact.system))
    meta = {
        "roles": artifact.roles,
        "encoding": artifact.encoding.to_json() if artifact.encoding else None,
        "provenance": artifact.provenance,
        "ports": {(_strip(ep)): _strip(ep) for ep in artifact.system.boundary},
        "mode": artifact.suggested_mode(),
    }
    meta_path = path + ".meta.json"
    with open(meta_path, "w") as fh:
        fh.write(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, meta_path


def _strip(ep: str) -> str:
    return ep[5:] if ep.startswith("node:") else ep
