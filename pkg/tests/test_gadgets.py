"""Gadget component semantics, system wiring, and serialization tests.

oracle_transitions below restates each component's allowed (exit, new-state)
set from its one-line definition, independently of the moves() methods; the
exhaustive sweep in test_component_semantics_table is the same comparison
the acceptance suite runs (criterion: params <= 4, states 0..100, exact).
"""

from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from gadgetforge import gadgets as G
from gadgetforge.gadgets import (
    Component,
    Configuration,
    CounterGadgetSpec,
    DecNZRange,
    DecRange,
    FiniteGadgetSpec,
    GadgetInstance,
    IncRange,
    JZDecSwitch,
    JZSwitch,
    PNZ,
    PZ,
    SystemFormatError,
    SystemOfGadgets,
    canonicalize,
    catalog,
    initial_config,
    node_endpoint,
    parse_spec,
    parse_system,
    port_endpoint,
    serialize_system,
    split_endpoint,
    successors,
    to_dot,
)


# ---------------------------------------------------------------- oracle

def oracle_transitions(kind: str, params, s: int) -> set[tuple[int, int]]:
    """Allowed (exit index, new state) pairs from state s.

    Written from the definitions: Inc[a,b] always open, adds i in [a,b];
    DecNZ[c,d] open iff s >= c, subtracts i in [c,d] with i <= s;
    Dec[a,b] always open, subtracts i in [a,b] saturating at 0;
    PZ open iff s = 0; PNZ open iff s >= 1 (both leave s alone);
    JZ takes exit 0 iff s = 0 else exit 1, state kept;
    JZDec is JZ except the nonzero exit also subtracts 1.
    """
    if kind == "inc":
        a, b = params
        return {(0, s + i) for i in range(a, b + 1)}
    if kind == "decnz":
        c, d = params
        return {(0, s - i) for i in range(c, d + 1) if i <= s} if s >= c else set()
    if kind == "dec":
        a, b = params
        return {(0, max(s - i, 0)) for i in range(a, b + 1)}
    if kind == "pz":
        return {(0, 0)} if s == 0 else set()
    if kind == "pnz":
        return {(0, s)} if s >= 1 else set()
    if kind == "jz":
        return {(0, 0)} if s == 0 else {(1, s)}
    if kind == "jzdec":
        return {(0, 0)} if s == 0 else {(1, s - 1)}
    raise AssertionError(kind)


def _all_kinds(limit=4):
    for a in range(1, limit + 1):
        for b in range(a, limit + 1):
            yield "inc", (a, b), IncRange(a, b)
            yield "decnz", (a, b), DecNZRange(a, b)
            yield "dec", (a, b), DecRange(a, b)
    yield "pz", (), PZ()
    yield "pnz", (), PNZ()
    yield "jz", (), JZSwitch()
    yield "jzdec", (), JZDecSwitch()


def test_component_semantics_table():
    for tag, params, kind in _all_kinds():
        for s in range(101):
            got = {(exit_idx, s2) for (_, s2, exit_idx) in kind.moves(s)}
            assert got == oracle_transitions(tag, params, s), (tag, params, s)


def test_choices_are_distinct_per_move():
    # the choice tag makes each nondeterministic branch replayable
    for _, _, kind in _all_kinds():
        for s in range(101):
            moves = kind.moves(s)
            assert len({c for (c, _, _) in moves}) == len(moves)


def test_jz_is_pz_plus_pnz_with_merged_entrance():
    for s in range(101):
        split = {(0, s2) for (_, s2, _) in PZ().moves(s)}
        split |= {(1, s2) for (_, s2, _) in PNZ().moves(s)}
        got = {(e, s2) for (_, s2, e) in JZSwitch().moves(s)}
        assert got == split


def test_jzdec_is_pz_plus_decnz11_with_merged_entrance():
    for s in range(101):
        split = {(0, s2) for (_, s2, _) in PZ().moves(s)}
        split |= {(1, s2) for (_, s2, _) in DecNZRange(1, 1).moves(s)}
        got = {(e, s2) for (_, s2, e) in JZDecSwitch().moves(s)}
        assert got == split


def test_pz_pnz_partition_states():
    # at every state exactly one of the two pressure plates is open
    for s in range(101):
        assert (len(PZ().moves(s)) == 1) != (len(PNZ().moves(s)) == 1)


def test_range_validation():
    with pytest.raises(SystemFormatError):
        IncRange(0, 2)
    with pytest.raises(SystemFormatError):
        DecNZRange(3, 2)
    with pytest.raises(SystemFormatError):
        DecRange(-1, 1)


def test_component_arity_checked():
    with pytest.raises(SystemFormatError):
        Component(JZSwitch(), "in", ("only_one",))
    with pytest.raises(SystemFormatError):
        Component(IncRange(1, 1), "in", ("a", "b"))


# ------------------------------------------------------ systems + wiring

def _one_tunnel_system(kind, initial=0, **kw):
    spec = CounterGadgetSpec("t", (Component(kind, "t_in", ("t_out",)),))
    return SystemOfGadgets(
        specs=(spec,),
        instances=(GadgetInstance("g", "t", initial),),
        nodes=("src",),
        edges=(("node:src", "g.t_in"),),
        start="node:src",
        **kw,
    )


def test_inc_range_offers_every_amount():
    sys0 = _one_tunnel_system(IncRange(1, 2), initial=5)
    succ = successors(sys0, initial_config(sys0))
    assert sorted(c.states[0] for (_, c) in succ) == [6, 7]
    for t, _ in succ:
        assert (t.entry, t.exit, t.before) == ("t_in", "t_out", 5)
    assert {t.choice for t, _ in succ} == {1, 2}


def test_decnz_blocked_below_threshold():
    sys0 = _one_tunnel_system(DecNZRange(2, 3), initial=1)
    assert successors(sys0, initial_config(sys0)) == []
    sys1 = _one_tunnel_system(DecNZRange(2, 3), initial=2)
    succ = successors(sys1, initial_config(sys1))
    assert [c.states[0] for (_, c) in succ] == [0]


def test_canonicalize_merges_edged_endpoints():
    spec = G.spec_inc_dec_jz()
    sys0 = SystemOfGadgets(
        specs=(spec,),
        instances=(GadgetInstance("a", "inc-dec-jz", 0),
                   GadgetInstance("b", "inc-dec-jz", 0)),
        edges=(("a.inc_out", "b.dec_in"),),
    )
    idx = canonicalize(sys0)
    assert idx.endpoint_class("a.inc_out") == idx.endpoint_class("b.dec_in")
    assert idx.endpoint_class("a.inc_in") != idx.endpoint_class("b.dec_in")
    # classes are honest partitions
    seen = [ep for cls in idx.classes for ep in cls]
    assert sorted(seen) == sorted(set(seen))


def test_class_numbering_is_deterministic():
    spec = G.spec_inc_dec_jz()
    sys0 = SystemOfGadgets(
        specs=(spec,),
        instances=(GadgetInstance("a", "inc-dec-jz", 0),),
        nodes=("n1", "n2"),
        edges=(("node:n1", "a.inc_in"), ("a.inc_out", "node:n2")),
        start="node:n1",
    )
    i1, i2 = canonicalize(sys0), canonicalize(sys0)
    assert i1.classes == i2.classes
    assert i1.class_of == i2.class_of


def test_endpoint_helpers():
    assert node_endpoint("x") == "node:x"
    assert port_endpoint("g", "inc_in") == "g.inc_in"
    assert split_endpoint("node:x") == ("node", "x")
    assert split_endpoint("g.inc_in") == ("g", "inc_in")
    # instance ids may not contain dots, so first-dot splitting is safe
    with pytest.raises(SystemFormatError):
        canonicalize(SystemOfGadgets(
            specs=(G.spec_inc_dec_jz(),),
            instances=(GadgetInstance("a.b", "inc-dec-jz", 0),),
        ))


def test_finite_spec_traversals():
    sscd = catalog()["sscd"]
    sys0 = SystemOfGadgets(
        specs=(sscd,),
        instances=(GadgetInstance("d", "sscd", "1"),),
        nodes=("go",),
        edges=(("node:go", "d.L1"),),
        start="node:go",
    )
    succ = successors(sys0, initial_config(sys0))
    assert len(succ) == 1
    t, c = succ[0]
    assert (t.entry, t.exit, t.before, t.after) == ("L1", "R1", "1", "2")
    assert c.states == ("2",)
    # from state 2 the L1 traversal is gone
    assert successors(sys0, Configuration(c.position, ("2",))) == [] or all(
        tr.entry != "L1" for tr, _ in successors(sys0, c))


def test_validation_errors():
    spec = G.spec_inc_dec_jz()
    good = GadgetInstance("a", "inc-dec-jz", 0)
    with pytest.raises(SystemFormatError, match="unknown port"):
        canonicalize(SystemOfGadgets((spec,), (good,), edges=(("a.nope", "a.inc_in"),)))
    with pytest.raises(SystemFormatError, match="unknown node"):
        canonicalize(SystemOfGadgets((spec,), (good,), edges=(("node:ghost", "a.inc_in"),)))
    with pytest.raises(SystemFormatError, match="unknown instance"):
        canonicalize(SystemOfGadgets((spec,), (good,), edges=(("b.inc_in", "a.inc_in"),)))
    with pytest.raises(SystemFormatError, match="duplicate instance"):
        canonicalize(SystemOfGadgets((spec,), (good, good)))
    with pytest.raises(SystemFormatError, match="natural"):
        canonicalize(SystemOfGadgets((spec,), (GadgetInstance("a", "inc-dec-jz", -1),)))
    with pytest.raises(SystemFormatError, match="not a state"):
        canonicalize(SystemOfGadgets(
            (catalog()["sscd"],), (GadgetInstance("d", "sscd", "3"),)))
    with pytest.raises(SystemFormatError, match="no spec named"):
        canonicalize(SystemOfGadgets((), (good,)))
    with pytest.raises(SystemFormatError, match="overlap"):
        canonicalize(SystemOfGadgets((spec,), (good,), nodes=("a",)))


def test_initial_config_requires_start():
    spec = G.spec_inc_dec_jz()
    sys0 = SystemOfGadgets((spec,), (GadgetInstance("a", "inc-dec-jz", 0),))
    with pytest.raises(SystemFormatError, match="no start"):
        initial_config(sys0)


# ------------------------------------------------- successor soundness

_WALK = st.lists(st.integers(0, 7), min_size=0, max_size=12)


@given(picks=_WALK)
@settings(max_examples=80, deadline=None)
def test_successors_are_locally_sound(picks):
    # Random walk over a nontrivial system: every offered traversal starts
    # at the current class, ends at its exit port's class, and rewrites
    # exactly the one instance it names.
    from gadgetforge import lower

    art = lower.sim_incdecjz_via_incjzdec()
    sys0 = art.system
    idx = canonicalize(sys0)
    ids = [inst.id for inst in sys0.instances]
    config = Configuration(idx.endpoint_class("node:inc_in"),
                           idx.initial_states())
    for pick in picks:
        succ = idx.successors(config)
        if not succ:
            break
        t, after = succ[pick % len(succ)]
        assert idx.endpoint_class(port_endpoint(t.instance, t.entry)) == config.position
        assert idx.endpoint_class(port_endpoint(t.instance, t.exit)) == after.position
        i = ids.index(t.instance)
        assert config.states[i] == t.before and after.states[i] == t.after
        assert after.states[:i] == config.states[:i]
        assert after.states[i + 1:] == config.states[i + 1:]
        config = after


# -------------------------------------------------------- serialization

def test_serialize_parse_round_trip():
    from gadgetforge import lower

    for sys0 in (
        lower.build_inc_decnz_decnz().system,
        lower.sim_incdecjz_via_incjzdec().system,
        lower.build_sscd_from_incdecnz().system,
        _one_tunnel_system(IncRange(2, 3), initial=7),
    ):
        text = serialize_system(sys0)
        back = parse_system(text)
        assert back == sys0
        assert serialize_system(back) == text


def test_serialized_form_is_plain_sorted_json():
    text = serialize_system(_one_tunnel_system(DecNZRange(1, 2)))
    doc = json.loads(text)
    assert set(doc) == {"specs", "instances", "nodes", "edges",
                        "start", "goal", "boundary"}
    assert doc["instances"][0] == {"id": "g", "initial": 0, "spec": "t"}
    assert text == json.dumps(doc, indent=2, sort_keys=True) + "\n"


def test_parse_rejects_garbage():
    with pytest.raises(SystemFormatError):
        parse_system("not json")
    with pytest.raises(SystemFormatError):
        parse_system(json.dumps({"instances": [{"id": "g"}]}))  # no spec key
    with pytest.raises(SystemFormatError):
        parse_system(json.dumps([1, 2]))  # not an object
    doc = json.loads(serialize_system(_one_tunnel_system(IncRange(1, 1))))
    doc["specs"][0]["components"][0]["kind"] = "warp"
    with pytest.raises(SystemFormatError, match="unknown component kind"):
        parse_system(json.dumps(doc))
    doc["specs"][0]["components"][0] = {"kind": "decnz", "entry": "t_in",
                                        "exits": ["t_out"]}
    with pytest.raises(SystemFormatError, match="lo/hi"):
        parse_system(json.dumps(doc))


def test_parse_spec_accepts_catalog_dump():
    doc = json.loads(serialize_system(_one_tunnel_system(IncRange(1, 2))))
    spec = parse_spec(doc["specs"][0])
    assert isinstance(spec, CounterGadgetSpec)
    assert spec.locations == ("t_in", "t_out")
    with pytest.raises(SystemFormatError):
        parse_spec({"type": "counter"})
    with pytest.raises(SystemFormatError):
        parse_spec({"type": "nonsense", "name": "x"})


def test_catalog_contents():
    cat = catalog()
    assert set(cat) == {
        "inc-dec-jz", "inc-jzdec", "inc-decnz", "inc-decnz-pz",
        "inc-decnz-pz-merged", "inc-decnz-decnz", "sscd", "two-tunnel",
    }
    for name, spec in cat.items():
        assert spec.name == name
        assert len(set(spec.locations)) == len(spec.locations)
    assert isinstance(cat["sscd"], FiniteGadgetSpec)
    assert isinstance(cat["inc-jzdec"], CounterGadgetSpec)
    # merged-entrance variant shares one entry port between DecNZ and PZ
    merged = cat["inc-decnz-pz-merged"]
    entries = [comp.entry for comp in merged.components]
    assert len(entries) != len(set(entries))


# ------------------------------------------------------------------ DOT

def test_dot_output_shape():
    from gadgetforge import lower

    sys0 = lower.build_sscd_from_incdecnz().system
    dot = to_dot(sys0)
    assert dot.startswith("graph ")
    assert "subgraph cluster_0" in dot and "subgraph cluster_1" in dot
    # one node line per port plus one per external node
    n_ports = sum(len(sys0.spec_named(i.spec).locations) for i in sys0.instances)
    n_lines = sum(1 for line in dot.splitlines() if "[label=" in line or
                  ("[shape=box" in line))
    assert n_lines == n_ports + len(sys0.nodes)
    for (a, b) in sys0.edges:
        assert f'"{a}" -- "{b}"' in dot
