import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gen import random_action, random_pointed, seeded

from awarelogic import (
    FIX_M, FIX_M2, And, Atom, Aw, ModelError, PointedAction, PointedModel, Universe,
    bot, builtin_action, fixture, load_action_model, load_model, parse_formula,
    product_update, satisfies, standard_bisim, synthesize_change,
)
from awarelogic.fixtures import FIX_M_DOC
from awarelogic.models import dump_action_model, dump_model, update_model

U = Universe({"p", "q"}, ("i",))


def test_fixture_shape():
    m = fixture("FIX-M")
    assert m.states == ("s", "t", "u")
    assert set(m.edges("i")) == {("s", "t"), ("t", "u")}
    assert m.aware_of("i", "s") == {"p"} and not m.aware_of("i", "t")
    with pytest.raises(KeyError, match="FIX-M2"):
        fixture("FIX-X")


def test_model_document_round_trip():
    m = load_model(FIX_M_DOC)
    again = load_model(json.dumps(dump_model(m)))
    assert standard_bisim(PointedModel(m, "s"), PointedModel(again, "s"), {"p"}) is not None
    assert dump_model(again) == dump_model(m)


@pytest.mark.parametrize("patch, message", [
    ({"states": []}, "non-empty set of states"),
    ({"rel": {"i": [["s", "x"]]}}, "undeclared state"),
    ({"rel": {"k": []}}, "undeclared agent"),
    ({"aware": {"i": {"s": ["z"]}}}, "undeclared atoms"),
    ({"val": {"z": []}}, "undeclared atom"),
    ({"colour": "red"}, "unknown"),
])
def test_model_document_errors(patch, message):
    doc = json.loads(json.dumps(FIX_M_DOC))
    doc.update(patch)
    with pytest.raises(ModelError, match=message):
        load_model(doc)


def test_action_disjointness():
    doc = {"name": "bad", "atoms": ["p"], "agents": ["i"], "actions": ["a"],
           "aware_plus": {"i": {"a": ["p"]}}, "aware_minus": {"i": {"a": ["p"]}}}
    with pytest.raises(ModelError, match="disjointness violated"):
        load_action_model(doc, U)


def test_action_document_round_trip():
    doc = {"name": "X", "atoms": ["p", "q"], "agents": ["i"], "actions": ["a", "b"],
           "rel": {"i": [["a", "b"], ["b", "b"]]}, "pre": {"a": "p", "b": "top"},
           "post": {"a": {"q": "~p"}}, "aware_plus": {"i": {"b": ["q"]}}, "point": "a"}
    am = load_action_model(doc, U)
    assert am.default == "a" and am.succ("i", "a") == {"b"}
    assert am.postcondition("a", "q") == parse_formula("~p", U)
    assert load_action_model(dump_action_model(am), U) == am


# --- product update ---------------------------------------------------------------------------

def test_aware_plus_on_fixture():
    pa = builtin_action("aware_plus", {"p"}, ("i",))
    out = product_update(PointedModel(FIX_M, "s"), pa)
    assert out.point == ("s", "a")
    m = out.model
    assert all(m.aware_of("i", x) == {"p"} for x in m.states)
    assert set(m.edges("i")) == {(("s", "a"), ("t", "a")), (("t", "a"), ("u", "a"))}


def test_aware_minus_removes_awareness():
    pa = builtin_action("aware_minus", {"p"}, ("i",))
    out = product_update(PointedModel(FIX_M, "s"), pa)
    assert not satisfies(out, Aw("i", Atom("p")))


def test_failed_precondition_is_absent():
    pa = builtin_action("announce_novel", bot(), ("i",))
    assert product_update(PointedModel(FIX_M, "u"), pa) is None


def test_empty_aware_minus_is_identity():
    pa = builtin_action("aware_minus", set(), ("i",))
    for s in FIX_M.states:
        out = product_update(PointedModel(FIX_M, s), pa)
        assert standard_bisim(out, PointedModel(FIX_M, s), {"p"}) is not None


def test_announcement_raises_awareness_of_its_atoms():
    f = And(Atom("p"), Atom("q"))
    pa = builtin_action("announce_novel", f, ("i",))
    am = pa.action_model
    assert am.name == "!(p & q)" and am.pre["a"] == f
    assert am.plus("i", "a") == {"p", "q"}


def test_postconditions_assign_values():
    doc = {"name": "flip", "agents": ["i"], "actions": ["a"], "rel": {"i": [["a", "a"]]},
           "post": {"a": {"p": "~p"}}}
    am = load_action_model(doc, U)
    m = update_model(FIX_M, am)
    assert m.val["p"] == frozenset()
    assert m.val.get("q", frozenset()) == frozenset()


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_update_properties(seed):
    """States are exactly the precondition-satisfying pairs; awareness follows
    (A | A+) - A-; edges need an edge in both factors."""
    rng = seeded(seed)
    pm = random_pointed(rng, max_states=3)
    am = random_action(rng)
    m = pm.model
    out = update_model(m, am)
    for s, a in out.states:
        assert satisfies(PointedModel(m, s), am.pre[a])
        for ag in m.agents:
            assert out.aware_of(ag, (s, a)) == (m.aware_of(ag, s) | am.plus(ag, a)) - am.minus(ag, a)
            for t, b in out.succ(ag, (s, a)):
                assert t in m.succ(ag, s) and b in am.succ(ag, a)
    for s in m.states:
        for a in am.actions:
            if satisfies(PointedModel(m, s), am.pre[a]):
                assert (s, a) in set(out.states)


# --- change synthesis -----------------------------------------------------------------------------

def one_state(p_true):
    from awarelogic import Model

    return Model.build({"p"}, ("i",), ["w"], {"i": [("w", "w")]}, {}, {"p": ["w"] if p_true else []})


def apply_all(pm, actions):
    for pa in actions:
        pm = product_update(pm, pa)
    return pm


def test_synthesis_flips_a_value():
    src, tgt = PointedModel(one_state(True), "w"), PointedModel(one_state(False), "w")
    acts = synthesize_change(src, tgt)
    assert len(acts) == 2
    assert standard_bisim(apply_all(src, acts), tgt, {"p"}) is not None


def test_synthesis_identity():
    src = PointedModel(one_state(True), "w")
    assert standard_bisim(apply_all(src, synthesize_change(src, src)), src, {"p"}) is not None


def test_synthesis_needs_seriality():
    with pytest.raises(ModelError, match="not serial"):
        synthesize_change(PointedModel(FIX_M, "s"), PointedModel(FIX_M2, "s"))


def test_pointed_action_checks_point():
    pa = builtin_action("aware_plus", {"p"}, ("i",))
    with pytest.raises(ModelError):
        PointedAction(pa.action_model, "zz")
    with pytest.raises(ModelError):
        PointedModel(FIX_M, "zz")
