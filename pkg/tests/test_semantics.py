import pytest

from gen import AGENTS, random_formula, random_model, seeded

from awarelogic import FIX_M, FIX_M2, Ks, PointedModel, Universe, parse_formula, satisfies
from awarelogic.semantics import (
    EvalContext, OracleLimitError, ks_oracle, modal_equiv_bounded, truth_set,
)
from awarelogic.translate import expand_explicit

U = Universe({"p"}, ("i",))
ORACLE = EvalContext(ks_strategy="oracle")
INTERP = EvalContext(ks_strategy="interpolation")


def F(text):
    return parse_formula(text, U)


def at(m, s):
    return PointedModel(m, s)


@pytest.mark.parametrize("model, state, text, want", [
    (FIX_M, "s", "Ke[i] box[i] p", True),
    (FIX_M2, "s", "Ke[i] box[i] p", False),
    (FIX_M, "t", "A[i] p", False),
    (FIX_M, "s", "A[i] p", True),
    (FIX_M, "s", "[act A+p] Ke[i] Ke[i] p", True),
    (FIX_M2, "s", "[act A+p] Ke[i] Ke[i] p", False),
    (FIX_M, "u", "box[i] bot", True),
    (FIX_M, "t", "Le[i] p", False),
    (FIX_M, "s", "Le[i] p", True),
    (FIX_M, "s", "[act A-p] A[i] p", False),
    (FIX_M, "u", "[act !bot] bot", True),
])
def test_model_checking(model, state, text, want):
    assert satisfies(at(model, state), F(text)) is want


@pytest.mark.parametrize("ctx", [ORACLE, INTERP], ids=["oracle", "interpolation"])
@pytest.mark.parametrize("state, text, want", [
    ("t", "Ks[i] (p | ~p)", True),
    ("t", "Ks[i] p", False),
    ("s", "Ks[i] p", True),
    ("s", "Ks[i] box[i] p", False),
    ("u", "Ks[i] bot", True),
    ("s", "Ls[i] ~p", False),
])
def test_speculative_fixtures(ctx, state, text, want):
    assert satisfies(at(FIX_M, state), F(text), ctx) is want


def test_oracle_examples():
    p, bp = F("p"), F("box[i] p")
    assert ks_oracle(at(FIX_M, "s"), "i", p, depth=1, branching=2)
    assert not ks_oracle(at(FIX_M, "s"), "i", bp, depth=2, branching=2)
    for s in FIX_M.states:
        assert ks_oracle(at(FIX_M, s), "i", F("top"))


def test_oracle_cap():
    with pytest.raises(OracleLimitError) as e:
        ks_oracle(at(FIX_M, "s"), "i", F("box[i] p"), depth=1, cap=2)
    assert e.value.cap == 2


def test_auto_falls_back_when_the_oracle_is_capped():
    ctx = EvalContext(cap=2)
    f = F("Ks[i] box[i] p")
    assert truth_set(FIX_M, f, ctx) == truth_set(FIX_M, f, INTERP)


def test_unknown_strategy():
    with pytest.raises(ValueError, match="strategy"):
        EvalContext(ks_strategy="guess")


def test_strategies_agree_on_random_instances():
    rng = seeded(303)
    for _ in range(150):
        m = random_model(rng, max_states=3)
        f = Ks(rng.choice(AGENTS), random_formula(rng, 1, ("box", "Ks", "A", "Ke")))
        assert truth_set(m, f, ORACLE) == truth_set(m, f, INTERP), f


def test_explicit_knowledge_is_box_and_awareness():
    rng = seeded(304)
    for _ in range(100):
        m = random_model(rng)
        f = random_formula(rng, 3, ("Ke", "Le", "A"))
        assert truth_set(m, f) == truth_set(m, expand_explicit(f))


def test_equivalence_examples():
    s, s2 = at(FIX_M, "s"), at(FIX_M2, "s")
    f = modal_equiv_bounded(s, s2, "box", {"p"}, 2, 8)
    assert f is not None and satisfies(s, f) != satisfies(s2, f)
    assert modal_equiv_bounded(s, s2, "explicit", {"p"}, 2, 8) is None
    for frag in ("box", "explicit", "speculative"):
        assert modal_equiv_bounded(s, s, frag, {"p"}, 2, 8) is None


def test_box_witness_matches_the_explicit_counterexample():
    s, s2 = at(FIX_M, "s"), at(FIX_M2, "s")
    f = modal_equiv_bounded(s, s2, "box", {"p"}, 2, 8)
    target = F("A[i] box[i] p & box[i] box[i] p")
    # same truth value at every point of both fixtures
    assert (satisfies(s, f) == satisfies(s, target)) and (satisfies(s2, f) == satisfies(s2, target))


def test_speculative_fragment_separates_awareness():
    s, t = at(FIX_M, "s"), at(FIX_M, "t")
    f = modal_equiv_bounded(s, t, "speculative", {"p"}, 1, 3)
    assert f is not None and satisfies(s, f) != satisfies(t, f)


def test_unknown_fragment():
    with pytest.raises(ValueError, match="fragment"):
        modal_equiv_bounded(at(FIX_M, "s"), at(FIX_M, "s"), "temporal", {"p"}, 1, 3)
