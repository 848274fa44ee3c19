import pytest

from gen import random_formula, random_model, seeded

from awarelogic import FIX_M, TOP, Atom, PointedModel, Universe, parse_formula, satisfies
from awarelogic.axioms import bounded_validity
from awarelogic.forgetting import (
    TranslationLimitError, aw_atom, encode, encode_model, speculative_translate, split_aw,
    uniform_interpolant,
)
from awarelogic.semantics import EvalContext, enumerate_formulas, truth_set
from awarelogic.syntax import conj, free_vars, iff, implies

U = Universe({"p", "q"}, ("i", "j"))


def F(text):
    return parse_formula(text, U)


def equivalent(a, b, n=3):
    return bounded_validity(iff(a, b), n) is None


def test_aw_atoms():
    assert aw_atom("i", "p") == Atom("aw(i,p)")
    assert split_aw("aw(i,p)") == ("i", "p")
    assert split_aw("p") is None


@pytest.mark.parametrize("text, expected", [
    ("A[i] (p & box[j] q)", conj(aw_atom("i", "p"), aw_atom("i", "q"))),
    ("A[i] top", TOP),
])
def test_encode_awareness(text, expected):
    assert encode(F(text)) == expected


def test_encode_explicit():
    assert encode(F("Ke[i] p")) == conj(aw_atom("i", "p"), F("box[i] p"))


def test_encoding_preserves_truth():
    rng = seeded(41)
    for _ in range(100):
        m = random_model(rng)
        f = random_formula(rng, 3, ("box", "Ke", "Le", "A"))
        assert truth_set(m, f) == truth_set(encode_model(m), encode(f))


def test_encode_rejects_speculation():
    with pytest.raises(ValueError):
        encode(F("Ks[i] p"))


# --- uniform interpolation -----------------------------------------------------------------------

def check_conditions(f, forget, atoms):
    ui = uniform_interpolant(f, forget)
    assert not free_vars(ui) & set(forget)
    assert bounded_validity(implies(f, ui), 3) is None
    for g in enumerate_formulas(atoms, ("i",), 5, 6):
        if bounded_validity(implies(f, g), 3) is None:
            assert bounded_validity(implies(ui, g), 3) is None, g
    return ui


def test_interpolant_of_conjunction():
    ui = check_conditions(F("p & q"), {"p"}, ("q",))
    assert equivalent(ui, F("q"))


def test_interpolant_of_tautology():
    assert uniform_interpolant(F("p | ~p"), {"p"}) == TOP


def test_interpolant_of_two_diamonds():
    ui = check_conditions(F("dia[i] p & dia[i] ~p"), {"p"}, ("q",))
    assert equivalent(ui, F("dia[i] top"))


def test_interpolant_forgets_awareness_atoms():
    f = encode(F("Ke[i] p & q"))
    ui = uniform_interpolant(f, {"p"})
    assert free_vars(ui) == {"q"}


# --- speculative knowledge -------------------------------------------------------------------

def test_translation_examples():
    t = speculative_translate(F("Ks[i] (p | ~p)"))
    assert satisfies(PointedModel(FIX_M, "t"), t)
    t = speculative_translate(F("Ks[i] p"))
    assert not satisfies(PointedModel(FIX_M, "t"), t)
    assert satisfies(PointedModel(FIX_M, "s"), t)
    assert speculative_translate(F("Ke[i] p")) == F("Ke[i] p")


def test_translation_is_explicit():
    rng = seeded(42)
    for _ in range(60):
        f = random_formula(rng, 2, ("Ks", "A", "Ke"))
        t = speculative_translate(f)
        assert "Ks" not in str(t) and "box" not in str(t)


def test_translation_agrees_with_oracle():
    rng = seeded(43)
    oracle = EvalContext(ks_strategy="oracle")
    for _ in range(80):
        m = random_model(rng, max_states=3)
        f = random_formula(rng, 2, ("Ks", "A"))
        assert truth_set(m, f, oracle) == truth_set(m, speculative_translate(f)), f


def test_translation_limit():
    big = Universe({f"x{k}" for k in range(4)}, ("i",))
    f = parse_formula("Ks[i] (x0 & x1 & x2 & x3)", big)
    with pytest.raises(TranslationLimitError):
        speculative_translate(f, max_vars=3)
