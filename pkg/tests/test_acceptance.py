"""Acceptance criteria 1-11.

Each test prints one ``criterion N: PASS|FAIL`` line with a short tally.  Run
``pytest tests/test_acceptance.py -s`` to see them, or execute this file
directly for the bare report.
"""
import sys

import pytest

from gen import (
    AGENTS, ATOMS, pair_corpus, random_action, random_formula, random_model,
    random_pointed, seeded,
)

from awarelogic import (
    FIX_M, FIX_M2, And, Atom, Box, Dyn, Ke, Ks, Le, Not, PointedModel, Top, Universe, builtin_action, implies,
    parse_formula, print_formula, product_update, satisfies, substitute,
    synthesize_change,
)
from awarelogic.axioms import bounded_validity, match_axiom, sample_validity
from awarelogic.bisim import (
    awareness_bisim, bounded_standard_bisim, characteristic_formula, standard_bisim,
)
from awarelogic.forgetting import uniform_interpolant
from awarelogic.semantics import (
    EvalContext, enumerate_formulas, modal_equiv_bounded, truth_set,
)
from awarelogic.syntax import free_vars, modal_depth
from awarelogic.translate import box_to_dynamic, expand_explicit, reduce_dynamic

U = Universe(set(ATOMS), AGENTS)
U1 = Universe({"p"}, ("i",))
ORACLE = EvalContext(ks_strategy="oracle")
INTERP = EvalContext(ks_strategy="interpolation")


def F(text, u=U1):
    return parse_formula(text, u)


def at(m, s):
    return PointedModel(m, s)


def report(n, ok, detail=""):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}"
    print(line + (f"  ({detail})" if detail else ""))
    return ok


def test_criterion_01_counterexample():
    f = F("Ke[i] box[i] p")
    got = (satisfies(at(FIX_M, "s"), f), satisfies(at(FIX_M2, "s"), f))
    assert report(1, got == (True, False), f"M,s={got[0]} M2,s={got[1]}")


def test_criterion_02_awareness_bisimulation():
    fam = awareness_bisim(at(FIX_M, "s"), at(FIX_M2, "s"), {"p"})
    std = standard_bisim(at(FIX_M, "s"), at(FIX_M2, "s"), {"p"})
    uu = fam is not None and fam.relates("u", "u", set())
    ok = fam is not None and std is None and uu
    assert report(2, ok, f"aware={fam is not None} standard={std is not None} (u,u) in empty slice={uu}")


@pytest.fixture(scope="module")
def corpus():
    return pair_corpus(seed=2024, n=200, max_states=4)


def test_criterion_03_standard_implies_awareness(corpus):
    bad = [k for k, (a, b) in enumerate(corpus)
           if standard_bisim(a, b, ATOMS) is not None and awareness_bisim(a, b, ATOMS) is None]
    n_std = sum(standard_bisim(a, b, ATOMS) is not None for a, b in corpus)
    assert report(3, not bad, f"{len(corpus)} pairs, {n_std} standard-bisimilar, violations={bad}")


def _least_depth(a, b, limit=4):
    for d in range(limit + 1):
        if not bounded_standard_bisim(a, b, ATOMS, d):
            return d
    return None


def test_criterion_04_bounded_characterisation(corpus):
    bad = []
    checked = {"box": 0, "explicit": 0, "speculative": 0, "separated": 0}
    for k, (a, b) in enumerate(corpus):
        if standard_bisim(a, b, ATOMS) is not None:
            checked["box"] += 1
            if modal_equiv_bounded(a, b, "box", ATOMS, 2, 8) is not None:
                bad.append((k, "box"))
        else:
            d = _least_depth(a, b)
            if d is None:
                bad.append((k, "no depth"))
            else:
                f = modal_equiv_bounded(a, b, "box", ATOMS, d, 8) or characteristic_formula(a, ATOMS, d)
                checked["separated"] += 1
                if modal_depth(f) > d or satisfies(a, f) == satisfies(b, f):
                    bad.append((k, "separation", print_formula(f)))
        if awareness_bisim(a, b, ATOMS) is not None:
            for frag in ("explicit", "speculative"):
                checked[frag] += 1
                f = modal_equiv_bounded(a, b, frag, ATOMS, 2, 8)
                if f is not None:
                    bad.append((k, frag, print_formula(f)))
    assert report(4, not bad, f"checked {checked}, violations={bad[:5]}")


def test_criterion_05_speculative_knowledge():
    cases = [("Ks[i] (p | ~p)", "t", True), ("Ks[i] p", "t", False), ("Ks[i] box[i] p", "s", False)]
    side = [("box[i] p", "t", True), ("Ke[i] box[i] p", "s", True)]
    fixed = []
    for text, s, want in cases:
        for ctx in (ORACLE, INTERP):
            fixed.append(satisfies(at(FIX_M, s), F(text), ctx) == want)
    fixed += [satisfies(at(FIX_M, s), F(text)) == want for text, s, want in side]

    rng = seeded(505)
    disagree = []
    for k in range(120):
        m = random_model(rng, max_states=3)
        body = random_formula(rng, 1, ("box", "Ks", "A"))
        f = Ks(rng.choice(AGENTS), body)
        if truth_set(m, f, ORACLE) != truth_set(m, f, INTERP):
            disagree.append((k, print_formula(f)))
    ok = all(fixed) and not disagree
    assert report(5, ok, f"fixtures {sum(fixed)}/{len(fixed)}, 120 random instances, disagreements={disagree[:3]}")


def test_criterion_06_awareness_change():
    f = F("[act A+p] Ke[i] Ke[i] p")
    got = (satisfies(at(FIX_M, "s"), f), satisfies(at(FIX_M2, "s"), f))
    pa = builtin_action("aware_plus", {"p"}, ("i",))
    after = awareness_bisim(product_update(at(FIX_M, "s"), pa), product_update(at(FIX_M2, "s"), pa), {"p"})
    ok = got == (True, False) and after is None
    assert report(6, ok, f"M,s={got[0]} M2,s={got[1]} still bisimilar after update={after is not None}")


def test_criterion_07_reduction_soundness():
    rng = seeded(707)
    bad = []
    for k in range(220):
        m = random_model(rng, max_states=3)
        am = random_action(rng)
        g = random_formula(rng, 2, ("box", "A"))
        f = Dyn(am, rng.choice(am.actions), g)
        r = reduce_dynamic(f)
        if truth_set(m, f) != truth_set(m, r):
            bad.append((k, print_formula(f)))
    plus = reduce_dynamic(F("[act A+p] A[i] p"))
    minus = reduce_dynamic(F("[act A-p] A[i] p"))
    valid = bounded_validity(plus, 3) is None
    contra = bounded_validity(Not(minus), 3) is None
    ok = not bad and valid and contra
    assert report(7, ok, f"220 triples, violations={bad[:3]}, "
                         f"A+ gives {print_formula(plus)} valid={valid}, A- gives {print_formula(minus)} contradiction={contra}")


TAUT_SHAPES = [
    "{a} -> ({b} -> {a})",
    "(({a} -> {b}) -> {a}) -> {a}",
    "({a} & {b}) -> {a}",
    "~~{a} <-> {a}",
    "({a} -> {b}) -> (~{b} -> ~{a})",
]

SCHEMAS = {
    "Lbox": {
        "K-box": "box[{r}] ({a} -> {b}) -> (box[{r}] {a} -> box[{r}] {b})",
        "A-top": "A[{i}] top",
        "A-neg": "A[{i}] ~{a} <-> A[{i}] {a}",
        "A-and": "A[{i}] ({a} & {b}) <-> (A[{i}] {a} & A[{i}] {b})",
        "A-box": "A[{i}] box[{r}] {a} <-> A[{i}] {a}",
        "A-A": "A[{i}] A[{j}] {a} <-> A[{i}] {a}",
        "taut": TAUT_SHAPES,
    },
    "LE": {
        "K-Ke": "Ke[{r}] ({a} -> {b}) -> (Ke[{r}] {a} -> Ke[{r}] {b})",
        "Ke-A": "Ke[{r}] {a} -> A[{r}] {a}",
        "A-top": "A[{i}] top",
        "A-neg": "A[{i}] ~{a} <-> A[{i}] {a}",
        "A-and": "A[{i}] ({a} & {b}) <-> (A[{i}] {a} & A[{i}] {b})",
        "A-Ke": "A[{i}] Ke[{r}] {a} <-> A[{i}] {a}",
        "A-A": "A[{i}] A[{j}] {a} <-> A[{i}] {a}",
        "taut": TAUT_SHAPES,
    },
    "LS": {
        "K-Ks": "Ks[{r}] ({a} -> {b}) -> (Ks[{r}] {a} -> Ks[{r}] {b})",
        "A-top": "A[{i}] top",
        "A-neg": "A[{i}] ~{a} <-> A[{i}] {a}",
        "A-and": "A[{i}] ({a} & {b}) <-> (A[{i}] {a} & A[{i}] {b})",
        "A-Ks": "A[{i}] Ks[{r}] {a} <-> A[{i}] {a}",
        "A-A": "A[{i}] A[{j}] {a} <-> A[{i}] {a}",
        "taut": TAUT_SHAPES,
    },
}
OPS = {"Lbox": ("box", "A"), "LE": ("Ke", "A"), "LS": ("Ks", "A")}


def relation_agent(f, agent):
    """Move every relation-reading operator onto ``agent``; awareness keeps its agents."""
    if isinstance(f, (Box, Ke, Le)):
        return type(f)(agent, relation_agent(f.arg, agent))
    if isinstance(f, And):
        return And(relation_agent(f.left, agent), relation_agent(f.right, agent))
    if isinstance(f, (Top, Atom)):
        return f
    if isinstance(f, Not):
        return Not(relation_agent(f.arg, agent))
    return type(f)(f.agent, relation_agent(f.arg, agent))


def schema_instances(system, schema, n, rng):
    """Instances of a schema.  Outside LS every relation operator uses agent i,
    which keeps bounded validity at three states within reach."""
    shapes = SCHEMAS[system][schema]
    shapes = shapes if isinstance(shapes, list) else [shapes]
    out = []
    while len(out) < n:
        a = random_formula(rng, 1, OPS[system])
        b = random_formula(rng, 1, OPS[system])
        i, j = rng.choice(AGENTS), rng.choice(AGENTS)
        r = rng.choice(AGENTS) if system == "LS" else "i"
        if system != "LS":
            a, b = relation_agent(a, r), relation_agent(b, r)
        text = rng.choice(shapes).format(a=f"({print_formula(a)})", b=f"({print_formula(b)})", i=i, j=j, r=r)
        out.append(parse_formula(text, U))
    return out


def ks_instances(n, rng):
    out = []
    while len(out) < n:
        phi = random_formula(rng, 1, ("Ks", "A"))
        if "p" not in free_vars(phi):
            continue
        psi = random_formula(rng, 1, ("Ks", "A"), atoms=("q",))
        i = rng.choice(AGENTS)
        f = parse_formula(f"Ks[{i}] ({print_formula(phi)}) -> (~A[{i}] p -> Ks[{i}] ({print_formula(substitute(phi, {'p': psi}))}))", U)
        out.append(f)
    return out


def test_criterion_08_axiom_soundness():
    rng = seeded(808)
    bad, unmatched, counted = [], [], {}
    for system in ("Lbox", "LE"):
        for schema in SCHEMAS[system]:
            for f in schema_instances(system, schema, 50, rng):
                if match_axiom(f, system, schema) is None:
                    unmatched.append((system, schema, print_formula(f)))
                if bounded_validity(f, 3) is not None:
                    bad.append((system, schema, print_formula(f)))
            counted[f"{system}/{schema}"] = 50
    models = [random_model(rng, max_states=3) for _ in range(50)]
    ls = {schema: schema_instances("LS", schema, 50, rng) for schema in SCHEMAS["LS"]}
    ls["KS"] = ks_instances(50, rng)
    for schema, insts in ls.items():
        for f in insts:
            if match_axiom(f, "LS", schema) is None:
                unmatched.append(("LS", schema, print_formula(f)))
            if sample_validity(f, models, ORACLE) is not None:
                bad.append(("LS", schema, print_formula(f)))
        counted[f"LS/{schema}"] = len(insts)
    ok = not bad and not unmatched
    assert report(8, ok, f"{sum(counted.values())} instances over {len(counted)} schemas, "
                         f"counterexamples={bad[:3]}, unmatched={unmatched[:3]}")


def test_criterion_09_expressivity():
    rng = seeded(909)
    models = [FIX_M, FIX_M2] + [random_model(rng, max_states=3) for _ in range(100)]
    bad = []
    for k, m in enumerate(models):
        for _ in range(3):
            f = random_formula(rng, 2, ("Ke", "Le", "A", "box"))
            if truth_set(m, f) != truth_set(m, expand_explicit(f)):
                bad.append(("expand", k, print_formula(f)))
            g = random_formula(rng, 2, ("box", "A"))
            if truth_set(m, g) != truth_set(m, box_to_dynamic(g, AGENTS)):
                bad.append(("box-to-dynamic", k, print_formula(g)))
    image = expand_explicit(F("Ke[i] box[i] p"))
    separates = satisfies(at(FIX_M, "s"), image) and not satisfies(at(FIX_M2, "s"), image)
    hidden = modal_equiv_bounded(at(FIX_M, "s"), at(FIX_M2, "s"), "explicit", {"p"}, 2, 8) is None
    ok = not bad and separates and hidden
    assert report(9, ok, f"{len(models)} models, mismatches={bad[:3]}, "
                         f"box image separates={separates}, explicit fragment blind={hidden}")


def test_criterion_10_uniform_interpolation():
    rng = seeded(1010)
    gammas = enumerate_formulas(("p",), ("i",), 5, 6)
    bad = []
    for k in range(50):
        f = random_formula(rng, 2, ("box",), atoms=("p", "q"), agents=("i",))
        ui = uniform_interpolant(f, {"q"})
        if "q" in free_vars(ui) or bounded_validity(implies(f, ui), 3) is not None:
            bad.append((k, "condition 1", print_formula(f)))
            continue
        for g in gammas:
            if bounded_validity(implies(f, g), 3) is None and bounded_validity(implies(ui, g), 3) is not None:
                bad.append((k, "condition 2", print_formula(f), print_formula(g)))
                break
    assert report(10, not bad, f"50 formulas, {len(gammas)} gammas each, violations={bad[:3]}")


def test_criterion_11_change_synthesis():
    rng = seeded(1111)
    bad = []
    for k in range(100):
        src = random_pointed(rng, max_states=3, serial=True)
        tgt = random_pointed(rng, max_states=3)
        cur = src
        for pa in synthesize_change(src, tgt):
            cur = product_update(cur, pa) if cur is not None else None
        if cur is None or standard_bisim(cur, tgt, ATOMS) is None:
            bad.append(k)
    assert report(11, not bad, f"100 pairs, failures={bad[:5]}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
