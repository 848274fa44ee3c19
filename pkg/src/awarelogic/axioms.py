"""Axiom schemas, Hilbert proof checking and bounded validity."""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .syntax import (
    TOP, And, Atom, Aw, Box, Dyn, Formula, Ke, Ks, Le, Not, Top, Universe, conj,
    free_vars, iff, implies, parse_formula, print_formula, subformulas, substitute,
)

__all__ = [
    "AxiomSystem", "SYSTEMS", "Match", "match_axiom", "ProofStep", "ProofResult",
    "check_proof", "load_proof", "bounded_validity", "sample_validity", "is_tautology",
    "EnumerationLimitError", "recover_substitution",
]


class EnumerationLimitError(RuntimeError):
    pass


# --- propositional tautologies ---------------------------------------------------------

def is_tautology(f: Formula, max_atoms: int = 16) -> bool:
    """Truth-table check treating every non-Boolean subformula as an atom."""
    atoms: dict = {}

    def collect(g):
        if isinstance(g, Top):
            return
        if isinstance(g, Not):
            collect(g.arg)
        elif isinstance(g, And):
            collect(g.left)
            collect(g.right)
        else:
            atoms.setdefault(g, len(atoms))

    collect(f)
    if len(atoms) > max_atoms:
        raise EnumerationLimitError(f"{len(atoms)} propositional atoms exceed the truth-table cap of {max_atoms}")
    n = len(atoms)
    rows = np.arange(1 << n, dtype=np.int64)
    cols = {g: ((rows >> i) & 1).astype(bool) for g, i in atoms.items()}
    memo: dict = {}

    def ev(g):
        if id(g) in memo:
            return memo[id(g)][1]
        if isinstance(g, Top):
            out = np.ones(1 << n, dtype=bool)
        elif isinstance(g, Not):
            out = ~ev(g.arg)
        elif isinstance(g, And):
            out = ev(g.left) & ev(g.right)
        else:
            out = cols[g]
        memo[id(g)] = (g, out)
        return out

    return bool(ev(f).all())


# --- schema matching ----------------------------------------------------------------------

_PU = Universe({"PHI", "PSI", "CHI", "P"}, ("I", "J"))
_FORMULA_VARS = {"PHI", "PSI", "CHI"}
_AGENT_VARS = {"I", "J"}


def _pat(text: str) -> Formula:
    return parse_formula(text, _PU)


def _unify(pat: Formula, f: Formula, env: dict) -> bool:
    if isinstance(pat, Atom):
        if pat.name in _FORMULA_VARS or pat.name == "P":
            if pat.name == "P" and not isinstance(f, Atom):
                return False
            bound = env.get(pat.name)
            if bound is None:
                env[pat.name] = f
                return True
            return bound == f
        return f == pat
    if type(pat) is not type(f):
        return False
    if isinstance(pat, Top):
        return True
    if isinstance(pat, Not):
        return _unify(pat.arg, f.arg, env)
    if isinstance(pat, And):
        return _unify(pat.left, f.left, env) and _unify(pat.right, f.right, env)
    if pat.agent in _AGENT_VARS:
        bound = env.get(pat.agent)
        if bound is None:
            env[pat.agent] = f.agent
        elif bound != f.agent:
            return False
    elif pat.agent != f.agent:
        return False
    return _unify(pat.arg, f.arg, env)


@dataclass(frozen=True)
class Match:
    schema: str
    binding: dict

    def describe(self) -> str:
        parts = []
        for k, v in sorted(self.binding.items()):
            parts.append(f"{k}={print_formula(v) if isinstance(v, Formula) else v}")
        return f"{self.schema}({', '.join(parts)})" if parts else self.schema


class SideConditionError(ValueError):
    pass


def recover_substitution(phi: Formula, chi: Formula, p: str):
    """``psi`` with ``chi == phi[p := psi]``; ``TOP`` stands in when ``p`` does
    not occur in ``phi``.  ``None`` if no such ``psi`` exists."""
    found: list = []

    def align(a, b):
        if isinstance(a, Atom) and a.name == p:
            if found and found[0] != b:
                return False
            if not found:
                found.append(b)
            return True
        if type(a) is not type(b):
            return False
        if isinstance(a, (Top, Atom)):
            return a == b
        if isinstance(a, And):
            return align(a.left, b.left) and align(a.right, b.right)
        if isinstance(a, Not):
            return align(a.arg, b.arg)
        if isinstance(a, Dyn):
            return a.action == b.action and a.point == b.point and align(a.arg, b.arg)
        return a.agent == b.agent and align(a.arg, b.arg)

    if not align(phi, chi):
        return None
    return found[0] if found else TOP


def _pattern_schema(name: str, text: str):
    pat = _pat(text)

    def match(f: Formula, strict: bool):
        env: dict = {}
        if _unify(pat, f, env):
            return env
        return None

    return name, match


def _taut(f, strict):
    try:
        return {} if is_tautology(f) else None
    except EnumerationLimitError:
        return None


def _ks_axiom(f: Formula, strict: bool):
    env: dict = {}
    if not _unify(_pat("Ks[I] PHI -> (~A[I] P -> Ks[I] CHI)"), f, env):
        return None
    p = env["P"].name
    psi = recover_substitution(env["PHI"], env["CHI"], p)
    if psi is None:
        return None
    env["PSI"] = psi
    if strict:
        if p in free_vars(env["PHI"]):
            raise SideConditionError(f"side condition: {p} occurs in the known formula")
    elif p in free_vars(psi):
        raise SideConditionError(f"side condition: {p} occurs in the substituted formula {print_formula(psi)}")
    return env


def _dyn_rhs(lhs: Dyn):
    am, a, g = lhs.action, lhs.point, lhs.arg
    pre = am.pre[a]
    if isinstance(g, Top):
        return "dyn-top", TOP
    if isinstance(g, Atom):
        return "dyn-atom", implies(pre, am.postcondition(a, g.name))
    if isinstance(g, Not):
        return "dyn-neg", implies(pre, Not(Dyn(am, a, g.arg)))
    if isinstance(g, And):
        return "dyn-and", And(Dyn(am, a, g.left), Dyn(am, a, g.right))
    if isinstance(g, Aw):
        if free_vars(g.arg) & am.minus(g.agent, a):
            return "dyn-aware-minus", Not(pre)
        plus = am.plus(g.agent, a)
        return "dyn-aware-plus", implies(pre, Aw(g.agent, substitute(g.arg, {p: TOP for p in plus})))
    if isinstance(g, Box):
        return "dyn-box", implies(pre, conj(*(Box(g.agent, Dyn(am, b, g.arg))
                                              for b in am.actions if b in am.succ(g.agent, a))))
    return None, None


def _dyn_schema(name):
    def match(f: Formula, strict: bool):
        env: dict = {}
        if not _unify(_pat("PHI <-> PSI"), f, env) or not isinstance(env["PHI"], Dyn):
            return None
        got, rhs = _dyn_rhs(env["PHI"])
        if got != name or rhs != env["PSI"]:
            return None
        return {"PHI": env["PHI"].arg, "action": env["PHI"].action.name, "point": env["PHI"].point}

    return name, match


_COMMON_A = [
    _pattern_schema("A-top", "A[I] top"),
    _pattern_schema("A-neg", "A[I] ~PHI <-> A[I] PHI"),
    _pattern_schema("A-and", "A[I] (PHI & PSI) <-> (A[I] PHI & A[I] PSI)"),
]

_TABLE1 = [
    _pattern_schema("top", "top"),
    _pattern_schema("K-box", "box[I] (PHI -> PSI) -> (box[I] PHI -> box[I] PSI)"),
    *_COMMON_A,
    _pattern_schema("A-box", "A[I] box[J] PHI <-> A[I] PHI"),
    _pattern_schema("A-A", "A[I] A[J] PHI <-> A[I] PHI"),
    ("taut", _taut),
]

_TABLE2 = [
    _pattern_schema("top", "top"),
    _pattern_schema("K-Ke", "Ke[I] (PHI -> PSI) -> (Ke[I] PHI -> Ke[I] PSI)"),
    _pattern_schema("Ke-A", "Ke[I] PHI -> A[I] PHI"),
    *_COMMON_A,
    _pattern_schema("A-Ke", "A[I] Ke[J] PHI <-> A[I] PHI"),
    _pattern_schema("A-A", "A[I] A[J] PHI <-> A[I] PHI"),
    ("taut", _taut),
]

_TABLE3 = [
    _pattern_schema("top", "top"),
    _pattern_schema("K-Ks", "Ks[I] (PHI -> PSI) -> (Ks[I] PHI -> Ks[I] PSI)"),
    ("KS", _ks_axiom),
    *_COMMON_A,
    _pattern_schema("A-Ks", "A[I] Ks[J] PHI <-> A[I] PHI"),
    _pattern_schema("A-A", "A[I] A[J] PHI <-> A[I] PHI"),
    ("taut", _taut),
]

_TABLE4 = [_dyn_schema(n) for n in
           ("dyn-top", "dyn-atom", "dyn-neg", "dyn-and", "dyn-aware-minus", "dyn-aware-plus", "dyn-box")]


def _nec_box(premise, f):
    return isinstance(f, Box) and f.arg == premise


def _nec_ake(premise, f):
    env: dict = {}
    return _unify(_pat("A[I] PHI -> Ke[I] PHI"), f, env) and env["PHI"] == premise


def _nec_ks(premise, f):
    return isinstance(f, Ks) and f.arg == premise


def _nec_dyn(premise, f):
    return isinstance(f, Dyn) and f.arg == premise


@dataclass(frozen=True)
class AxiomSystem:
    name: str
    schemas: tuple
    rules: dict = field(default_factory=dict)
    strict_ks: bool = False

    def schema_names(self) -> list:
        return [n for n, _ in self.schemas]

    def with_strict_ks(self, strict: bool = True) -> "AxiomSystem":
        return AxiomSystem(self.name, self.schemas, self.rules, strict)


SYSTEMS = {
    "Lbox": AxiomSystem("Lbox", tuple(_TABLE1), {"nec-box": _nec_box}),
    "LE": AxiomSystem("LE", tuple(_TABLE2), {"nec-ake": _nec_ake}),
    "LS": AxiomSystem("LS", tuple(_TABLE3), {"nec-ks": _nec_ks}),
    "Ldyn": AxiomSystem("Ldyn", tuple(_TABLE1 + _TABLE4), {"nec-box": _nec_box, "nec-dyn": _nec_dyn}),
}


def _system(system) -> AxiomSystem:
    if isinstance(system, AxiomSystem):
        return system
    try:
        return SYSTEMS[system]
    except KeyError:
        raise ValueError(f"unknown axiom system {system!r}; known: {', '.join(SYSTEMS)}") from None


def match_axiom(f: Formula, system="LS", schema: str | None = None, strict_ks: bool | None = None) -> Match | None:
    """First schema of ``system`` that ``f`` instantiates.

    A KS instance violating its side condition does not match; use
    :func:`explain_axiom` to see why.
    """
    m, _ = explain_axiom(f, system, schema, strict_ks)
    return m


def explain_axiom(f: Formula, system="LS", schema: str | None = None, strict_ks: bool | None = None):
    """``(match, reason)``; ``reason`` explains a failed match."""
    sys_ = _system(system)
    strict = sys_.strict_ks if strict_ks is None else strict_ks
    reasons = []
    names = sys_.schema_names()
    if schema is not None and schema not in names:
        return None, f"system {sys_.name} has no schema {schema!r}"
    for name, matcher in sys_.schemas:
        if schema is not None and name != schema:
            continue
        try:
            env = matcher(f, strict)
        except SideConditionError as e:
            reasons.append(f"{name}: {e}")
            continue
        if env is not None:
            return Match(name, env), None
    if reasons:
        return None, "; ".join(reasons)
    what = f"schema {schema}" if schema else f"any schema of {sys_.name}"
    return None, f"not an instance of {what}"


# --- proof checking ---------------------------------------------------------------------

@dataclass(frozen=True)
class ProofStep:
    """One line of a proof.  ``by`` is ``"axiom"`` (optionally naming a
    schema), ``"mp"`` with two earlier line numbers (premise, implication),
    or a rule name with one earlier line number.  Lines are numbered from 1.
    """

    formula: Formula
    by: str
    refs: tuple = ()
    schema: str | None = None


@dataclass(frozen=True)
class ProofResult:
    ok: bool
    failed_step: int | None = None
    message: str = ""
    justifications: tuple = ()

    def __bool__(self):
        return self.ok


def load_proof(document, universe: Universe) -> list:
    """Proof steps from a JSON array of objects
    ``{"formula": TEXT, "by": "axiom"|"mp"|RULE, "from": [n, ...], "schema": NAME}``."""
    doc = json.loads(document) if isinstance(document, (str, bytes)) else document
    if not isinstance(doc, list):
        raise ValueError("a proof script is a JSON array of steps")
    steps = []
    for k, item in enumerate(doc, 1):
        if not isinstance(item, dict) or "formula" not in item or "by" not in item:
            raise ValueError(f"step {k}: needs 'formula' and 'by'")
        refs = item.get("from", [])
        if isinstance(refs, int):
            refs = [refs]
        steps.append(ProofStep(parse_formula(item["formula"], universe), item["by"], tuple(refs), item.get("schema")))
    return steps


def check_proof(steps: Iterable[ProofStep], system="LE", strict_ks: bool | None = None) -> ProofResult:
    sys_ = _system(system)
    steps = list(steps)
    done = []
    for k, st in enumerate(steps, 1):
        def fail(msg):
            return ProofResult(False, k, f"step {k}: {msg}", tuple(done))

        for r in st.refs:
            if not isinstance(r, int) or r < 1 or r >= k:
                return fail(f"reference {r} does not name an earlier step")
        if st.by == "axiom":
            m, reason = explain_axiom(st.formula, sys_, st.schema, strict_ks)
            if m is None:
                return fail(reason)
            done.append(m.describe())
        elif st.by == "mp":
            if len(st.refs) != 2:
                return fail("modus ponens needs two earlier steps")
            a = steps[st.refs[0] - 1].formula
            b = steps[st.refs[1] - 1].formula
            if b != implies(a, st.formula):
                return fail(f"step {st.refs[1]} is not the implication from step {st.refs[0]} to this formula")
            done.append(f"mp({st.refs[0]},{st.refs[1]})")
        elif st.by in sys_.rules:
            if len(st.refs) != 1:
                return fail(f"rule {st.by} needs one earlier step")
            if not sys_.rules[st.by](steps[st.refs[0] - 1].formula, st.formula):
                return fail(f"not an application of {st.by} to step {st.refs[0]}")
            done.append(f"{st.by}({st.refs[0]})")
        else:
            return fail(f"unknown justification {st.by!r} for system {sys_.name}")
    return ProofResult(True, None, "proof accepted", tuple(done))


# --- bounded validity -------------------------------------------------------------------

def _agents_needed(f: Formula):
    modal, aware = set(), set()
    for g in subformulas(f):
        if isinstance(g, (Box, Ke, Le)):
            modal.add(g.agent)
        if isinstance(g, (Aw, Ke, Le)):
            aware.update((g.agent, p) for p in free_vars(g.arg))
        if isinstance(g, Ks):
            raise ValueError("bounded_validity covers the box and explicit fragments; "
                             "use sample_validity for speculative knowledge")
    return sorted(modal), sorted(aware)


def _permute(succ, p):
    out = [0] * len(succ)
    for s, mask in enumerate(succ):
        out[p[s]] = sum(1 << p[t] for t in range(len(succ)) if mask >> t & 1)
    return tuple(out)


def _frames(n: int):
    """Relations on n states up to isomorphism, as tuples of successor bitmasks."""
    seen = set()
    perms = list(itertools.permutations(range(n)))
    for code in range(1 << (n * n)):
        succ = tuple((code >> (s * n)) & ((1 << n) - 1) for s in range(n))
        canon = min(_permute(succ, p) for p in perms)
        if canon in seen:
            continue
        seen.add(canon)
        yield succ


def bounded_validity(f: Formula, max_states: int, agents: Iterable[str] | None = None,
                     cap: int = 200_000_000):
    """A pointed countermodel to ``f`` with at most ``max_states`` states, or ``None``.

    Enumerates relations (up to isomorphism when one agent has a relation),
    valuations of ``v(f)`` and awareness of the atoms each agent's awareness
    operators inspect.  Dynamic operators are reduced away first.
    """
    from .models import Model, PointedModel
    from .translate import reduce_dynamic

    if any(isinstance(g, Dyn) for g in subformulas(f)):
        f = reduce_dynamic(f)
    modal, pairs = _agents_needed(f)
    atoms = sorted(free_vars(f))
    kinds = [("val", p) for p in atoms] + [("aw", pr) for pr in pairs]
    decl_agents = tuple(sorted(set(agents or ()) | set(modal) | {j for j, _ in pairs}))
    for n in range(1, max_states + 1):
        frames = list(_frames(n)) if len(modal) == 1 else [
            tuple((code >> (s * n)) & ((1 << n) - 1) for s in range(n)) for code in range(1 << (n * n))]
        nbits = n * len(kinds)
        total = (len(frames) ** len(modal)) * (1 << nbits) * n
        if total > cap:
            raise EnumerationLimitError(
                f"bounded validity would inspect {total} pointed models at {n} states, over the cap of {cap}")
        rows = np.arange(1 << nbits, dtype=np.int64)
        cols = {}
        for c, kind in enumerate(kinds):
            cols[kind] = np.stack([((rows >> (c * n + s)) & 1).astype(bool) for s in range(n)], axis=1)
        for combo in itertools.product(frames, repeat=len(modal)):
            rel = dict(zip(modal, combo))
            res = _eval_batch(f, n, rel, cols, 1 << nbits)
            bad = np.argwhere(~res)
            if len(bad):
                lab, s = (int(x) for x in bad[0])
                states = [f"s{k}" for k in range(n)]
                r = {ag: [(states[a], states[b]) for a in range(n) for b in range(n) if rel[ag][a] >> b & 1]
                     for ag in modal}
                aware: dict = {ag: {st: [] for st in states} for ag in decl_agents}
                val: dict = {p: [] for p in atoms}
                for c, kind in enumerate(kinds):
                    for k in range(n):
                        if lab >> (c * n + k) & 1:
                            if kind[0] == "val":
                                val[kind[1]].append(states[k])
                            else:
                                aware[kind[1][0]][states[k]].append(kind[1][1])
                m = Model.build(atoms, decl_agents, states, r, aware, val)
                return PointedModel(m, states[s])
    return None


def _eval_batch(f, n, rel, cols, rows):
    memo: dict = {}
    ones = np.ones((rows, n), dtype=bool)

    def aw(agent, g):
        out = ones
        for p in free_vars(g):
            out = out & cols[("aw", (agent, p))]
        return out

    def box(agent, x):
        succ = rel[agent]
        return np.stack([x[:, [t for t in range(n) if succ[s] >> t & 1]].all(axis=1) for s in range(n)], axis=1)

    def dia_(agent, x):
        succ = rel[agent]
        return np.stack([x[:, [t for t in range(n) if succ[s] >> t & 1]].any(axis=1) for s in range(n)], axis=1)

    def ev(g):
        if id(g) in memo:
            return memo[id(g)][1]
        if isinstance(g, Top):
            out = ones
        elif isinstance(g, Atom):
            out = cols[("val", g.name)]
        elif isinstance(g, Not):
            out = ~ev(g.arg)
        elif isinstance(g, And):
            out = ev(g.left) & ev(g.right)
        elif isinstance(g, Aw):
            out = aw(g.agent, g.arg)
        elif isinstance(g, Box):
            out = box(g.agent, ev(g.arg))
        elif isinstance(g, Ke):
            out = aw(g.agent, g.arg) & box(g.agent, ev(g.arg))
        elif isinstance(g, Le):
            out = aw(g.agent, g.arg) & dia_(g.agent, ev(g.arg))
        else:
            raise TypeError(f"unsupported operator in bounded validity: {type(g).__name__}")
        memo[id(g)] = (g, out)
        return out

    return ev(f)


def sample_validity(f: Formula, models: Iterable, ctx=None):
    """First (model, state) among ``models`` where ``f`` fails, or ``None``."""
    from .models import PointedModel
    from .semantics import truth_set

    for m in models:
        ext = truth_set(m, f, ctx)
        for s in m.states:
            if s not in ext:
                return PointedModel(m, s)
    return None
