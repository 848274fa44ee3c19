"""Standard and awareness bisimilarity, characteristic formulas, same knowledge."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

from .syntax import Atom, Aw, Box, Formula, Not, bot, conj, dia, disj

__all__ = [
    "BisimFamily", "standard_bisim", "awareness_bisim", "bounded_awareness_bisim",
    "bounded_standard_bisim", "characteristic_formula", "same_knowledge", "quotient",
    "index_family", "is_bisimulation", "compose",
]


@dataclass(frozen=True)
class BisimFamily:
    """Relations between two models indexed by atom sets.

    A standard bisimulation has the single index ``q``; an awareness
    bisimulation has one slice per member of :func:`index_family`.
    """

    flavor: str
    q: frozenset
    slices: dict

    def relates(self, s, t, q: Iterable[str] | None = None) -> bool:
        key = self.q if q is None else frozenset(q)
        return (s, t) in self.slices.get(key, frozenset())

    def slice(self, q: Iterable[str]) -> frozenset:
        return self.slices.get(frozenset(q), frozenset())

    def to_json(self) -> dict:
        from .models import state_name

        return {
            "flavor": self.flavor,
            "q": sorted(self.q),
            "slices": [
                {"atoms": sorted(k), "pairs": sorted([state_name(a), state_name(b)] for a, b in pairs)}
                for k, pairs in sorted(self.slices.items(), key=lambda kv: (len(kv[0]), sorted(kv[0])))
            ],
        }


def _agents(m1, m2) -> tuple:
    return tuple(dict.fromkeys([*m1.agents, *m2.agents]))


def _local(m1, s, m2, t, q: frozenset, agents, atoms=True) -> bool:
    if atoms:
        for p in q:
            if m1.holds(p, s) != m2.holds(p, t):
                return False
    return all(m1.aware_of(ag, s) & q == m2.aware_of(ag, t) & q for ag in agents)


def _zigzag(m1, s, m2, t, ag, rel) -> bool:
    """forth and back for one agent against the pair set ``rel``."""
    s2 = m2.succ(ag, t)
    s1 = m1.succ(ag, s)
    for x in s1:
        if not any((x, y) in rel for y in s2):
            return False
    for y in s2:
        if not any((x, y) in rel for x in s1):
            return False
    return True


def standard_bisim(pm1, pm2, q: Iterable[str]) -> BisimFamily | None:
    """Greatest ``q`` standard bisimulation, if it relates the two points."""
    m1, m2 = pm1.model, pm2.model
    q = frozenset(q)
    agents = _agents(m1, m2)
    rel = {(s, t) for s in m1.states for t in m2.states if _local(m1, s, m2, t, q, agents)}
    changed = True
    while changed:
        changed = False
        for pair in list(rel):
            if not all(_zigzag(m1, pair[0], m2, pair[1], ag, rel) for ag in agents):
                rel.discard(pair)
                changed = True
    if (pm1.point, pm2.point) not in rel:
        return None
    return BisimFamily("standard", q, {q: frozenset(rel)})


def index_family(m1, m2, q: Iterable[str]) -> list:
    """Closure of ``{q}`` under intersection with awareness sets of both models."""
    q = frozenset(q)
    aw_sets = set()
    for m in (m1, m2):
        for ag in m.agents:
            for s in m.states:
                aw_sets.add(m.aware_of(ag, s))
    fam = {q}
    todo = [q]
    while todo:
        x = todo.pop()
        for a in aw_sets:
            y = x & a
            if y not in fam:
                fam.add(y)
                todo.append(y)
    return sorted(fam, key=lambda k: (len(k), sorted(k)))


def _aware_fixpoint(m1, m2, q: frozenset) -> dict:
    agents = _agents(m1, m2)
    fam = index_family(m1, m2, q)
    rel = {k: {(s, t) for s in m1.states for t in m2.states if _local(m1, s, m2, t, k, agents)} for k in fam}
    changed = True
    while changed:
        changed = False
        for k in fam:
            cur = rel[k]
            for s, t in list(cur):
                for ag in agents:
                    child = rel[k & m1.aware_of(ag, s)]
                    if not _zigzag(m1, s, m2, t, ag, child):
                        cur.discard((s, t))
                        changed = True
                        break
    return {k: frozenset(v) for k, v in rel.items()}


def awareness_bisim(pm1, pm2, q: Iterable[str]) -> BisimFamily | None:
    """Greatest ``q`` awareness bisimulation family, if it relates the points.

    All slices are refined simultaneously; a pair in slice ``Q'`` must have its
    ``i``-successors matched in slice ``Q' & A_i(s)``.
    """
    q = frozenset(q)
    slices = _aware_fixpoint(pm1.model, pm2.model, q)
    if (pm1.point, pm2.point) not in slices[q]:
        return None
    return BisimFamily("aware", q, slices)


def bounded_awareness_bisim(pm1, pm2, q: Iterable[str], depth: int) -> bool:
    """Depth-stratified awareness bisimilarity of the two points."""
    m1, m2 = pm1.model, pm2.model
    agents = _agents(m1, m2)

    @lru_cache(maxsize=None)
    def rel(s, t, k: frozenset, n: int) -> bool:
        if not _local(m1, s, m2, t, k, agents):
            return False
        if n == 0:
            return True
        for ag in agents:
            kk = k & m1.aware_of(ag, s)
            s1, s2 = m1.succ(ag, s), m2.succ(ag, t)
            if not all(any(rel(x, y, kk, n - 1) for y in s2) for x in s1):
                return False
            if not all(any(rel(x, y, kk, n - 1) for x in s1) for y in s2):
                return False
        return True

    return rel(pm1.point, pm2.point, frozenset(q), depth)


def bounded_standard_bisim(pm1, pm2, q: Iterable[str], depth: int) -> bool:
    m1, m2 = pm1.model, pm2.model
    agents = _agents(m1, m2)
    q = frozenset(q)

    @lru_cache(maxsize=None)
    def rel(s, t, n: int) -> bool:
        if not _local(m1, s, m2, t, q, agents):
            return False
        if n == 0:
            return True
        for ag in agents:
            s1, s2 = m1.succ(ag, s), m2.succ(ag, t)
            if not all(any(rel(x, y, n - 1) for y in s2) for x in s1):
                return False
            if not all(any(rel(x, y, n - 1) for x in s1) for y in s2):
                return False
        return True

    return rel(pm1.point, pm2.point, depth)


def is_bisimulation(fam: BisimFamily, m1, m2) -> bool:
    """Check every clause for every pair of every slice."""
    agents = _agents(m1, m2)
    for k, pairs in fam.slices.items():
        for s, t in pairs:
            if not _local(m1, s, m2, t, k, agents):
                return False
            for ag in agents:
                child = k if fam.flavor == "standard" else k & m1.aware_of(ag, s)
                if not _zigzag(m1, s, m2, t, ag, fam.slices.get(child, frozenset())):
                    return False
    return True


def compose(f12: BisimFamily, f23: BisimFamily) -> BisimFamily:
    """Slice-wise relational composition over the indices both families share."""
    slices = {}
    for k in f12.slices.keys() & f23.slices.keys():
        right: dict = {}
        for b, c in f23.slices[k]:
            right.setdefault(b, set()).add(c)
        slices[k] = frozenset((a, c) for a, b in f12.slices[k] for c in right.get(b, ()))
    return BisimFamily(f12.flavor, f12.q, slices)


def quotient(m, q: Iterable[str]):
    """Quotient of ``m`` by ``q`` standard bisimilarity.

    Returns ``(model, cls_of)``; each class is named by its first member.
    """
    from .models import Model, PointedModel

    q = frozenset(q)
    fam = standard_bisim(PointedModel(m, m.states[0]), PointedModel(m, m.states[0]), q)
    rel = fam.slices[q]
    cls_of = {}
    for s in m.states:
        for r in m.states:
            if r in cls_of.values() and (s, r) in rel:
                cls_of[s] = r
                break
        else:
            cls_of[s] = s
    reps = tuple(dict.fromkeys(cls_of[s] for s in m.states))
    rel_q = {ag: {r: frozenset(cls_of[t] for t in m.succ(ag, r)) for r in reps} for ag in m.agents}
    aware = {ag: {r: m.aware_of(ag, r) & q for r in reps} for ag in m.agents}
    val = {p: frozenset(r for r in reps if m.holds(p, r)) for p in q}
    return Model(q, m.agents, reps, rel_q, aware, val), cls_of


def _describe(m, s, q, agents) -> Formula:
    lits = []
    for p in sorted(q):
        lits.append(Atom(p) if m.holds(p, s) else Not(Atom(p)))
    for ag in agents:
        for p in sorted(q):
            a = Aw(ag, Atom(p))
            lits.append(a if p in m.aware_of(ag, s) else Not(a))
    return conj(*lits)


def characteristic_formula(pm, q: Iterable[str], depth: int, agents: Iterable[str] | None = None) -> Formula:
    """Formula true exactly at pointed models that are depth-bounded ``q``
    standard bisimilar to ``pm``."""
    m = pm.model
    q = frozenset(q)
    agents = tuple(agents) if agents is not None else m.agents
    memo: dict = {}

    def chi(s, n):
        key = (s, n)
        if key in memo:
            return memo[key]
        parts = [_describe(m, s, q, agents)]
        if n > 0:
            for ag in agents:
                succ = [t for t in m.states if t in m.succ(ag, s)]
                if not succ:
                    parts.append(Box(ag, bot()))
                    continue
                kids = list(dict.fromkeys(chi(t, n - 1) for t in succ))
                parts.extend(dia(ag, k) for k in kids)
                parts.append(Box(ag, disj(*kids)))
        out = conj(*parts)
        memo[key] = out
        return out

    return chi(pm.point, depth)


def same_knowledge(pm1, pm2, agent: str, kind: str = "explicit") -> bool:
    """Whether the two pointed models look alike to ``agent``.

    Awareness bisimilarity at ``A_agent(s)`` where the root is exempt from the
    atoms clause, from other agents' awareness and from other agents' forth
    and back.
    """
    if kind not in ("explicit", "speculative"):
        raise ValueError(f"unknown knowledge kind {kind!r}")
    m1, m2 = pm1.model, pm2.model
    s, t = pm1.point, pm2.point
    a1, a2 = m1.aware_of(agent, s), m2.aware_of(agent, t)
    if a1 != a2:
        raise ValueError(
            f"agent {agent!r} has different awareness at the two points: {sorted(a1)} vs {sorted(a2)}")
    slices = _aware_fixpoint(m1, m2, a1)
    return _zigzag(m1, s, m2, t, agent, slices[a1])
