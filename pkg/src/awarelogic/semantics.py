"""Model checking for implicit, explicit, speculative and dynamic knowledge."""
from __future__ import annotations

import itertools
from functools import lru_cache
from dataclasses import dataclass, field
from typing import Iterable

from .syntax import (
    TOP, And, Atom, Aw, Box, Dyn, Formula, Ke, Ks, Le, Not, Top, conj,
    free_vars, modal_depth, subformulas,
)

__all__ = [
    "EvalContext", "OracleLimitError", "Evaluator", "truth_set", "satisfies",
    "ks_satisfies", "ks_oracle", "modal_equiv_bounded", "EnumerationLimitError",
    "enumerate_formulas", "FRAGMENTS",
]

DEFAULT_ORACLE_CAP = 200_000

_fv = lru_cache(maxsize=200_000)(free_vars)


class OracleLimitError(RuntimeError):
    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"speculation oracle enumerated {count} tree nodes, over the cap of {cap}")


class EnumerationLimitError(RuntimeError):
    pass


@dataclass
class EvalContext:
    """Evaluation settings.

    ``ks_strategy`` is ``"auto"`` (oracle when the K^S subformula has modal
    depth at most 2, falling back to interpolation if the oracle hits its cap),
    ``"oracle"`` or ``"interpolation"``.  ``oracle_depth`` of ``None`` means
    the modal depth of the body.
    """

    library: dict = field(default_factory=dict)
    ks_strategy: str = "auto"
    oracle_depth: int | None = None
    branching: int = 2
    cap: int = DEFAULT_ORACLE_CAP

    def __post_init__(self):
        if self.ks_strategy not in ("auto", "oracle", "interpolation"):
            raise ValueError(f"unknown K^S strategy {self.ks_strategy!r}")

    def bounds(self) -> dict:
        return {"ks_strategy": self.ks_strategy, "oracle_depth": self.oracle_depth,
                "branching": self.branching, "cap": self.cap}


_DEFAULT_CTX = EvalContext()


class Evaluator:
    """Extensions of formulas on one model, memoized."""

    def __init__(self, model, ctx: EvalContext | None = None):
        self.m = model
        self.ctx = ctx or _DEFAULT_CTX
        self.all = frozenset(model.states)
        self._ext: dict = {}
        self._updates: dict = {}

    def ext(self, f: Formula) -> frozenset:
        E = self._ext
        hit = E.get(f)
        if hit is not None:
            return hit
        # post-order walk that stops at memoized subformulas
        stack = [(f, False)]
        while stack:
            g, ready = stack.pop()
            if g in E:
                continue
            if ready or isinstance(g, (Top, Atom, Aw, Ks, Dyn)):
                E[g] = self._compute(g)
                continue
            stack.append((g, True))
            if isinstance(g, And):
                stack.append((g.right, False))
                stack.append((g.left, False))
            else:
                stack.append((g.arg, False))
        return E[f]

    def _compute(self, f: Formula) -> frozenset:
        m = self.m
        E = self._ext
        if isinstance(f, Top):
            return self.all
        if isinstance(f, Atom):
            return m.val.get(f.name, frozenset())
        if isinstance(f, Not):
            return self.all - E[f.arg]
        if isinstance(f, And):
            return E[f.left] & E[f.right]
        if isinstance(f, Box):
            body = E[f.arg]
            return frozenset(s for s in m.states if m.succ(f.agent, s) <= body)
        if isinstance(f, Aw):
            v = _fv(f.arg)
            return frozenset(s for s in m.states if v <= m.aware_of(f.agent, s))
        if isinstance(f, Ke):
            v = _fv(f.arg)
            body = E[f.arg]
            return frozenset(s for s in m.states
                             if v <= m.aware_of(f.agent, s) and m.succ(f.agent, s) <= body)
        if isinstance(f, Le):
            v = _fv(f.arg)
            body = E[f.arg]
            return frozenset(s for s in m.states
                             if v <= m.aware_of(f.agent, s) and m.succ(f.agent, s) & body)
        if isinstance(f, Ks):
            return self._ks(f)
        if isinstance(f, Dyn):
            return self._dyn(f)
        raise TypeError(f"not a formula: {f!r}")

    def _dyn(self, f: Dyn) -> frozenset:
        from .models import update_model

        am = f.action
        pre = self.ext(am.pre[f.point])
        if not pre:
            return self.all
        upd = self._updates.get(am)
        if upd is None:
            upd = Evaluator(update_model(self.m, am, self.ctx), self.ctx)
            self._updates[am] = upd
        body = upd.ext(f.arg)
        return frozenset(s for s in self.m.states if s not in pre or (s, f.point) in body)

    def _ks(self, f: Ks) -> frozenset:
        strategy = self.ctx.ks_strategy
        if strategy == "auto":
            strategy = "oracle" if modal_depth(f) <= 2 else "interpolation"
            if strategy == "oracle":
                try:
                    return self._ks_oracle(f)
                except OracleLimitError:
                    strategy = "interpolation"
        if strategy == "oracle":
            return self._ks_oracle(f)
        from .forgetting import speculative_translate

        return self.ext(speculative_translate(f))

    def _ks_oracle(self, f: Ks) -> frozenset:
        search = _ModelSearch(self.m, f.arg, self.ctx)
        return frozenset(s for s in self.m.states if search.ks_at(s, f.agent))


def truth_set(model, f: Formula, ctx: EvalContext | None = None) -> frozenset:
    """States of ``model`` where ``f`` holds."""
    return Evaluator(model, ctx).ext(f)


def satisfies(pm, f: Formula, ctx: EvalContext | None = None) -> bool:
    return pm.point in truth_set(pm.model, f, ctx)


def ks_satisfies(pm, agent: str, body: Formula, ctx: EvalContext | None = None) -> bool:
    return satisfies(pm, Ks(agent, body), ctx)


# --- speculation oracle ---------------------------------------------------------
#
# A variant of (M, t) at keep-set Q is searched as a finite tree.  Nodes are
# interned as (val, aw, kids) with kids a tuple of (agent, frozenset of node
# ids).  Only the bits the body can observe at each level are free; everything
# else is copied from the state being imitated.

class _Needs:
    """Per tree level: atoms read, (agent, atom) awareness pairs read, agents
    whose successors are inspected."""

    def __init__(self, body: Formula, depth: int):
        self.depth = depth
        self.val = [set() for _ in range(depth + 1)]
        self.aw = [set() for _ in range(depth + 1)]
        self.modal = [set() for _ in range(depth + 1)]
        self._visit(body, 0, False)
        self.atoms = frozenset(free_vars(body))
        self.val = [frozenset(x) for x in self.val]
        self.aw = [frozenset(x) for x in self.aw]
        self.modal = [tuple(sorted(x)) for x in self.modal]
        pairs = set()
        for x in self.aw:
            pairs |= x
        self.agents = frozenset(j for j, _ in pairs) | frozenset(j for x in self.modal for j in x)

    def _visit(self, f, level, nested):
        if level > self.depth:
            return
        if isinstance(f, Top):
            return
        if isinstance(f, Atom):
            self.val[level].add(f.name)
        elif isinstance(f, Not):
            self._visit(f.arg, level, nested)
        elif isinstance(f, And):
            self._visit(f.left, level, nested)
            self._visit(f.right, level, nested)
        elif isinstance(f, Aw):
            self.aw[level].update((f.agent, p) for p in free_vars(f.arg))
        elif isinstance(f, Dyn):
            raise ValueError("the speculation oracle needs a body without dynamic operators")
        else:
            if not isinstance(f, Box) or nested:
                self.aw[level].update((f.agent, p) for p in free_vars(f.arg))
            self.modal[level].add(f.agent)
            self._visit(f.arg, level + 1, nested or isinstance(f, Ks))


class _Store:
    """Interned tree nodes shared by all searches of one query."""

    def __init__(self, cap: int):
        self.ids: dict = {}
        self.nodes: list = []
        self.cap = cap
        self.sat: dict = {}
        self.searches: dict = {}

    def intern(self, val, aw, kids) -> int:
        key = (val, aw, kids)
        i = self.ids.get(key)
        if i is None:
            i = len(self.nodes)
            if i >= self.cap:
                raise OracleLimitError(i + 1, self.cap)
            self.ids[key] = i
            self.nodes.append(key)
        return i

    def kids(self, n: int, agent: str) -> frozenset:
        for ag, ks in self.nodes[n][2]:
            if ag == agent:
                return ks
        return frozenset()


class _Search:
    """Enumerate variants of base points (model states or tree nodes)."""

    def __init__(self, store: _Store, body: Formula, depth: int, branching: int):
        self.store = store
        self.body = body
        self.needs = _Needs(body, depth)
        self.depth = depth
        self.branching = branching
        self.memo: dict = {}

    # base accessors, overridden for model bases
    def base_val(self, x) -> frozenset:
        return self.store.nodes[x][0]

    def base_aw(self, x) -> frozenset:
        return self.store.nodes[x][1]

    def base_succ(self, agent, x) -> frozenset:
        return self.store.kids(x, agent)

    def variants(self, x, keep: frozenset, level: int) -> list:
        key = (x, keep, level)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        nd = self.needs
        free_atoms = sorted(nd.val[level] - keep)
        base_val = self.base_val(x) & nd.atoms
        fixed_val = base_val - set(free_atoms)
        pairs = nd.aw[level]
        free_pairs = sorted(pr for pr in pairs if pr[1] not in keep)
        fixed_aw = frozenset(pr for pr in pairs if pr[1] in keep) & self.base_aw(x)
        labels = []
        for bits in itertools.product((False, True), repeat=len(free_atoms)):
            val = fixed_val | frozenset(p for p, b in zip(free_atoms, bits) if b)
            for abits in itertools.product((False, True), repeat=len(free_pairs)):
                aw = fixed_aw | frozenset(pr for pr, b in zip(free_pairs, abits) if b)
                labels.append((val, aw))
        kid_options = []
        if level < self.depth:
            base_aw = self.base_aw(x)
            for j in nd.modal[level]:
                kid_options.append((j, self._kid_sets(x, j, keep, base_aw, level)))
        out = []
        combos = list(itertools.product(*[opts for _, opts in kid_options]))
        for val, aw in labels:
            for combo in combos:
                kids = tuple((j, ks) for (j, _), ks in zip(kid_options, combo))
                out.append(self.store.intern(val, aw, kids))
        self.memo[key] = out
        return out

    def _kid_sets(self, x, j, keep, base_aw, level) -> list:
        succ = list(self.base_succ(j, x))
        if not succ:
            return [frozenset()]
        keep_j = frozenset(p for p in keep if (j, p) in base_aw)
        cands: dict = {}
        for y in succ:
            for n in self.variants(y, keep_j, level + 1):
                cands.setdefault(n, set()).add(y)
        items = list(cands.items())
        width = max(self.branching, len(succ))
        need = set(succ)
        out = []
        for k in range(1, min(width, len(items)) + 1):
            for combo in itertools.combinations(items, k):
                covered = set()
                for _, ys in combo:
                    covered |= ys
                if covered >= need:
                    out.append(frozenset(n for n, _ in combo))
                    if len(out) > self.store.cap:
                        raise OracleLimitError(len(out), self.store.cap)
        return out

    # truth at interned nodes

    def holds(self, n: int, f: Formula) -> bool:
        key = (n, f)
        hit = self.store.sat.get(key)
        if hit is not None:
            return hit
        val, aw, _ = self.store.nodes[n]
        if isinstance(f, Top):
            out = True
        elif isinstance(f, Atom):
            out = f.name in val
        elif isinstance(f, Not):
            out = not self.holds(n, f.arg)
        elif isinstance(f, And):
            out = self.holds(n, f.left) and self.holds(n, f.right)
        elif isinstance(f, Aw):
            out = all((f.agent, p) in aw for p in free_vars(f.arg))
        elif isinstance(f, Box):
            out = all(self.holds(c, f.arg) for c in self.store.kids(n, f.agent))
        elif isinstance(f, Ke):
            out = (all((f.agent, p) in aw for p in free_vars(f.arg))
                   and all(self.holds(c, f.arg) for c in self.store.kids(n, f.agent)))
        elif isinstance(f, Le):
            out = (all((f.agent, p) in aw for p in free_vars(f.arg))
                   and any(self.holds(c, f.arg) for c in self.store.kids(n, f.agent)))
        elif isinstance(f, Ks):
            inner = self.store.searches.get(f.arg)
            if inner is None:
                inner = _Search(self.store, f.arg, modal_depth(f.arg), self.branching)
                self.store.searches[f.arg] = inner
            keep = frozenset(p for p in free_vars(f.arg) if (f.agent, p) in aw)
            out = all(inner.holds(v, f.arg)
                      for c in self.store.kids(n, f.agent)
                      for v in inner.variants(c, keep, 0))
        else:
            raise TypeError(f"unsupported operator in speculation oracle: {f!r}")
        self.store.sat[key] = out
        return out


class _ModelSearch(_Search):
    """Search whose base points are states of a model."""

    def __init__(self, model, body: Formula, ctx: EvalContext, depth: int | None = None):
        md = modal_depth(body)
        depth = ctx.oracle_depth if depth is None else depth
        if depth is None:
            depth = md
        if depth < md:
            raise ValueError(f"oracle depth {depth} is below the modal depth {md} of the body")
        super().__init__(_Store(ctx.cap), body, depth, ctx.branching)
        self.m = model
        atoms = self.needs.atoms
        agents = self.needs.agents
        self._val = {s: model.label(s) & atoms for s in model.states}
        self._aw = {s: frozenset((j, p) for j in agents for p in model.aware_of(j, s) & atoms)
                    for s in model.states}

    def base_val(self, x):
        return self._val[x]

    def base_aw(self, x):
        return self._aw[x]

    def base_succ(self, agent, x):
        return self.m.succ(agent, x)

    def ks_at(self, s, agent: str) -> bool:
        keep = self.m.aware_of(agent, s) & self.needs.atoms
        for t in self.m.succ(agent, s):
            for n in self.variants(t, keep, 0):
                if not self.holds(n, self.body):
                    return False
        return True


def ks_oracle(pm, agent: str, body: Formula, depth: int | None = None, branching: int = 2,
              cap: int = DEFAULT_ORACLE_CAP) -> bool:
    """Speculative knowledge by bounded search for a falsifying variant.

    Every candidate is a tree of depth ``depth`` whose nodes imitate states of
    the model on the kept atoms, with at most ``max(branching, #successors)``
    children per agent.  Raises :class:`OracleLimitError` past ``cap`` nodes.
    """
    ctx = EvalContext(ks_strategy="oracle", oracle_depth=depth, branching=branching, cap=cap)
    search = _ModelSearch(pm.model, body, ctx)
    return search.ks_at(pm.point, agent)


# --- bounded modal equivalence ---------------------------------------------------------

FRAGMENTS = ("box", "explicit", "speculative")


def _union(m1, m2):
    from .models import Model

    states = tuple((0, s) for s in m1.states) + tuple((1, s) for s in m2.states)
    agents = tuple(dict.fromkeys([*m1.agents, *m2.agents]))
    atoms = m1.atoms | m2.atoms
    rel = {ag: {(k, s): frozenset((k, t) for t in m.succ(ag, s)) for k, m in ((0, m1), (1, m2)) for s in m.states}
           for ag in agents}
    aware = {ag: {(k, s): m.aware_of(ag, s) for k, m in ((0, m1), (1, m2)) for s in m.states} for ag in agents}
    val = {p: frozenset((k, s) for k, m in ((0, m1), (1, m2)) for s in m.states if m.holds(p, s)) for p in atoms}
    return Model(atoms, agents, states, rel, aware, val)


def modal_equiv_bounded(m, m2, fragment: str, q: Iterable[str], depth: int, size: int,
                        agents: Iterable[str] | None = None, cap: int = 2_000_000,
                        ctx: EvalContext | None = None) -> Formula | None:
    """A formula of the fragment over atoms ``q`` with modal depth at most
    ``depth`` and at most ``size`` nodes that is true at exactly one of the two
    points, or ``None``.

    Formulas are enumerated up to equivalence on the disjoint union of the
    two models (same extension and same free variables), which is exact for
    the box and explicit fragments.  In the speculative fragment a K^S
    argument is judged over all models, so arguments are enumerated
    syntactically instead, up to a canonical form.
    """
    if fragment not in FRAGMENTS:
        raise ValueError(f"unknown fragment {fragment!r}")
    u = _union(m.model, m2.model)
    agents = tuple(sorted(agents)) if agents is not None else u.agents
    q = tuple(sorted(q))
    ev = Evaluator(u, ctx or EvalContext(ks_strategy="interpolation"))
    a, b = (0, m.point), (1, m2.point)
    enum = _SemanticEnum(ev, fragment, q, agents, depth, size, cap, (a, b))
    return enum.run()


class _SemanticEnum:
    def __init__(self, ev, fragment, q, agents, depth, size, cap, points):
        self.ev = ev
        self.u = ev.m
        self.fragment = fragment
        self.q = q
        self.agents = agents
        self.depth = depth
        self.size = size
        self.cap = cap
        self.a, self.b = points
        # classes[n] : list of (ext, v, d, formula) first reached with n nodes
        self.seen: dict = {}
        self.by_size: list = [[] for _ in range(size + 1)]
        self.count = 0
        self.syn = None

    def _add(self, f, ext, v, d, n):
        if d > self.depth or n > self.size:
            return None
        key = (ext, v)
        best = self.seen.get(key)
        if best is not None and any(bd <= d for bd in best):
            return None
        self.seen.setdefault(key, []).append(d)
        self.by_size[n].append((ext, v, d, f))
        self.count += 1
        if self.count > self.cap:
            raise EnumerationLimitError(f"formula enumeration exceeded the cap of {self.cap}")
        if (self.a in ext) != (self.b in ext):
            return f
        return None

    def run(self):
        u = self.u
        all_states = frozenset(u.states)
        hit = self._add(TOP, all_states, frozenset(), 0, 1)
        if hit is not None:
            return hit
        for p in self.q:
            hit = self._add(Atom(p), u.val.get(p, frozenset()), frozenset({p}), 0, 1)
            if hit is not None:
                return hit
        for n in range(2, self.size + 1):
            hit = self._level(n)
            if hit is not None:
                return hit
        return None

    def _level(self, n):
        u = self.u
        all_states = frozenset(u.states)
        # unary
        for ext, v, d, f in list(self.by_size[n - 1]):
            hit = self._add(Not(f), all_states - ext, v, d, n)
            if hit is not None:
                return hit
            for ag in self.agents:
                aw = frozenset(s for s in u.states if v <= u.aware_of(ag, s))
                hit = self._add(Aw(ag, f), aw, v, 0, n)
                if hit is not None:
                    return hit
                if d + 1 > self.depth:
                    continue
                if self.fragment == "box":
                    g = Box(ag, f)
                    e = frozenset(s for s in u.states if u.succ(ag, s) <= ext)
                elif self.fragment == "explicit":
                    g = Ke(ag, f)
                    e = frozenset(s for s in u.states if u.succ(ag, s) <= ext) & aw
                else:
                    continue
                hit = self._add(g, e, v, d + 1, n)
                if hit is not None:
                    return hit
        if self.fragment == "speculative":
            hit = self._ks_level(n)
            if hit is not None:
                return hit
        # binary
        for k in range(1, n - 1):
            left = self.by_size[k]
            right = self.by_size[n - 1 - k]
            for i, (e1, v1, d1, f1) in enumerate(left):
                for j, (e2, v2, d2, f2) in enumerate(right):
                    if k == n - 1 - k and j < i:
                        continue
                    hit = self._add(And(f1, f2), e1 & e2, v1 | v2, max(d1, d2), n)
                    if hit is not None:
                        return hit
        return None

    def _ks_level(self, n):
        if self.depth < 1:
            return None
        if self.syn is None:
            self.syn = _canonical_formulas(self.q, self.agents, self.depth - 1, self.size - 1,
                                           ("ks", "aw"), self.cap)
        for f in self.syn.get(n - 1, ()):
            v = free_vars(f)
            d = modal_depth(f)
            for ag in self.agents:
                g = Ks(ag, f)
                hit = self._add(g, self.ev.ext(g), v, d + 1, n)
                if hit is not None:
                    return hit
        return None


def enumerate_formulas(atoms: Iterable[str], agents: Iterable[str], depth: int, size: int,
                       ops: Iterable[str] = ("box",), cap: int = 2_000_000) -> list:
    """Every formula over ``atoms`` built from top, negation, conjunction and
    the modal ``ops`` (any of ``box``, ``ks``, ``aw``) with modal depth at most
    ``depth`` and at most ``size`` nodes, up to a syntactic normal form."""
    by_size = _canonical_formulas(tuple(sorted(atoms)), tuple(agents), depth, size, frozenset(ops), cap)
    return [f for n in sorted(by_size) for f in by_size[n]]


def _canonical_formulas(q, agents, depth, size, ops, cap) -> dict:
    """Formulas by node count, deduplicated up to commutativity, associativity
    and idempotence of conjunction, double negation, and awareness depending
    only on free variables."""
    from .syntax import size as fsize

    by_size: dict = {n: [] for n in range(1, size + 1)}
    seen: set = set()
    total = 0

    def canon(f):
        if isinstance(f, Not) and isinstance(f.arg, Not):
            return canon(f.arg.arg)
        if isinstance(f, And):
            parts = set()
            stack = [f]
            while stack:
                g = stack.pop()
                if isinstance(g, And):
                    stack.extend((g.left, g.right))
                elif not isinstance(g, Top):
                    parts.add(g)
            if not parts:
                return TOP
            return conj(*sorted(parts, key=repr))
        if isinstance(f, Aw):
            return Aw(f.agent, conj(*(Atom(p) for p in sorted(free_vars(f.arg)))))
        return f

    def add(f, n):
        nonlocal total
        if n > size or modal_depth(f) > depth:
            return
        c = canon(f)
        if c in seen:
            return
        seen.add(c)
        k = fsize(c)
        if k > size:
            return
        by_size[k].append(c)
        total += 1
        if total > cap:
            raise EnumerationLimitError(f"formula enumeration exceeded the cap of {cap}")

    add(TOP, 1)
    for p in q:
        add(Atom(p), 1)
    for n in range(2, size + 1):
        for f in list(by_size[n - 1]):
            add(Not(f), n)
            for ag in agents:
                if "aw" in ops:
                    add(Aw(ag, f), n)
                if "box" in ops and modal_depth(f) < depth:
                    add(Box(ag, f), n)
                if "ks" in ops and modal_depth(f) < depth:
                    add(Ks(ag, f), n)
        for k in range(1, n - 1):
            for f1 in list(by_size[k]):
                for f2 in list(by_size[n - 1 - k]):
                    add(And(f1, f2), n)
    return by_size
