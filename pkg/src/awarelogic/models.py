"""Epistemic awareness models, action models, product update and change synthesis."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Iterable, Mapping

from .syntax import (
    TOP, Atom, Formula, Universe, action_vars, bot, free_vars, parse_formula,
    print_formula,
)

__all__ = [
    "ModelError", "Model", "PointedModel", "ActionModel", "PointedAction",
    "load_model", "dump_model", "load_action_model", "dump_action_model",
    "update_model", "product_update", "builtin_action", "synthesize_change",
    "state_name",
]


class ModelError(ValueError):
    pass


def state_name(s: Any) -> str:
    if isinstance(s, tuple):
        return "(" + ",".join(state_name(x) for x in s) + ")"
    return str(s)


@dataclass(frozen=True, eq=False)
class Model:
    """Finite epistemic awareness model.

    ``rel[agent][state]`` is the successor set, ``aware[agent][state]`` the
    awareness set and ``val[atom]`` the set of states where the atom holds.
    Agents and states missing from ``rel``/``aware`` have no successors and
    are aware of nothing.
    """

    atoms: frozenset
    agents: tuple
    states: tuple
    rel: Mapping
    aware: Mapping
    val: Mapping

    def succ(self, agent: str, s) -> frozenset:
        return self.rel.get(agent, {}).get(s, frozenset())

    def aware_of(self, agent: str, s) -> frozenset:
        return self.aware.get(agent, {}).get(s, frozenset())

    def holds(self, atom: str, s) -> bool:
        return s in self.val.get(atom, ())

    def label(self, s) -> frozenset:
        return frozenset(p for p, ext in self.val.items() if s in ext)

    def edges(self, agent: str):
        for s, ts in self.rel.get(agent, {}).items():
            for t in ts:
                yield s, t

    def dead_ends(self, agents: Iterable[str] | None = None):
        for ag in self.agents if agents is None else agents:
            for s in self.states:
                if not self.succ(ag, s):
                    yield s, ag

    @classmethod
    def build(cls, atoms, agents, states, rel=None, aware=None, val=None) -> "Model":
        """Validated constructor.  ``rel`` maps agents to iterables of pairs."""
        states = tuple(states)
        if not states:
            raise ModelError("a model needs a non-empty set of states")
        if len(set(states)) != len(states):
            raise ModelError("duplicate state names")
        atoms = frozenset(atoms)
        agents = tuple(agents)
        sset = set(states)
        r: dict = {}
        for ag, pairs in (rel or {}).items():
            if ag not in agents:
                raise ModelError(f"relation for undeclared agent {ag!r}")
            succ: dict = {s: set() for s in states}
            for pair in pairs:
                s, t = pair
                for x in (s, t):
                    if x not in sset:
                        raise ModelError(f"relation of {ag!r} uses undeclared state {x!r}")
                succ[s].add(t)
            r[ag] = {s: frozenset(ts) for s, ts in succ.items()}
        a: dict = {}
        for ag, per_state in (aware or {}).items():
            if ag not in agents:
                raise ModelError(f"awareness for undeclared agent {ag!r}")
            a[ag] = {}
            for s, ps in per_state.items():
                if s not in sset:
                    raise ModelError(f"awareness of {ag!r} at undeclared state {s!r}")
                ps = frozenset(ps)
                if not ps <= atoms:
                    raise ModelError(f"awareness of {ag!r} at {s!r} uses undeclared atoms {sorted(ps - atoms)}")
                a[ag][s] = ps
        v: dict = {}
        for p, ext in (val or {}).items():
            if p not in atoms:
                raise ModelError(f"valuation for undeclared atom {p!r}")
            ext = frozenset(ext)
            if not ext <= sset:
                raise ModelError(f"valuation of {p!r} uses undeclared states {sorted(map(str, ext - sset))}")
            v[p] = ext
        for p in atoms:
            v.setdefault(p, frozenset())
        return cls(atoms, agents, states, r, a, v)

    def restrict(self, keep: Iterable) -> "Model":
        """Submodel on ``keep`` (relations cut down to it)."""
        keep = [s for s in self.states if s in set(keep)]
        ks = set(keep)
        rel = {ag: {s: succ[s] & ks for s in keep} for ag, succ in self.rel.items()}
        aware = {ag: {s: m[s] for s in keep if s in m} for ag, m in self.aware.items()}
        val = {p: ext & ks for p, ext in self.val.items()}
        return Model(self.atoms, self.agents, tuple(keep), rel, aware, val)


@dataclass(frozen=True)
class PointedModel:
    model: Model
    point: Any

    def __post_init__(self):
        if self.point not in set(self.model.states):
            raise ModelError(f"point {self.point!r} is not a state of the model")


def _str_list(x, what):
    if not isinstance(x, list) or not all(isinstance(y, str) for y in x):
        raise ModelError(f"{what} must be a list of strings")
    return x


def load_model(document) -> Model:
    """Build a model from a JSON document (string, bytes or already-decoded dict)."""
    doc = json.loads(document) if isinstance(document, (str, bytes)) else document
    if not isinstance(doc, dict):
        raise ModelError("model document must be a JSON object")
    for key in ("atoms", "agents", "states"):
        if key not in doc:
            raise ModelError(f"model document lacks {key!r}")
    unknown = set(doc) - {"atoms", "agents", "states", "rel", "aware", "val", "name"}
    if unknown:
        raise ModelError(f"unknown keys in model document: {sorted(unknown)}")
    atoms = _str_list(doc["atoms"], "atoms")
    agents = _str_list(doc["agents"], "agents")
    states = _str_list(doc["states"], "states")
    rel = {}
    for ag, pairs in doc.get("rel", {}).items():
        if not isinstance(pairs, list) or not all(isinstance(p, list) and len(p) == 2 for p in pairs):
            raise ModelError(f"relation of {ag!r} must be a list of [state, state] pairs")
        rel[ag] = [tuple(p) for p in pairs]
    return Model.build(atoms, agents, states, rel, doc.get("aware", {}), doc.get("val", {}))


def dump_model(m: Model) -> dict:
    names = {s: state_name(s) for s in m.states}
    return {
        "atoms": sorted(m.atoms),
        "agents": list(m.agents),
        "states": [names[s] for s in m.states],
        "rel": {ag: sorted([names[s], names[t]] for s, t in m.edges(ag)) for ag in m.agents if ag in m.rel},
        "aware": {ag: {names[s]: sorted(ps) for s, ps in per.items()} for ag, per in m.aware.items()},
        "val": {p: sorted(names[s] for s in ext) for p, ext in sorted(m.val.items())},
    }


# --- action models ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ActionModel:
    """Finite epistemic awareness action model.

    ``post[action]`` is partial: atoms without an entry keep their value.
    ``default`` names the action used when a formula writes ``[act NAME]``.
    """

    name: str
    agents: tuple
    actions: tuple
    rel: Mapping
    aware_plus: Mapping
    aware_minus: Mapping
    pre: Mapping
    post: Mapping
    default: str | None = None

    def __post_init__(self):
        if not self.actions:
            raise ModelError("an action model needs a non-empty set of actions")
        for ag in self.agents:
            for a in self.actions:
                plus = self.aware_plus.get(ag, {}).get(a, frozenset())
                minus = self.aware_minus.get(ag, {}).get(a, frozenset())
                if plus & minus:
                    raise ModelError(
                        f"disjointness violated: agent {ag!r} at action {a!r} both gains and loses {sorted(plus & minus)}")
        key = (
            self.name, self.agents, self.actions, self.default,
            tuple((ag, tuple(sorted((a, tuple(sorted(ts))) for a, ts in self.rel.get(ag, {}).items()))) for ag in self.agents),
            tuple((ag, tuple(sorted((a, tuple(sorted(ps))) for a, ps in self.aware_plus.get(ag, {}).items() if ps))) for ag in self.agents),
            tuple((ag, tuple(sorted((a, tuple(sorted(ps))) for a, ps in self.aware_minus.get(ag, {}).items() if ps))) for ag in self.agents),
            tuple((a, self.pre[a]) for a in self.actions),
            tuple((a, tuple(sorted(self.post.get(a, {}).items()))) for a in self.actions),
        )
        object.__setattr__(self, "_key", key)
        object.__setattr__(self, "_hash", hash(key))

    def __eq__(self, other):
        return isinstance(other, ActionModel) and (self is other or self._key == other._key)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"ActionModel({self.name!r}, actions={self.actions!r})"

    def succ(self, agent: str, a) -> frozenset:
        return self.rel.get(agent, {}).get(a, frozenset())

    def plus(self, agent: str, a) -> frozenset:
        return self.aware_plus.get(agent, {}).get(a, frozenset())

    def minus(self, agent: str, a) -> frozenset:
        return self.aware_minus.get(agent, {}).get(a, frozenset())

    def postcondition(self, a, atom: str) -> Formula:
        return self.post.get(a, {}).get(atom, Atom(atom))


@dataclass(frozen=True)
class PointedAction:
    action_model: ActionModel
    point: str

    def __post_init__(self):
        if self.point not in self.action_model.actions:
            raise ModelError(f"point {self.point!r} is not an action of {self.action_model.name!r}")


def load_action_model(document, universe: Universe | None = None) -> ActionModel:
    """Action model from JSON.  Pre/postconditions are concrete-syntax formulas."""
    doc = json.loads(document) if isinstance(document, (str, bytes)) else document
    if not isinstance(doc, dict):
        raise ModelError("action model document must be a JSON object")
    for key in ("name", "actions"):
        if key not in doc:
            raise ModelError(f"action model document lacks {key!r}")
    unknown = set(doc) - {"name", "atoms", "agents", "actions", "rel", "aware_plus", "aware_minus", "pre", "post", "point"}
    if unknown:
        raise ModelError(f"unknown keys in action model document: {sorted(unknown)}")
    if universe is None:
        universe = Universe(doc.get("atoms", []), doc.get("agents", []))
    atoms = set(universe.atoms) | set(doc.get("atoms", []))
    agents = tuple(dict.fromkeys([*universe.agents, *doc.get("agents", [])]))
    u = Universe(atoms, agents, universe.actions)
    actions = tuple(_str_list(doc["actions"], "actions"))
    if not actions:
        raise ModelError("an action model needs a non-empty set of actions")
    aset = set(actions)

    def check_action(a, where):
        if a not in aset:
            raise ModelError(f"{where} refers to undeclared action {a!r}")

    rel = {}
    for ag, pairs in doc.get("rel", {}).items():
        if ag not in agents:
            raise ModelError(f"relation for undeclared agent {ag!r}")
        succ = {a: set() for a in actions}
        for a, b in pairs:
            check_action(a, "rel")
            check_action(b, "rel")
            succ[a].add(b)
        rel[ag] = {a: frozenset(bs) for a, bs in succ.items()}

    def sets(key):
        out = {}
        for ag, per in doc.get(key, {}).items():
            if ag not in agents:
                raise ModelError(f"{key} for undeclared agent {ag!r}")
            out[ag] = {}
            for a, ps in per.items():
                check_action(a, key)
                bad = set(ps) - atoms
                if bad:
                    raise ModelError(f"{key} of {ag!r} at {a!r} uses undeclared atoms {sorted(bad)}")
                out[ag][a] = frozenset(ps)
        return out

    pre = {a: TOP for a in actions}
    for a, text in doc.get("pre", {}).items():
        check_action(a, "pre")
        pre[a] = parse_formula(text, u)
    post = {}
    for a, per in doc.get("post", {}).items():
        check_action(a, "post")
        post[a] = {}
        for p, text in per.items():
            if p not in atoms:
                raise ModelError(f"postcondition for undeclared atom {p!r}")
            post[a][p] = parse_formula(text, u)
    default = doc.get("point", actions[0] if len(actions) == 1 else None)
    if default is not None:
        check_action(default, "point")
    return ActionModel(doc["name"], agents, actions, rel, sets("aware_plus"), sets("aware_minus"), pre, post, default)


def dump_action_model(am: ActionModel) -> dict:
    out = {
        "name": am.name,
        "agents": list(am.agents),
        "actions": list(am.actions),
        "rel": {ag: sorted([a, b] for a in am.actions for b in am.succ(ag, a)) for ag in am.agents},
        "aware_plus": {ag: {a: sorted(ps) for a, ps in per.items() if ps} for ag, per in am.aware_plus.items()},
        "aware_minus": {ag: {a: sorted(ps) for a, ps in per.items() if ps} for ag, per in am.aware_minus.items()},
        "pre": {a: print_formula(am.pre[a]) for a in am.actions},
        "post": {a: {p: print_formula(g) for p, g in sorted(per.items())} for a, per in am.post.items() if per},
    }
    if am.default is not None:
        out["point"] = am.default
    return out


# --- product update -------------------------------------------------------------

def update_model(m: Model, am: ActionModel, ctx=None) -> Model:
    """The full product ``m x am``; states are ``(state, action)`` pairs."""
    from .semantics import truth_set

    states = []
    for a in am.actions:
        ext = truth_set(m, am.pre[a], ctx)
        states.extend((s, a) for s in m.states if s in ext)
    # keep a deterministic state order: by model state, then action
    order = {s: i for i, s in enumerate(m.states)}
    aorder = {a: i for i, a in enumerate(am.actions)}
    states.sort(key=lambda x: (order[x[0]], aorder[x[1]]))
    sset = set(states)
    by_action: dict = {}
    for s, a in states:
        by_action.setdefault(a, []).append(s)
    # agents the model does not declare have no successors and no awareness there
    agents = tuple(dict.fromkeys([*m.agents, *am.agents]))
    rel = {}
    for ag in agents:
        rel[ag] = {}
        for s, a in states:
            out = set()
            m_succ = m.succ(ag, s)
            for b in am.succ(ag, a):
                for t in m_succ:
                    if (t, b) in sset:
                        out.add((t, b))
            rel[ag][(s, a)] = frozenset(out)
    aware = {}
    for ag in agents:
        aware[ag] = {
            (s, a): (m.aware_of(ag, s) | am.plus(ag, a)) - am.minus(ag, a)
            for s, a in states
        }
    atoms = m.atoms | action_vars(am)
    changed = {p for a in am.actions for p in am.post.get(a, {})}
    val = {}
    for p in atoms:
        if p in changed:
            ext = set()
            for a, ss in by_action.items():
                tp = truth_set(m, am.postcondition(a, p), ctx)
                ext.update((s, a) for s in ss if s in tp)
            val[p] = frozenset(ext)
        else:
            vp = m.val.get(p, frozenset())
            val[p] = frozenset(x for x in states if x[0] in vp)
    return Model(atoms, agents, tuple(states), rel, aware, val)


def product_update(pm: PointedModel, pa: PointedAction, ctx=None) -> PointedModel | None:
    """Execute a pointed action; ``None`` when its precondition fails at the point."""
    from .semantics import satisfies

    if not satisfies(pm, pa.action_model.pre[pa.point], ctx):
        return None
    return PointedModel(update_model(pm.model, pa.action_model, ctx), (pm.point, pa.point))


def _atom_set_name(atoms) -> str:
    return "{" + ",".join(sorted(atoms)) + "}"


@lru_cache(maxsize=4096)
def _builtin(kind: str, payload, agents: tuple, agent: str | None) -> PointedAction:
    if kind in ("aware_plus", "aware_minus"):
        atoms = frozenset(payload)
        sign = "+" if kind == "aware_plus" else "-"
        sets = {ag: {"a": atoms} for ag in agents}
        am = ActionModel(
            f"A{sign}{_atom_set_name(atoms)}", agents, ("a",),
            {ag: {"a": frozenset({"a"})} for ag in agents},
            sets if kind == "aware_plus" else {}, sets if kind == "aware_minus" else {},
            {"a": TOP}, {}, "a",
        )
        return PointedAction(am, "a")
    if kind == "announce_novel":
        f = payload
        atoms = free_vars(f)
        am = ActionModel(
            "!" + print_formula(f), agents, ("a",),
            {ag: {"a": frozenset({"a"})} for ag in agents},
            {ag: {"a": atoms} for ag in agents}, {},
            {"a": f}, {}, "a",
        )
        return PointedAction(am, "a")
    if kind == "private_aware_plus":
        # agent becomes aware at the actual state only; every state reached
        # afterwards is an unchanged copy of the original
        atoms = frozenset(payload)
        copy = frozenset({"copy"})
        am = ActionModel(
            f"A+{_atom_set_name(atoms)}/{agent}", agents, ("root", "copy"),
            {ag: {"root": copy, "copy": copy} for ag in agents},
            {agent: {"root": atoms}}, {},
            {"root": TOP, "copy": TOP}, {}, "root",
        )
        return PointedAction(am, "root")
    raise ValueError(f"unknown builtin action kind {kind!r}")


def builtin_action(kind: str, payload, agents: Iterable[str], agent: str | None = None) -> PointedAction:
    """Singleton actions: ``aware_plus``/``aware_minus`` (payload: atoms) and
    ``announce_novel`` (payload: formula); ``private_aware_plus`` makes only
    ``agent`` aware, and only at the actual state."""
    if kind in ("aware_plus", "aware_minus", "private_aware_plus"):
        payload = frozenset(payload)
    elif kind == "announce_novel":
        if not isinstance(payload, Formula):
            raise TypeError("announce_novel needs a formula payload")
    if kind == "private_aware_plus" and agent is None:
        raise ValueError("private_aware_plus needs an agent")
    return _builtin(kind, payload, tuple(agents), agent)


# --- change synthesis -------------------------------------------------------------

def synthesize_change(source: PointedModel, target: PointedModel, atoms=None) -> list[PointedAction]:
    """Actions whose successive execution turns ``source`` into a pointed model
    standard-bisimilar to ``target`` over ``atoms`` (default: all atoms of both).

    The first action announces a characteristic formula to prune the source,
    the second has the target's structure with valuation and awareness
    imposed by postconditions and awareness change.  Requires every relation
    of the source to be serial.
    """
    from .bisim import characteristic_formula, quotient

    src, tgt = source.model, target.model
    agents = tuple(dict.fromkeys([*src.agents, *tgt.agents]))
    universe = frozenset(atoms) if atoms is not None else src.atoms | tgt.atoms
    dead = list(src.dead_ends(agents))
    if dead:
        s, ag = dead[0]
        raise ModelError(f"source is not serial: state {state_name(s)!r} has no {ag!r}-successor")

    qm, cls_of = quotient(src, universe)
    qpoint = cls_of[source.point]
    depth = len(qm.states)
    block = {s for s in src.states if cls_of[s] == qpoint}
    closed = all(src.succ(ag, s) & block for s in block for ag in agents)
    if closed:
        announced = characteristic_formula(PointedModel(qm, qpoint), universe, depth, agents)
    else:
        reach = {qpoint}
        todo = [qpoint]
        while todo:
            x = todo.pop()
            for ag in agents:
                for y in qm.succ(ag, x):
                    if y not in reach:
                        reach.add(y)
                        todo.append(y)
        announced = _disj_sorted(
            characteristic_formula(PointedModel(qm, c), universe, depth, agents)
            for c in qm.states if c in reach)
    first = builtin_action("announce_novel", announced, agents)

    names = {s: f"t{i}" for i, s in enumerate(tgt.states)}
    acts = tuple(names[s] for s in tgt.states)
    rel = {ag: {names[s]: frozenset(names[t] for t in tgt.succ(ag, s)) for s in tgt.states} for ag in agents}
    plus = {ag: {names[s]: tgt.aware_of(ag, s) & universe for s in tgt.states} for ag in agents}
    minus = {ag: {names[s]: universe - tgt.aware_of(ag, s) for s in tgt.states} for ag in agents}
    post = {names[s]: {p: (TOP if tgt.holds(p, s) else bot()) for p in sorted(universe)} for s in tgt.states}
    second = ActionModel(
        "target", agents, acts, rel, plus, minus, {a: TOP for a in acts}, post, names[target.point])
    return [first, PointedAction(second, names[target.point])]


def _disj_sorted(fs):
    from .syntax import disj

    return disj(*list(fs))
