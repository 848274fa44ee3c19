"""Formula AST, concrete syntax, free variables, substitution and modal depth.

Connectives are kept to a small primitive core (top, atoms, negation,
conjunction and the modal/awareness/dynamic operators).  Disjunction,
implication, equivalence, bottom, diamond and speculative possibility are
helper functions with one fixed expansion, and the printer folds those
expansions back into their surface form.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

__all__ = [
    "Formula", "Top", "Atom", "Not", "And", "Box", "Ke", "Le", "Ks", "Aw", "Dyn",
    "bot", "disj", "conj", "implies", "iff", "dia", "ls",
    "Universe", "FormulaSyntaxError", "parse_formula", "print_formula",
    "free_vars", "substitute", "modal_depth", "size", "agents_of", "subformulas",
    "is_bot", "TOP", "action_vars",
]

KEYWORDS = {"top", "bot", "box", "dia", "Ke", "Le", "Ks", "Ls", "A", "act"}


class Formula:
    """Base class of every formula node.  Nodes are immutable and hashable."""

    __slots__ = ()

    def __str__(self) -> str:
        return print_formula(self)


def _node(cls):
    # Frozen dataclass with a hash computed once; formulas are often shared
    # DAGs (characteristic formulas, reduction output) so recursive hashing
    # on every lookup would be exponential.
    names = list(cls.__dict__.get("__annotations__", {}))

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((cls.__name__, *(getattr(self, n) for n in names))))

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"{cls.__name__}({', '.join(repr(getattr(self, n)) for n in names)})"

    cls.__post_init__ = __post_init__
    cls = dataclass(frozen=True, repr=False, eq=True)(cls)
    cls.__hash__ = __hash__
    cls.__repr__ = __repr__
    return cls


@_node
class Top(Formula):
    pass


@_node
class Atom(Formula):
    name: str


@_node
class Not(Formula):
    arg: Formula


@_node
class And(Formula):
    left: Formula
    right: Formula


@_node
class Box(Formula):
    agent: str
    arg: Formula


@_node
class Ke(Formula):
    agent: str
    arg: Formula


@_node
class Le(Formula):
    agent: str
    arg: Formula


@_node
class Ks(Formula):
    agent: str
    arg: Formula


@_node
class Aw(Formula):
    agent: str
    arg: Formula


@_node
class Dyn(Formula):
    """``[M, s] body``: after executing the pointed action, ``body`` holds."""

    action: Any  # awarelogic.models.ActionModel
    point: str
    arg: Formula


TOP = Top()

AGENT_OPS = (Box, Ke, Le, Ks, Aw)


# --- derived connectives -------------------------------------------------

def bot() -> Formula:
    return Not(TOP)


def is_bot(f: Formula) -> bool:
    return isinstance(f, Not) and isinstance(f.arg, Top)


def conj(*fs: Formula) -> Formula:
    if len(fs) == 1 and not isinstance(fs[0], Formula):
        fs = tuple(fs[0])
    if not fs:
        return TOP
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(*fs: Formula) -> Formula:
    if len(fs) == 1 and not isinstance(fs[0], Formula):
        fs = tuple(fs[0])
    if not fs:
        return bot()
    out = fs[0]
    for f in fs[1:]:
        out = Not(And(Not(out), Not(f)))
    return out


def implies(a: Formula, b: Formula) -> Formula:
    return Not(And(a, Not(b)))


def iff(a: Formula, b: Formula) -> Formula:
    return And(implies(a, b), implies(b, a))


def dia(agent: str, f: Formula) -> Formula:
    return Not(Box(agent, Not(f)))


def ls(agent: str, f: Formula) -> Formula:
    return Not(Ks(agent, Not(f)))


# --- symbol table -----------------------------------------------------------

@dataclass
class Universe:
    """Declared atoms and agents, plus named action models for ``[act NAME]``."""

    atoms: frozenset = frozenset()
    agents: tuple = ()
    actions: dict = field(default_factory=dict)

    def __post_init__(self):
        self.atoms = frozenset(self.atoms)
        self.agents = tuple(self.agents)


class FormulaSyntaxError(ValueError):
    def __init__(self, msg: str, pos: int | None = None, text: str | None = None):
        self.pos = pos
        if pos is not None:
            msg = f"{msg} at position {pos}"
            if text is not None:
                msg += f": {text[:pos]!r} <here> {text[pos:]!r}"
        super().__init__(msg)


# --- lexer / parser ---------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(<->|->|[()\[\]{}~&|@!+\-/,])|([A-Za-z0-9_]+))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    out = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        sym, ident = m.groups()
        start = m.start(1) if sym else m.start(2)
        out.append(("sym", sym, start) if sym else ("id", ident, start))
        pos = m.end()
    out.append(("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, universe: Universe):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0
        self.u = universe

    def peek(self, k: int = 0):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def error(self, msg: str, tok=None):
        tok = tok or self.peek()
        raise FormulaSyntaxError(msg, tok[2], self.text)

    def expect(self, value: str):
        t = self.next()
        if t[1] != value or t[0] == "eof":
            self.error(f"expected {value!r}, found {t[1] or 'end of input'!r}", t)
        return t

    def parse(self) -> Formula:
        f = self.iff()
        if self.peek()[0] != "eof":
            self.error(f"unexpected {self.peek()[1]!r}")
        return f

    def iff(self):
        f = self.imp()
        while self.peek()[1] == "<->":
            self.next()
            f = iff(f, self.imp())
        return f

    def imp(self):
        f = self.disj()
        if self.peek()[1] == "->":
            self.next()
            return implies(f, self.imp())
        return f

    def disj(self):
        f = self.conj()
        while self.peek()[1] == "|":
            self.next()
            f = disj(f, self.conj())
        return f

    def conj(self):
        f = self.unary()
        while self.peek()[1] == "&":
            self.next()
            f = And(f, self.unary())
        return f

    def agent(self) -> str:
        self.expect("[")
        t = self.next()
        if t[0] != "id":
            self.error("expected agent name", t)
        if t[1] not in self.u.agents:
            self.error(f"unknown agent {t[1]!r}", t)
        self.expect("]")
        return t[1]

    def unary(self) -> Formula:
        kind, val, _ = self.peek()
        if val == "~":
            self.next()
            return Not(self.unary())
        if kind == "id" and val in ("box", "dia", "Ke", "Le", "Ks", "Ls", "A") and self.peek(1)[1] == "[":
            self.next()
            ag = self.agent()
            body = self.unary()
            return {
                "box": Box, "Ke": Ke, "Le": Le, "Ks": Ks, "A": Aw,
                "dia": dia, "Ls": ls,
            }[val](ag, body)
        if val == "[" and self.peek(1)[1] == "act":
            self.next()
            self.next()
            action, point = self.action_ref()
            self.expect("]")
            return Dyn(action, point, self.unary())
        return self.primary()

    def primary(self) -> Formula:
        t = self.next()
        if t[1] == "(" and t[0] == "sym":
            f = self.iff()
            self.expect(")")
            return f
        if t[0] != "id":
            self.error(f"unexpected {t[1] or 'end of input'!r}", t)
        if t[1] == "top":
            return TOP
        if t[1] == "bot":
            return bot()
        if t[1] in ("box", "dia", "Ke", "Le", "Ks", "Ls", "A"):
            self.error(f"expected '[agent]' after {t[1]!r}", t)
        if t[1] in KEYWORDS:
            self.error(f"keyword {t[1]!r} cannot be used as an atom", t)
        if t[1] not in self.u.atoms:
            self.error(f"unknown atom {t[1]!r}", t)
        return Atom(t[1])

    def atom_set(self) -> frozenset:
        if self.peek()[1] == "{":
            self.next()
            names = []
            while self.peek()[1] != "}":
                t = self.next()
                if t[0] != "id":
                    self.error("expected atom name", t)
                names.append(t)
                if self.peek()[1] == ",":
                    self.next()
            self.expect("}")
        else:
            t = self.next()
            if t[0] != "id":
                self.error("expected atom name", t)
            names = [t]
        for t in names:
            if t[1] not in self.u.atoms:
                self.error(f"unknown atom {t[1]!r}", t)
        return frozenset(t[1] for t in names)

    def action_ref(self):
        from .models import builtin_action

        agents = self.u.agents
        kind, val, pos = self.peek()
        if val == "A" and self.peek(1)[1] in ("+", "-"):
            self.next()
            sign = self.next()[1]
            atoms = self.atom_set()
            if sign == "+" and self.peek()[1] == "/":
                self.next()
                t = self.next()
                if t[1] not in agents:
                    self.error(f"unknown agent {t[1]!r}", t)
                pa = builtin_action("private_aware_plus", atoms, agents, agent=t[1])
            else:
                pa = builtin_action("aware_plus" if sign == "+" else "aware_minus", atoms, agents)
            return pa.action_model, pa.point
        if val == "!":
            self.next()
            f = self.unary()
            pa = builtin_action("announce_novel", f, agents)
            return pa.action_model, pa.point
        t = self.next()
        if t[0] != "id":
            self.error("expected action model name", t)
        model = self.u.actions.get(t[1])
        if model is None:
            self.error(f"dangling action reference {t[1]!r}", t)
        if self.peek()[1] == "@":
            self.next()
            a = self.next()
            if a[1] not in model.actions:
                self.error(f"action model {t[1]!r} has no action {a[1]!r}", a)
            return model, a[1]
        if model.default is None:
            self.error(f"action model {t[1]!r} needs an explicit '@ ACTION'", t)
        return model, model.default


def parse_formula(text: str, universe: Universe) -> Formula:
    """Parse concrete syntax; raises :class:`FormulaSyntaxError` with a position."""
    return _Parser(text, universe).parse()


# --- printer ----------------------------------------------------------------

def _match_or(f):
    if isinstance(f, Not) and isinstance(f.arg, And):
        a, b = f.arg.left, f.arg.right
        if isinstance(a, Not) and isinstance(b, Not):
            return a.arg, b.arg
    return None


def _match_implies(f):
    if isinstance(f, Not) and isinstance(f.arg, And) and isinstance(f.arg.right, Not):
        return f.arg.left, f.arg.right.arg
    return None


def _match_iff(f):
    if isinstance(f, And):
        l, r = _match_implies(f.left), _match_implies(f.right)
        if l and r and l == (r[1], r[0]):
            return l
    return None


def _action_ref(action, point) -> str:
    name = action.name
    if action.default == point:
        return name
    return f"{name} @ {point}"


def print_formula(f: Formula) -> str:
    """Concrete syntax; ``parse_formula(print_formula(f))`` rebuilds ``f``."""
    if isinstance(f, Top):
        return "top"
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        if isinstance(f.arg, Top):
            return "bot"
        m = _match_or(f)
        if m:
            return f"({print_formula(m[0])} | {print_formula(m[1])})"
        m = _match_implies(f)
        if m:
            return f"({print_formula(m[0])} -> {print_formula(m[1])})"
        if isinstance(f.arg, Box) and isinstance(f.arg.arg, Not):
            return f"dia[{f.arg.agent}] {print_formula(f.arg.arg.arg)}"
        if isinstance(f.arg, Ks) and isinstance(f.arg.arg, Not):
            return f"Ls[{f.arg.agent}] {print_formula(f.arg.arg.arg)}"
        return f"~{print_formula(f.arg)}"
    if isinstance(f, And):
        m = _match_iff(f)
        if m:
            return f"({print_formula(m[0])} <-> {print_formula(m[1])})"
        return f"({print_formula(f.left)} & {print_formula(f.right)})"
    if isinstance(f, Dyn):
        return f"[act {_action_ref(f.action, f.point)}] {print_formula(f.arg)}"
    for cls, kw in ((Box, "box"), (Ke, "Ke"), (Le, "Le"), (Ks, "Ks"), (Aw, "A")):
        if isinstance(f, cls):
            return f"{kw}[{f.agent}] {print_formula(f.arg)}"
    raise TypeError(f"not a formula: {f!r}")


# --- structural operations ----------------------------------------------------

def _memo(fn: Callable) -> Callable:
    # Per-call memo on node identity so shared subterms are visited once.
    def wrapper(f, *args):
        cache: dict = {}

        def rec(g):
            key = id(g)
            if key in cache:
                return cache[key][1]
            out = fn(g, rec, *args)
            cache[key] = (g, out)
            return out

        return rec(f)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _is_identity_post(atom: str, g: Formula) -> bool:
    return isinstance(g, Atom) and g.name == atom


def action_vars(action) -> frozenset:
    """Atoms an action model talks about: preconditions, changed awareness,
    and non-identity postconditions (each with the atom it assigns)."""
    out: set = set()
    for t in action.actions:
        out |= free_vars(action.pre[t])
        for ag in action.aware_plus:
            out |= action.aware_plus[ag].get(t, frozenset())
        for ag in action.aware_minus:
            out |= action.aware_minus[ag].get(t, frozenset())
        for p, g in action.post.get(t, {}).items():
            if not _is_identity_post(p, g):
                out.add(p)
                out |= free_vars(g)
    return frozenset(out)


@_memo
def free_vars(f: Formula, rec) -> frozenset:
    """Atoms occurring in ``f``; a dynamic operator adds the atoms of its action model."""
    if isinstance(f, Top):
        return frozenset()
    if isinstance(f, Atom):
        return frozenset((f.name,))
    if isinstance(f, And):
        return rec(f.left) | rec(f.right)
    if isinstance(f, Dyn):
        return rec(f.arg) | action_vars(f.action)
    return rec(f.arg)


def substitute(f: Formula, sigma: Mapping[str, Formula]) -> Formula:
    """Simultaneously replace atoms by formulas.

    Dynamic operators keep their action model untouched; only the body is
    rewritten.
    """
    cache: dict = {}

    def rec(g):
        key = id(g)
        if key in cache:
            return cache[key][1]
        if isinstance(g, Top):
            out = g
        elif isinstance(g, Atom):
            out = sigma.get(g.name, g)
        elif isinstance(g, Not):
            out = Not(rec(g.arg))
        elif isinstance(g, And):
            out = And(rec(g.left), rec(g.right))
        elif isinstance(g, Dyn):
            out = Dyn(g.action, g.point, rec(g.arg))
        else:
            out = type(g)(g.agent, rec(g.arg))
        cache[key] = (g, out)
        return out

    return rec(f)


@_memo
def modal_depth(f: Formula, rec) -> int:
    """Nesting of box/Ke/Le/Ks.  Awareness looks at the current state only and
    adds nothing.  ``[M,s] g`` counts as ``depth(g)`` plus the deepest pre- or
    postcondition of ``M``, which bounds the depth of its reduced form."""
    if isinstance(f, (Top, Atom)):
        return 0
    if isinstance(f, Not):
        return rec(f.arg)
    if isinstance(f, And):
        return max(rec(f.left), rec(f.right))
    if isinstance(f, Aw):
        return 0
    if isinstance(f, Dyn):
        a = f.action
        extra = 0
        for t in a.actions:
            extra = max(extra, modal_depth(a.pre[t]))
            for g in a.post.get(t, {}).values():
                extra = max(extra, modal_depth(g))
        return rec(f.arg) + extra
    return 1 + rec(f.arg)


def size(f: Formula) -> int:
    """Number of primitive nodes (tree size, shared subterms counted per use)."""
    if isinstance(f, (Top, Atom)):
        return 1
    if isinstance(f, And):
        return 1 + size(f.left) + size(f.right)
    return 1 + size(f.arg)


@_memo
def agents_of(f: Formula, rec) -> frozenset:
    if isinstance(f, (Top, Atom)):
        return frozenset()
    if isinstance(f, Not):
        return rec(f.arg)
    if isinstance(f, And):
        return rec(f.left) | rec(f.right)
    if isinstance(f, Dyn):
        return rec(f.arg)
    return rec(f.arg) | {f.agent}


def subformulas(f: Formula) -> Iterable[Formula]:
    """Distinct subformulas, children before parents."""
    seen: set = set()
    order: list = []

    def rec(g):
        if g in seen:
            return
        seen.add(g)
        if isinstance(g, And):
            rec(g.left)
            rec(g.right)
        elif not isinstance(g, (Top, Atom)):
            rec(g.arg)
        order.append(g)

    rec(f)
    return order
