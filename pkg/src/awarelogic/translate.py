"""Translations between fragments and elimination of dynamic operators."""
from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    TOP, And, Atom, Aw, Box, Dyn, Formula, Ke, Ks, Le, Not, Top, conj, dia,
    free_vars, implies, print_formula, substitute,
)

__all__ = [
    "expand_explicit", "box_to_dynamic", "reduce_dynamic", "ReductionError", "RewriteStep",
    "has_awareness",
]


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class RewriteStep:
    schema: str
    before: Formula
    after: Formula

    def __str__(self):
        return f"{self.schema}: {print_formula(self.before)}  =>  {print_formula(self.after)}"


def _contains(f: Formula, kinds) -> bool:
    stack = [f]
    seen = set()
    while stack:
        g = stack.pop()
        if id(g) in seen:
            continue
        seen.add(id(g))
        if isinstance(g, kinds):
            return True
        if isinstance(g, And):
            stack.extend((g.left, g.right))
        elif not isinstance(g, (Top, Atom)):
            stack.append(g.arg)
    return False


def has_awareness(f: Formula) -> bool:
    """Whether truth of ``f`` can depend on awareness."""
    return _contains(f, (Aw, Ke, Le, Ks))


def expand_explicit(f: Formula) -> Formula:
    """Rewrite ``Ke_i g`` as ``box_i g & A_i g`` and ``Le_i g`` as ``dia_i g & A_i g``."""
    memo: dict = {}

    def rec(g):
        if id(g) in memo:
            return memo[id(g)][1]
        if isinstance(g, (Top, Atom)):
            out = g
        elif isinstance(g, Not):
            out = Not(rec(g.arg))
        elif isinstance(g, And):
            out = And(rec(g.left), rec(g.right))
        elif isinstance(g, Ke):
            b = rec(g.arg)
            out = And(Box(g.agent, b), Aw(g.agent, b))
        elif isinstance(g, Le):
            b = rec(g.arg)
            out = And(dia(g.agent, b), Aw(g.agent, b))
        elif isinstance(g, Ks):
            raise ValueError("expand_explicit does not accept speculative knowledge")
        elif isinstance(g, Dyn):
            out = Dyn(g.action, g.point, rec(g.arg))
        else:
            out = type(g)(g.agent, rec(g.arg))
        memo[id(g)] = (g, out)
        return out

    return rec(f)


def box_to_dynamic(f: Formula, agents=None) -> Formula:
    """Replace every ``box_i g`` by an awareness-raising action followed by K^E_i.

    For awareness-free ``g`` the action is the public ``A+v(g)``.  When ``g``
    mentions awareness a public raise would change its truth below the root,
    so the action raises ``i``'s awareness at the actual state only and
    continues in an unchanged copy of the model.
    """
    from .models import builtin_action
    from .syntax import agents_of

    agents = tuple(sorted(agents if agents is not None else agents_of(f)))

    def rec(g):
        if isinstance(g, (Top, Atom)):
            return g
        if isinstance(g, Not):
            return Not(rec(g.arg))
        if isinstance(g, And):
            return And(rec(g.left), rec(g.right))
        if isinstance(g, Box):
            b = rec(g.arg)
            v = free_vars(b)
            if has_awareness(g.arg):
                pa = builtin_action("private_aware_plus", v, agents, agent=g.agent)
            else:
                pa = builtin_action("aware_plus", v, agents)
            return Dyn(pa.action_model, pa.point, Ke(g.agent, b))
        if isinstance(g, Dyn):
            return Dyn(g.action, g.point, rec(g.arg))
        return type(g)(g.agent, rec(g.arg))

    return rec(f)


def _aware_atoms(agent: str, g: Formula) -> Formula:
    # A_i g depends on g only through its free variables; replacing g by the
    # conjunction of them keeps dynamic operators inside g out of the way
    return Aw(agent, conj(*(Atom(p) for p in sorted(free_vars(g)))))


def reduce_dynamic(f: Formula, trace: list | None = None) -> Formula:
    """Equivalent formula without dynamic operators.

    Innermost operators go first, so each rewrite pushes one pointed action
    through a static body.  K^E and L^E are expanded beforehand; awareness of
    a formula containing dynamic operators is first replaced by awareness of
    its free variables.  ``trace`` collects :class:`RewriteStep` records.
    """
    push_memo: dict = {}

    def static(g):
        if isinstance(g, (Top, Atom)):
            return g
        if isinstance(g, Not):
            return Not(static(g.arg))
        if isinstance(g, And):
            return And(static(g.left), static(g.right))
        if isinstance(g, Aw):
            if _contains(g.arg, Dyn):
                out = _aware_atoms(g.agent, g.arg)
                if trace is not None:
                    trace.append(RewriteStep("aware-vars", g, out))
                return out
            return g
        if isinstance(g, Box):
            return Box(g.agent, static(g.arg))
        if isinstance(g, (Ke, Le)):
            if not _contains(g.arg, Dyn):
                return g
            body = static(g.arg)
            modal = Box(g.agent, body) if isinstance(g, Ke) else dia(g.agent, body)
            out = And(modal, _aware_atoms(g.agent, g.arg))
            if trace is not None:
                trace.append(RewriteStep("expand-" + ("Ke" if isinstance(g, Ke) else "Le"), g, out))
            return out
        if isinstance(g, Ks):
            if _contains(g.arg, Dyn):
                raise ReductionError("no reduction axiom for speculative knowledge under a dynamic operator")
            return g
        if isinstance(g, Dyn):
            body = static(g.arg)
            if _contains(body, Ks):
                raise ReductionError("no reduction axiom for speculative knowledge under a dynamic operator")
            body = expand_explicit(body)
            return push(g.action, g.point, body)
        raise TypeError(f"not a formula: {g!r}")

    def pre_of(am, a):
        p = am.pre[a]
        return static(p) if _contains(p, Dyn) else p

    def push(am, a, g):
        key = (am, a, g)
        hit = push_memo.get(key)
        if hit is not None:
            return hit
        pre = pre_of(am, a)
        if isinstance(g, Top):
            schema, out = "top", TOP
        elif isinstance(g, Atom):
            post = am.postcondition(a, g.name)
            if _contains(post, Dyn):
                post = static(post)
            schema, out = "atom", implies(pre, post)
        elif isinstance(g, Not):
            schema, out = "neg", implies(pre, Not(push(am, a, g.arg)))
        elif isinstance(g, And):
            schema, out = "and", And(push(am, a, g.left), push(am, a, g.right))
        elif isinstance(g, Aw):
            v = free_vars(g.arg)
            if v & am.minus(g.agent, a):
                schema, out = "aware-minus", Not(pre)
            else:
                plus = am.plus(g.agent, a)
                body = substitute(g.arg, {p: TOP for p in plus}) if plus else g.arg
                schema, out = "aware-plus", implies(pre, Aw(g.agent, body))
        elif isinstance(g, Box):
            conjuncts = [Box(g.agent, push(am, b, g.arg)) for b in am.actions if b in am.succ(g.agent, a)]
            schema, out = "box", implies(pre, conj(*conjuncts))
        else:
            raise ReductionError(f"cannot push an action through {type(g).__name__}")
        if trace is not None:
            trace.append(RewriteStep(schema, Dyn(am, a, g), out))
        push_memo[key] = out
        return out

    return static(f)
