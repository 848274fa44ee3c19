"""Awareness encoding into multimodal K, uniform interpolation, and the
translation of speculative knowledge into the explicit fragment.

Awareness of ``p`` by ``j`` is encoded by the fresh atom ``aw(j,p)``.  Both
forgetting procedures work on a disjunctive normal form whose literals are
atoms, negated atoms, boxes and diamonds; each disjunct

    pi & box_j b_j & dia_j a_j1 & ... & dia_j a_jk

is handled by dropping the forgotten literals of ``pi`` and recursing into
``b_j`` and every ``b_j & a_jk``.
"""
from __future__ import annotations

import itertools
import re
from functools import lru_cache
from typing import Iterable

from .syntax import (
    TOP, And, Atom, Aw, Box, Dyn, Formula, Ke, Ks, Le, Not, Top, free_vars, is_bot,
)

__all__ = [
    "aw_atom", "split_aw", "encode", "encode_model", "uniform_interpolant",
    "aware_variant_exists", "speculative_translate", "TranslationLimitError",
]

MAX_SPLIT_VARS = 8

_AW = re.compile(r"^aw\((.+),(.+)\)$")


class TranslationLimitError(RuntimeError):
    pass


def aw_atom(agent: str, p: str) -> Atom:
    return Atom(f"aw({agent},{p})")


def split_aw(name: str):
    """``(agent, atom)`` for an awareness atom, else ``None``."""
    m = _AW.match(name)
    return (m.group(1), m.group(2)) if m else None


def _base(name: str) -> str:
    sp = split_aw(name)
    return sp[1] if sp else name


# --- simplifying constructors -------------------------------------------------

_BOT = Not(TOP)


def _not(f):
    if isinstance(f, Top):
        return _BOT
    if isinstance(f, Not):
        return f.arg
    return Not(f)


def _and(*fs):
    out = TOP
    for f in fs:
        if is_bot(f):
            return _BOT
        if isinstance(f, Top):
            continue
        out = f if isinstance(out, Top) else And(out, f)
    return out


def _or(*fs):
    parts = []
    for f in fs:
        if isinstance(f, Top):
            return TOP
        if is_bot(f) or f in parts:
            continue
        parts.append(f)
    if not parts:
        return _BOT
    out = parts[0]
    for f in parts[1:]:
        out = Not(And(_not(out), _not(f)))
    return out


def _box(agent, f, explicit):
    if isinstance(f, Top):
        return TOP
    return Ke(agent, f) if explicit else Box(agent, f)


def _dia(agent, f, explicit):
    if is_bot(f):
        return _BOT
    return Le(agent, f) if explicit else Not(Box(agent, _not(f)))


# --- encoding -------------------------------------------------------------------

def encode(f: Formula) -> Formula:
    """Plain multimodal K formula equivalent to ``f`` under :func:`encode_model`."""
    if isinstance(f, (Top, Atom)):
        return f
    if isinstance(f, Not):
        return Not(encode(f.arg))
    if isinstance(f, And):
        return And(encode(f.left), encode(f.right))
    if isinstance(f, Box):
        return Box(f.agent, encode(f.arg))
    if isinstance(f, (Aw, Ke, Le)):
        aw = _and(*(aw_atom(f.agent, p) for p in sorted(free_vars(f.arg))))
        if isinstance(f, Aw):
            return aw
        body = encode(f.arg)
        if isinstance(f, Ke):
            return _and(aw, Box(f.agent, body))
        return _and(aw, Not(Box(f.agent, Not(body))))
    if isinstance(f, Ks):
        raise ValueError("encode does not accept speculative knowledge; translate it first")
    if isinstance(f, Dyn):
        raise ValueError("encode does not accept dynamic operators; reduce them first")
    raise TypeError(f"not a formula: {f!r}")


def encode_model(m):
    """Same frame, awareness turned into the valuation of ``aw(j,p)`` atoms."""
    from .models import Model

    val = dict(m.val)
    atoms = set(m.atoms)
    for ag in m.agents:
        for p in m.atoms:
            a = aw_atom(ag, p).name
            atoms.add(a)
            val[a] = frozenset(s for s in m.states if p in m.aware_of(ag, s))
    return Model(frozenset(atoms), m.agents, m.states, m.rel, {}, val)


# --- disjunctive normal form ---------------------------------------------------------
#
# A disjunct is (pos, neg, boxes, dias): atom-name sets and frozensets of
# (agent, formula) pairs.

def _combine(d1, d2):
    pos = d1[0] | d2[0]
    neg = d1[1] | d2[1]
    if pos & neg:
        return None
    return (pos, neg, d1[2] | d2[2], d1[3] | d2[3])


_EMPTY = (frozenset(), frozenset(), frozenset(), frozenset())


@lru_cache(maxsize=100_000)
def _dnf(f: Formula, positive: bool) -> frozenset:
    if isinstance(f, Top):
        return frozenset({_EMPTY}) if positive else frozenset()
    if isinstance(f, Atom):
        lit = frozenset({f.name})
        return frozenset({(lit, frozenset(), frozenset(), frozenset())} if positive
                         else {(frozenset(), lit, frozenset(), frozenset())})
    if isinstance(f, Not):
        return _dnf(f.arg, not positive)
    if isinstance(f, And):
        if positive:
            out = set()
            for a in _dnf(f.left, True):
                for b in _dnf(f.right, True):
                    c = _combine(a, b)
                    if c is not None:
                        out.add(c)
            return frozenset(out)
        return _dnf(f.left, False) | _dnf(f.right, False)
    if isinstance(f, Box):
        if positive:
            return frozenset({(frozenset(), frozenset(), frozenset({(f.agent, f.arg)}), frozenset())})
        return frozenset({(frozenset(), frozenset(), frozenset(), frozenset({(f.agent, _not(f.arg))}))})
    raise ValueError(f"not a plain K formula: {f!r}")


def _modal_parts(d):
    """agent -> (box bodies, diamond bodies)"""
    parts: dict = {}
    for ag, g in d[2]:
        parts.setdefault(ag, ([], []))[0].append(g)
    for ag, g in d[3]:
        parts.setdefault(ag, ([], []))[1].append(g)
    return parts


def _conj_sorted(fs):
    return _and(*sorted(set(fs), key=repr))


# --- uniform interpolation -----------------------------------------------------------

def uniform_interpolant(f: Formula, forget: Iterable[str]) -> Formula:
    """Strongest consequence of ``f`` not mentioning the forgotten atoms.

    Forgetting a base atom also forgets every ``aw(j,p)`` encoding awareness
    of it.
    """
    forget = frozenset(forget)
    return _ui(f, forget)


@lru_cache(maxsize=100_000)
def _ui(f: Formula, forget: frozenset) -> Formula:
    out = []
    for d in sorted(_dnf(f, True), key=repr):
        pos, neg = d[0], d[1]
        lits = [Atom(p) for p in sorted(pos) if not _forgotten(p, forget)]
        lits += [Not(Atom(p)) for p in sorted(neg) if not _forgotten(p, forget)]
        parts = []
        for ag, (boxes, dias) in sorted(_modal_parts(d).items()):
            beta = _conj_sorted(boxes)
            parts.append(_box(ag, _ui(beta, forget), False))
            for a in sorted(set(dias), key=repr):
                parts.append(_dia(ag, _ui(_and(beta, a), forget), False))
        out.append(_and(*lits, *parts))
    return _or(*out)


def _forgotten(name: str, forget: frozenset) -> bool:
    return name in forget or _base(name) in forget


# --- existence of an awareness variant ---------------------------------------------------

def aware_variant_exists(f: Formula, keep: Iterable[str], explicit: bool = False) -> Formula:
    """Formula true at (M, t) iff some pointed model awareness-bisimilar to
    (M, t) at ``keep`` satisfies the plain K formula ``f`` (over base atoms and
    ``aw(j,p)`` atoms).

    Only literals on kept atoms, and awareness of kept atoms, survive.  Below
    an agent ``j`` the kept set shrinks to the kept atoms ``j`` is aware of,
    which is settled by a case split on the ``aw(j,p)`` atoms.  With
    ``explicit`` the output uses awareness, K^E and L^E instead of atoms
    ``aw(j,p)``, boxes and diamonds.
    """
    return _exists(f, frozenset(keep), explicit)


def _lit(name, positive, explicit):
    sp = split_aw(name)
    a = Aw(sp[0], Atom(sp[1])) if (explicit and sp) else Atom(name)
    return a if positive else Not(a)


def _kept(name, keep):
    return _base(name) in keep


@lru_cache(maxsize=200_000)
def _exists(f: Formula, keep: frozenset, explicit: bool) -> Formula:
    out = []
    for d in sorted(_dnf(f, True), key=repr):
        pos, neg = d[0], d[1]
        lits = [_lit(p, True, explicit) for p in sorted(pos) if _kept(p, keep)]
        lits += [_lit(p, False, explicit) for p in sorted(neg) if _kept(p, keep)]
        parts = []
        for ag, (boxes, dias) in sorted(_modal_parts(d).items()):
            beta = _conj_sorted(boxes)
            body_vars = set()
            for g in [*boxes, *dias]:
                body_vars |= {_base(x) for x in free_vars(g)}
            rel = sorted(keep & body_vars)
            cases = []
            for bits in itertools.product((True, False), repeat=len(rel)):
                sub = frozenset(p for p, b in zip(rel, bits) if b)
                # the disjunct may already fix some of these awareness atoms
                if any((aw_atom(ag, p).name in neg) if b else (aw_atom(ag, p).name in pos)
                       for p, b in zip(rel, bits)):
                    continue
                guard = [_lit(aw_atom(ag, p).name, b, explicit) for p, b in zip(rel, bits)]
                inner = [_box(ag, _exists(beta, sub, explicit), explicit)] if boxes else []
                for a in sorted(set(dias), key=repr):
                    inner.append(_dia(ag, _exists(_and(beta, a), sub, explicit), explicit))
                cases.append(_and(*guard, *inner))
            parts.append(_or(*cases))
        out.append(_and(*lits, *parts))
    return _or(*out)


# --- speculative knowledge ------------------------------------------------------------

def speculative_translate(f: Formula, max_vars: int = MAX_SPLIT_VARS) -> Formula:
    """Explicit-fragment formula equivalent to ``f``; K^S is eliminated bottom-up.

    ``Ks_i g`` becomes a case split over which atoms ``S`` of ``g`` agent ``i``
    is aware of; in each case ``i`` must explicitly know that no
    ``S``-awareness variant of a successor falsifies ``g``.
    """
    return _translate(f, max_vars)


@lru_cache(maxsize=100_000)
def _translate(f: Formula, max_vars: int) -> Formula:
    if isinstance(f, (Top, Atom)):
        return f
    if isinstance(f, Not):
        g = _translate(f.arg, max_vars)
        return f if g is f.arg else Not(g)
    if isinstance(f, And):
        a, b = _translate(f.left, max_vars), _translate(f.right, max_vars)
        return f if (a is f.left and b is f.right) else And(a, b)
    if isinstance(f, Dyn):
        raise ValueError("speculative_translate does not accept dynamic operators")
    if isinstance(f, Ks):
        body = _translate(f.arg, max_vars)
        neg = encode(Not(body))
        vs = sorted(free_vars(body))
        if len(vs) > max_vars:
            raise TranslationLimitError(
                f"K^S body has {len(vs)} atoms; the awareness case split is capped at {max_vars}")
        cases = []
        for bits in itertools.product((True, False), repeat=len(vs)):
            sub = frozenset(p for p, b in zip(vs, bits) if b)
            guard = [Aw(f.agent, Atom(p)) if b else Not(Aw(f.agent, Atom(p))) for p, b in zip(vs, bits)]
            safe = _not(_exists(neg, sub, True))
            cases.append(_and(*guard, _box(f.agent, safe, True)))
        return _or(*cases)
    g = _translate(f.arg, max_vars)
    return f if g is f.arg else type(f)(f.agent, g)
