"""Command-line front end.

Exit status: 0 when a query is answered (positively, for yes/no queries),
1 when a yes/no query is answered negatively, 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import axioms, bisim, forgetting, models, semantics, translate
from .fixtures import FIXTURES
from .syntax import Formula, FormulaSyntaxError, Universe, parse_formula, print_formula

__all__ = ["main", "run"]


class UsageError(Exception):
    pass


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise UsageError(f"{path}: no such file") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: invalid JSON: {e}") from None


def _model(ref: str):
    if ref in FIXTURES:
        return FIXTURES[ref]
    try:
        return models.load_model(_read_json(ref))
    except models.ModelError as e:
        raise UsageError(f"{ref}: {e}") from None


def _point(m, name: str):
    for s in m.states:
        if models.state_name(s) == name:
            return models.PointedModel(m, s)
    raise UsageError(f"no state {name!r} in model")


def _csv(text: str | None) -> list:
    if text is None:
        return []
    return [x for x in (y.strip() for y in text.split(",")) if x]


def _universe(args, *ms) -> Universe:
    atoms = set(_csv(getattr(args, "atoms", None)))
    agents = list(_csv(getattr(args, "agents", None)))
    for m in ms:
        atoms |= set(m.atoms)
        agents += list(m.agents)
    if not ms:
        atoms = atoms or {"p"}
        agents = agents or ["i"]
    u = Universe(atoms, tuple(dict.fromkeys(agents)))
    for path in getattr(args, "actions", None) or []:
        try:
            am = models.load_action_model(_read_json(path), u)
        except (models.ModelError, FormulaSyntaxError) as e:
            raise UsageError(f"{path}: {e}") from None
        u.actions[am.name] = am
    return u


def _formula(text: str, u: Universe):
    try:
        return parse_formula(text, u)
    except FormulaSyntaxError as e:
        raise UsageError(f"formula: {e}") from None


def _ctx(args) -> semantics.EvalContext:
    return semantics.EvalContext(
        ks_strategy=args.strategy, oracle_depth=args.depth, branching=args.branching, cap=args.cap)


class Report:
    def __init__(self, args, query: dict):
        self.args = args
        self.query = query
        self.bounds = None

    def emit(self, result, text: str, code: int) -> int:
        if self.args.json:
            print(json.dumps({"query": self.query, "result": result, "bounds": self.bounds}, sort_keys=True))
        else:
            print(text)
        return code


# --- subcommands -----------------------------------------------------------------------

def cmd_mc(args) -> int:
    m = _model(args.model)
    pm = _point(m, args.point)
    u = _universe(args, m)
    f = _formula(args.formula, u)
    ctx = _ctx(args)
    rep = Report(args, {"command": "mc", "model": args.model, "point": args.point, "formula": print_formula(f)})
    rep.bounds = ctx.bounds()
    ok = semantics.satisfies(pm, f, ctx)
    return rep.emit(ok, "true" if ok else "false", 0 if ok else 1)


def cmd_bisim(args) -> int:
    m1, m2 = _model(args.model1), _model(args.model2)
    p1, p2 = _point(m1, args.point1), _point(m2, args.point2)
    q = _csv(args.atoms)
    rep = Report(args, {"command": "bisim", "flavor": args.flavor, "left": [args.model1, args.point1],
                        "right": [args.model2, args.point2], "atoms": sorted(q)})
    if args.bound is not None:
        rep.bounds = {"depth": args.bound}
        fn = bisim.bounded_standard_bisim if args.flavor == "standard" else bisim.bounded_awareness_bisim
        ok = fn(p1, p2, q, args.bound)
        return rep.emit({"related": ok}, "related" if ok else "not related", 0 if ok else 1)
    fn = bisim.standard_bisim if args.flavor == "standard" else bisim.awareness_bisim
    fam = fn(p1, p2, q)
    if fam is None:
        return rep.emit({"related": False, "family": None}, "not related", 1)
    dump = fam.to_json()
    lines = ["related"]
    for sl in dump["slices"]:
        pairs = " ".join(f"({a},{b})" for a, b in sl["pairs"])
        lines.append(f"  [{','.join(sl['atoms'])}] {pairs}")
    return rep.emit({"related": True, "family": dump}, "\n".join(lines), 0)


def cmd_equiv(args) -> int:
    m1, m2 = _model(args.model1), _model(args.model2)
    p1, p2 = _point(m1, args.point1), _point(m2, args.point2)
    q = _csv(args.atoms) or sorted(m1.atoms | m2.atoms)
    rep = Report(args, {"command": "equiv", "fragment": args.fragment, "left": [args.model1, args.point1],
                        "right": [args.model2, args.point2], "atoms": sorted(q)})
    rep.bounds = {"depth": args.max_depth, "size": args.size}
    f = semantics.modal_equiv_bounded(p1, p2, args.fragment, q, args.max_depth, args.size)
    if f is None:
        return rep.emit({"equivalent": True, "distinguishing": None},
                        "equivalent within bounds", 0)
    text = print_formula(f)
    return rep.emit({"equivalent": False, "distinguishing": text}, f"distinguished by {text}", 1)


def cmd_update(args) -> int:
    m = _model(args.model)
    pm = _point(m, args.point)
    u = _universe(args, m)
    probe = _formula(f"[act {args.action}] top", u)
    pa = models.PointedAction(probe.action, probe.point)
    rep = Report(args, {"command": "update", "model": args.model, "point": args.point, "action": args.action})
    out = models.product_update(pm, pa)
    if out is None:
        return rep.emit({"executable": False}, "not executable: precondition fails at the point", 1)
    doc = models.dump_model(out.model)
    point = models.state_name(out.point)
    return rep.emit({"executable": True, "model": doc, "point": point},
                    json.dumps({"point": point, "model": doc}, indent=2), 0)


def cmd_reduce(args) -> int:
    u = _universe(args)
    f = _formula(args.formula, u)
    trace = [] if args.trace else None
    rep = Report(args, {"command": "reduce", "formula": print_formula(f)})
    try:
        g = translate.reduce_dynamic(f, trace)
    except translate.ReductionError as e:
        raise UsageError(str(e)) from None
    text = print_formula(g)
    if trace is not None and not args.json:
        for st in trace:
            print(st)
    result = {"formula": text}
    if trace is not None:
        result["trace"] = [{"schema": st.schema, "before": print_formula(st.before), "after": print_formula(st.after)}
                           for st in trace]
    return rep.emit(result, text, 0)


def cmd_translate(args) -> int:
    u = _universe(args)
    f = _formula(args.formula, u)
    rep = Report(args, {"command": "translate", "direction": args.direction, "formula": print_formula(f)})
    try:
        if args.direction == "explicit-to-box":
            g = translate.expand_explicit(f)
        elif args.direction == "box-to-dynamic":
            g = translate.box_to_dynamic(f, u.agents)
        else:
            g = forgetting.speculative_translate(f)
    except ValueError as e:
        raise UsageError(str(e)) from None
    text = print_formula(g)
    return rep.emit({"formula": text}, text, 0)


def cmd_valid(args) -> int:
    u = _universe(args)
    f = _formula(args.formula, u)
    rep = Report(args, {"command": "valid", "formula": print_formula(f)})
    rep.bounds = {"max_states": args.max_states}
    try:
        cm = axioms.bounded_validity(f, args.max_states, u.agents)
    except (ValueError, axioms.EnumerationLimitError) as e:
        raise UsageError(str(e)) from None
    if cm is None:
        return rep.emit({"valid": True, "countermodel": None}, f"valid on models with at most {args.max_states} states", 0)
    doc = models.dump_model(cm.model)
    text = "countermodel at " + models.state_name(cm.point) + "\n" + json.dumps(doc, indent=2)
    return rep.emit({"valid": False, "countermodel": doc, "point": models.state_name(cm.point)}, text, 1)


def cmd_synth(args) -> int:
    src, tgt = _model(args.source), _model(args.target)
    sp = _point(src, args.source_point or models.state_name(src.states[0]))
    tp = _point(tgt, args.target_point or models.state_name(tgt.states[0]))
    rep = Report(args, {"command": "synth", "source": args.source, "target": args.target,
                        "source_point": models.state_name(sp.point), "target_point": models.state_name(tp.point)})
    try:
        acts = models.synthesize_change(sp, tp)
    except models.ModelError as e:
        raise UsageError(str(e)) from None
    cur = sp
    for pa in acts:
        cur = models.product_update(cur, pa)
    verified = cur is not None and bisim.standard_bisim(cur, tp, src.atoms | tgt.atoms) is not None
    docs = [{"action_model": models.dump_action_model(pa.action_model), "point": pa.point} for pa in acts]
    text = json.dumps(docs, indent=2) + f"\nverified standard bisimilar to target: {str(verified).lower()}"
    return rep.emit({"actions": docs, "verified": verified}, text, 0 if verified else 1)


def cmd_prove_check(args) -> int:
    u = _universe(args)
    try:
        steps = axioms.load_proof(_read_json(args.script), u)
    except (ValueError, FormulaSyntaxError) as e:
        raise UsageError(f"{args.script}: {e}") from None
    rep = Report(args, {"command": "prove-check", "script": args.script, "system": args.system})
    res = axioms.check_proof(steps, args.system, strict_ks=args.strict_ks or None)
    result = {"accepted": res.ok, "failed_step": res.failed_step, "message": res.message,
              "justifications": list(res.justifications)}
    return rep.emit(result, res.message, 0 if res.ok else 1)


def cmd_axiom_match(args) -> int:
    u = _universe(args)
    f = _formula(args.formula, u)
    rep = Report(args, {"command": "axiom-match", "formula": print_formula(f), "system": args.system})
    m, reason = axioms.explain_axiom(f, args.system, strict_ks=args.strict_ks or None)
    if m is None:
        return rep.emit({"schema": None, "reason": reason}, f"no match: {reason}", 1)
    binding = {k: (print_formula(v) if isinstance(v, Formula) else v) for k, v in m.binding.items()}
    return rep.emit({"schema": m.schema, "binding": binding}, m.describe(), 0)


# --- argument parsing ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="awarelogic", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--actions", action="append", metavar="FILE", help="action model document (repeatable)")
    vocab = argparse.ArgumentParser(add_help=False)
    vocab.add_argument("--atoms", help="comma-separated atoms (default p)")
    vocab.add_argument("--agents", help="comma-separated agents (default i)")
    oracle = argparse.ArgumentParser(add_help=False)
    oracle.add_argument("--strategy", choices=("auto", "oracle", "interpolation"), default="auto")
    oracle.add_argument("--depth", type=int, default=None, help="oracle tree depth")
    oracle.add_argument("--branching", type=int, default=2, help="oracle branching per agent")
    oracle.add_argument("--cap", type=int, default=semantics.DEFAULT_ORACLE_CAP, help="oracle node cap")

    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("mc", parents=[common, oracle], help="model check a formula")
    s.add_argument("model")
    s.add_argument("point")
    s.add_argument("formula")
    s.set_defaults(fn=cmd_mc)

    s = sub.add_parser("bisim", parents=[common], help="standard or awareness bisimilarity")
    s.add_argument("flavor", choices=("standard", "aware"))
    s.add_argument("model1")
    s.add_argument("point1")
    s.add_argument("model2")
    s.add_argument("point2")
    s.add_argument("--atoms", default="", help="comma-separated atom set Q")
    s.add_argument("--bound", type=int, default=None, help="check depth-bounded bisimilarity instead")
    s.set_defaults(fn=cmd_bisim)

    s = sub.add_parser("equiv", parents=[common], help="search a distinguishing formula")
    s.add_argument("fragment", choices=semantics.FRAGMENTS)
    s.add_argument("model1")
    s.add_argument("point1")
    s.add_argument("model2")
    s.add_argument("point2")
    s.add_argument("--atoms", default=None)
    s.add_argument("--max-depth", type=int, default=2)
    s.add_argument("--size", type=int, default=8)
    s.set_defaults(fn=cmd_equiv)

    s = sub.add_parser("update", parents=[common], help="execute a pointed action")
    s.add_argument("model")
    s.add_argument("point")
    s.add_argument("action", help="A+SET, A-SET, A+SET/AGENT, !FORMULA or NAME[@ACTION]")
    s.set_defaults(fn=cmd_update)

    s = sub.add_parser("reduce", parents=[common, vocab], help="eliminate dynamic operators")
    s.add_argument("formula")
    s.add_argument("--trace", action="store_true", help="print every rewrite step")
    s.set_defaults(fn=cmd_reduce)

    s = sub.add_parser("translate", parents=[common, vocab], help="translate between fragments")
    s.add_argument("direction", choices=("explicit-to-box", "box-to-dynamic", "speculative-to-explicit"))
    s.add_argument("formula")
    s.set_defaults(fn=cmd_translate)

    s = sub.add_parser("valid", parents=[common, vocab], help="bounded validity check")
    s.add_argument("formula")
    s.add_argument("--max-states", type=int, default=3)
    s.set_defaults(fn=cmd_valid)

    s = sub.add_parser("synth", parents=[common], help="actions turning one model into another")
    s.add_argument("source")
    s.add_argument("target")
    s.add_argument("--source-point", default=None)
    s.add_argument("--target-point", default=None)
    s.set_defaults(fn=cmd_synth)

    s = sub.add_parser("prove-check", parents=[common, vocab], help="check a proof script")
    s.add_argument("script")
    s.add_argument("system", choices=tuple(axioms.SYSTEMS))
    s.add_argument("--strict-ks", action="store_true", help="KS side condition: p must not occur in the known formula")
    s.set_defaults(fn=cmd_prove_check)

    s = sub.add_parser("axiom-match", parents=[common, vocab], help="which schema a formula instantiates")
    s.add_argument("formula")
    s.add_argument("system", choices=tuple(axioms.SYSTEMS))
    s.add_argument("--strict-ks", action="store_true")
    s.set_defaults(fn=cmd_axiom_match)
    return p


def run(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except semantics.OracleLimitError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
