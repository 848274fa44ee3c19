"""Epistemic logics of propositional awareness: model checking, bisimulation,
dynamics and axiom checking."""
from .syntax import (
    TOP, And, Atom, Aw, Box, Dyn, Formula, FormulaSyntaxError, Ke, Ks, Le, Not, Top,
    Universe, bot, conj, dia, disj, free_vars, iff, implies, ls, modal_depth,
    parse_formula, print_formula, size, substitute,
)
from .models import (
    ActionModel, Model, ModelError, PointedAction, PointedModel, builtin_action,
    load_action_model, load_model, product_update, synthesize_change,
)
from .semantics import EvalContext, OracleLimitError, satisfies, truth_set
from .bisim import awareness_bisim, standard_bisim
from .fixtures import FIX_M, FIX_M2, fixture

__version__ = "0.1.0"
