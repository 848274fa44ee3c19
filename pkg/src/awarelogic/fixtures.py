"""Built-in example models, addressable by name from the command line."""
from __future__ import annotations

from .models import Model, load_model

FIX_M_DOC = {
    "atoms": ["p"], "agents": ["i"], "states": ["s", "t", "u"],
    "rel": {"i": [["s", "t"], ["t", "u"]]},
    "aware": {"i": {"s": ["p"], "t": [], "u": []}},
    "val": {"p": ["s", "t", "u"]},
}

FIX_M2_DOC = {**FIX_M_DOC, "val": {"p": ["s", "t"]}}

FIX_M = load_model(FIX_M_DOC)
FIX_M2 = load_model(FIX_M2_DOC)

FIXTURES = {"FIX-M": FIX_M, "FIX-M2": FIX_M2}


def fixture(name: str) -> Model:
    try:
        return FIXTURES[name]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {', '.join(sorted(FIXTURES))}") from None
