"""MLTS: an ML-family language in which binders in data structures move to
binders in programs instead of ever becoming free names.

The package provides a parser for the OCaml-flavoured concrete syntax, a type
checker enforcing the static pattern-matching restrictions, a small-step
reference evaluator, and an independent big-step evaluator used for
differential testing.
"""

from mlts.syntax import (
    alpha_eq,
    close_binder,
    fresh_atom,
    occurs_atom,
    open_binder,
    subst_general,
)

__all__ = [
    "alpha_eq",
    "close_binder",
    "fresh_atom",
    "occurs_atom",
    "open_binder",
    "subst_general",
]
