from .parser import FormulaSyntaxError, parse_formula
from .progression import (
    eval_at_end,
    progress,
    progress_word,
    s_and,
    s_or,
    simplify,
    to_nnf,
)
from .semantics import evaluate, letter_kind, robustness
from .syntax import (
    FALSE,
    FULL,
    TRUE,
    Always,
    And,
    Cmp,
    Eventually,
    FalseBool,
    Formula,
    Implies,
    Interval,
    Next,
    Not,
    Or,
    Prop,
    Release,
    TrueBool,
    Until,
    atom_kind,
    comparisons,
    map_atoms,
    propositions,
    subformulas,
    temporal_endpoints,
    to_core,
    to_str,
)

__all__ = [
    "FALSE",
    "FULL",
    "TRUE",
    "Always",
    "And",
    "Cmp",
    "Eventually",
    "FalseBool",
    "Formula",
    "FormulaSyntaxError",
    "Implies",
    "Interval",
    "Next",
    "Not",
    "Or",
    "Prop",
    "Release",
    "TrueBool",
    "Until",
    "atom_kind",
    "comparisons",
    "eval_at_end",
    "evaluate",
    "letter_kind",
    "map_atoms",
    "parse_formula",
    "progress",
    "progress_word",
    "propositions",
    "robustness",
    "s_and",
    "s_or",
    "simplify",
    "subformulas",
    "temporal_endpoints",
    "to_core",
    "to_nnf",
    "to_str",
]
