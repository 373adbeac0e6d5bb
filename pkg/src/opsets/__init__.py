"""Replicated datatypes defined as interpretations of a set of operations."""

from .core import (
    ROOT_ID,
    Assign,
    CachedInterpretation,
    CausalityError,
    InsertAfter,
    MakeList,
    MakeMap,
    MakeVal,
    OpId,
    OpSet,
    OpSetError,
    Remove,
    UniquenessError,
    interpret,
    new_id,
)
from .datatypes import END, DocState, RegisterMode, apply_op, interpret_doc, materialize
from .opgen import Replica

__all__ = [
    "ROOT_ID",
    "END",
    "Assign",
    "CachedInterpretation",
    "CausalityError",
    "DocState",
    "InsertAfter",
    "MakeList",
    "MakeMap",
    "MakeVal",
    "OpId",
    "OpSet",
    "OpSetError",
    "RegisterMode",
    "Remove",
    "Replica",
    "UniquenessError",
    "apply_op",
    "interpret",
    "interpret_doc",
    "materialize",
    "new_id",
]
