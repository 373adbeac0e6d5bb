"""Restricting the object graph to a tree, with an atomic move.

Only Assign is interpreted differently from the plain datatypes: it is
ignored if it would make an object its own ancestor, and it detaches the
assigned value from wherever it was before. Assigning an object that already
sits in the tree is therefore a move.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from .core import ROOT_ID, Assign, MakeList, MakeMap, Operation, OpId, OpSet, interpret
from .datatypes import DocState, Element, apply_op, initial_state


class RootKind(enum.Enum):
    MAP = "map"
    LIST = "list"


@dataclass(frozen=True)
class TreeConfig:
    root_id: OpId = ROOT_ID
    root_kind: RootKind = RootKind.MAP

    def root_op(self) -> Operation:
        return MakeMap() if self.root_kind is RootKind.MAP else MakeList()

    def seed(self) -> OpSet:
        """The OpSet every replica of this tree starts from."""
        return OpSet([(self.root_id, self.root_op())])


def parent_pairs(e: Iterable[Element]) -> set[tuple[OpId, OpId]]:
    return {(t.obj, t.val) for t in e}


def ancestor(e: Iterable[Element]) -> set[tuple[OpId, OpId]]:
    """Transitive closure of the parent relation, as (ancestor, descendant)."""
    step = parent_pairs(e)
    children: dict[OpId, set[OpId]] = defaultdict(set)
    for x, y in step:
        children[x].add(y)
    closure = set(step)
    frontier = set(step)
    while frontier:
        nxt = set()
        for x, y in frontier:
            for z in children.get(y, ()):
                if (x, z) not in closure:
                    nxt.add((x, z))
        closure |= nxt
        frontier = nxt
    return closure


def is_ancestor(e: Iterable[Element], a: OpId, d: OpId) -> bool:
    """Whether ``(a, d)`` is in ``ancestor(e)``, by search from ``a``."""
    children: dict[OpId, list[OpId]] = defaultdict(list)
    for t in e:
        children[t.obj].append(t.val)
    stack = list(children.get(a, ()))
    seen = set()
    while stack:
        x = stack.pop()
        if x == d:
            return True
        if x in seen:
            continue
        seen.add(x)
        stack.extend(children.get(x, ()))
    return False


def apply_op_tree(s: DocState, oid: OpId, op: Operation) -> DocState:
    if not isinstance(op, Assign):
        return apply_op(s, oid, op)
    # val == obj is rejected too: the closure only holds paths of length >= 1
    if op.val == op.obj or is_ancestor(s.e.values(), op.val, op.obj):
        return s
    e = {i: t for i, t in s.e.items() if i not in op.prev and t.val != op.val}
    e[oid] = Element(oid, op.obj, op.key, op.val)
    return DocState(e, s.l, s.mode)


def interpret_tree(o: OpSet) -> DocState:
    return interpret(o, apply_op_tree, initial_state())


class ViolationKind(enum.Enum):
    ROOT_HAS_PARENT = "root_has_parent"
    MULTIPLE_PARENTS = "multiple_parents"
    CYCLE = "cycle"


@dataclass(frozen=True)
class Violation:
    kind: ViolationKind
    node: OpId
    tuples: tuple[OpId, ...] = ()


@dataclass(frozen=True)
class TreeReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_tree_invariants(s: DocState, cfg: TreeConfig = TreeConfig()) -> TreeReport:
    found: list[Violation] = []
    by_val: dict[OpId, list[OpId]] = defaultdict(list)
    for t in s.e.values():
        by_val[t.val].append(t.id)
    if cfg.root_id in by_val:
        found.append(Violation(ViolationKind.ROOT_HAS_PARENT, cfg.root_id, tuple(sorted(by_val[cfg.root_id]))))
    for val in sorted(by_val):
        if len(by_val[val]) > 1:
            found.append(Violation(ViolationKind.MULTIPLE_PARENTS, val, tuple(sorted(by_val[val]))))
    for a, d in sorted(ancestor(s.e.values())):
        if a == d:
            found.append(Violation(ViolationKind.CYCLE, a))
    return TreeReport(tuple(found))
