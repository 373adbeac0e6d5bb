"""Generating well-formed operations for map and list edits.

Each function takes a node's current OpSet and returns a new OpSet with the
edit's operations added. The current (E, L) is read by interpreting the
OpSet; callers that already hold it (e.g. ``Replica``) can pass ``state``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable

from .core import (
    Assign,
    CachedInterpretation,
    InsertAfter,
    MakeList,
    MakeMap,
    MakeVal,
    MapKey,
    Operation,
    OpId,
    OpSet,
    Remove,
    new_id,
    validate_map_key,
    validate_primitive,
)
from .datatypes import (
    DocState,
    apply_op,
    idx_key,
    initial_state,
    interpret_doc,
    visible_list_elements,
)


class EditError(ValueError):
    """An edit that cannot be expressed against the current OpSet."""


class ListIndexError(EditError, IndexError):
    pass


@dataclass(frozen=True)
class ExistingObject:
    """Refers to an object that is already in the OpSet (used for moves)."""

    id: OpId


EMPTY_MAP: dict = {}
EMPTY_LIST: list = []


def _current(o: OpSet, state: DocState | None) -> DocState:
    return interpret_doc(o) if state is None else state


def value_id(o: OpSet, node: str, v: Any) -> tuple[OpSet, OpId]:
    """Add the operation that creates ``v`` (if any) and return its ID.

    ``v`` is a primitive, ``{}`` or ``[]`` for a fresh empty map or list, or
    an ``ExistingObject``.
    """
    if isinstance(v, ExistingObject):
        if not isinstance(o.get(v.id), (MakeMap, MakeList, MakeVal)):
            raise EditError(f"{v.id!r} is not an existing object")
        return o, v.id
    if isinstance(v, dict):
        if v:
            raise EditError("only the empty map literal is supported")
        op: Operation = MakeMap()
    elif isinstance(v, list):
        if v:
            raise EditError("only the empty list literal is supported")
        op = MakeList()
    else:
        op = MakeVal(validate_primitive(v))
    oid = new_id(o, node)
    return o.add(oid, op), oid


def _require(o: OpSet, oid: OpId, kind: type, what: str) -> None:
    if not isinstance(o.get(oid), kind):
        raise EditError(f"{oid!r} is not a {what}")


def _prev(s: DocState, obj: OpId, key) -> frozenset[OpId]:
    return frozenset(t.id for t in s.slot(obj, key))


def set_map_key(o: OpSet, node: str, map_id: OpId, key: MapKey, v: Any, *, state: DocState | None = None) -> OpSet:
    _require(o, map_id, MakeMap, "map")
    key = validate_map_key(key)
    s = _current(o, state)
    o, val = value_id(o, node, v)
    oid = new_id(o, node)
    return o.add(oid, Assign(map_id, key, val, _prev(s, map_id, key)))


def remove_map_key(o: OpSet, node: str, map_id: OpId, key: MapKey, *, state: DocState | None = None) -> OpSet:
    _require(o, map_id, MakeMap, "map")
    key = validate_map_key(key)
    s = _current(o, state)
    oid = new_id(o, node)
    return o.add(oid, Remove(map_id, key, _prev(s, map_id, key)))


def _element_at(s: DocState, list_id: OpId, index: int) -> OpId:
    if index < 0:
        raise ListIndexError(f"negative index {index}")
    key = idx_key(s, list_id, index)
    if key is None:
        raise ListIndexError(f"index {index} out of range")
    return key


def ins_list_index(o: OpSet, node: str, list_id: OpId, index: int, v: Any, *, state: DocState | None = None) -> OpSet:
    _require(o, list_id, MakeList, "list")
    s = _current(o, state)
    ref = list_id if index == 0 else _element_at(s, list_id, index - 1)
    o, val = value_id(o, node, v)
    ins = new_id(o, node)
    o = o.add(ins, InsertAfter(ref))
    return o.add(new_id(o, node), Assign(list_id, ins, val, frozenset()))


def set_list_index(o: OpSet, node: str, list_id: OpId, index: int, v: Any, *, state: DocState | None = None) -> OpSet:
    _require(o, list_id, MakeList, "list")
    s = _current(o, state)
    key = _element_at(s, list_id, index)
    o, val = value_id(o, node, v)
    return o.add(new_id(o, node), Assign(list_id, key, val, _prev(s, list_id, key)))


def remove_list_index(o: OpSet, node: str, list_id: OpId, index: int, *, state: DocState | None = None) -> OpSet:
    _require(o, list_id, MakeList, "list")
    s = _current(o, state)
    key = _element_at(s, list_id, index)
    return o.add(new_id(o, node), Remove(list_id, key, _prev(s, list_id, key)))


@dataclass(frozen=True)
class Replica:
    """A node's OpSet with its interpretation kept up to date.

    Local edits only ever add IDs above everything the node has seen, so they
    are folded onto the cached state instead of recomputing.
    """

    node: str
    view: CachedInterpretation

    @classmethod
    def create(
        cls,
        node: str,
        opset: OpSet = OpSet(),
        step: Callable = apply_op,
        initial: DocState | None = None,
    ) -> Replica:
        return cls(node, CachedInterpretation.of(opset, step, initial or initial_state()))

    @property
    def opset(self) -> OpSet:
        return self.view.opset

    @property
    def state(self) -> DocState:
        return self.view.state

    def _edit(self, fn, *args) -> tuple[Replica, list]:
        before = self.view.opset
        after = fn(before, self.node, *args, state=self.view.state)
        added = after.difference(before)
        return Replica(self.node, self.view.with_ops(added)), added

    def set_map_key(self, map_id: OpId, key: MapKey, v: Any) -> tuple[Replica, list]:
        return self._edit(set_map_key, map_id, key, v)

    def remove_map_key(self, map_id: OpId, key: MapKey) -> tuple[Replica, list]:
        return self._edit(remove_map_key, map_id, key)

    def ins_list_index(self, list_id: OpId, index: int, v: Any) -> tuple[Replica, list]:
        return self._edit(ins_list_index, list_id, index, v)

    def set_list_index(self, list_id: OpId, index: int, v: Any) -> tuple[Replica, list]:
        return self._edit(set_list_index, list_id, index, v)

    def remove_list_index(self, list_id: OpId, index: int) -> tuple[Replica, list]:
        return self._edit(remove_list_index, list_id, index)

    def receive(self, entries) -> Replica:
        view = self.view.with_ops(entries)
        return self if view is self.view else Replica(self.node, view)

    def merge(self, other: OpSet) -> Replica:
        return self.receive(other.difference(self.view.opset))

    def visible(self, list_id: OpId) -> list[OpId]:
        return visible_list_elements(self.view.state, list_id)
