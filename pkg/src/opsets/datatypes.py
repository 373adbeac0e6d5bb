"""Maps, lists and registers interpreted over the relations (E, L).

E holds the current assignments as ``(id, obj, key, val)`` tuples; L holds
list successor pairs ``(prev, next)`` where ``next`` may be the end marker
``END``. Removing a list element only drops its values from E, so the element
stays in L as a tombstone that later insertions can still anchor to.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Union

from .core import (
    Assign,
    InsertAfter,
    Key,
    MakeList,
    MakeMap,
    MakeVal,
    Operation,
    OpId,
    OpSet,
    Primitive,
    Remove,
    interpret,
    key_sort_key,
    value_token,
)


class _End:
    """Marks the last element of a list in L. Never equal to any OpId."""

    _instance: _End | None = None

    def __new__(cls) -> _End:
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "END"

    def __reduce__(self):
        return (_End, ())


END = _End()

Next = Union[OpId, _End]


class ChainError(Exception):
    """A list's successor chain is missing a link or loops."""


class Element(NamedTuple):
    id: OpId
    obj: OpId
    key: Key
    val: OpId


class RegisterMode(enum.Enum):
    MULTI_VALUE = "mv"
    LAST_WRITER_WINS = "lww"


@dataclass(frozen=True, eq=False)
class DocState:
    """The pair (E, L) plus the register semantics used to build it.

    ``e`` maps each surviving assignment ID to its tuple; ``l`` maps each list
    node to its successor. Both are treated as immutable: ``apply_op`` always
    returns a fresh state.
    """

    e: Mapping[OpId, Element] = field(default_factory=dict)
    l: Mapping[OpId, Next] = field(default_factory=dict)
    mode: RegisterMode = RegisterMode.MULTI_VALUE

    @property
    def elements(self) -> frozenset[Element]:
        return frozenset(self.e.values())

    @property
    def list_pairs(self) -> frozenset[tuple[OpId, Next]]:
        return frozenset(self.l.items())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DocState):
            return NotImplemented
        return self.mode == other.mode and dict(self.e) == dict(other.e) and dict(self.l) == dict(other.l)

    __hash__ = None  # type: ignore[assignment]

    def slot(self, obj: OpId, key: Key) -> list[Element]:
        """Tuples currently assigned to ``key`` of ``obj``, newest first."""
        tok = value_token(key)
        found = [t for t in self.e.values() if t.obj == obj and value_token(t.key) == tok]
        found.sort(key=lambda t: t.id, reverse=True)
        return found


def initial_state(mode: RegisterMode = RegisterMode.MULTI_VALUE) -> DocState:
    return DocState({}, {}, mode)


def _assign(s: DocState, oid: OpId, op: Assign, keep) -> DocState:
    e = {i: t for i, t in s.e.items() if keep(t)}
    e[oid] = Element(oid, op.obj, op.key, op.val)
    return DocState(e, s.l, s.mode)


def apply_op(s: DocState, oid: OpId, op: Operation) -> DocState:
    """Interpret one operation on top of ``s``.

    Must be applied in ascending ID order; ``interpret_doc`` does that.
    """
    if isinstance(op, (MakeMap, MakeVal)):
        return s
    if isinstance(op, MakeList):
        l = dict(s.l)
        l[oid] = END
        return DocState(s.e, l, s.mode)
    if isinstance(op, InsertAfter):
        return _insert_after(s, oid, op.ref)
    if isinstance(op, Assign):
        if s.mode is RegisterMode.LAST_WRITER_WINS:
            tok = value_token(op.key)
            return _assign(s, oid, op, lambda t: t.obj != op.obj or value_token(t.key) != tok)
        prev = op.prev
        return _assign(s, oid, op, lambda t: t.id not in prev)
    if isinstance(op, Remove):
        if not op.prev:
            return s
        e = {i: t for i, t in s.e.items() if i not in op.prev}
        return DocState(e, s.l, s.mode)
    raise TypeError(f"unknown operation {op!r}")


def _insert_after(s: DocState, oid: OpId, ref: OpId) -> DocState:
    if ref not in s.l:
        return s
    l = dict(s.l)
    l[oid] = l[ref]
    l[ref] = oid
    return DocState(s.e, l, s.mode)


def interpret_doc(o: OpSet, mode: RegisterMode = RegisterMode.MULTI_VALUE) -> DocState:
    return interpret(o, apply_op, initial_state(mode))


# List access ---------------------------------------------------------------


def _walk(s: DocState, list_obj: OpId):
    """Yield the chain of element IDs after ``list_obj``, tombstones included."""
    if list_obj not in s.l:
        raise ChainError(f"{list_obj!r} is not a list in L")
    seen = {list_obj}
    cur = s.l[list_obj]
    while cur is not END:
        if cur in seen:
            raise ChainError(f"cycle in list {list_obj!r} at {cur!r}")
        seen.add(cur)
        yield cur
        try:
            cur = s.l[cur]
        except KeyError:
            raise ChainError(f"missing successor for {cur!r} in list {list_obj!r}") from None


def _visible_keys(s: DocState, list_obj: OpId) -> set:
    return {t.key for t in s.e.values() if t.obj == list_obj and isinstance(t.key, OpId)}


def visible_list_elements(s: DocState, list_obj: OpId) -> list[OpId]:
    visible = _visible_keys(s, list_obj)
    return [k for k in _walk(s, list_obj) if k in visible]


def list_chain(s: DocState, list_obj: OpId) -> list[OpId]:
    return list(_walk(s, list_obj))


def idx_key(s: DocState, list_obj: OpId, index: int) -> OpId | None:
    """ID of the visible element at ``index``, or None if the list is shorter."""
    if index < 0:
        raise ValueError("index must be non-negative")
    visible = _visible_keys(s, list_obj)
    for k in _walk(s, list_obj):
        if k in visible:
            if index == 0:
                return k
            index -= 1
    return None


# Materialization -------------------------------------------------------------


@dataclass(frozen=True)
class PrimitiveValue:
    value: Primitive

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PrimitiveValue):
            return NotImplemented
        return value_token(self.value) == value_token(other.value)

    def __hash__(self) -> int:
        return hash(value_token(self.value))


@dataclass(frozen=True)
class MapValue:
    entries: tuple[tuple[Key, tuple["Materialized", ...]], ...]

    def get(self, key: Key) -> tuple["Materialized", ...] | None:
        tok = value_token(key)
        for k, slot in self.entries:
            if value_token(k) == tok:
                return slot
        return None


@dataclass(frozen=True)
class ListValue:
    items: tuple[tuple["Materialized", ...], ...]


@dataclass(frozen=True)
class CycleRef:
    id: OpId


Materialized = Union[PrimitiveValue, MapValue, ListValue, CycleRef]


class UnknownObjectError(LookupError):
    pass


def materialize(s: DocState, root: OpId, make_ops: Mapping[OpId, Operation]) -> Materialized:
    """Render the object graph reachable from ``root``.

    Multi-value slots list values newest first. An object already on the
    current path renders as ``CycleRef``. Values whose creating operation is
    not in ``make_ops`` are skipped.
    """
    op = make_ops.get(root)
    if not isinstance(op, (MakeMap, MakeList, MakeVal)):
        raise UnknownObjectError(f"{root!r} does not name a MakeMap, MakeList or MakeVal operation")
    by_obj: dict[OpId, list[Element]] = {}
    for t in s.e.values():
        by_obj.setdefault(t.obj, []).append(t)
    return _render(s, root, make_ops, by_obj, frozenset())


def _render(s, oid, make_ops, by_obj, path) -> Materialized:
    op = make_ops[oid]
    if isinstance(op, MakeVal):
        return PrimitiveValue(op.val)
    if oid in path:
        return CycleRef(oid)
    path = path | {oid}

    def render_slot(tuples: list[Element]) -> tuple[Materialized, ...]:
        tuples = sorted(tuples, key=lambda t: t.id, reverse=True)
        return tuple(
            _render(s, t.val, make_ops, by_obj, path)
            for t in tuples
            if isinstance(make_ops.get(t.val), (MakeMap, MakeList, MakeVal))
        )

    mine = by_obj.get(oid, [])
    if isinstance(op, MakeMap):
        slots: dict[tuple, list[Element]] = {}
        for t in mine:
            if not isinstance(t.key, OpId):
                slots.setdefault(value_token(t.key), []).append(t)
        entries = []
        for group in slots.values():
            rendered = render_slot(group)
            if rendered:
                entries.append((group[0].key, rendered))
        entries.sort(key=lambda kv: key_sort_key(kv[0]))
        return MapValue(tuple(entries))
    # MakeList
    if oid not in s.l:
        return ListValue(())
    per_key: dict[OpId, list[Element]] = {}
    for t in mine:
        if isinstance(t.key, OpId):
            per_key.setdefault(t.key, []).append(t)
    items = []
    for k in _walk(s, oid):
        if k in per_key:
            rendered = render_slot(per_key[k])
            if rendered:
                items.append(rendered)
    return ListValue(tuple(items))


def make_ops_of(o: OpSet) -> dict[OpId, Operation]:
    return {oid: op for oid, op in o.linearize() if isinstance(op, (MakeMap, MakeList, MakeVal))}
