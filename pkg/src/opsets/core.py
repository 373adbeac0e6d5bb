"""Operation identifiers, operations, the OpSet container and its interpretation.

An OpSet is a grow-only set of ``(OpId, Operation)`` pairs. Replicas merge by
set union, and every replica derives its view of the data by folding a pure
step function over the operations in ascending ID order. Two replicas holding
equal OpSets therefore always hold equal state.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, NamedTuple, TypeVar, Union

MAX_COUNTER = 2**64 - 1
INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

S = TypeVar("S")


class OpSetError(Exception):
    """Base class for violations of the OpSet invariants."""


class UniquenessError(OpSetError):
    pass


class CausalityError(OpSetError):
    pass


class CounterOverflowError(OpSetError):
    pass


class OpId(NamedTuple):
    """A Lamport timestamp.

    Tuple ordering gives exactly the required total order: counters first,
    then node IDs. Python compares ``str`` by code point, which coincides with
    bytewise comparison of the UTF-8 encodings.
    """

    counter: int
    node: str

    def __repr__(self) -> str:
        return f"{self.counter}@{self.node}" if self.node else f"{self.counter}@"


ROOT_ID = OpId(0, "")

Primitive = Union[str, int, bool, None, float]
MapKey = Union[str, int, bool]
Key = Union[MapKey, OpId]


def compare_ids(a: OpId, b: OpId) -> int:
    """Three-way comparison: -1, 0 or 1."""
    return (a > b) - (a < b)


def validate_id(oid: Any) -> OpId:
    if not isinstance(oid, tuple) or len(oid) != 2:
        raise ValueError(f"not an operation ID: {oid!r}")
    counter, node = oid
    if isinstance(counter, bool) or not isinstance(counter, int):
        raise ValueError(f"counter must be an integer: {counter!r}")
    if not 0 <= counter <= MAX_COUNTER:
        raise ValueError(f"counter out of range: {counter}")
    if not isinstance(node, str):
        raise ValueError(f"node ID must be a string: {node!r}")
    if not node and counter != 0:
        raise ValueError("empty node ID is reserved for the root ID (counter 0)")
    return OpId(counter, node)


def validate_primitive(value: Any) -> Primitive:
    if value is None or isinstance(value, (bool, str, float)):
        return value
    if isinstance(value, int):
        if not INT64_MIN <= value <= INT64_MAX:
            raise ValueError(f"integer out of 64-bit range: {value}")
        return value
    raise TypeError(f"not a primitive value: {value!r}")


def validate_map_key(key: Any) -> MapKey:
    if isinstance(key, (bool, str)):
        return key
    if isinstance(key, int):
        return validate_primitive(key)  # type: ignore[return-value]
    raise TypeError(f"not a map key: {key!r}")


def value_token(value: Any) -> tuple:
    """Structural identity of a primitive or key.

    Needed because Python treats ``1 == 1.0 == True``. Floats compare by bit
    pattern so ``-0.0`` and NaN round-trip exactly.
    """
    if isinstance(value, OpId):
        return ("id", value.counter, value.node)
    if value is None:
        return ("null",)
    if isinstance(value, bool):
        return ("bool", value)
    if isinstance(value, int):
        return ("int", value)
    if isinstance(value, float):
        return ("f64", struct.pack(">d", value))
    if isinstance(value, str):
        return ("str", value)
    raise TypeError(f"unsupported value: {value!r}")


_KEY_RANK = {"bool": 0, "int": 1, "str": 2, "id": 3}


def key_sort_key(key: Key) -> tuple:
    """Deterministic order over map keys: type tag first, then value."""
    tok = value_token(key)
    return (_KEY_RANK[tok[0]],) + tok[1:]


# Operations ---------------------------------------------------------------


class Operation:
    """Base class of the six operation types."""

    __slots__ = ()

    def deps(self) -> frozenset[OpId]:
        return frozenset()


@dataclass(frozen=True)
class MakeMap(Operation):
    pass


@dataclass(frozen=True)
class MakeList(Operation):
    pass


@dataclass(frozen=True, eq=False)
class MakeVal(Operation):
    val: Primitive

    def __post_init__(self) -> None:
        validate_primitive(self.val)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MakeVal):
            return NotImplemented
        return value_token(self.val) == value_token(other.val)

    def __hash__(self) -> int:
        return hash(("MakeVal", value_token(self.val)))


@dataclass(frozen=True)
class InsertAfter(Operation):
    ref: OpId

    def deps(self) -> frozenset[OpId]:
        return frozenset((self.ref,))


@dataclass(frozen=True, eq=False)
class Assign(Operation):
    obj: OpId
    key: Key
    val: OpId
    prev: frozenset[OpId] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "prev", frozenset(self.prev))
        if not isinstance(self.key, OpId):
            validate_map_key(self.key)

    def deps(self) -> frozenset[OpId]:
        d = {self.obj, self.val, *self.prev}
        if isinstance(self.key, OpId):
            d.add(self.key)
        return frozenset(d)

    def _ident(self) -> tuple:
        return (self.obj, value_token(self.key), self.val, self.prev)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Assign):
            return NotImplemented
        return self._ident() == other._ident()

    def __hash__(self) -> int:
        return hash(("Assign",) + self._ident())


@dataclass(frozen=True, eq=False)
class Remove(Operation):
    obj: OpId
    key: Key
    prev: frozenset[OpId] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        object.__setattr__(self, "prev", frozenset(self.prev))
        if not isinstance(self.key, OpId):
            validate_map_key(self.key)

    def deps(self) -> frozenset[OpId]:
        d = {self.obj, *self.prev}
        if isinstance(self.key, OpId):
            d.add(self.key)
        return frozenset(d)

    def _ident(self) -> tuple:
        return (self.obj, value_token(self.key), self.prev)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Remove):
            return NotImplemented
        return self._ident() == other._ident()

    def __hash__(self) -> int:
        return hash(("Remove",) + self._ident())


def deps(op: Operation) -> frozenset[OpId]:
    return op.deps()


# OpSet --------------------------------------------------------------------


class OpSet:
    """An immutable finite set of ``(OpId, Operation)`` pairs.

    Construction checks uniqueness (one operation per ID) and causality
    (every dependency is strictly below the ID that carries it). Referenced
    operations need not be present.
    """

    __slots__ = ("_ops", "_sorted", "_max_counter")

    def __init__(self, entries: Iterable[tuple[OpId, Operation]] = ()) -> None:
        ops: dict[OpId, Operation] = {}
        for oid, op in entries:
            _check_entry(ops, oid, op)
            ops[oid] = op
        self._ops = ops
        self._sorted: tuple[tuple[OpId, Operation], ...] | None = None
        self._max_counter: int | None = None

    @classmethod
    def _trusted(cls, ops: dict[OpId, Operation]) -> OpSet:
        new = cls.__new__(cls)
        new._ops = ops
        new._sorted = None
        new._max_counter = None
        return new

    def __len__(self) -> int:
        return len(self._ops)

    def __iter__(self) -> Iterator[tuple[OpId, Operation]]:
        return iter(self.linearize())

    def __contains__(self, oid: object) -> bool:
        return oid in self._ops

    def __getitem__(self, oid: OpId) -> Operation:
        return self._ops[oid]

    def get(self, oid: OpId, default: Operation | None = None) -> Operation | None:
        return self._ops.get(oid, default)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OpSet):
            return NotImplemented
        return self._ops == other._ops

    def __hash__(self) -> int:
        return hash(frozenset(self._ops.items()))

    def __repr__(self) -> str:
        return f"OpSet({list(self.linearize())!r})"

    def ids(self) -> frozenset[OpId]:
        return frozenset(self._ops)

    def as_dict(self) -> dict[OpId, Operation]:
        return dict(self._ops)

    @property
    def max_counter(self) -> int:
        if self._max_counter is None:
            self._max_counter = max((oid.counter for oid in self._ops), default=0)
        return self._max_counter

    def max_id(self) -> OpId | None:
        return max(self._ops) if self._ops else None

    def linearize(self) -> tuple[tuple[OpId, Operation], ...]:
        if self._sorted is None:
            self._sorted = tuple(sorted(self._ops.items(), key=lambda item: item[0]))
        return self._sorted

    def add(self, oid: OpId, op: Operation) -> OpSet:
        existing = self._ops.get(oid)
        if existing is not None and existing == op:
            return self
        _check_entry(self._ops, oid, op)
        ops = dict(self._ops)
        ops[oid] = op
        return OpSet._trusted(ops)

    def merge(self, other: OpSet) -> OpSet:
        if len(other) > len(self):
            return other.merge(self)
        added = {}
        for oid, op in other._ops.items():
            mine = self._ops.get(oid)
            if mine is None:
                added[oid] = op
            elif mine != op:
                raise UniquenessError(f"{oid!r} maps to both {mine!r} and {op!r}")
        if not added:
            return self
        ops = dict(self._ops)
        ops.update(added)
        return OpSet._trusted(ops)

    def difference(self, other: OpSet) -> list[tuple[OpId, Operation]]:
        """Entries of ``self`` missing from ``other``, in ID order."""
        return sorted(
            ((oid, op) for oid, op in self._ops.items() if oid not in other._ops),
            key=lambda item: item[0],
        )


def _check_entry(ops: dict[OpId, Operation], oid: OpId, op: Operation) -> None:
    if not isinstance(op, Operation):
        raise TypeError(f"not an operation: {op!r}")
    existing = ops.get(oid)
    if existing is not None and existing != op:
        raise UniquenessError(f"{oid!r} maps to both {existing!r} and {op!r}")
    for d in op.deps():
        if not d < oid:
            raise CausalityError(f"{oid!r} depends on {d!r}, which is not lower")


EMPTY = OpSet()


def new_id(o: OpSet, node: str) -> OpId:
    """One more than the largest counter of any operation in ``o``."""
    if not node:
        raise ValueError("node ID must be non-empty")
    counter = o.max_counter + 1
    if counter > MAX_COUNTER:
        raise CounterOverflowError("operation counter exhausted")
    return OpId(counter, node)


def add_op(o: OpSet, oid: OpId, op: Operation) -> OpSet:
    return o.add(oid, op)


def merge(a: OpSet, b: OpSet) -> OpSet:
    return a.merge(b)


def linearize(o: OpSet) -> tuple[tuple[OpId, Operation], ...]:
    return o.linearize()


def is_spec_ops(ops: Iterable[tuple[OpId, Operation]]) -> bool:
    """Sorted strictly ascending by ID, and every dependency below its op."""
    prev = None
    for oid, op in ops:
        if prev is not None and not prev < oid:
            return False
        if any(not d < oid for d in op.deps()):
            return False
        prev = oid
    return True


Step = Callable[[S, OpId, Operation], S]
_STALE = object()


def interpret(o: OpSet, step: Step, initial: S) -> S:
    state = initial
    for oid, op in o.linearize():
        state = step(state, oid, op)
    return state


class CachedInterpretation:
    """An OpSet paired with its (lazily computed) interpretation.

    Adding operations whose IDs all exceed the current maximum folds them
    onto the cached state. Anything else invalidates the cache, and the next
    read of ``state`` recomputes from scratch.
    """

    __slots__ = ("opset", "step", "initial", "_state")

    def __init__(self, opset: OpSet, step: Step, initial: Any, state: Any = _STALE) -> None:
        self.opset = opset
        self.step = step
        self.initial = initial
        self._state = state

    @classmethod
    def of(cls, opset: OpSet, step: Step, initial: Any) -> CachedInterpretation:
        return cls(opset, step, initial)

    @property
    def state(self) -> Any:
        if self._state is _STALE:
            self._state = interpret(self.opset, self.step, self.initial)
        return self._state

    def with_ops(self, entries: Iterable[tuple[OpId, Operation]]) -> CachedInterpretation:
        new = sorted(
            ((oid, op) for oid, op in entries if oid not in self.opset),
            key=lambda item: item[0],
        )
        if not new:
            return self
        opset = self.opset.merge(OpSet(new))
        top = self.opset.max_id()
        state = _STALE
        if self._state is not _STALE and (top is None or new[0][0] > top):
            state = self._state
            for oid, op in new:
                state = self.step(state, oid, op)
        return CachedInterpretation(opset, self.step, self.initial, state)

    def merge(self, other: OpSet) -> CachedInterpretation:
        return self.with_ops(other.difference(self.opset))
