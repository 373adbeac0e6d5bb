"""Executable checks for the insertion-only list model.

Insertions are pairs ``(id, ref)`` where ``ref`` is None for an insertion at
the head. IDs may be any totally ordered hashable values; tests use plain
ints and ``OpId`` interchangeably.

This module holds two interpretations of insertion (positional and
successor-relation based), the no-interleaving checker for concurrent typed
runs, and checkers for the conditions of Attiya et al.'s strong list
specification over a small Insert/Delete language.
"""

from __future__ import annotations

import enum
import itertools
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, NamedTuple, Optional, Sequence, Union

from .core import OpId


class PreconditionError(ValueError):
    """The inputs do not satisfy a checker's stated preconditions."""


class InsOp(NamedTuple):
    id: Any
    ref: Optional[Any] = None


def insert_spec(xs: Sequence, op: InsOp) -> list:
    oid, ref = op
    if ref is None:
        return [oid, *xs]
    for i, x in enumerate(xs):
        if x == ref:
            return [*xs[: i + 1], oid, *xs[i + 1 :]]
    return list(xs)


def interp_ins(ops: Iterable[InsOp]) -> list:
    xs: list = []
    for op in ops:
        xs = insert_spec(xs, InsOp(*op))
    return xs


def succ_rel(xs: Sequence) -> set[tuple[Any, Any]]:
    rel = {(a, b) for a, b in zip(xs, xs[1:])}
    if xs:
        rel.add((xs[-1], None))
    return rel


def insert_alt(rel: set, oid, ref) -> set:
    nxt = [n for p, n in rel if p == ref]
    if not nxt:
        return set(rel)
    out = {(p, n) for p, n in rel if p != ref}
    out.add((ref, oid))
    out.update((oid, n) for n in nxt)
    return out


def interp_alt(head, ops: Iterable[InsOp]) -> set:
    rel = {(head, None)}
    for oid, ref in ops:
        rel = insert_alt(rel, oid, head if ref is None else ref)
    return rel


def is_insert_ops(ops: Sequence[InsOp]) -> bool:
    """Sorted strictly ascending by ID, with every ref below its op."""
    for i, (oid, ref) in enumerate(ops):
        if i and not ops[i - 1][0] < oid:
            return False
        if ref is not None and not ref < oid:
            return False
    return True


def is_insert_seq(start, ops: Sequence[InsOp]) -> bool:
    if not ops or ops[0][1] != start:
        return False
    return all(ops[i][1] == ops[i - 1][0] for i in range(1, len(ops)))


class Verdict(enum.Enum):
    BLOCK_XY = "blockXY"
    BLOCK_YX = "blockYX"
    START_MISSING = "startMissing"
    VIOLATION = "violation"


@dataclass(frozen=True)
class InterleavingResult:
    verdict: Verdict
    order: tuple
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict is not Verdict.VIOLATION


def check_no_interleaving(
    ops: Sequence[InsOp],
    xs: Sequence[InsOp],
    ys: Sequence[InsOp],
    start,
    order: Sequence | None = None,
) -> InterleavingResult:
    """Check that the runs ``xs`` and ``ys`` typed at ``start`` ended up as two blocks.

    ``order`` defaults to ``interp_ins(ops)``; pass a claimed outcome instead to
    ask whether the property would admit it.
    """
    ops = [InsOp(*op) for op in ops]
    xs = [InsOp(*op) for op in xs]
    ys = [InsOp(*op) for op in ys]
    if not is_insert_ops(ops):
        raise PreconditionError("ops is not sorted by ID with refs below")
    for name, seq in (("xs", xs), ("ys", ys)):
        if not is_insert_seq(start, seq):
            raise PreconditionError(f"{name} is not an insertion sequence from {start!r}")
        if not is_insert_ops(seq):
            raise PreconditionError(f"{name} is not sorted by ID")
    present = set(ops)
    if not all(op in present for op in itertools.chain(xs, ys)):
        raise PreconditionError("xs and ys must be contained in ops")
    x_ids = [op.id for op in xs]
    y_ids = [op.id for op in ys]
    if len(set(x_ids + y_ids)) != len(x_ids) + len(y_ids):
        raise PreconditionError("IDs across xs and ys must be distinct")

    result = tuple(interp_ins(ops) if order is None else order)
    if start is not None and start not in result:
        leaked = [i for i in x_ids + y_ids if i in result]
        if leaked:
            return InterleavingResult(Verdict.VIOLATION, result, f"start missing but {leaked!r} present")
        return InterleavingResult(Verdict.START_MISSING, result)

    pos: dict = {}
    for i, x in enumerate(result):
        pos.setdefault(x, i)
    missing = [i for i in x_ids + y_ids if i not in pos]
    if missing:
        return InterleavingResult(Verdict.VIOLATION, result, f"inserted IDs missing: {missing!r}")
    if max(pos[i] for i in x_ids) < min(pos[i] for i in y_ids):
        return InterleavingResult(Verdict.BLOCK_XY, result)
    if max(pos[i] for i in y_ids) < min(pos[i] for i in x_ids):
        return InterleavingResult(Verdict.BLOCK_YX, result)
    return InterleavingResult(Verdict.VIOLATION, result, "runs are interleaved")


# Insert/Delete language ------------------------------------------------------


@dataclass(frozen=True)
class Insert:
    ref: Optional[Any]
    val: Any


@dataclass(frozen=True)
class Delete:
    ref: Any


ListOp = Union[Insert, Delete]


@dataclass(frozen=True)
class ListState:
    order: tuple
    vals: Mapping


def list_op_deps(op) -> set:
    if isinstance(op, Insert):
        return set() if op.ref is None else {op.ref}
    return {op.ref}


def is_list_ops(ops: Sequence[tuple[Any, Any]]) -> bool:
    for i, (oid, op) in enumerate(ops):
        if i and not ops[i - 1][0] < oid:
            return False
        if any(not d < oid for d in list_op_deps(op)):
            return False
    return True


def interp_op(state: tuple[list, dict], oid, op) -> tuple[list, dict]:
    order, vals = state
    if isinstance(op, Insert):
        vals = dict(vals)
        vals[oid] = op.val
        return insert_spec(order, InsOp(oid, op.ref)), vals
    if isinstance(op, Delete):
        if op.ref not in vals:
            return order, vals
        vals = dict(vals)
        del vals[op.ref]
        return order, vals
    raise TypeError(f"unknown list operation {op!r}")


def interp_ops(ops: Iterable[tuple[Any, Any]]) -> ListState:
    state: tuple[list, dict] = ([], {})
    for oid, op in ops:
        state = interp_op(state, oid, op)
    return ListState(tuple(state[0]), state[1])


def _before(order: Sequence, x, y) -> bool:
    """True iff some occurrence of x precedes some occurrence of y."""
    try:
        first_x = order.index(x)
    except ValueError:
        return False
    return y in order[first_x + 1 :]


def list_order(ops: Iterable[tuple[Any, Any]], x, y) -> bool:
    return _before(interp_ops(ops).order, x, y)


def make_insert(order: Sequence, val, k: int) -> Insert:
    if k == 0 or not order:
        return Insert(None, val)
    return Insert(order[min(k - 1, len(order) - 1)], val)


# A_strong ----------------------------------------------------------------------


@dataclass
class ConditionResult:
    name: str
    checked: int = 0
    witnesses: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.witnesses


@dataclass
class AStrongReport:
    conditions: dict[str, ConditionResult]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.conditions.values())


def check_astrong(
    ops: Sequence[tuple[Any, Any]],
    *,
    subsets: int = 200,
    exhaustive_max: int = 10,
    rng: random.Random | None = None,
    max_witnesses: int = 5,
) -> AStrongReport:
    """Check conditions 1a, 1b, 1c and 2 of the strong list specification.

    1b compares ``ops`` against its sub-logs: every one of them when
    ``len(ops) <= exhaustive_max``, otherwise ``subsets`` random ones.
    1c treats each Insert as generated by ``make_insert`` against the
    interpretation of the ops preceding it, which recovers the index ``k``.
    """
    ops = list(ops)
    if not is_list_ops(ops):
        raise PreconditionError("ops is not sorted by ID with dependencies below")
    rng = rng or random.Random(0)
    c1a, c1b, c1c, c2 = (ConditionResult(n) for n in ("1a", "1b", "1c", "2"))
    full = interp_ops(ops)

    def witness(cond: ConditionResult, item) -> None:
        if len(cond.witnesses) < max_witnesses:
            cond.witnesses.append(item)

    # 1a: a brute scan of the log, independent of interp_ops
    inserted = {oid for oid, op in ops if isinstance(op, Insert)}
    deleted = {op.ref for _, op in ops if isinstance(op, Delete)}
    for a in sorted(inserted | set(full.vals), key=_sort_key):
        c1a.checked += 1
        if (a in full.vals) != (a in inserted and a not in deleted):
            witness(c1a, a)

    # 1b
    pos = {x: i for i, x in reversed(list(enumerate(full.order)))}
    n = len(ops)
    if n <= exhaustive_max:
        masks: Iterable[int] = range(1 << n)
    else:
        masks = (rng.getrandbits(n) for _ in range(subsets))
    for mask in masks:
        some = [ops[i] for i in range(n) if mask >> i & 1]
        sub = interp_ops(some).order
        c1b.checked += 1
        for a, b in zip(sub, sub[1:]):
            if not (a in pos and b in pos and _before(full.order, a, b)):
                witness(c1b, {"subset": [oid for oid, _ in some], "pair": (a, b)})
                break

    # 1c
    state: tuple[list, dict] = ([], {})
    for oid, op in ops:
        before = state[0]
        state = interp_op(state, oid, op)
        if isinstance(op, Insert):
            if op.ref is None:
                k = 0
            elif op.ref in before:
                k = before.index(op.ref) + 1
            else:
                continue  # not producible by make_insert from this prefix
            if make_insert(before, op.val, k) != op:
                witness(c1c, {"id": oid, "reason": "not a make_insert result"})
                continue
            c1c.checked += 1
            after = state[0]
            if not after or after[min(k, len(after) - 1)] != oid:
                witness(c1c, {"id": oid, "k": k, "order": list(after)})

    # 2
    order = full.order
    elems = sorted(set(order), key=_sort_key)
    rel = {(x, y): _before(order, x, y) for x in elems for y in elems}
    for x in elems:
        c2.checked += 1
        if rel[(x, x)]:
            witness(c2, {"irreflexive": x})
    for x, y in itertools.combinations(elems, 2):
        if not (rel[(x, y)] or rel[(y, x)]):
            witness(c2, {"total": (x, y)})
    for x, y, z in itertools.permutations(elems, 3):
        if rel[(x, y)] and rel[(y, z)] and not rel[(x, z)]:
            witness(c2, {"transitive": (x, y, z)})

    return AStrongReport({c.name: c for c in (c1a, c1b, c1c, c2)})


def _sort_key(x):
    return (0, x) if not isinstance(x, tuple) else (1, x)


# Generators ------------------------------------------------------------------


def random_ids(rng: random.Random, n: int, nodes: Sequence[str] = ("a", "b", "c")) -> list:
    """``n`` distinct Lamport-style IDs in ascending order, with counter ties."""
    ids: set = set()
    counter = 0
    while len(ids) < n:
        counter += rng.choice((0, 1, 1, 2)) if ids else 1
        counter = max(counter, 1)
        ids.add(OpId(counter, rng.choice(nodes)))
    return sorted(ids)


def random_insert_ops(rng: random.Random, n: int, dangling: float = 0.1) -> list[InsOp]:
    """A random insert-ops log: sorted IDs, refs to lower IDs (sometimes absent ones)."""
    ids = random_ids(rng, n)
    ops: list[InsOp] = []
    for i, oid in enumerate(ids):
        r = rng.random()
        if i == 0 or r < 0.25:
            ref = None
        elif r < 0.25 + dangling:
            # below oid, never inserted: counters in the log start at 1
            ref = OpId(0, "zz" + str(i))
        else:
            ref = rng.choice(ids[:i])
        ops.append(InsOp(oid, ref))
    return ops


@dataclass(frozen=True)
class InterleavingCase:
    ops: tuple[InsOp, ...]
    xs: tuple[InsOp, ...]
    ys: tuple[InsOp, ...]
    start: Any


def random_interleaving_case(
    rng: random.Random, *, max_run: int = 6, max_noise: int = 8, start_missing: bool = False
) -> InterleavingCase:
    """A valid log embedding two typed runs from a shared start.

    Runs, unrelated insertions and the start element are allocated IDs in a
    random interleaving, which models all ways the runs can be concurrent.
    With ``start_missing`` the start's own insertion is left out of the log.
    """
    a = rng.randint(1, max_run)
    b = rng.randint(1, max_run)
    noise = rng.randint(0, max_noise)
    use_head = not start_missing and rng.random() < 0.2
    pre = rng.randint(0, noise)
    kinds = ["n"] * pre + ([] if use_head else ["s"])
    rest = ["x"] * a + ["y"] * b + ["n"] * (noise - pre)
    rng.shuffle(rest)
    kinds += rest
    ids = random_ids(rng, len(kinds))
    ops: list[InsOp] = []
    xs: list[InsOp] = []
    ys: list[InsOp] = []
    start = None
    for kind, oid in zip(kinds, ids):
        earlier = [op.id for op in ops] + ([start] if start_missing and start is not None else [])
        if kind == "s":
            ref = rng.choice(earlier) if earlier and rng.random() < 0.7 else None
            start = oid
            if start_missing:
                continue
            op = InsOp(oid, ref)
        elif kind in "xy":
            run = xs if kind == "x" else ys
            op = InsOp(oid, run[-1].id if run else start)
            run.append(op)
        else:
            op = InsOp(oid, rng.choice(earlier) if earlier and rng.random() < 0.8 else None)
        ops.append(op)
    return InterleavingCase(tuple(ops), tuple(xs), tuple(ys), start)


def random_list_ops(
    rng: random.Random, n: int, *, replicas: int = 3, delete_prob: float = 0.25, sync_prob: float = 0.2
) -> list[tuple[Any, Any]]:
    """A log of ``make_insert``/Delete operations generated by concurrent replicas.

    Each replica generates against its own partial view; views are merged
    occasionally. The result is the ID-sorted union of everything generated.
    """
    nodes = [f"r{i}" for i in range(replicas)]
    views: list[dict] = [{} for _ in nodes]
    for _ in range(n):
        i = rng.randrange(replicas)
        view = views[i]
        log = sorted(view.items())
        st = interp_ops(log)
        counter = max((oid.counter for oid in view), default=0) + 1
        oid = OpId(counter, nodes[i])
        live = [x for x in st.order if x in st.vals]
        if live and rng.random() < delete_prob:
            op: Any = Delete(rng.choice(live))
        else:
            k = rng.randint(0, len(st.order) + 2)
            op = make_insert(list(st.order), rng.choice("abcdefgh"), k)
        view[oid] = op
        if rng.random() < sync_prob:
            j = rng.randrange(replicas)
            merged = {**views[i], **views[j]}
            views[i] = dict(merged)
            views[j] = dict(merged)
    union: dict = {}
    for view in views:
        union.update(view)
    return sorted(union.items())
