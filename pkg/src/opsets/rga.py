"""Replicated Growable Array, insertion-only.

Operations are applied in any causal delivery order (every ref delivered
before the ops that use it). Concurrent insertions after the same element are
kept in descending ID order, which is what makes the result independent of
delivery order and equal to the sequential specification.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from .listspec import InsOp, interp_ins, random_ids


def insert_body(xs: Sequence, e) -> list:
    for i, x in enumerate(xs):
        if x < e:
            return [*xs[:i], e, *xs[i:]]
    return [*xs, e]


def insert_rga(xs: Sequence, op: InsOp) -> list:
    e, ref = op
    if ref is None:
        return insert_body(xs, e)
    for i, x in enumerate(xs):
        if x == ref:
            return [*xs[: i + 1], *insert_body(xs[i + 1 :], e)]
    return list(xs)


def interp_rga(log: Sequence[InsOp]) -> list:
    xs: list = []
    for op in log:
        xs = insert_rga(xs, InsOp(*op))
    return xs


def check_crdt_ops(ops: Sequence[InsOp]) -> bool:
    """IDs distinct, and every ref already delivered and smaller than its op."""
    seen: set = set()
    for oid, ref in ops:
        if oid in seen:
            return False
        if ref is not None and (ref not in seen or not ref < oid):
            return False
        seen.add(oid)
    return True


class NotCausalError(ValueError):
    pass


@dataclass(frozen=True)
class RgaVerdict:
    equal: bool
    rga: tuple
    spec: tuple


def check_rga_equivalence(log: Sequence[InsOp]) -> RgaVerdict:
    log = [InsOp(*op) for op in log]
    if not check_crdt_ops(log):
        raise NotCausalError("log is not in causal delivery order")
    rga = tuple(interp_rga(log))
    spec = tuple(interp_ins(sorted(log, key=lambda op: op.id)))
    return RgaVerdict(rga == spec, rga, spec)


def random_crdt_ops(rng: random.Random, n: int) -> list[InsOp]:
    """A random op set delivered in a random causal order."""
    ids = random_ids(rng, n)
    ops = []
    for i, oid in enumerate(ids):
        ref = None if i == 0 or rng.random() < 0.3 else rng.choice(ids[:i])
        ops.append(InsOp(oid, ref))
    return random_delivery(rng, ops)


def random_delivery(rng: random.Random, ops: Sequence[InsOp]) -> list[InsOp]:
    """A uniformly chosen next op among those whose ref is already delivered."""
    waiting: dict = {}
    ready = []
    for op in ops:
        if op.ref is None:
            ready.append(op)
        else:
            waiting.setdefault(op.ref, []).append(op)
    out = []
    while ready:
        op = ready.pop(rng.randrange(len(ready)))
        out.append(op)
        ready.extend(waiting.pop(op.id, ()))
    if len(out) != len(ops):
        raise NotCausalError("some refs are never delivered")
    return out
