"""Deterministic simulation of replicas exchanging operations over a faulty network.

Every step one random node makes an edit and broadcasts the new operations.
Messages can be lost, duplicated, delayed (and so reordered) or cut off by a
partition. After the last edit, in-flight messages drain and an anti-entropy
phase exchanges whole OpSets pairwise until every node holds the same set.

All randomness comes from one ``random.Random(seed)``, so a config always
produces the same trace.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import random
from dataclasses import dataclass, field
from typing import Any

from .core import ROOT_ID, InsertAfter, MakeList, MakeMap, OpId, OpSet
from .datatypes import initial_state, make_ops_of, materialize
from .listspec import InsOp, check_no_interleaving
from .logfile import dumps, encode_id, serialize_log, to_json
from .opgen import ExistingObject, Replica
from .tree import TreeConfig, apply_op_tree, check_tree_invariants, interpret_tree


class Workload(enum.Enum):
    MAP_EDITS = "mapEdits"
    LIST_EDITS = "listEdits"
    TREE_MOVES = "treeMoves"
    TEXT_TYPING = "textTyping"


@dataclass(frozen=True)
class Partition:
    """Between ``from_step`` (inclusive) and ``to_step`` (exclusive) only nodes
    in the same group can talk."""

    from_step: int
    to_step: int
    groups: tuple[tuple[str, ...], ...]

    def blocks(self, step: int, a: str, b: str) -> bool:
        if not self.from_step <= step < self.to_step:
            return False
        return not any(a in g and b in g for g in self.groups)


@dataclass(frozen=True)
class SimConfig:
    node_count: int = 3
    op_count: int = 100
    seed: int = 0
    loss_prob: float = 0.0
    dup_prob: float = 0.0
    max_delay: int = 0
    partition_schedule: tuple[Partition, ...] = ()
    workload: Workload = Workload.MAP_EDITS

    @property
    def nodes(self) -> list[str]:
        return [f"n{i}" for i in range(self.node_count)]

    def validate(self) -> None:
        if self.node_count < 1 or self.op_count < 1:
            raise ValueError("node_count and op_count must be positive")
        for name in ("loss_prob", "dup_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {p}")
        if self.max_delay < 0:
            raise ValueError("max_delay must be non-negative")
        nodes = set(self.nodes)
        for part in self.partition_schedule:
            members = [n for g in part.groups for n in g]
            if sorted(members) != sorted(nodes):
                raise ValueError(f"partition groups {part.groups} do not partition {sorted(nodes)}")
            if part.from_step > part.to_step:
                raise ValueError("partition window ends before it starts")

    def to_json(self) -> dict:
        return {
            "nodes": self.node_count,
            "ops": self.op_count,
            "seed": self.seed,
            "loss": self.loss_prob,
            "dup": self.dup_prob,
            "maxDelay": self.max_delay,
            "partitions": [[p.from_step, p.to_step, [list(g) for g in p.groups]] for p in self.partition_schedule],
            "workload": self.workload.value,
        }


@dataclass(frozen=True)
class Event:
    step: int
    node: str
    kind: str  # generate | send | drop | duplicate | deliver | merge
    detail: dict

    def to_json(self) -> list:
        return [self.step, self.node, self.kind, self.detail]


@dataclass
class SimTrace:
    config: SimConfig
    events: list[Event]
    final_opsets: dict[str, OpSet]
    documents: dict[str, Any]
    anti_entropy: bool = True
    tree_step_violations: list = field(default_factory=list)
    text_start: OpId | None = None
    seed_max: OpId | None = None

    def to_json(self) -> dict:
        return {
            "config": self.config.to_json(),
            "antiEntropy": self.anti_entropy,
            "events": [e.to_json() for e in self.events],
            "finalStates": [
                {"node": n, "ops": serialize_log(self.final_opsets[n]), "document": self.documents[n]}
                for n in sorted(self.final_opsets)
            ],
            "treeStepViolations": self.tree_step_violations,
        }

    def dumps(self) -> str:
        return dumps(self.to_json()) + "\n"


GREETING = "Hello!"
NAMES = (" Alice", " Charlie", " Bob", " Dave", " Eve", " Mallory")
MAP_KEYS: tuple = ("a", "b", "c", "d", 1, 2, True)


class _Sim:
    def __init__(self, cfg: SimConfig) -> None:
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.events: list[Event] = []
        self.tree = cfg.workload is Workload.TREE_MOVES
        self.tree_cfg = TreeConfig()
        self.tree_violations: list = []
        self.step = 0
        self.queue: list = []
        self.msg_ids = itertools.count()
        self.text_start: OpId | None = None
        self.seed_max: OpId | None = None
        self.cursors: dict[str, OpId] = {}
        self.typed: dict[str, int] = {}
        self.replicas = self._seed_replicas()

    # setup ----------------------------------------------------------------

    def _seed_replicas(self) -> dict[str, Replica]:
        w = self.cfg.workload
        root_op = MakeList() if w in (Workload.LIST_EDITS, Workload.TEXT_TYPING) else MakeMap()
        seed = OpSet([(ROOT_ID, root_op)])
        step = apply_op_tree if self.tree else None
        if w is Workload.TEXT_TYPING:
            r = Replica.create(self.cfg.nodes[0], seed)
            for i, ch in enumerate(GREETING):
                r, _ = r.ins_list_index(ROOT_ID, i, ch)
            seed = r.opset
            self.text_start = r.visible(ROOT_ID)[GREETING.index("o")]
        self.seed_max = seed.max_id()
        out = {}
        for n in self.cfg.nodes:
            if step is None:
                out[n] = Replica.create(n, seed)
            else:
                out[n] = Replica.create(n, seed, step=step, initial=initial_state())
        if self.text_start is not None:
            self.cursors = {n: self.text_start for n in self.cfg.nodes}
            self.typed = {n: 0 for n in self.cfg.nodes}
        return out

    def log(self, node: str, kind: str, **detail) -> None:
        self.events.append(Event(self.step, node, kind, detail))

    # edits ----------------------------------------------------------------

    def _maps(self, r: Replica) -> list[OpId]:
        ops = r.opset
        found = {ROOT_ID}
        for t in r.state.e.values():
            if isinstance(ops.get(t.val), MakeMap):
                found.add(t.val)
        return sorted(found)

    def _value(self) -> Any:
        rng = self.rng
        kind = rng.random()
        if kind < 0.5:
            return rng.randint(-5, 99)
        if kind < 0.85:
            return rng.choice(("x", "y", "zz", "héllo", ""))
        return rng.choice((True, False, None, 0.5))

    def edit(self, node: str) -> tuple[Replica, list, str]:
        r = self.replicas[node]
        rng = self.rng
        w = self.cfg.workload
        if w is Workload.TEXT_TYPING:
            visible = r.visible(ROOT_ID)
            idx = visible.index(self.cursors[node]) + 1
            name = NAMES[int(node[1:]) % len(NAMES)]
            ch = name[self.typed[node] % len(name)]
            r2, added = r.ins_list_index(ROOT_ID, idx, ch)
            self.cursors[node] = next(oid for oid, op in added if isinstance(op, InsertAfter))
            self.typed[node] += 1
            return r2, added, f"type {ch!r}"
        if w is Workload.LIST_EDITS:
            n = len(r.visible(ROOT_ID))
            p = rng.random()
            if n == 0 or p < 0.6:
                i = rng.randint(0, n)
                return (*r.ins_list_index(ROOT_ID, i, self._value()), f"insert {i}")
            i = rng.randrange(n)
            if p < 0.8:
                return (*r.set_list_index(ROOT_ID, i, self._value()), f"set {i}")
            return (*r.remove_list_index(ROOT_ID, i), f"remove {i}")
        maps = self._maps(r)
        target = rng.choice(maps)
        key = rng.choice(MAP_KEYS)
        p = rng.random()
        if w is Workload.MAP_EDITS:
            if p < 0.2:
                return (*r.remove_map_key(target, key), f"remove {key!r}")
            v = {} if p < 0.3 else self._value()
            return (*r.set_map_key(target, key, v), f"set {key!r}")
        # tree moves
        movable = [m for m in maps if m != ROOT_ID]
        if movable and p < 0.4:
            obj = rng.choice(movable)
            return (*r.set_map_key(target, key, ExistingObject(obj)), f"move {obj!r}")
        if p < 0.75:
            return (*r.set_map_key(target, key, {}), f"create {key!r}")
        if p < 0.9:
            return (*r.set_map_key(target, key, self._value()), f"set {key!r}")
        return (*r.remove_map_key(target, key), f"remove {key!r}")

    # network --------------------------------------------------------------

    def blocked(self, a: str, b: str) -> bool:
        return any(p.blocks(self.step, a, b) for p in self.cfg.partition_schedule)

    def send(self, src: str, ops: list) -> None:
        rng = self.rng
        for dst in self.cfg.nodes:
            if dst == src:
                continue
            msg = next(self.msg_ids)
            if self.blocked(src, dst):
                self.log(src, "drop", to=dst, msg=msg, reason="partition")
                continue
            if rng.random() < self.cfg.loss_prob:
                self.log(src, "drop", to=dst, msg=msg, reason="loss")
                continue
            at = self.step + rng.randint(0, self.cfg.max_delay)
            self.log(src, "send", to=dst, msg=msg, at=at)
            heapq.heappush(self.queue, (at, msg, src, dst, ops))
            if rng.random() < self.cfg.dup_prob:
                at2 = self.step + rng.randint(0, self.cfg.max_delay)
                self.log(src, "duplicate", to=dst, msg=msg, at=at2)
                heapq.heappush(self.queue, (at2, msg, src, dst, ops))

    def deliver_due(self) -> None:
        while self.queue and self.queue[0][0] <= self.step:
            _, msg, src, dst, ops = heapq.heappop(self.queue)
            before = len(self.replicas[dst].opset)
            self.replicas[dst] = self.replicas[dst].receive(ops)
            self.log(dst, "deliver", msg=msg, **{"from": src, "new": len(self.replicas[dst].opset) - before})
            self.check_tree(dst)

    def check_tree(self, node: str) -> None:
        if not self.tree:
            return
        report = check_tree_invariants(self.replicas[node].state, self.tree_cfg)
        if not report.ok:
            self.tree_violations.append([self.step, node, [v.kind.value for v in report.violations]])

    def anti_entropy(self) -> None:
        nodes = self.cfg.nodes
        changed = True
        while changed:
            changed = False
            for a, b in itertools.combinations(nodes, 2):
                ra, rb = self.replicas[a], self.replicas[b]
                if ra.opset == rb.opset:
                    continue
                union = ra.opset.merge(rb.opset)
                for n, r in ((a, ra), (b, rb)):
                    gained = len(union) - len(r.opset)
                    if gained:
                        self.replicas[n] = r.merge(union)
                        self.log(n, "merge", **{"with": b if n == a else a, "new": gained})
                        self.check_tree(n)
                changed = True

    # driver ---------------------------------------------------------------

    def run(self, anti_entropy: bool) -> SimTrace:
        cfg = self.cfg
        for self.step in range(cfg.op_count):
            self.deliver_due()
            node = self.rng.choice(cfg.nodes)
            r, added, what = self.edit(node)
            self.replicas[node] = r
            self.log(node, "generate", edit=what, ops=[encode_id(oid) for oid, _ in added])
            self.check_tree(node)
            self.send(node, added)
        self.step = cfg.op_count
        while self.queue:
            self.deliver_due()
            self.step += 1
        if anti_entropy:
            self.anti_entropy()
        docs = {}
        for n, r in self.replicas.items():
            docs[n] = to_json(materialize(r.state, ROOT_ID, make_ops_of(r.opset)))
        return SimTrace(
            cfg,
            self.events,
            {n: r.opset for n, r in self.replicas.items()},
            docs,
            anti_entropy,
            self.tree_violations,
            self.text_start,
            self.seed_max,
        )


def run_sim(cfg: SimConfig, *, anti_entropy: bool = True) -> SimTrace:
    cfg.validate()
    return _Sim(cfg).run(anti_entropy)


# convergence ----------------------------------------------------------------


@dataclass
class ConvergenceVerdict:
    converged: bool
    opsets_equal: bool
    documents_equal: bool
    divergent_pairs: list = field(default_factory=list)
    tree_violations: dict = field(default_factory=dict)
    interleaving: list = field(default_factory=list)
    note: str = ""

    def to_json(self) -> dict:
        return {
            "converged": self.converged,
            "opsetsEqual": self.opsets_equal,
            "documentsEqual": self.documents_equal,
            "divergentPairs": self.divergent_pairs,
            "treeViolations": self.tree_violations,
            "interleaving": self.interleaving,
            "note": self.note,
        }


def text_runs(o: OpSet, seed_max: OpId) -> tuple[list[InsOp], dict[str, list[InsOp]]]:
    """Project a text OpSet onto insertions, and split the ones typed after the
    seed into one run per node."""
    ops = [
        InsOp(oid, None if op.ref == ROOT_ID else op.ref) for oid, op in o.linearize() if isinstance(op, InsertAfter)
    ]
    runs: dict[str, list[InsOp]] = {}
    for op in ops:
        if op.id > seed_max:
            runs.setdefault(op.id.node, []).append(op)
    return ops, runs


def check_convergence(trace: SimTrace) -> ConvergenceVerdict:
    nodes = sorted(trace.final_opsets)
    divergent = []
    opsets_equal = docs_equal = True
    for a, b in itertools.combinations(nodes, 2):
        same_ops = trace.final_opsets[a] == trace.final_opsets[b]
        same_doc = dumps(trace.documents[a]) == dumps(trace.documents[b])
        opsets_equal &= same_ops
        docs_equal &= same_doc
        if not (same_ops and same_doc):
            divergent.append([a, b, same_ops, same_doc])
    v = ConvergenceVerdict(opsets_equal and docs_equal, opsets_equal, docs_equal, divergent)
    if not trace.anti_entropy and not v.converged:
        v.note = "anti-entropy did not run; divergence is expected after message loss"
    if trace.config.workload is Workload.TREE_MOVES:
        for n in nodes:
            report = check_tree_invariants(interpret_tree(trace.final_opsets[n]))
            if not report.ok:
                v.tree_violations[n] = [[x.kind.value, encode_id(x.node)] for x in report.violations]
        if trace.tree_step_violations:
            v.tree_violations["steps"] = trace.tree_step_violations
        if v.tree_violations:
            v.converged = False
    if trace.config.workload is Workload.TEXT_TYPING and trace.text_start is not None:
        for n in nodes:
            ops, runs = text_runs(trace.final_opsets[n], trace.seed_max)
            for a, b in itertools.combinations(sorted(runs), 2):
                res = check_no_interleaving(ops, runs[a], runs[b], trace.text_start)
                if not res.ok:
                    v.interleaving.append([n, a, b, res.detail])
        if v.interleaving:
            v.converged = False
    return v


def random_config(rng: random.Random, seed: int, workload: Workload | None = None, op_count: int = 100) -> SimConfig:
    """A config in the acceptance range: 3-5 nodes, some loss and duplication,
    one partition window."""
    n = rng.randint(3, 5)
    nodes = [f"n{i}" for i in range(n)]
    cut = rng.randint(1, n - 1)
    shuffled = nodes[:]
    rng.shuffle(shuffled)
    groups = (tuple(sorted(shuffled[:cut])), tuple(sorted(shuffled[cut:])))
    start = rng.randint(0, op_count // 2)
    end = rng.randint(start + 1, op_count)
    return SimConfig(
        node_count=n,
        op_count=op_count,
        seed=seed,
        loss_prob=round(rng.uniform(0.0, 0.5), 3),
        dup_prob=round(rng.uniform(0.0, 0.2), 3),
        max_delay=rng.randint(0, 5),
        partition_schedule=(Partition(start, end, groups),),
        workload=workload or rng.choice(list(Workload)),
    )
