"""Command-line interface: ``opsets interp|history|merge|sim|check``.

Exit codes: 0 ok, 1 input error, 2 property violation. Paths may be ``-`` for
standard input or output. ``OPSETS_SEED`` replaces the default seed of 0 when
``--seed`` is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from typing import Any

from .core import ROOT_ID, MakeList, MakeMap, OpId, OpSet, OpSetError, validate_id
from .datatypes import (
    ChainError,
    RegisterMode,
    UnknownObjectError,
    interpret_doc,
    make_ops_of,
    materialize,
)
from .listspec import (
    Delete,
    Insert,
    InsOp,
    PreconditionError,
    check_astrong,
    check_no_interleaving,
    random_interleaving_case,
    random_list_ops,
)
from .logfile import (
    LogParseError,
    decode_id,
    decode_prim,
    dumps,
    encode_id,
    encode_prim,
    parse_log,
    serialize_log,
    to_json,
)
from .rga import NotCausalError, check_rga_equivalence, random_crdt_ops
from .sim import (
    Partition,
    SimConfig,
    Workload,
    check_convergence,
    random_config,
    run_sim,
)
from .tree import TreeConfig, check_tree_invariants, interpret_tree

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION = 0, 1, 2


class InputError(Exception):
    pass


# I/O ------------------------------------------------------------------------


def read_bytes(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as exc:
        raise InputError(str(exc)) from exc


def write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def load_log(path: str) -> OpSet:
    try:
        return parse_log(read_bytes(path))
    except LogParseError as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_json(path: str) -> Any:
    try:
        return json.loads(read_bytes(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON: {exc}") from exc


def default_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("OPSETS_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise InputError(f"OPSETS_SEED must be an integer, got {env!r}") from exc


def parse_root(text: str) -> OpId:
    """``3@n1`` or the JSON form ``[3,"n1"]``."""
    try:
        if text.lstrip().startswith("["):
            return decode_id(json.loads(text))
        counter, sep, node = text.partition("@")
        if not sep:
            raise ValueError("expected COUNTER@NODE")
        return validate_id((int(counter), node))
    except (ValueError, OpSetError) as exc:
        raise InputError(f"bad --root {text!r}: {exc}") from exc


# interp / history / merge ---------------------------------------------------------


def render(o: OpSet, root: OpId, mode: str, register: str) -> tuple[Any, bool]:
    """The document at ``root`` and, in tree mode, whether invariants hold."""
    op = o.get(root)
    expected = {"map": MakeMap, "list": MakeList}.get(mode)
    if expected is not None and not isinstance(op, expected):
        raise InputError(f"root {root!r} is not a {expected.__name__} operation")
    try:
        if mode == "tree":
            s = interpret_tree(o)
            report = check_tree_invariants(s, TreeConfig(root_id=root))
            doc = to_json(materialize(s, root, make_ops_of(o)))
            inv = {
                "ok": report.ok,
                "violations": [
                    {"kind": v.kind.value, "node": encode_id(v.node), "tuples": [encode_id(t) for t in v.tuples]}
                    for v in report.violations
                ],
            }
            return {"document": doc, "treeInvariants": inv}, report.ok
        s = interpret_doc(o, RegisterMode(register))
        return to_json(materialize(s, root, make_ops_of(o))), True
    except UnknownObjectError as exc:
        raise InputError(str(exc)) from exc
    except ChainError as exc:
        raise InputError(f"list chain is broken: {exc}") from exc


def cmd_interp(args) -> int:
    o = load_log(args.log)
    out, ok = render(o, args.root, args.mode, args.register)
    write_text(args.output, dumps(out) + "\n")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_history(args) -> int:
    o = load_log(args.log)
    ops = o.linearize()
    lines = []
    ok = True
    for i, (oid, _) in enumerate(ops, start=1):
        prefix = OpSet._trusted(dict(ops[:i]))
        if args.root in prefix:
            doc, good = render(prefix, args.root, args.mode, args.register)
            ok &= good
        else:
            doc = None
        lines.append(dumps({"step": i, "id": encode_id(oid), "document": doc}) + "\n")
    write_text(args.output, "".join(lines))
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_merge(args) -> int:
    merged = OpSet()
    for path in args.logs:
        try:
            merged = merged.merge(load_log(path))
        except OpSetError as exc:
            raise InputError(f"{path}: {exc}") from exc
    write_text(args.output, serialize_log(merged))
    return EXIT_OK


# sim ------------------------------------------------------------------------------


def parse_partition(text: str) -> Partition:
    """``FROM:TO:n0,n1/n2`` separates n0 and n1 from n2 during steps [FROM, TO)."""
    try:
        start, end, groups = text.split(":")
        return Partition(int(start), int(end), tuple(tuple(g.split(",")) for g in groups.split("/")))
    except ValueError as exc:
        raise InputError(f"bad --partition {text!r}, expected FROM:TO:n0,n1/n2") from exc


def sim_config(args) -> SimConfig:
    cfg = SimConfig(
        node_count=args.nodes,
        op_count=args.ops,
        seed=default_seed(args.seed),
        loss_prob=args.loss,
        dup_prob=args.dup,
        max_delay=args.max_delay,
        partition_schedule=tuple(parse_partition(p) for p in args.partition),
        workload=Workload(args.workload),
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return cfg


def cmd_sim(args) -> int:
    trace = run_sim(sim_config(args), anti_entropy=not args.no_anti_entropy)
    write_text(args.output, trace.dumps())
    return EXIT_OK


# check ----------------------------------------------------------------------------


def _ins_ops(raw: Any) -> list[InsOp]:
    if not isinstance(raw, list):
        raise ValueError("expected a list of [id, ref] pairs")
    return [InsOp(decode_id(i), None if r is None else decode_id(r)) for i, r in raw]


def _ins_json(ops) -> list:
    return [[encode_id(op.id), None if op.ref is None else encode_id(op.ref)] for op in ops]


def _list_ops(raw: Any) -> list:
    out = []
    for oid, action in raw:
        t = action.get("t")
        ref = action.get("ref")
        if t == "Insert":
            out.append(
                (decode_id(oid), Insert(None if ref is None else decode_id(ref), decode_prim(action.get("val"))))
            )
        elif t == "Delete":
            out.append((decode_id(oid), Delete(decode_id(ref))))
        else:
            raise ValueError(f"unknown list action {t!r}")
    return out


def _list_ops_json(ops) -> list:
    out = []
    for oid, op in ops:
        if isinstance(op, Insert):
            ref = None if op.ref is None else encode_id(op.ref)
            out.append([encode_id(oid), {"t": "Insert", "ref": ref, "val": encode_prim(op.val)}])
        else:
            out.append([encode_id(oid), {"t": "Delete", "ref": encode_id(op.ref)}])
    return out


def _json_safe(x: Any) -> Any:
    if isinstance(x, OpId):
        return encode_id(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def no_interleaving_case(data: Any) -> dict:
    start = None if data.get("start") is None else decode_id(data["start"])
    order = data.get("order")
    order = None if order is None else [decode_id(x) for x in order]
    res = check_no_interleaving(_ins_ops(data["ops"]), _ins_ops(data["xs"]), _ins_ops(data["ys"]), start, order)
    return {"ok": res.ok, "verdict": res.verdict.value, "order": _json_safe(res.order), "detail": res.detail}


def astrong_case(ops: list, seed: int) -> dict:
    report = check_astrong(ops, rng=random.Random(seed))
    return {
        "ok": report.ok,
        "conditions": {
            name: {"ok": c.ok, "checked": c.checked, "witnesses": _json_safe(c.witnesses)}
            for name, c in report.conditions.items()
        },
    }


def rga_case(ops: list[InsOp]) -> dict:
    v = check_rga_equivalence(ops)
    return {"ok": v.equal, "rga": _json_safe(v.rga), "spec": _json_safe(v.spec)}


def convergence_case(cfg: SimConfig, anti_entropy: bool = True) -> dict:
    v = check_convergence(run_sim(cfg, anti_entropy=anti_entropy))
    return {"ok": v.converged, "config": cfg.to_json(), **v.to_json()}


def config_from_json(data: dict) -> SimConfig:
    return SimConfig(
        node_count=data.get("nodes", 3),
        op_count=data.get("ops", 100),
        seed=data.get("seed", 0),
        loss_prob=data.get("loss", 0.0),
        dup_prob=data.get("dup", 0.0),
        max_delay=data.get("maxDelay", 0),
        partition_schedule=tuple(
            Partition(a, b, tuple(tuple(g) for g in groups)) for a, b, groups in data.get("partitions", [])
        ),
        workload=Workload(data.get("workload", "mapEdits")),
    )


def fuzz_case(checker: str, rng: random.Random, trial_seed: int) -> tuple[dict, dict]:
    """One generated input and its result."""
    if checker == "no-interleaving":
        case = random_interleaving_case(rng)
        data = {
            "ops": _ins_json(case.ops),
            "xs": _ins_json(case.xs),
            "ys": _ins_json(case.ys),
            "start": None if case.start is None else encode_id(case.start),
        }
        return data, no_interleaving_case(data)
    if checker == "astrong":
        ops = random_list_ops(rng, rng.randint(1, 30))
        return {"ops": _list_ops_json(ops)}, astrong_case(ops, trial_seed)
    if checker == "rga":
        ops = random_crdt_ops(rng, rng.randint(1, 50))
        return {"ops": _ins_json(ops)}, rga_case(ops)
    cfg = random_config(rng, trial_seed)
    return cfg.to_json(), convergence_case(cfg)


def file_case(checker: str, data: Any, seed: int) -> dict:
    if checker == "no-interleaving":
        return no_interleaving_case(data)
    if checker == "astrong":
        return astrong_case(_list_ops(data["ops"]), seed)
    if checker == "rga":
        return rga_case(_ins_ops(data["ops"]))
    return convergence_case(config_from_json(data), anti_entropy=data.get("antiEntropy", True))


def cmd_check(args) -> int:
    seed = default_seed(args.seed)
    report: dict = {"checker": args.checker, "seed": seed}
    try:
        if args.input is not None:
            report["input"] = args.input
            report["result"] = file_case(args.checker, load_json(args.input), seed)
            ok = report["result"]["ok"]
        else:
            rng = random.Random(seed)
            violations = 0
            failures = []
            for t in range(args.trials):
                data, result = fuzz_case(args.checker, rng, seed * 1_000_003 + t)
                if not result["ok"]:
                    violations += 1
                    if len(failures) < args.max_failures:
                        failures.append({"trial": t, "input": data, "result": result})
            report.update(trials=args.trials, violations=violations, failures=failures)
            ok = violations == 0
    except (KeyError, TypeError, ValueError, PreconditionError, NotCausalError, OpSetError) as exc:
        raise InputError(f"{args.checker}: {exc}") from exc
    report["ok"] = ok
    write_text(args.output, dumps(report) + "\n")
    return EXIT_OK if ok else EXIT_VIOLATION


# parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opsets", description="Operation-set replicated datatypes.")
    sub = p.add_subparsers(dest="command", required=True)

    def doc_flags(sp):
        sp.add_argument("log", help="operation log path, or - for stdin")
        sp.add_argument("--root", type=parse_root, default=ROOT_ID, help="root object ID as COUNTER@NODE (default 0@)")
        sp.add_argument("--mode", choices=("map", "list", "tree"), default="map")
        sp.add_argument("--register", choices=("mv", "lww"), default="mv")
        sp.add_argument("-o", "--output", default="-")

    sp = sub.add_parser("interp", help="print the document an operation log describes")
    doc_flags(sp)
    sp.set_defaults(func=cmd_interp)

    sp = sub.add_parser("history", help="print the document after each operation")
    doc_flags(sp)
    sp.set_defaults(func=cmd_history)

    sp = sub.add_parser("merge", help="write the canonical union of several logs")
    sp.add_argument("logs", nargs="+")
    sp.add_argument("-o", "--output", default="-")
    sp.set_defaults(func=cmd_merge)

    sp = sub.add_parser("sim", help="run a seeded network simulation and print its trace")
    sp.add_argument("--nodes", type=int, default=3)
    sp.add_argument("--ops", type=int, default=100)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--loss", type=float, default=0.0)
    sp.add_argument("--dup", type=float, default=0.0)
    sp.add_argument("--max-delay", type=int, default=0)
    sp.add_argument("--partition", action="append", default=[], metavar="FROM:TO:GROUPS")
    sp.add_argument("--workload", choices=[w.value for w in Workload], default=Workload.MAP_EDITS.value)
    sp.add_argument("--no-anti-entropy", action="store_true")
    sp.add_argument("-o", "--output", default="-")
    sp.set_defaults(func=cmd_sim)

    sp = sub.add_parser("check", help="run a property checker on a JSON input or on generated inputs")
    sp.add_argument("checker", choices=("no-interleaving", "astrong", "rga", "convergence"))
    sp.add_argument("input", nargs="?", help="JSON input; omit to fuzz")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--max-failures", type=int, default=5)
    sp.add_argument("-o", "--output", default="-")
    sp.set_defaults(func=cmd_check)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"opsets: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SystemExit as exc:
        # argparse usage errors are input errors
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
