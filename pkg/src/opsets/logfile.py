"""JSON operation-log format and canonical JSON rendering.

A log file is ``{"version":1,"ops":[...]}`` where each record is
``{"id":[counter,node],"action":{"t":...}}``. Canonical output sorts records
by ID, keeps the fixed field order, writes one record per line, and ends with
a newline, so equal OpSets always serialize to identical bytes.
"""

from __future__ import annotations

import json
import math
from typing import Any

from .core import (
    Assign,
    InsertAfter,
    MakeList,
    MakeMap,
    MakeVal,
    Operation,
    OpId,
    OpSet,
    OpSetError,
    Remove,
    validate_id,
)
from .datatypes import CycleRef, ListValue, MapValue, Materialized, PrimitiveValue

VERSION = 1
JS_SAFE_MAX = 2**53 - 1


class LogParseError(ValueError):
    def __init__(self, message: str, index: int | None = None) -> None:
        self.index = index
        where = f"record {index}: " if index is not None else ""
        super().__init__(where + message)


# IDs and values -----------------------------------------------------------------


def encode_id(oid: OpId) -> list:
    counter = oid.counter if oid.counter <= JS_SAFE_MAX else str(oid.counter)
    return [counter, oid.node]


def decode_id(raw: Any) -> OpId:
    if not isinstance(raw, list) or len(raw) != 2:
        raise ValueError(f"ID must be [counter, node], got {raw!r}")
    counter, node = raw
    if isinstance(counter, str):
        if not counter.isdigit():
            raise ValueError(f"bad counter string {counter!r}")
        counter = int(counter)
    return validate_id((counter, node))


def encode_prim(v: Any) -> dict:
    if v is None:
        return {"t": "null", "v": None}
    if isinstance(v, bool):
        return {"t": "bool", "v": v}
    if isinstance(v, int):
        return {"t": "int", "v": v}
    if isinstance(v, float):
        if math.isnan(v):
            return {"t": "f64", "v": "NaN"}
        if math.isinf(v):
            return {"t": "f64", "v": "Infinity" if v > 0 else "-Infinity"}
        return {"t": "f64", "v": v}
    if isinstance(v, str):
        return {"t": "str", "v": v}
    raise TypeError(f"not a primitive: {v!r}")


_SPECIAL_FLOATS = {"NaN": math.nan, "Infinity": math.inf, "-Infinity": -math.inf}


def decode_prim(raw: Any, allowed=("str", "int", "bool", "null", "f64")) -> Any:
    if not isinstance(raw, dict) or "t" not in raw:
        raise ValueError(f"tagged value expected, got {raw!r}")
    t, v = raw["t"], raw.get("v")
    if t not in allowed:
        raise ValueError(f"tag {t!r} not allowed here")
    if t == "str" and isinstance(v, str):
        return v
    if t == "int" and isinstance(v, int) and not isinstance(v, bool):
        return v
    if t == "bool" and isinstance(v, bool):
        return v
    if t == "null" and v is None:
        return None
    if t == "f64":
        if isinstance(v, str) and v in _SPECIAL_FLOATS:
            return _SPECIAL_FLOATS[v]
        if isinstance(v, (int, float)) and not isinstance(v, bool):
            return float(v)
    raise ValueError(f"bad {t!r} value {v!r}")


def encode_key(k: Any) -> dict:
    if isinstance(k, OpId):
        return {"t": "id", "v": encode_id(k)}
    return encode_prim(k)


def decode_key(raw: Any) -> Any:
    if isinstance(raw, dict) and raw.get("t") == "id":
        return decode_id(raw.get("v"))
    return decode_prim(raw, allowed=("str", "int", "bool"))


# Operations -------------------------------------------------------------------------


def _prev_list(prev) -> list:
    return [encode_id(p) for p in sorted(prev)]


def encode_action(op: Operation) -> dict:
    if isinstance(op, MakeMap):
        return {"t": "MakeMap"}
    if isinstance(op, MakeList):
        return {"t": "MakeList"}
    if isinstance(op, MakeVal):
        return {"t": "MakeVal", "val": encode_prim(op.val)}
    if isinstance(op, InsertAfter):
        return {"t": "InsertAfter", "ref": encode_id(op.ref)}
    if isinstance(op, Assign):
        return {
            "t": "Assign",
            "obj": encode_id(op.obj),
            "key": encode_key(op.key),
            "val": encode_id(op.val),
            "prev": _prev_list(op.prev),
        }
    if isinstance(op, Remove):
        return {"t": "Remove", "obj": encode_id(op.obj), "key": encode_key(op.key), "prev": _prev_list(op.prev)}
    raise TypeError(f"unknown operation {op!r}")


def decode_action(raw: Any) -> Operation:
    if not isinstance(raw, dict):
        raise ValueError("action must be an object")
    t = raw.get("t")
    if t == "MakeMap":
        return MakeMap()
    if t == "MakeList":
        return MakeList()
    if t == "MakeVal":
        return MakeVal(decode_prim(raw.get("val")))
    if t == "InsertAfter":
        return InsertAfter(decode_id(raw.get("ref")))
    if t in ("Assign", "Remove"):
        prev_raw = raw.get("prev", [])
        if not isinstance(prev_raw, list):
            raise ValueError("prev must be a list")
        prev = frozenset(decode_id(p) for p in prev_raw)
        obj = decode_id(raw.get("obj"))
        key = decode_key(raw.get("key"))
        if t == "Assign":
            return Assign(obj, key, decode_id(raw.get("val")), prev)
        return Remove(obj, key, prev)
    raise ValueError(f"unknown action tag {t!r}")


def encode_record(oid: OpId, op: Operation) -> dict:
    return {"id": encode_id(oid), "action": encode_action(op)}


def parse_log(data: bytes | str) -> OpSet:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise LogParseError(f"malformed JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("version") != VERSION or not isinstance(doc.get("ops"), list):
        raise LogParseError('expected {"version": 1, "ops": [...]}')
    o = OpSet()
    for i, rec in enumerate(doc["ops"]):
        try:
            if not isinstance(rec, dict):
                raise ValueError("record must be an object")
            oid = decode_id(rec.get("id"))
            op = decode_action(rec.get("action"))
            o = o.add(oid, op)
        except (ValueError, TypeError, OpSetError) as exc:
            raise LogParseError(str(exc), i) from exc
    return o


def dumps(obj: Any) -> str:
    """Compact JSON with no whitespace and raw UTF-8."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def serialize_log(o: OpSet) -> str:
    records = [dumps(encode_record(oid, op)) for oid, op in o.linearize()]
    if not records:
        return '{"version":1,"ops":[]}\n'
    return '{"version":1,"ops":[\n' + ",\n".join(records) + "\n]}\n"


# Materialized documents ----------------------------------------------------------------


def _map_key_text(k: Any) -> str:
    # "$" and "#" prefixes are reserved so markers can never collide with keys
    if isinstance(k, bool):
        return "#true" if k else "#false"
    if isinstance(k, int):
        return f"#{k}"
    if k.startswith(("$", "#")):
        return "$" + k
    return k


def _prim_json(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return {"$f64": "NaN" if math.isnan(v) else ("Infinity" if v > 0 else "-Infinity")}
    return v


def _slot_json(slot) -> Any:
    if len(slot) == 1:
        return to_json(slot[0])
    return {"$conflict": [to_json(v) for v in slot]}


def to_json(m: Materialized | None) -> Any:
    """Plain JSON value for a materialized document.

    A slot with one value renders as that value; concurrent values render as
    ``{"$conflict": [newest, ...]}``. Cycles render as ``{"$ref": id}``.
    Non-string map keys render as ``#<value>``; string keys starting with
    ``$`` or ``#`` get an extra ``$`` prefix.
    """
    if m is None:
        return None
    if isinstance(m, PrimitiveValue):
        return _prim_json(m.value)
    if isinstance(m, MapValue):
        return {_map_key_text(k): _slot_json(slot) for k, slot in m.entries}
    if isinstance(m, ListValue):
        return [_slot_json(slot) for slot in m.items]
    if isinstance(m, CycleRef):
        return {"$ref": encode_id(m.id)}
    raise TypeError(f"not a materialized value: {m!r}")
