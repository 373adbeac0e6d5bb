import json
import math

import pytest
from hypothesis import given
from strategies import edit_script, union

from opsets.core import ROOT_ID, Assign, MakeMap, MakeVal, OpId, OpSet
from opsets.datatypes import interpret_doc, make_ops_of, materialize
from opsets.logfile import (
    LogParseError,
    decode_id,
    encode_id,
    parse_log,
    serialize_log,
    to_json,
)

ONE_MAP = '{"version":1,"ops":[\n{"id":[1,"a"],"action":{"t":"MakeMap"}}\n]}\n'


def test_parse_single_make_map():
    o = parse_log(ONE_MAP)
    assert list(o) == [(OpId(1, "a"), MakeMap())]
    assert serialize_log(o) == ONE_MAP


def test_empty_log_round_trip():
    assert serialize_log(OpSet()) == '{"version":1,"ops":[]}\n'
    assert parse_log(serialize_log(OpSet())) == OpSet()


def test_causality_error_names_record():
    doc = {
        "version": 1,
        "ops": [
            {"id": [1, "a"], "action": {"t": "MakeMap"}},
            {
                "id": [2, "a"],
                "action": {
                    "t": "Assign",
                    "obj": [1, "a"],
                    "key": {"t": "str", "v": "k"},
                    "val": [1, "a"],
                    "prev": [[2, "a"]],
                },
            },
        ],
    }
    with pytest.raises(LogParseError) as info:
        parse_log(json.dumps(doc))
    assert info.value.index == 1


@pytest.mark.parametrize(
    "text",
    [
        "not json",
        '{"version":2,"ops":[]}',
        '{"version":1,"ops":[{"id":[1,"a"],"action":{"t":"Bogus"}}]}',
        '{"version":1,"ops":[{"id":[1,"a"],"action":{"t":"MakeVal","val":{"t":"int","v":"3"}}}]}',
        '{"version":1,"ops":[{"id":[1,"a"],"action":{"t":"MakeMap"}},{"id":[1,"a"],"action":{"t":"MakeList"}}]}',
    ],
)
def test_malformed_logs_rejected(text):
    with pytest.raises(LogParseError):
        parse_log(text)


def test_large_counters_are_strings():
    big = OpId(2**60, "a")
    assert encode_id(big) == [str(2**60), "a"]
    assert decode_id(encode_id(big)) == big
    assert encode_id(OpId(2**53 - 1, "a")) == [2**53 - 1, "a"]


def test_values_keep_their_types():
    o = OpSet([(ROOT_ID, MakeMap())])
    vals = [1, True, 1.0, None, "s", math.inf, -0.0]
    for i, v in enumerate(vals, start=1):
        o = o.add(OpId(2 * i, "a"), MakeVal(v)).add(
            OpId(2 * i + 1, "a"), Assign(ROOT_ID, f"k{i}", OpId(2 * i, "a"), frozenset())
        )
    text = serialize_log(o)
    assert parse_log(text) == o
    assert serialize_log(parse_log(text)) == text


def test_render_conventions():
    o = OpSet([(ROOT_ID, MakeMap()), (OpId(1, "a"), MakeVal(math.nan))])
    for i, key in enumerate((5, True, "$x", "#y", "plain"), start=2):
        o = o.add(OpId(i, "a"), Assign(ROOT_ID, key, OpId(1, "a"), frozenset()))
    d = to_json(materialize(interpret_doc(o), ROOT_ID, make_ops_of(o)))
    assert d == {
        "#true": {"$f64": "NaN"},
        "#5": {"$f64": "NaN"},
        "$$x": {"$f64": "NaN"},
        "$#y": {"$f64": "NaN"},
        "plain": {"$f64": "NaN"},
    }
    # bools, then ints, then strings by their raw value
    assert list(d) == ["#true", "#5", "$#y", "$$x", "plain"]


@given(edit_script())
def test_round_trip_is_byte_stable(replicas):
    o = union(replicas)
    text = serialize_log(o)
    assert parse_log(text) == o
    assert serialize_log(parse_log(text)) == text
    assert parse_log(text.encode()) == o
