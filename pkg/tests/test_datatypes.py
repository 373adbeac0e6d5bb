import math

import pytest
from hypothesis import given
from scenarios import SPLICE_L_AFTER, SPLICE_L_BEFORE, SPLICE_OPS, n
from strategies import edit_script, union

from opsets.core import (
    ROOT_ID,
    Assign,
    InsertAfter,
    MakeList,
    MakeMap,
    MakeVal,
    OpSet,
    Remove,
)
from opsets.datatypes import (
    ChainError,
    CycleRef,
    DocState,
    Element,
    ListValue,
    MapValue,
    PrimitiveValue,
    RegisterMode,
    UnknownObjectError,
    apply_op,
    idx_key,
    initial_state,
    interpret_doc,
    list_chain,
    make_ops_of,
    materialize,
    visible_list_elements,
)

E = frozenset()


def test_empty_opset_gives_initial_state():
    assert interpret_doc(OpSet()) == initial_state()


def test_splice_insert_after_splices_chain():
    before = OpSet([(i, op) for i, op in SPLICE_OPS if i != n(25)])
    assert interpret_doc(before).list_pairs == SPLICE_L_BEFORE
    assert interpret_doc(SPLICE_OPS).list_pairs == SPLICE_L_AFTER


def test_splice_from_hand_built_state():
    s = DocState({}, dict(SPLICE_L_BEFORE))
    assert apply_op(s, n(25), InsertAfter(n(13))).list_pairs == SPLICE_L_AFTER


def test_insert_after_missing_ref_is_noop():
    s = DocState({}, dict(SPLICE_L_BEFORE))
    assert apply_op(s, n(30), InsertAfter(n(99))) == s


def test_make_map_and_make_val_do_not_change_state():
    s = DocState({}, dict(SPLICE_L_BEFORE))
    assert apply_op(s, n(40), MakeMap()) == s
    assert apply_op(s, n(41), MakeVal(3)) == s


def _two_concurrent_assigns():
    return [
        (n(1), MakeMap()),
        (n(2), MakeVal("x")),
        (n(3), MakeVal("y")),
        (n(4), Assign(n(1), "k", n(2), E)),
        (n(5), Assign(n(1), "k", n(3), E)),
    ]


def test_multi_value_register_keeps_concurrent_values():
    s = interpret_doc(OpSet(_two_concurrent_assigns()))
    assert {t.val for t in s.e.values()} == {n(2), n(3)}


def test_remove_with_both_prev_empties_slot():
    ops = _two_concurrent_assigns() + [(n(6), Remove(n(1), "k", frozenset({n(4), n(5)})))]
    s = interpret_doc(OpSet(ops))
    assert s.e == {}
    assert s.l == {}


def test_last_writer_wins_keeps_only_later_assign():
    s = interpret_doc(OpSet(_two_concurrent_assigns()), RegisterMode.LAST_WRITER_WINS)
    assert list(s.e.values()) == [Element(n(5), n(1), "k", n(3))]


def test_keys_of_different_types_are_different_slots():
    ops = [
        (n(1), MakeMap()),
        (n(2), MakeVal("x")),
        (n(3), Assign(n(1), 1, n(2), E)),
        (n(4), Assign(n(1), True, n(2), E)),
    ]
    s = interpret_doc(OpSet(ops), RegisterMode.LAST_WRITER_WINS)
    assert len(s.e) == 2


def _chain_with_gap():
    # list 1 -> e1(10) -> e2(20) -> e3(30); e2 has no value
    ops = [(n(1), MakeList()), (n(2), MakeVal("v"))]
    for c, ref in ((10, 1), (20, 10), (30, 20)):
        ops.append((n(c), InsertAfter(n(ref))))
    ops.append((n(31), Assign(n(1), n(10), n(2), E)))
    ops.append((n(32), Assign(n(1), n(30), n(2), E)))
    return OpSet(ops)


def test_idx_key_skips_elements_without_values():
    s = interpret_doc(_chain_with_gap())
    assert idx_key(s, n(1), 0) == n(10)
    assert idx_key(s, n(1), 1) == n(30)
    assert idx_key(s, n(1), 2) is None
    empty = interpret_doc(OpSet([(n(1), MakeList())]))
    assert idx_key(empty, n(1), 0) is None


def test_visible_elements():
    s = interpret_doc(_chain_with_gap())
    assert visible_list_elements(s, n(1)) == [n(10), n(30)]
    assert list_chain(s, n(1)) == [n(10), n(20), n(30)]
    assert visible_list_elements(interpret_doc(OpSet([(n(1), MakeList())])), n(1)) == []


def test_splice_visible_order_after_head():
    ops = list(SPLICE_OPS) + [(n(26), MakeVal(0))]
    ops += [(n(27 + i), Assign(n(2), n(k), n(26), E)) for i, k in enumerate((13, 25, 5, 23))]
    s = interpret_doc(OpSet(ops))
    assert visible_list_elements(s, n(2)) == [n(13), n(25), n(5), n(23)]


def test_all_tombstones_gives_empty_visible_list():
    o = _chain_with_gap()
    o = o.add(n(40), Remove(n(1), n(10), frozenset({n(31)})))
    o = o.add(n(41), Remove(n(1), n(30), frozenset({n(32)})))
    s = interpret_doc(o)
    assert visible_list_elements(s, n(1)) == []
    assert list_chain(s, n(1)) == [n(10), n(20), n(30)]


def test_walk_rejects_broken_chains():
    with pytest.raises(ChainError):
        list_chain(DocState({}, {n(1): n(2), n(2): n(1)}), n(1))
    with pytest.raises(ChainError):
        list_chain(DocState({}, {n(1): n(2)}), n(1))
    with pytest.raises(ChainError):
        list_chain(DocState({}, {}), n(1))


def test_materialize_empty_map_and_single_value():
    o = OpSet([(ROOT_ID, MakeMap())])
    assert materialize(interpret_doc(o), ROOT_ID, make_ops_of(o)) == MapValue(())
    o = o.add(n(1), MakeVal("x")).add(n(2), Assign(ROOT_ID, "name", n(1), E))
    m = materialize(interpret_doc(o), ROOT_ID, make_ops_of(o))
    assert m == MapValue((("name", (PrimitiveValue("x"),)),))


def test_materialize_cycle_renders_ref():
    a, b = n(1), n(2)
    o = OpSet(
        [
            (ROOT_ID, MakeMap()),
            (a, MakeMap()),
            (b, MakeMap()),
            (n(3), Assign(ROOT_ID, "a", a, E)),
            (n(4), Assign(a, "b", b, E)),
            (n(5), Assign(b, "a", a, E)),
        ]
    )
    m = materialize(interpret_doc(o), a, make_ops_of(o))
    (b_val,) = m.get("b")
    assert b_val.get("a") == (CycleRef(a),)


def test_materialize_multi_value_newest_first():
    o = OpSet(_two_concurrent_assigns())
    m = materialize(interpret_doc(o), n(1), make_ops_of(o))
    assert m.get("k") == (PrimitiveValue("y"), PrimitiveValue("x"))


def test_materialize_unknown_root():
    with pytest.raises(UnknownObjectError):
        materialize(initial_state(), n(9), {})


def test_nan_value_equality():
    assert PrimitiveValue(math.nan) == PrimitiveValue(math.nan)
    assert PrimitiveValue(1) != PrimitiveValue(True)


def test_materialize_list():
    s = interpret_doc(_chain_with_gap())
    m = materialize(s, n(1), make_ops_of(_chain_with_gap()))
    assert m == ListValue(((PrimitiveValue("v"),), (PrimitiveValue("v"),)))


@given(edit_script())
def test_every_list_is_one_acyclic_chain(replicas):
    o = union(replicas)
    s = interpret_doc(o)
    reached = set()
    for oid, op in o:
        if isinstance(op, MakeList):
            chain = list_chain(s, oid)
            assert len(chain) == len(set(chain))
            reached.update(chain)
            reached.add(oid)
    assert reached == set(s.l)


@given(edit_script())
def test_list_relation_only_grows(replicas):
    o = union(replicas)
    prev = set()
    s = initial_state()
    for oid, op in o.linearize():
        s = apply_op(s, oid, op)
        # L never loses a node, even when its values are removed
        assert prev <= set(s.l)
        prev = set(s.l)


@given(edit_script(nodes=("a",)))
def test_lww_equals_mv_on_sequential_logs(replicas):
    # one replica alone: every Assign's prev is the whole slot
    o = replicas["a"]
    assert interpret_doc(o, RegisterMode.LAST_WRITER_WINS).e == interpret_doc(o).e
