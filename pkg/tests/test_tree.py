from hypothesis import given
from hypothesis import strategies as st
from scenarios import (
    MOVE_A_UNDER_B,
    MOVE_B_UNDER_A,
    MOVES_A,
    MOVES_A_UNDER_B_WINS,
    MOVES_B,
    MOVES_B_UNDER_A_WINS,
    MOVES_BASE,
    MOVES_C,
    MOVES_OPS,
)
from tree_fuzz import random_tree_log

from opsets.core import ROOT_ID, Assign, OpId, OpSet
from opsets.datatypes import (
    DocState,
    Element,
    initial_state,
    interpret_doc,
    make_ops_of,
    materialize,
)
from opsets.logfile import to_json
from opsets.opgen import ExistingObject, set_map_key
from opsets.tree import (
    ViolationKind,
    ancestor,
    apply_op_tree,
    check_tree_invariants,
    interpret_tree,
    is_ancestor,
)

E = frozenset()
A, B, X = OpId(1, "a"), OpId(2, "a"), OpId(3, "a")


def tree_doc(o):
    return to_json(materialize(interpret_tree(o), ROOT_ID, make_ops_of(o)))


def test_ancestor_closure():
    e = [Element(OpId(10, "a"), ROOT_ID, "a", A), Element(OpId(11, "a"), A, "b", B)]
    assert ancestor(e) == {(ROOT_ID, A), (A, B), (ROOT_ID, B)}
    assert ancestor([]) == set()
    assert (X, X) in ancestor([Element(OpId(12, "a"), X, "k", X)])
    assert is_ancestor(e, ROOT_ID, B) and not is_ancestor(e, B, ROOT_ID)


def test_move_into_own_descendant_is_ignored():
    s = interpret_tree(OpSet(MOVES_BASE))
    assert apply_op_tree(s, OpId(9, "z"), Assign(MOVES_C, "A", MOVES_A, E)) == s
    assert apply_op_tree(s, OpId(9, "z"), Assign(MOVES_A, "self", MOVES_A, E)) == s


def test_move_leaves_exactly_one_parent():
    o = OpSet(MOVES_BASE)
    o2 = set_map_key(o, "z", MOVES_B, "C", ExistingObject(MOVES_C))
    s = interpret_tree(o2)
    parents = [t.obj for t in s.e.values() if t.val == MOVES_C]
    assert parents == [MOVES_B]
    assert tree_doc(o2) == {"A": {}, "B": {"C": {}}}


def test_fresh_object_assign_matches_plain_datatypes():
    o = OpSet(MOVES_BASE)
    o2 = set_map_key(o, "z", MOVES_C, "D", {})
    assert interpret_tree(o2) == interpret_doc(o2)


def test_each_crossed_move_alone_takes_effect():
    assert tree_doc(OpSet([*MOVES_BASE, MOVE_B_UNDER_A])) == MOVES_B_UNDER_A_WINS
    assert tree_doc(OpSet([*MOVES_BASE, MOVE_A_UNDER_B])) == MOVES_A_UNDER_B_WINS


def test_crossed_moves_keep_one_and_stay_a_tree():
    d = tree_doc(MOVES_OPS)
    assert d in (MOVES_B_UNDER_A_WINS, MOVES_A_UNDER_B_WINS)
    assert check_tree_invariants(interpret_tree(MOVES_OPS)).ok


def test_crossed_moves_keep_lower_id_move():
    # moves are applied in ID order; the later one would close a cycle and is skipped
    assert MOVE_B_UNDER_A[0] < MOVE_A_UNDER_B[0]
    assert tree_doc(MOVES_OPS) == MOVES_B_UNDER_A_WINS


def test_plain_interpretation_of_crossed_moves_is_not_a_tree():
    report = check_tree_invariants(interpret_doc(MOVES_OPS))
    kinds = {v.kind for v in report.violations}
    assert ViolationKind.CYCLE in kinds and ViolationKind.MULTIPLE_PARENTS in kinds


def test_invariant_checker_counterexamples():
    cyc = DocState(
        {OpId(5, "a"): Element(OpId(5, "a"), ROOT_ID, "a", A), OpId(6, "a"): Element(OpId(6, "a"), A, "r", ROOT_ID)}
    )
    kinds = {v.kind for v in check_tree_invariants(cyc).violations}
    assert {ViolationKind.CYCLE, ViolationKind.ROOT_HAS_PARENT} <= kinds
    two = DocState(
        {OpId(5, "a"): Element(OpId(5, "a"), ROOT_ID, "a", B), OpId(6, "a"): Element(OpId(6, "a"), A, "b", B)}
    )
    assert [v.kind for v in check_tree_invariants(two).violations] == [ViolationKind.MULTIPLE_PARENTS]


def test_same_object_moved_to_two_places_greater_id_decides():
    o = OpSet(MOVES_BASE)
    p = o.add(OpId(7, "p"), Assign(MOVES_B, "C", MOVES_C, E))
    q = p.add(OpId(7, "q"), Assign(ROOT_ID, "C", MOVES_C, E))
    assert tree_doc(q) == {"A": {}, "B": {}, "C": {}}


@given(st.randoms(use_true_random=False), st.integers(1, 25))
def test_every_prefix_is_a_tree(rnd, n):
    o = random_tree_log(rnd, n)
    s = initial_state()
    for oid, op in o.linearize():
        s = apply_op_tree(s, oid, op)
        assert check_tree_invariants(s).ok
