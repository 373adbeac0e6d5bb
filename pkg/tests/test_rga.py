import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from opsets.listspec import InsOp
from opsets.rga import (
    NotCausalError,
    check_crdt_ops,
    check_rga_equivalence,
    insert_body,
    insert_rga,
    interp_rga,
    random_crdt_ops,
    random_delivery,
)


def test_insert_body_examples():
    assert insert_body([], 2) == [2]
    assert insert_body([3, 1], 2) == [3, 2, 1]
    assert insert_body([1], 3) == [3, 1]


def test_insert_rga_examples():
    assert insert_rga([], InsOp(5, 1)) == []
    assert insert_rga([1], InsOp(3, 1)) == [1, 3]
    assert insert_rga([1, 3], InsOp(2)) == [2, 1, 3]


def test_interp_rga_example_matches_spec():
    log = [InsOp(1), InsOp(3, 1), InsOp(2)]
    assert interp_rga(log) == [2, 1, 3]
    v = check_rga_equivalence(log)
    assert v.equal and v.spec == (2, 1, 3)
    assert interp_rga([]) == []
    assert check_rga_equivalence([]).equal


def test_check_crdt_ops():
    assert check_crdt_ops([InsOp(1), InsOp(2, 1)])
    assert not check_crdt_ops([InsOp(2, 1), InsOp(1)])
    assert not check_crdt_ops([InsOp(1), InsOp(1, 1)])


def test_non_causal_log_rejected():
    with pytest.raises(NotCausalError):
        check_rga_equivalence([InsOp(2, 1), InsOp(1)])
    with pytest.raises(NotCausalError):
        random_delivery(random.Random(0), [InsOp(2, 1)])


@given(st.randoms(use_true_random=False), st.integers(1, 50))
def test_rga_matches_spec(rnd, size):
    assert check_rga_equivalence(random_crdt_ops(rnd, size)).equal


@given(st.randoms(use_true_random=False), st.integers(1, 30))
def test_delivery_order_does_not_matter(rnd, size):
    ops = random_crdt_ops(rnd, size)
    assert interp_rga(random_delivery(rnd, ops)) == interp_rga(ops)
