import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ao2.errors import ContractViolation
from ao2.option_graph import (
    NodeKind,
    OptionPool,
    descendants,
    distance,
    prune_actions,
    prune_children,
    score_from_distance,
    similarity_score,
)


def pool_with(values, k=2):
    pool = OptionPool(len(values[0]), k)
    ids = [pool.add_interior(v) for v in values]
    return pool, ids


class TestDistance:
    def test_identity(self):
        pool, (a,) = pool_with([[1.0, 2.0, 3.0]])
        assert distance([1, 2, 3], pool[a], [1, 1, 1]) == 0

    def test_unit_weights(self):
        pool, (a,) = pool_with([[0.1, 0.1, -0.1]])
        assert distance([0, 0, 0], pool[a], [1, 1, 1]) == pytest.approx(0.3, abs=1e-12)

    def test_attention_weights(self):
        # 2.2*0.1 + 2.4*0.1 + 0.7*0.1
        pool, (a,) = pool_with([[0.1, 0.1, -0.1]])
        assert distance([0, 0, 0], pool[a], [2.2, 2.4, 0.7]) == pytest.approx(0.53, abs=1e-12)

    def test_dimension_mismatch(self):
        pool, (a,) = pool_with([[0.0, 0.0]])
        with pytest.raises(ContractViolation):
            distance([0, 0, 0], pool[a], [1, 1])
        with pytest.raises(ContractViolation):
            distance([0, 0], pool[a], [1, 1, 1])

    def test_leaf_rejected(self):
        pool = OptionPool(2, 2)
        with pytest.raises(ContractViolation):
            distance([0, 0], pool[0], [1, 1])


class TestSimilarity:
    def test_values(self):
        pool, (a,) = pool_with([[0.1, 0.1, -0.1]])
        assert similarity_score([0.1, 0.1, -0.1], pool[a], [1, 1, 1]) == 1.0
        assert similarity_score([0, 0, 0], pool[a], [1, 1, 1]) == pytest.approx(1 / 1.3, abs=1e-12)
        assert round(score_from_distance(0.3), 4) == 0.7692

    def test_cartpole_threshold_radius(self):
        # score > 0.9  <=>  d < 1/9
        assert score_from_distance(1 / 9 - 1e-9) > 0.9
        assert score_from_distance(1 / 9 + 1e-9) < 0.9


class TestDescendants:
    def test_single(self):
        pool, (a,) = pool_with([[0.0]])
        assert descendants(pool, a, 8) == {a}

    def test_cycle_terminates(self):
        pool, (a, b) = pool_with([[0.0], [1.0]])
        pool.add_edge(a, b)
        pool.add_edge(b, a)
        assert descendants(pool, a, 10) == {a, b}

    def test_depth_bound(self):
        pool, (a, b, c) = pool_with([[0.0], [1.0], [2.0]])
        pool.add_edge(a, b)
        pool.add_edge(b, c)
        assert descendants(pool, a, 1) == {a, b}
        assert descendants(pool, a, 2) == {a, b, c}

    def test_unknown_id(self):
        pool, _ = pool_with([[0.0]])
        with pytest.raises(KeyError):
            descendants(pool, 99, 3)


class TestPruning:
    def test_under_cap(self):
        pool, (a, b, c) = pool_with([[0.0], [1.0], [2.0]])
        pool.add_edge(a, b)
        pool.add_edge(a, c)
        assert prune_children(pool, a, 4, [1.0]) == 0

    def test_removes_most_distant(self):
        pool, (a, near, far) = pool_with([[0, 0], [0.1, 0], [5, 5]])
        pool.add_edge(a, near)
        pool.add_edge(a, far)
        assert prune_children(pool, a, 1, [1, 1]) == 1
        assert pool.interior_children(a) == [near]

    def test_leaves_protected(self):
        pool, (a,) = pool_with([[0.0]])
        assert prune_children(pool, a, 0, [1.0]) == 0
        assert pool.action_children(a) == [0, 1]

    def test_prune_actions_by_weight(self):
        pool, (a,) = pool_with([[0.0]], k=3)
        for act, wt in zip(range(3), [3.0, 1.0, 2.0]):
            pool[a].children[act] = wt
        assert prune_actions(pool, a, 2) == 1
        assert pool.action_children(a) == [0, 2]

    def test_prune_actions_single(self):
        pool, (a,) = pool_with([[0.0]], k=1)
        assert prune_actions(pool, a, 1) == 0

    def test_prune_actions_tie(self):
        pool, (a,) = pool_with([[0.0]])
        pool[a].children[0] = pool[a].children[1] = 2.0
        assert prune_actions(pool, a, 1) == 1
        assert pool.action_children(a) == [0]

    def test_prune_unknown(self):
        pool, _ = pool_with([[0.0]])
        with pytest.raises(KeyError):
            prune_children(pool, 42, 1, [1.0])
        with pytest.raises(KeyError):
            prune_actions(pool, 42, 1)


class TestPool:
    def test_initial_leaves(self):
        pool = OptionPool(3, 4)
        assert len(pool) == 4
        assert all(pool[i].kind is NodeKind.ACTION_LEAF and not pool[i].children for i in range(4))

    def test_new_interior_wired_to_all_actions(self):
        pool = OptionPool(2, 3)
        a = pool.add_interior([0.5, 0.5])
        assert pool[a].children == {0: 0.0, 1: 0.0, 2: 0.0}
        b = pool.add_interior([1, 1], parent=a)
        assert pool[a].children[b] == 0.0

    def test_duplicate_edge_rejected(self):
        pool, (a, b) = pool_with([[0.0], [1.0]])
        pool.add_edge(a, b)
        with pytest.raises(ContractViolation):
            pool.add_edge(a, b)

    def test_bad_value_shape(self):
        pool = OptionPool(2, 2)
        with pytest.raises(ContractViolation):
            pool.add_interior([1.0, 2.0, 3.0])

    def test_growth_keeps_values(self):
        pool = OptionPool(2, 2)
        vals = np.random.default_rng(0).normal(size=(300, 2))
        for v in vals:
            pool.add_interior(v)
        np.testing.assert_array_equal(pool.interior_values, vals)

    def test_json_round_trip_is_lossless(self):
        rng = np.random.default_rng(3)
        pool = OptionPool(3, 2)
        ids = [pool.add_interior(rng.normal(size=3) * 10.0 ** rng.integers(-8, 8)) for _ in range(20)]
        for a, b in zip(ids, ids[1:]):
            pool.add_edge(a, b, float(rng.normal()))
        pool.add_edge(ids[-1], ids[0], np.pi)
        pool[ids[3]].children[1] = 1 / 3
        text = pool.to_json()
        doc = json.loads(text)
        assert all(isinstance(x, str) for n in doc["nodes"] for x in n["value"])
        back = OptionPool.from_json(text)
        np.testing.assert_array_equal(back.interior_values, pool.interior_values)
        for nid in pool.nodes:
            assert back[nid].children == pool[nid].children
            assert list(back[nid].children) == list(pool[nid].children)
        assert back.to_json() == text

    def test_from_dict_rejects_gaps(self):
        doc = OptionPool(1, 1).to_dict()
        doc["nodes"][0]["id"] = 5
        with pytest.raises(ContractViolation):
            OptionPool.from_dict(doc)


# -- properties ----------------------------------------------------------

vec3 = st.lists(st.floats(-100, 100, allow_subnormal=False), min_size=3, max_size=3)
pos3 = st.lists(st.floats(0.01, 100), min_size=3, max_size=3)


@settings(max_examples=300)
@given(vec3, vec3, pos3)
def test_distance_zero_iff_equal_and_symmetric(u, v, w):
    pool, (a, b) = pool_with([v, u])
    d = distance(u, pool[a], w)
    assert d >= 0
    assert (d == 0) == (list(map(float, u)) == list(map(float, v)))
    assert d == distance(v, pool[b], w)


@settings(max_examples=300)
@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_similarity_is_strictly_decreasing(d1, d2):
    s1, s2 = score_from_distance(d1), score_from_distance(d2)
    assert 0 < s1 <= 1 and 0 < s2 <= 1
    if d1 < d2 and s1 != s2:
        assert s1 > s2
    assert (s1 == 1.0) == (d1 == 0 or 1.0 + d1 == 1.0)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(0, 12))
def test_prune_children_caps_and_keeps_graph_valid(seed, n, cap):
    rng = np.random.default_rng(seed)
    pool, ids = pool_with(rng.normal(size=(n, 2)).tolist())
    for _ in range(3 * n):
        a, b = rng.choice(ids, 2)
        if b not in pool[a].children:
            pool.add_edge(int(a), int(b))
    for nid in ids:
        prune_children(pool, nid, cap, [1.0, 1.0])
        assert len(pool.interior_children(nid)) <= cap
        assert pool.action_children(nid) == [0, 1]
    for node in pool.nodes.values():
        assert all(c in pool for c in node.children)
