import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ao2.errors import ContractViolation, NoSchema
from ao2.inference import (
    DecisionPath,
    InferenceConfig,
    epsilon_greedy,
    explore,
    find_most_similar,
    resolve,
    select_action,
    smooth_action,
)
from ao2.option_graph import OptionPool

ONES2 = np.ones(2)


def two_node_pool():
    pool = OptionPool(2, 2)
    a = pool.add_interior([0, 0])
    b = pool.add_interior([1, 1])
    return pool, a, b


class TestFindMostSimilar:
    def test_closest(self):
        pool, a, b = two_node_pool()
        assert find_most_similar(pool, [0.1, 0], ONES2) == a

    def test_exact(self):
        pool, a, b = two_node_pool()
        assert find_most_similar(pool, [1, 1], ONES2) == b

    def test_tie_lowest_id(self):
        pool, a, b = two_node_pool()
        assert find_most_similar(pool, [0.5, 0.5], ONES2) == a
        assert find_most_similar(pool, [1, 0], ONES2) == a

    def test_empty(self):
        with pytest.raises(NoSchema):
            find_most_similar(OptionPool(2, 2), [0, 0], ONES2)


class TestSelectAction:
    def test_fresh_node_takes_action_zero(self):
        pool = OptionPool(2, 2)
        a = pool.add_interior([0, 0])
        path, act = select_action(pool, [3, 3], ONES2)
        assert act == 0
        assert path.steps == ((a, 0),)

    def test_argmax_weight(self):
        pool = OptionPool(2, 2)
        a = pool.add_interior([0, 0])
        pool[a].children.update({0: 2.0, 1: -5.0})
        assert select_action(pool, [0, 0], ONES2)[1] == 0
        pool[a].children.update({0: -1.0, 1: 4.0})
        assert select_action(pool, [0, 0], ONES2)[1] == 1

    def test_descendant_closer_than_entry(self):
        # f=[0,0] -> s=[1,1]; g=[5,5] unrelated. From entry f, u is nearer s.
        pool = OptionPool(2, 2)
        f = pool.add_interior([0, 0])
        s = pool.add_interior([1, 1], parent=f)
        pool.add_interior([5, 5])
        pool[s].children.update({0: -1.0, 1: 4.0})
        path = resolve(pool, f, [1, 1.1], ONES2, max_depth=8)
        assert path.action_index == 1
        assert path.steps == ((f, s), (s, 1))
        assert path.distances == pytest.approx((2.1, 0.1))

    def test_entry_without_action_edges_falls_through(self):
        pool = OptionPool(1, 2)
        f = pool.add_interior([0])
        c1 = pool.add_interior([1], parent=f)
        c2 = pool.add_interior([2], parent=f)
        pool[f].children[c2] = 3.0
        del pool[f].children[0], pool[f].children[1]
        pool[c2].children[1] = 1.0
        path = resolve(pool, f, [0], np.ones(1), scan_descendants=False)
        assert path.steps == ((f, c2), (c2, 1))
        assert c1 in pool[f].children

    def test_deterministic(self):
        rng = np.random.default_rng(0)
        pool = OptionPool(3, 3)
        for v in rng.normal(size=(20, 3)):
            n = pool.add_interior(v)
            pool[n].children.update({a: float(rng.normal()) for a in range(3)})
        u = rng.normal(size=3)
        assert select_action(pool, u, np.ones(3)) == select_action(pool, u, np.ones(3))

    def test_path_must_be_nonempty(self):
        with pytest.raises(ContractViolation):
            DecisionPath((), 0)


class TestEpsilonGreedy:
    def test_zero(self):
        rng = np.random.default_rng(0)
        assert all(epsilon_greedy(1, 4, 0.0, rng) == 1 for _ in range(1000))

    def test_forced_switch(self):
        rng = np.random.default_rng(0)
        assert all(epsilon_greedy(0, 2, 1.0, rng) == 1 for _ in range(1000))

    def test_single_action(self):
        rng = np.random.default_rng(0)
        assert all(epsilon_greedy(0, 1, 1.0, rng) == 0 for _ in range(100))

    def test_switch_frequency(self):
        # binomial(1e5, 0.1): sigma = sqrt(n p q) ~ 94.9
        rng = np.random.default_rng(7)
        n = 100_000
        switched = sum(epsilon_greedy(2, 5, 0.1, rng) != 2 for _ in range(n))
        assert abs(switched - 0.1 * n) <= 3 * np.sqrt(n * 0.1 * 0.9)

    def test_alternatives_uniform_over_available(self):
        rng = np.random.default_rng(1)
        picks = [epsilon_greedy(0, 5, 1.0, rng, available=[0, 2, 4]) for _ in range(3000)]
        assert set(picks) == {2, 4}

    def test_explore_rewrites_last_edge(self):
        pool = OptionPool(1, 2)
        a = pool.add_interior([0])
        path, _ = select_action(pool, [0], np.ones(1))
        out = explore(pool, path, 1.0, np.random.default_rng(0))
        assert out.exploratory and out.action_index == 1 and out.steps == ((a, 1),)


class TestSmoothing:
    def test_alpha_one(self):
        assert smooth_action(1.5, -2.0, 1.0) == 1.5

    def test_blend(self):
        # 0.9 * 2 + 0.1 * -2
        assert smooth_action(2.0, -2.0, 0.9) == pytest.approx(1.6, abs=1e-12)

    def test_fixed_point(self):
        assert smooth_action(1.0, 1.0, 0.9) == pytest.approx(1.0, abs=1e-15)

    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0, 1))
    def test_between(self, c, l, a):
        s = smooth_action(c, l, a)
        assert min(c, l) - 1e-12 <= s <= max(c, l) + 1e-12

    def test_config_ranges(self):
        with pytest.raises(ContractViolation):
            InferenceConfig(epsilon=1.5)
        with pytest.raises(ContractViolation):
            InferenceConfig(alpha=-0.1)


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.floats(-50, 50))
def test_constant_shift_keeps_choice(seed, c):
    rng = np.random.default_rng(seed)
    pool = OptionPool(2, 4)
    n = pool.add_interior([0, 0])
    pool[n].children.update({a: float(rng.integers(-3, 4)) for a in range(4)})
    before = select_action(pool, [0, 0], ONES2)[1]
    for a in range(4):
        pool[n].children[a] += c
    # shifting can merge near-equal weights only through rounding; integers keep order
    if c == round(c):
        assert select_action(pool, [0, 0], ONES2)[1] == before
