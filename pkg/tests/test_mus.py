import numpy as np
import pytest

from orex.errors import Infeasible, ResourceExhausted
from orex.explanations import ConstraintSpec, CostFunction
from orex.hitting import ore_hs
from orex.mus import MsaSolverConfig, MusState, enumerate_all_minimal, mus, ore_msa, shrink
from orex.text import EpsBall, encode
from orex.verify import EntailmentOracle
from oracles import all_subsets, brute_force_all_optimal, brute_force_optimum, random_instance


def brute_force_mus(oracle, cost):
    """Max-cost freeable subset by exhaustive search (free set robust)."""
    best, best_cost = frozenset(), -1.0
    universe = list(oracle.universe)
    for subset in all_subsets(len(universe)):
        free = frozenset(subset)
        fixed = [i for i in universe if i not in free]
        if oracle.query(fixed).is_robust and cost.total(free) > best_cost + 1e-9:
            best, best_cost = free, cost.total(free)
    return best, best_cost


class TestMus:
    def test_sum_symmetric_frees_higher_index(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        got = mus(MusState(), sum_net, t, EpsBall(eps=1.5), toy_vocab, toy_table)
        assert got == frozenset({1})

    def test_sum_large_eps_empty(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        got = mus(MusState(), sum_net, t, EpsBall(eps=3.0), toy_vocab, toy_table)
        assert got == frozenset()

    def test_sum_small_eps_everything(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        got = mus(MusState(), sum_net, t, EpsBall(eps=0.5), toy_vocab, toy_table)
        assert got == frozenset({0, 1})

    def test_matches_brute_force_cost(self):
        rng = np.random.default_rng(37)
        for _ in range(10):
            net, vocab, table, t, spec = random_instance(rng, max_words=4)
            cost = (CostFunction.uniform(t.length) if rng.random() < 0.5 else
                    CostFunction(costs=tuple(float(c) for c in
                                             rng.uniform(0.5, 2.5, size=t.length))))
            got = mus(MusState(), net, t, spec, vocab, table, cost)
            oracle = EntailmentOracle(net, t, spec, vocab, table)
            _, want_cost = brute_force_mus(oracle, cost)
            assert abs(cost.total(got) - want_cost) <= 1e-9


class TestShrink:
    def test_sum_eps3_nothing_freeable(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        got = shrink(MusState(), sum_net, t, EpsBall(eps=3.0), toy_vocab, toy_table)
        assert got == frozenset()

    def test_sum_eps05_everything(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        got = shrink(MusState(), sum_net, t, EpsBall(eps=0.5), toy_vocab, toy_table)
        assert got == frozenset({0, 1})

    def test_firstword_only_inert_word(self, firstword_net, toy_vocab, toy_table):
        t = encode(["good", "bad"], 2, toy_vocab, toy_table)
        got = shrink(MusState(), firstword_net, t, EpsBall(eps=1.5),
                     toy_vocab, toy_table)
        assert got == frozenset({1})

    def test_true_mus_survives(self):
        rng = np.random.default_rng(41)
        for _ in range(8):
            net, vocab, table, t, spec = random_instance(rng, max_words=4)
            cost = CostFunction.uniform(t.length)
            oracle = EntailmentOracle(net, t, spec, vocab, table)
            true_mus, _ = brute_force_mus(oracle, cost)
            survivors = shrink(MusState(), net, t, spec, vocab, table, cost)
            assert true_mus <= survivors


class TestOreMsa:
    def test_sum_fixture(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        e = ore_msa(sum_net, t, EpsBall(eps=1.5), toy_vocab, toy_table)
        assert e.indices == (0,) and e.cost == 1.0

    def test_sum_trivial_full_explanation(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        e = ore_msa(sum_net, t, EpsBall(eps=3.0), toy_vocab, toy_table)
        assert e.indices == (0, 1) and e.cost == 2.0

    def test_exclude_infeasible(self, firstword_net, toy_vocab, toy_table):
        t = encode(["good", "bad"], 2, toy_vocab, toy_table)
        with pytest.raises(Infeasible):
            ore_msa(firstword_net, t, EpsBall(eps=1.5), toy_vocab, toy_table,
                    constraints=ConstraintSpec(exclude={0}))

    def test_include_never_freed(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        e = ore_msa(sum_net, t, EpsBall(eps=0.5), toy_vocab, toy_table,
                    constraints=ConstraintSpec(include={0}))
        assert e.indices == (0,)

    def test_duality(self, toy_vocab, toy_table):
        rng = np.random.default_rng(43)
        for _ in range(8):
            net, vocab, table, t, spec = random_instance(rng, max_words=4)
            cost = CostFunction.uniform(t.length)
            e = ore_msa(net, t, spec, vocab, table, cost)
            freed = mus(MusState(), net, t, spec, vocab, table, cost)
            assert abs(e.cost + cost.total(freed) - cost.total(range(t.length))) <= 1e-9
            assert frozenset(e.indices) == frozenset(range(t.length)) - freed

    def test_agreement_with_hs(self):
        rng = np.random.default_rng(47)
        for _ in range(10):
            net, vocab, table, t, spec = random_instance(rng, max_words=4)
            cost = CostFunction.uniform(t.length)
            a = ore_msa(net, t, spec, vocab, table, cost)
            b = ore_hs(net, t, spec, vocab, table, cost)
            assert abs(a.cost - b.cost) <= 1e-9
            optima = brute_force_all_optimal(
                EntailmentOracle(net, t, spec, vocab, table), cost
            )
            if len(optima) == 1:
                assert a.indices == b.indices == optima[0]

    def test_shrink_off_same_result(self, toyrelu_net, toy_vocab, toy_table):
        t = encode(["good", "bad"], 2, toy_vocab, toy_table)
        spec = EpsBall(eps=1.1)
        on = ore_msa(toyrelu_net, t, spec, toy_vocab, toy_table)
        off = ore_msa(toyrelu_net, t, spec, toy_vocab, toy_table,
                      solver_config=MsaSolverConfig(use_shrink=False))
        assert on.indices == off.indices and on.cost == off.cost


class TestEnumerateAllMinimal:
    def test_sum_both_singletons(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        got = enumerate_all_minimal(sum_net, t, EpsBall(eps=1.5), toy_vocab, toy_table)
        assert [e.indices for e in got] == [(0,), (1,)]
        assert all(e.cost == 1.0 for e in got)

    def test_sum_unique_empty_optimum(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        got = enumerate_all_minimal(sum_net, t, EpsBall(eps=0.5), toy_vocab, toy_table)
        assert [e.indices for e in got] == [()]

    def test_matches_brute_force(self):
        rng = np.random.default_rng(53)
        for _ in range(8):
            net, vocab, table, t, spec = random_instance(rng, max_words=4)
            cost = CostFunction.uniform(t.length)
            got = enumerate_all_minimal(net, t, spec, vocab, table, cost)
            want = brute_force_all_optimal(
                EntailmentOracle(net, t, spec, vocab, table), cost
            )
            assert [e.indices for e in got] == want

    def test_guard_refuses_blowup(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        with pytest.raises(ResourceExhausted):
            enumerate_all_minimal(sum_net, t, EpsBall(eps=1.5), toy_vocab, toy_table,
                                  guard=1)
