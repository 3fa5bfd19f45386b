import numpy as np
import pytest

from orex.errors import InvalidInput
from orex.model import AffineLayer, Network, ReluLayer, forward
from orex.text import Box, EpsBall, KnnBox, build_perturbation, encode
from orex.verify import (
    EntailmentOracle,
    VerifierConfig,
    bounds,
    counterexample_diff,
    entails,
    entails_box,
)
from oracles import (
    closed_form_affine_bounds,
    closed_form_affine_robust,
    random_instance,
    random_net,
)


class TestBounds:
    def test_sum_net_interval(self, sum_net):
        box = Box(lo=np.array([-0.5, -0.5]), hi=np.array([2.5, 2.5]))
        b = bounds(sum_net, box)
        assert b[0].tolist() == [-1.0, 5.0]
        assert b[1].tolist() == [-5.0, 1.0]

    def test_point_box_equals_forward(self, toyrelu_net):
        rng = np.random.default_rng(0)
        for _ in range(20):
            x = rng.normal(size=2)
            b = bounds(toyrelu_net, Box(lo=x, hi=x))
            logits = forward(toyrelu_net, x).logits
            assert np.allclose(b[:, 0], logits, atol=1e-9)
            assert np.allclose(b[:, 1], logits, atol=1e-9)

    def test_relu_clamp(self):
        net = Network(
            layers=(
                AffineLayer(weights=np.array([[1.0, 0.0]]), bias=np.zeros(1)),
                ReluLayer(),
                AffineLayer(weights=np.array([[1.0], [0.0]]), bias=np.zeros(2)),
            ),
            input_words=2, embedding_dim=1, labels=("h", "zero"),
        )
        b = bounds(net, Box(lo=np.array([-1.0, 0.0]), hi=np.array([1.0, 0.0])))
        assert b[0].tolist() == [0.0, 1.0]

    def test_dimension_mismatch(self, sum_net):
        with pytest.raises(InvalidInput):
            bounds(sum_net, Box(lo=np.zeros(3), hi=np.ones(3)))

    def test_affine_exactness(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            net = random_net(rng, 3, 2, [])
            lo = rng.normal(size=6)
            box = Box(lo=lo, hi=lo + rng.uniform(0, 2, size=6))
            assert np.allclose(
                bounds(net, box), closed_form_affine_bounds(net, box), atol=1e-9
            )


class TestEntails:
    def test_all_fixed_is_robust(self, toyrelu_net, toy_vocab, toy_table):
        t = encode(["good", "bad"], 2, toy_vocab, toy_table)
        res = entails(toyrelu_net, t, {0, 1}, EpsBall(eps=99.0), toy_vocab, toy_table,
                      target=forward(toyrelu_net, t.point).label)
        assert res.is_robust

    def test_sum_small_eps_robust(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        res = entails(sum_net, t, set(), EpsBall(eps=0.5), toy_vocab, toy_table, 0)
        assert res.is_robust

    def test_sum_large_eps_counterexample(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        res = entails(sum_net, t, set(), EpsBall(eps=1.5), toy_vocab, toy_table, 0)
        assert res.is_counterexample
        assert forward(sum_net, res.point).label == res.predicted != 0
        total = res.point.sum()
        assert total < 0

    def test_counterexample_respects_fixed_words(self, sum_net, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        res = entails(sum_net, t, {0}, EpsBall(eps=3.0), toy_vocab, toy_table, 0)
        assert res.is_counterexample
        assert res.point[0] == t.point[0]

    def test_anti_monotone_in_fixed_set(self, toyrelu_net, toy_vocab, toy_table):
        t = encode(["good", "bad"], 2, toy_vocab, toy_table)
        target = forward(toyrelu_net, t.point).label
        spec = EpsBall(eps=0.8)
        for base in [set(), {0}, {1}]:
            if entails(toyrelu_net, t, base, spec, toy_vocab, toy_table, target).is_robust:
                for extra in ({0}, {1}, {0, 1}):
                    bigger = base | extra
                    assert entails(
                        toyrelu_net, t, bigger, spec, toy_vocab, toy_table, target
                    ).is_robust

    def test_spec_monotone_in_eps_and_k(self, toyrelu_net, toy_vocab, toy_table):
        t = encode(["good", "bad"], 2, toy_vocab, toy_table)
        target = forward(toyrelu_net, t.point).label
        robust_eps = [
            entails(toyrelu_net, t, set(), EpsBall(eps=e), toy_vocab, toy_table,
                    target).is_robust
            for e in (0.05, 0.1, 0.2, 0.4, 0.8, 1.6)
        ]
        # once lost, robustness never comes back as the box grows
        assert robust_eps == sorted(robust_eps, reverse=True)
        robust_k = [
            entails(toyrelu_net, t, set(), KnnBox(k=k), toy_vocab, toy_table,
                    target).is_robust
            for k in (1, 2, 4, 8)
        ]
        assert robust_k == sorted(robust_k, reverse=True)

    def test_relu_branching_exact_on_gap_case(self):
        # logit gap = relu(x0) - relu(-x0): positive for x0 in (0, 1], needs
        # the branch-and-bound to certify boxes straddling the kink
        net = Network(
            layers=(
                AffineLayer(weights=np.array([[1.0], [-1.0]]), bias=np.zeros(2)),
                ReluLayer(),
                AffineLayer(weights=np.array([[1.0, 0.0], [0.0, 1.0]]), bias=np.zeros(2)),
            ),
            input_words=1, embedding_dim=1, labels=("pos", "neg"),
        )
        res = entails_box(net, Box(lo=np.array([0.2]), hi=np.array([1.0])), 0)
        assert res.is_robust
        res = entails_box(net, Box(lo=np.array([-0.2]), hi=np.array([1.0])), 0)
        assert res.is_counterexample

    def test_budget_surfaces_as_resource_exhausted(self):
        from oracles import split_hungry_instance

        net, vocab, table, t, spec = split_hungry_instance()
        full = EntailmentOracle(net, t, spec, vocab, table).query([])
        assert full.is_robust and full.splits_used > 0
        starved = EntailmentOracle(
            net, t, spec, vocab, table, config=VerifierConfig(split_budget=0)
        ).query([])
        assert starved.is_exhausted
        assert starved.splits_used == 0


class TestCounterexampleDiff:
    def test_no_difference(self, toy_vocab, toy_table):
        t = encode(["good", "bad"], 2, toy_vocab, toy_table)
        assert counterexample_diff(t, t.point.copy()) == ()

    def test_single_block(self, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        assert counterexample_diff(t, np.array([-0.5, 1.0])) == (0,)

    def test_both_blocks(self, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        assert counterexample_diff(t, np.array([-0.5, 0.2])) == (0, 1)

    def test_noise_below_tolerance_ignored(self, toy_vocab, toy_table):
        t = encode(["good", "bad"], 2, toy_vocab, toy_table)
        assert counterexample_diff(t, t.point + 1e-13) == ()


class TestSoundnessFuzz:
    def test_randomized_queries(self):
        rng = np.random.default_rng(42)
        robust_seen = ce_seen = 0
        for _ in range(150):
            net, vocab, table, t, spec = random_instance(rng)
            oracle = EntailmentOracle(net, t, spec, vocab, table)
            n_fixed = int(rng.integers(0, t.length + 1))
            fixed = sorted(rng.choice(t.length, size=n_fixed, replace=False))
            res = oracle.query([int(i) for i in fixed])
            box = oracle.box([int(i) for i in fixed])
            if res.is_counterexample:
                ce_seen += 1
                assert box.contains(res.point)
                assert forward(net, res.point).label == res.predicted != oracle.target
            elif res.is_robust:
                robust_seen += 1
                samples = box.lo + rng.random((2000, box.dim)) * (box.hi - box.lo)
                from orex.model import batch_logits, lower_network

                labels = np.argmax(batch_logits(lower_network(net), samples), axis=1)
                assert np.all(labels == oracle.target)
        assert robust_seen > 10 and ce_seen > 10

    def test_affine_verdict_matches_closed_form(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            net = random_net(rng, 3, 1, [])
            x = rng.normal(size=3)
            target = forward(net, x).label
            lo = x - rng.uniform(0.01, 1.0)
            hi = x + rng.uniform(0.01, 1.0)
            box = Box(lo=lo, hi=hi)
            res = entails_box(net, box, target)
            want = closed_form_affine_robust(net, box, target)
            assert res.is_robust == want
