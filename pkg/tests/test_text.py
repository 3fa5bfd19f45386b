import numpy as np
import pytest

from orex.errors import InvalidIndex, InvalidInput, TooLong, UnknownWord
from orex.text import (
    Box,
    EmbeddingTable,
    EpsBall,
    KnnBox,
    Vocabulary,
    bounding_box_of_words,
    build_perturbation,
    encode,
    knn,
    load_embedding,
    save_embedding,
    word_box,
)


class TestEncode:
    def test_pads_right(self, toy_vocab, toy_table):
        t = encode(["good"], 2, toy_vocab, toy_table)
        assert t.tokens == ("good", "<PAD>")
        assert t.point.tolist() == [1.0, 0.0]

    def test_two_words(self, toy_vocab, toy_table):
        t = encode(["good", "great"], 2, toy_vocab, toy_table)
        assert t.point.tolist() == [1.0, 1.2]

    def test_unknown_word(self, toy_vocab, toy_table):
        with pytest.raises(UnknownWord):
            encode(["zzz"], 2, toy_vocab, toy_table)

    def test_too_long(self, toy_vocab, toy_table):
        with pytest.raises(TooLong):
            encode(["good"] * 3, 2, toy_vocab, toy_table)


class TestKnn:
    def test_toy_neighbours(self, toy_vocab, toy_table):
        assert knn("good", 2, "euclidean", toy_vocab, toy_table) == ["good", "great"]

    def test_k1_is_self(self, toy_vocab, toy_table):
        for word in ("good", "bad", "<PAD>"):
            assert knn(word, 1, "euclidean", toy_vocab, toy_table) == [word]
            assert knn(word, 1, "cosine", toy_vocab, toy_table) == [word]

    def test_2d_euclidean(self):
        vocab = Vocabulary(words=("<PAD>", "a", "b", "c"))
        table = EmbeddingTable(
            dim=2, vectors=np.array([[0.0, 0.0], [1.0, 0.0], [0.9, 0.1], [-1.0, 0.0]])
        )
        assert knn("a", 2, "euclidean", vocab, table) == ["a", "b"]

    def test_brute_force_agreement(self):
        rng = np.random.default_rng(2)
        vocab = Vocabulary(words=("<PAD>",) + tuple(f"w{i}" for i in range(9)))
        table = EmbeddingTable(dim=3, vectors=rng.normal(size=(10, 3)))
        for word in vocab.words:
            q = table.vectors[vocab.index(word)]
            dists = sorted(
                (np.linalg.norm(table.vectors[i] - q), i) for i in range(10)
            )
            want = [vocab.words[i] for _, i in dists[:4]]
            got = knn(word, 4, "euclidean", vocab, table)
            assert set(got) == set(want)
            assert got[0] == word

    def test_result_size_and_membership(self, toy_vocab, toy_table):
        for k in (1, 3, 7, len(toy_vocab)):
            for metric in ("euclidean", "cosine"):
                res = knn("fine", k, metric, toy_vocab, toy_table)
                assert len(res) == k and "fine" in res

    def test_cosine_pad_isolated(self, toy_vocab, toy_table):
        # the zero vector sits at distance 2 from everything, so its only
        # close neighbour is itself
        res = knn("<PAD>", 2, "cosine", toy_vocab, toy_table)
        assert res[0] == "<PAD>"


class TestWordBox:
    def test_eps_ball(self, toy_vocab, toy_table):
        box = word_box("good", EpsBall(eps=0.5), toy_vocab, toy_table)
        assert box.lo.tolist() == [0.5] and box.hi.tolist() == [1.5]

    def test_knn_box(self, toy_vocab, toy_table):
        box = word_box("good", KnnBox(k=2), toy_vocab, toy_table)
        assert box.lo.tolist() == [1.0] and box.hi.tolist() == [1.2]

    def test_knn_box_k1_degenerate(self, toy_vocab, toy_table):
        box = word_box("bad", KnnBox(k=1), toy_vocab, toy_table)
        assert box.lo.tolist() == box.hi.tolist() == [-1.0]

    def test_contains_word_vector(self, toy_vocab, toy_table):
        for word in toy_vocab.words:
            x = toy_table.vectors[toy_vocab.index(word)]
            for spec in (EpsBall(eps=0.1), KnnBox(k=3), KnnBox(k=2, metric="cosine")):
                assert word_box(word, spec, toy_vocab, toy_table).contains(x)

    def test_eps_monotone(self, toy_vocab, toy_table):
        small = word_box("good", EpsBall(eps=0.2), toy_vocab, toy_table)
        large = word_box("good", EpsBall(eps=0.7), toy_vocab, toy_table)
        assert np.all(large.lo <= small.lo) and np.all(small.hi <= large.hi)

    def test_knn_monotone(self, toy_vocab, toy_table):
        for word in ("good", "poor"):
            prev = word_box(word, KnnBox(k=1), toy_vocab, toy_table)
            for k in range(2, len(toy_vocab) + 1):
                cur = word_box(word, KnnBox(k=k), toy_vocab, toy_table)
                assert np.all(cur.lo <= prev.lo) and np.all(prev.hi <= cur.hi)
                prev = cur

    def test_explicit_word_list_box(self, toy_vocab, toy_table):
        box = bounding_box_of_words(["good", "bad"], toy_vocab, toy_table)
        assert box.lo.tolist() == [-1.0] and box.hi.tolist() == [1.0]


class TestBuildPerturbation:
    def test_all_fixed_is_degenerate(self, toy_vocab, toy_table):
        t = encode(["good", "bad"], 2, toy_vocab, toy_table)
        box = build_perturbation(t, {0, 1}, EpsBall(eps=9.9), toy_vocab, toy_table)
        assert box.is_degenerate()
        assert np.array_equal(box.lo, t.point)

    def test_sum_fixture_example(self, toy_vocab, toy_table):
        t = encode(["good", "good"], 2, toy_vocab, toy_table)
        box = build_perturbation(t, {0}, EpsBall(eps=1.5), toy_vocab, toy_table)
        assert box.lo.tolist() == [1.0, -0.5] and box.hi.tolist() == [1.0, 2.5]

    def test_empty_fixed_boxes_everything(self, toy_vocab, toy_table):
        t = encode(["good", "bad"], 2, toy_vocab, toy_table)
        box = build_perturbation(t, set(), EpsBall(eps=0.25), toy_vocab, toy_table)
        assert box.lo.tolist() == [0.75, -1.25] and box.hi.tolist() == [1.25, -0.75]

    def test_out_of_range_index(self, toy_vocab, toy_table):
        t = encode(["good"], 2, toy_vocab, toy_table)
        with pytest.raises(InvalidIndex):
            build_perturbation(t, {5}, EpsBall(eps=0.1), toy_vocab, toy_table)

    def test_nesting_in_fixed_set(self, toy_vocab, toy_table):
        t = encode(["good", "bad", "okay"], 3, toy_vocab, toy_table)
        spec = KnnBox(k=3)
        inner = build_perturbation(t, {0, 2}, spec, toy_vocab, toy_table)
        outer = build_perturbation(t, {0}, spec, toy_vocab, toy_table)
        assert np.all(outer.lo <= inner.lo) and np.all(inner.hi <= outer.hi)

    def test_always_contains_input_point(self, toy_vocab, toy_table):
        rng = np.random.default_rng(4)
        words = [w for w in toy_vocab.words if w != "<PAD>"]
        for _ in range(50):
            picks = [words[i] for i in rng.integers(0, len(words), size=3)]
            t = encode(picks, 4, toy_vocab, toy_table)
            fixed = {int(i) for i in rng.integers(0, 4, size=rng.integers(0, 4))}
            spec = (EpsBall(eps=float(rng.uniform(0.01, 2.0)))
                    if rng.random() < 0.5 else KnnBox(k=int(rng.integers(1, 9))))
            box = build_perturbation(t, fixed, spec, toy_vocab, toy_table)
            assert box.contains(t.point)


class TestEmbeddingFiles:
    def test_round_trip(self, toy_vocab, toy_table):
        blob = save_embedding(toy_vocab, toy_table)
        vocab, table = load_embedding(blob)
        assert vocab.words == toy_vocab.words
        assert np.array_equal(table.vectors, toy_table.vectors)
        assert save_embedding(vocab, table) == blob

    def test_validation(self):
        with pytest.raises(InvalidInput):
            Vocabulary(words=("a", "b"))  # PAD missing
        with pytest.raises(InvalidInput):
            Vocabulary(words=("<PAD>", "a", "a"))
        with pytest.raises(InvalidInput):
            EmbeddingTable(dim=2, vectors=np.array([[1.0], [2.0]]))
        with pytest.raises(InvalidInput):
            Box(lo=np.array([1.0]), hi=np.array([0.0]))
