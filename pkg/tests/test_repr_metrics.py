"""Alignment and uniformity metrics against naive reference loops."""

import math

import numpy as np
import pytest

from polycl.encoder import EncoderConfig, PolymerEncoder
from polycl.errors import EmptySetError, TooFewPointsError, ZeroVectorError
from polycl.repr_metrics import (
    EvalPairSet,
    alignment_loss,
    build_eval_pairs,
    cosine_similarity,
    evaluate_representation,
    uniformity_loss,
)

from oracles import alignment_double_loop, uniformity_double_loop


def random_rows(rng, n, dim):
    x = rng.normal(size=(n, dim))
    return x + np.sign(x) * 0.1


class TestAlignment:
    def test_matches_double_loop(self):
        rng = np.random.default_rng(0)
        for _ in range(40):
            n = int(rng.integers(1, 21))
            dim = int(rng.integers(2, 9))
            pairs = [
                (random_rows(rng, 1, dim)[0], random_rows(rng, 1, dim)[0])
                for _ in range(n)
            ]
            assert abs(alignment_loss(pairs) - alignment_double_loop(pairs)) <= 1e-12

    def test_identical_pairs_exactly_zero(self):
        rng = np.random.default_rng(1)
        pairs = [(row, row.copy()) for row in random_rows(rng, 6, 4)]
        assert alignment_loss(pairs) == 0.0

    def test_antipodal_pair_is_four(self):
        # normalized antipodal vectors are distance 2 apart, squared 4
        v = np.array([3.0, 4.0])
        assert alignment_loss([(v, -v)]) == pytest.approx(4.0, abs=1e-15)

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        pairs = [
            (random_rows(rng, 1, 5)[0], random_rows(rng, 1, 5)[0]) for _ in range(8)
        ]
        scaled = [(7.0 * a, 0.2 * b) for a, b in pairs]
        assert alignment_loss(pairs) == pytest.approx(alignment_loss(scaled), abs=1e-12)

    def test_rejects_degenerate_inputs(self):
        with pytest.raises(EmptySetError):
            alignment_loss([])
        with pytest.raises(ZeroVectorError):
            alignment_loss([(np.zeros(3), np.ones(3))])


class TestUniformity:
    def test_matches_double_loop(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            n = int(rng.integers(2, 21))
            dim = int(rng.integers(2, 9))
            x = random_rows(rng, n, dim)
            assert abs(uniformity_loss(x) - uniformity_double_loop(x)) <= 1e-12

    def test_antipodal_pair_exact(self):
        # the single pair sits at squared distance 4: log exp(-8) = -8
        x = np.array([[1.0, 0.0], [-1.0, 0.0]])
        assert uniformity_loss(x) == -8.0

    def test_coincident_rows_are_zero(self):
        x = np.tile([0.6, 0.8], (5, 1))
        assert uniformity_loss(x) == 0.0

    def test_three_point_hand_case(self):
        # equilateral arrangement e1, e2, e3: all squared distances are 2,
        # so the value is log exp(-4) = -4 plus nothing; a mixed case below
        # pins the mean over unequal distances
        x = np.eye(3)
        assert uniformity_loss(x) == pytest.approx(-4.0, abs=1e-15)
        y = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
        expected = math.log((math.exp(-8.0) + 2 * math.exp(-4.0)) / 3.0)
        assert uniformity_loss(y) == pytest.approx(expected, abs=1e-15)
        assert round(expected, 15) == -4.396348967229015

    def test_rotation_invariance(self):
        rng = np.random.default_rng(4)
        x = random_rows(rng, 10, 4)
        q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        assert uniformity_loss(x @ q.T) == pytest.approx(uniformity_loss(x), abs=1e-12)

    def test_always_nonpositive(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            assert uniformity_loss(random_rows(rng, 8, 3)) <= 0.0

    def test_rejects_degenerate_inputs(self):
        with pytest.raises(TooFewPointsError):
            uniformity_loss(np.ones((1, 3)))
        with pytest.raises(ValueError):
            uniformity_loss(np.ones(3))
        with pytest.raises(ZeroVectorError):
            uniformity_loss(np.array([[1.0, 0.0], [0.0, 0.0]]))


class TestCosine:
    def test_identical_exactly_one(self):
        v = np.array([0.1, 0.2, 0.3])
        assert cosine_similarity(v, v.copy()) == 1.0

    def test_orthogonal_and_opposite(self):
        assert cosine_similarity([1.0, 0.0], [0.0, 2.0]) == 0.0
        assert cosine_similarity([1.0, 0.0], [-3.0, 0.0]) == pytest.approx(-1.0)

    def test_errors(self):
        with pytest.raises(ValueError):
            cosine_similarity([1.0, 0.0], [1.0, 0.0, 0.0])
        with pytest.raises(ZeroVectorError):
            cosine_similarity([0.0, 0.0], [1.0, 0.0])


class TestEvalPairSet:
    def test_dimension_checks(self):
        with pytest.raises(ValueError):
            EvalPairSet([(np.ones(3), np.ones(4))], np.ones((1, 3)))
        with pytest.raises(ValueError):
            EvalPairSet([(np.ones(3), np.ones(3))], np.ones((1, 4)))
        with pytest.raises(ValueError):
            EvalPairSet([(np.full(3, np.nan), np.ones(3))], np.ones((1, 3)))


@pytest.fixture(scope="module")
def encoder(tiny_vocab):
    enc = PolymerEncoder(
        EncoderConfig(vocab_size=len(tiny_vocab), d_model=16, n_layers=1,
                      n_heads=2, d_feedforward=32, max_len=64, projector_out=8)
    )
    enc.init_parameters(5)
    return enc


class TestEvaluationProtocol:
    def test_deterministic(self, tiny_corpus, tiny_vocab, encoder):
        sample = tiny_corpus[:10]
        a = evaluate_representation(sample, encoder, tiny_vocab, seed=9)
        b = evaluate_representation(sample, encoder, tiny_vocab, seed=9)
        assert a == b
        c = evaluate_representation(sample, encoder, tiny_vocab, seed=10)
        assert a != c

    def test_pairs_align_with_corpus(self, tiny_corpus, tiny_vocab, encoder):
        sample = tiny_corpus[:6]
        ps = build_eval_pairs(sample, encoder, tiny_vocab, seed=2)
        assert len(ps.pairs) == len(sample)
        assert ps.all_embeddings.shape == (len(sample), 16)
        for (a, _), row in zip(ps.pairs, ps.all_embeddings):
            assert np.array_equal(a, row)

    def test_metrics_in_plausible_ranges(self, tiny_corpus, tiny_vocab, encoder):
        align, uniform = evaluate_representation(
            tiny_corpus[:12], encoder, tiny_vocab, seed=3
        )
        assert 0.0 <= align <= 4.0
        assert uniform <= 0.0

    def test_empty_corpus_rejected(self, tiny_vocab, encoder):
        with pytest.raises(EmptySetError):
            build_eval_pairs([], encoder, tiny_vocab, seed=0)

    def test_single_polymer_rejected_for_uniformity(
        self, tiny_corpus, tiny_vocab, encoder
    ):
        with pytest.raises(TooFewPointsError):
            evaluate_representation(tiny_corpus[:1], encoder, tiny_vocab, seed=0)
