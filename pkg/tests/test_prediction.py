"""Prediction schemes, refinement validation, and ratio classification."""

import numpy as np
import pytest

from refine_lab.dists import ParameterError
from refine_lab.prediction import (
    GenerationError,
    PairClass,
    classify_pair,
    generate_flip_spread_refinement,
    is_flip_spread,
    nonflipspread_structure,
    scheme_from_json,
    sf_sj_structure,
    structure_from_json,
    structure_from_tables,
    validate_refinement,
)


class TestSchemeLookup:
    def test_two_city_example(self):
        rs = sf_sj_structure()
        assert rs.coarse.relevance_of("SF", 0) == 0.75
        assert rs.coarse.relevance_of("SJ", 1) == 0.75
        assert rs.fine.relevance_of("SF", 0) == 1.0
        assert rs.fine.relevance_of("SF", 1) == 0.5
        assert rs.fine.relevance_of("SJ", 0) == 0.5
        assert rs.fine.relevance_of("SJ", 1) == 1.0

    def test_unknown_pair(self):
        rs = sf_sj_structure()
        with pytest.raises(KeyError):
            rs.fine.relevance_of("LA", 0)

    def test_queries_and_advertisers(self):
        rs = sf_sj_structure()
        assert rs.fine.queries() == ["SF", "SJ"]
        assert rs.fine.advertisers_on("SF") == [0, 1]


class TestValidation:
    def test_two_city_valid(self):
        assert validate_refinement(sf_sj_structure())

    def test_chain_vs_local_valid(self):
        eps = 0.01
        assert validate_refinement(nonflipspread_structure(eps))

    def test_broken_mean_invalid(self):
        rs = nonflipspread_structure(0.01, delta=0.0)
        res = validate_refinement(rs)
        assert not res.valid
        assert "expectation mismatch" in res.reason

    def test_identity_valid(self):
        rs = structure_from_tables([0.3, 0.9], {"q": [0.3, 0.9]}, {"q": 1.0})
        assert validate_refinement(rs)

    def test_bad_probability_sum(self):
        rs = structure_from_tables(
            [0.5], {"a": [0.4], "b": [0.6]}, {"a": 0.6, "b": 0.6}
        )
        res = validate_refinement(rs)
        assert not res.valid
        assert "sum" in res.reason


class TestClassifyPair:
    def test_spread_example(self):
        assert classify_pair(1.0, 0.5, 0.75, 0.75) is PairClass.SPREAD

    def test_neither_example(self):
        assert classify_pair(0.8, 0.4, 0.8, 0.1) is PairClass.NEITHER

    def test_flipped_example(self):
        assert classify_pair(0.5, 1.0, 2.0, 1.0) is PairClass.FLIPPED

    def test_boundary_ratio_is_spread(self):
        assert classify_pair(0.6, 0.6, 0.9, 0.9) is PairClass.SPREAD

    def test_swap_symmetry(self):
        rng = np.random.default_rng(5)
        for _ in range(300):
            a, b, c, d = rng.uniform(0.05, 1.0, 4)
            assert classify_pair(a, b, c, d) is classify_pair(b, a, d, c)

    def test_rescaling_invariance(self):
        rng = np.random.default_rng(6)
        for _ in range(300):
            a, b, c, d = rng.uniform(0.05, 1.0, 4)
            s, t = rng.uniform(0.1, 10.0, 2)
            assert classify_pair(a, b, c, d) is classify_pair(
                s * a, s * b, t * c, t * d
            )

    def test_equal_coarse_never_neither(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            a, b, c = rng.uniform(0.05, 1.0, 3)
            assert classify_pair(a, b, c, c) is not PairClass.NEITHER

    def test_zero_denominator(self):
        with pytest.raises(ParameterError):
            classify_pair(1.0, 0.0, 0.5, 0.5)
        assert classify_pair(1.0, 0.0, 0.5, 0.5, allow_zero=True) is PairClass.SPREAD


class TestFlipSpread:
    def test_two_city_is_flip_spread(self):
        assert is_flip_spread(sf_sj_structure())

    def test_chain_vs_local_is_not(self):
        res = is_flip_spread(nonflipspread_structure(0.01))
        assert not res.holds
        query, pair = res.witness
        assert query == "SF"
        assert pair == (0, 1)

    def test_equal_coarse_any_refinement(self):
        rs = structure_from_tables(
            [0.6, 0.6],
            {"a": [0.9, 0.2], "b": [0.3, 1.0]},
            {"a": 0.5, "b": 0.5},
        )
        assert is_flip_spread(rs)


class TestGenerator:
    def test_round_trip_many_seeds(self):
        rng = np.random.default_rng(0)
        for seed in range(1000):
            n = int(rng.integers(1, 6))
            coarse = rng.uniform(0.01, 1.0, n)
            rs = generate_flip_spread_refinement(coarse, seed, int(rng.integers(1, 5)))
            assert validate_refinement(rs), validate_refinement(rs).reason
            assert is_flip_spread(rs)

    def test_deterministic_per_seed(self):
        a = generate_flip_spread_refinement([0.8, 0.1], 42, 3)
        b = generate_flip_spread_refinement([0.8, 0.1], 42, 3)
        assert a.to_json() == b.to_json()

    def test_identity_case(self):
        rs = generate_flip_spread_refinement([0.75, 0.75], 1, 1)
        assert validate_refinement(rs)
        assert is_flip_spread(rs)
        assert rs.fine.relevance_of("q0", 0) == 0.75

    def test_skewed_coarse_keeps_ratio_or_flips(self):
        rs = generate_flip_spread_refinement([0.8, 0.1], 9, 4)
        for q in rs.fine.queries():
            a = rs.fine.relevance_of(q, 0)
            b = rs.fine.relevance_of(q, 1)
            # ratio at least the coarse 8, or flipped to <= 1
            assert a >= 8.0 * b - 1e-12 or a <= b + 1e-12

    def test_rejects_bad_inputs(self):
        with pytest.raises(ParameterError):
            generate_flip_spread_refinement([], 0, 2)
        with pytest.raises(ParameterError):
            generate_flip_spread_refinement([0.0, 0.5], 0, 2)
        with pytest.raises(ParameterError):
            generate_flip_spread_refinement([0.5], 0, 0)


class TestSerialization:
    def test_scheme_round_trip(self):
        rs = sf_sj_structure()
        clone = scheme_from_json(rs.fine.to_json())
        assert clone.parts == rs.fine.parts
        assert clone.membership == rs.fine.membership

    def test_structure_round_trip(self):
        rs = nonflipspread_structure(0.02)
        clone = structure_from_json(rs.to_json())
        assert clone.to_json() == rs.to_json()
        assert validate_refinement(clone)
