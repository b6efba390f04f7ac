"""Constraint construction, approximate/exact decoding, the reference
solution and its l1 bound, and the exhaustive baseline."""

import numpy as np
import pytest

from ncapprox.codec import DecoderState, Packet, draw_coeffs, encode
from ncapprox.decoder import (
    EnumerationBudgetError,
    InsufficientModelError,
    RetryPolicy,
    SimilarityModel,
    build_constraints,
    decode,
    error_bound_l1,
    mle_decode,
    reference_solution,
    similarity_score,
)
from ncapprox.gf import field
from ncapprox.linalg import GFMatrix, rank


def state_from_rows(rows, x, fld, payload=None):
    rows = np.asarray(rows, dtype=np.int64)
    state = DecoderState(rows.shape[1], fld)
    for row in rows:
        pl = payload if payload is not None else encode(x, row, fld)
        state.accumulate(Packet(row, np.atleast_1d(pl), field=fld))
    return state


def collect(rng, x, k, fld):
    n = x.shape[0]
    state = DecoderState(n, fld)
    while state.rank < k:
        c = draw_coeffs(rng, n, fld)
        state.accumulate(Packet(c, np.atleast_1d(encode(x, c, fld)), field=fld))
    return state


class TestSimilarityModel:
    def test_sorted_by_distance(self):
        m = SimilarityModel.from_pairs([(1, 2, 5.0), (0, 1, 1.0)], 3)
        assert m.pairs[0][:2] == (0, 1)

    def test_validation(self):
        with pytest.raises(ValueError):
            SimilarityModel.from_pairs([(2, 1, 1.0)], 3)  # needs i < j
        with pytest.raises(ValueError):
            SimilarityModel.from_pairs([(0, 3, 1.0)], 3)  # index out of range
        with pytest.raises(ValueError):
            SimilarityModel.from_pairs([(0, 1, 1.0), (0, 1, 2.0)], 3)
        with pytest.raises(ValueError):
            SimilarityModel.from_pairs([(0, 1, -1.0)], 3)


class TestBuildConstraints:
    def test_single_best_pair(self):
        f = field(8)
        m = SimilarityModel.from_pairs([(0, 1, 0.1), (0, 2, 5.0)], 3)
        cs = build_constraints(m, 2, 3, f)
        assert cs.rows.tolist() == [[1, 1, 0]]
        assert cs.rhs.tolist() == [0]
        assert cs.chosen_pairs == ((0, 1),)

    def test_lower_similarity_pair(self):
        f = field(8)
        m = SimilarityModel.from_pairs([(0, 2, 0.1), (0, 1, 5.0)], 3)
        cs = build_constraints(m, 2, 3, f)
        assert cs.rows.tolist() == [[1, 0, 1]]

    def test_no_constraints_needed(self):
        f = field(8)
        m = SimilarityModel.from_pairs([], 4)
        cs = build_constraints(m, 4, 4, f)
        assert cs.rows.shape == (0, 4)

    def test_dependent_pair_skipped(self):
        f = field(8)
        m = SimilarityModel.from_pairs(
            [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0), (2, 3, 4.0)], 4
        )
        cs = build_constraints(m, 1, 4, f)
        # (0,2) closes the cycle over (0,1) + (1,2); skipped
        assert cs.chosen_pairs == ((0, 1), (1, 2), (2, 3))

    def test_insufficient_pairs(self):
        f = field(8)
        m = SimilarityModel.from_pairs(
            [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)], 3
        )
        with pytest.raises(InsufficientModelError):
            build_constraints(m, 0, 3, f)  # cycle: only 2 of 3 rows usable


class TestDecode:
    def test_full_rank_exact(self):
        f = field(8)
        rng = np.random.default_rng(0)
        x = rng.integers(0, 256, 5)
        state = collect(rng, x, 5, f)
        res = decode(state)
        assert res.mode == "exact" and res.retries == 0
        assert res.s_hat.ravel().tolist() == x.tolist()

    def test_similar_pair_forced_equal_and_consistent(self):
        f = field(8)
        rng = np.random.default_rng(1)
        s = np.array([100, 100, 37])
        x = f.embed_array(s)
        model = SimilarityModel.from_pairs([(0, 1, 0.0)], 3)
        for _ in range(30):
            state = collect(rng, x, 2, f)
            res = decode(state, model, RetryPolicy(max_retries=1))
            if res.mode == "failed":
                continue
            s_hat = res.s_hat.ravel()
            assert s_hat[0] == s_hat[1]
            # received equations satisfied after re-embedding
            x_hat = f.embed_array(res.s_hat).ravel()
            C = state.coeff_matrix()
            Y = state.payload_matrix().ravel()
            for row, y in zip(C, Y):
                assert encode(x_hat, row, f) == y
            # equal sources make the appended difference zero: exact recovery
            assert s_hat.tolist() == s.tolist()

    def test_vector_payload_decoding(self):
        f = field(10, 2)
        rng = np.random.default_rng(2)
        s = np.tile(np.array([[512], [512], [100]]), (1, 7))
        x = f.embed_array(s)
        state = collect(rng, x, 2, f)
        model = SimilarityModel.from_pairs([(0, 1, 0.0), (0, 2, 9.0)], 3)
        res = decode(state, model)
        assert res.mode == "approximate"
        assert res.s_hat.shape == (3, 7)

    def test_forced_failure_retries_hit_policy_limit(self):
        f = field(8)
        x = np.array([1, 2, 3])
        rows = [[1, 1, 0], [0, 1, 1]]  # span contains every pair row
        state = state_from_rows(rows, x, f)
        model = SimilarityModel.from_pairs(
            [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)], 3
        )
        res = decode(state, model, RetryPolicy(max_retries=3))
        assert res.mode == "failed"
        assert res.retries == 3
        assert res.s_hat is None

    def test_failure_with_fill(self):
        f = field(8)
        x = np.array([1, 2, 3])
        state = state_from_rows([[1, 1, 0], [0, 1, 1]], x, f)
        model = SimilarityModel.from_pairs([(0, 1, 1.0)], 3)
        res = decode(state, model, RetryPolicy(fill_value=127))
        assert res.mode == "failed"
        assert np.all(res.s_hat == 127)

    def test_retry_replaces_offending_pair(self):
        f = field(8)
        x = np.array([1, 2, 3, 4])
        # received rows make (0,1) useless but not (2,3)
        state = state_from_rows([[1, 1, 0, 0], [0, 0, 2, 1], [5, 0, 0, 3]], x, f)
        model = SimilarityModel.from_pairs([(0, 1, 1.0), (2, 3, 2.0)], 4)
        res = decode(state, model)
        assert res.mode == "approximate"
        assert res.retries == 1
        assert res.constraints.chosen_pairs == ((2, 3),)

    def test_needs_model_when_rank_short(self):
        f = field(8)
        state = state_from_rows([[1, 1, 0]], np.array([1, 2, 3]), f)
        with pytest.raises(ValueError):
            decode(state)

    def test_result_csv_row(self):
        f = field(8)
        rng = np.random.default_rng(5)
        x = rng.integers(0, 256, 3)
        res = decode(collect(rng, x, 3, f))
        row = res.csv_row(7, mse=0.0, bound=1.5)
        assert row == "7,exact,0,0.0,1.5"


class TestConsistencyInvariant:
    def test_every_nonfailed_result_satisfies_received_equations(self):
        rng = np.random.default_rng(6)
        for bits in (3, 5, 8):
            f = field(bits)
            for _ in range(40):
                n = int(rng.integers(3, 6))
                k = int(rng.integers(1, n))
                x = rng.integers(0, f.order, n)
                state = collect(rng, x, k, f)
                pairs = [
                    (i, j, float(rng.uniform(0, 9)))
                    for i in range(n) for j in range(i + 1, n)
                ]
                model = SimilarityModel.from_pairs(pairs, n)
                res = decode(state, model)
                if res.mode == "failed":
                    continue
                x_hat = f.embed_array(res.s_hat).ravel()
                for row, y in zip(state.coeff_matrix(), state.payload_matrix()):
                    assert encode(x_hat, row, f) == int(y[0])
                for i, j in res.constraints.chosen_pairs:
                    assert x_hat[i] == x_hat[j]


class TestReferenceSolution:
    def test_pair_difference_definition(self):
        f = field(8)
        D = GFMatrix([[1, 1, 0]], f)
        x = np.array([40, 9, 77])
        assert D.mul_vec(x).tolist() == [40 ^ 9]

    def test_reproduces_truth(self):
        f = field(5)
        rng = np.random.default_rng(7)
        for _ in range(50):
            x = rng.integers(0, 32, 4)
            C = GFMatrix(rng.integers(0, 32, (2, 4)), f)
            D = GFMatrix([[1, 1, 0, 0], [0, 0, 1, 1]], f)
            stacked = GFMatrix(np.concatenate([C.data, D.data]), f)
            if rank(stacked) < 4:
                continue
            assert reference_solution(x, C, D).tolist() == x.tolist()


class TestErrorBound:
    def test_zero_when_pairs_equal(self):
        f = field(8)
        rng = np.random.default_rng(8)
        x = np.array([50, 50, 7])
        while True:
            C = GFMatrix(rng.integers(0, 256, (2, 3)), f)
            D = GFMatrix([[1, 1, 0]], f)
            stacked = GFMatrix(np.concatenate([C.data, D.data]), f)
            if rank(stacked) == 3:
                break
        assert error_bound_l1(C, D, x) == 0

    def test_bound_dominates_error_gf8(self):
        f = field(3)
        rng = np.random.default_rng(9)
        D = GFMatrix([[1, 1, 0]], f)
        checked = 0
        for _ in range(40):
            C = GFMatrix(rng.integers(0, 8, (2, 3)), f)
            stacked = GFMatrix(np.concatenate([C.data, D.data]), f)
            if rank(stacked) < 3:
                continue
            for s0 in range(8):
                for s1 in range(8):
                    for s2 in range(8):
                        x = np.array([s0, s1, s2])
                        y = C.mul_vec(x)
                        from ncapprox.linalg import solve

                        x_hat = solve(stacked, np.concatenate([y, [0]]))
                        err = int(np.abs(x - x_hat).sum())
                        assert err <= error_bound_l1(C, D, x)
            checked += 1
            if checked >= 3:
                break
        assert checked >= 3

    def test_requires_no_discarded_bits(self):
        f = field(8, 2)
        C = GFMatrix([[1, 0, 0], [0, 1, 0]], f)
        D = GFMatrix([[1, 1, 0]], f)
        with pytest.raises(ValueError):
            error_bound_l1(C, D, np.array([1, 2, 3]))


class TestSimilarTrend:
    def test_constraining_similar_pair_beats_dissimilar(self):
        # sources: s2 a tight copy of s1, s3 a loose one; constraining the
        # tight pair should reconstruct better on average
        f = field(8)
        trials = 1500
        near = SimilarityModel.from_pairs([(0, 1, 0.0)], 3)
        far = SimilarityModel.from_pairs([(0, 2, 0.0)], 3)
        errs = np.zeros(2)
        done = 0
        for t in range(trials):
            rng = np.random.default_rng([101, t])
            s = np.array([128.0, 128.0, 128.0])
            s[1] += rng.normal(0, 0.3)
            s[2] += rng.normal(0, 8.0)
            s = np.clip(np.rint(s), 0, 255).astype(np.int64)
            x = f.embed_array(s)
            state = collect(rng, x, 2, f)
            res_a = decode(state, near, RetryPolicy(max_retries=1))
            res_b = decode(state, far, RetryPolicy(max_retries=1))
            if res_a.mode == "failed" or res_b.mode == "failed":
                continue
            errs[0] += np.abs(s - res_a.s_hat.ravel()).sum()
            errs[1] += np.abs(s - res_b.s_hat.ravel()).sum()
            done += 1
        assert done > trials * 0.9
        assert errs[0] < errs[1]


def brute_force_mle(state, model, fld):
    """Independent oracle: score every source vector consistent with the
    received equations; smallest score wins, ties by lifted lexicographic."""
    n = state.n_sources
    q = fld.order
    C = state.coeff_matrix()
    y = state.payload_matrix()[:, 0]
    grids = np.indices((q,) * n).reshape(n, -1).T
    ok = np.ones(len(grids), dtype=bool)
    for row, rhs in zip(C, y):
        acc = np.zeros(len(grids), dtype=np.int64)
        for col in range(n):
            acc ^= fld.mul_arrays(np.full(len(grids), int(row[col])), grids[:, col])
        ok &= acc == rhs
    cands = grids[ok]
    lifted = fld.lift_array(cands)
    scores = np.array([similarity_score(v, model) for v in lifted])
    order = np.lexsort(tuple(lifted[:, c] for c in reversed(range(n))) + (scores,))
    return cands[order[0]]


class TestMleDecode:
    def test_full_rank_equals_exact(self):
        f = field(4)
        rng = np.random.default_rng(11)
        x = rng.integers(0, 16, 3)
        state = collect(rng, x, 3, f)
        model = SimilarityModel.from_pairs([(0, 1, 1.0)], 3)
        res = mle_decode(state, model)
        assert res.mode == "exact"
        assert np.array_equal(res.s_hat, decode(state).s_hat)

    def test_two_sources_one_equation_matches_brute_force(self):
        f = field(4)
        model = SimilarityModel.from_pairs([(0, 1, 0.0)], 2)
        for x0, x1 in [(3, 5), (9, 9), (0, 15)]:
            x = np.array([x0, x1])
            state = state_from_rows([[1, 1]], x, f)
            res = mle_decode(state, model)
            expect = brute_force_mle(state, model, f)
            assert res.s_hat.ravel().tolist() == f.lift_array(expect).tolist()
            got = res.s_hat.ravel()
            assert got[0] ^ got[1] == x0 ^ x1  # consistency with y

    def test_matches_global_exhaustive_search(self):
        rng = np.random.default_rng(12)
        for bits, n in [(2, 4), (3, 3), (4, 3)]:
            f = field(bits)
            assert f.order ** n <= 1 << 16
            for _ in range(5):
                x = rng.integers(0, f.order, n)
                k = int(rng.integers(1, n))
                state = collect(rng, x, k, f)
                pairs = [
                    (i, j, float(rng.uniform(0, 4)))
                    for i in range(n) for j in range(i + 1, n)
                ]
                model = SimilarityModel.from_pairs(pairs, n)
                res = mle_decode(state, model)
                expect = brute_force_mle(state, model, f)
                assert res.s_hat.ravel().tolist() == f.lift_array(expect).tolist()

    def test_minimizer_dominates_feasible_approximate(self):
        f = field(5)
        rng = np.random.default_rng(13)
        model_pairs = [(0, 1, 0.5), (1, 2, 2.0), (0, 2, 4.0)]
        model = SimilarityModel.from_pairs(model_pairs, 3)
        for _ in range(30):
            x = rng.integers(0, 32, 3)
            state = collect(rng, x, 2, f)
            res_a = decode(state, model)
            if res_a.mode == "failed":
                continue
            res_m = mle_decode(state, model)
            score_m = similarity_score(res_m.s_hat, model)
            score_a = similarity_score(res_a.s_hat, model)
            assert score_m <= score_a + 1e-9

    def test_budget_refusal(self):
        f = field(8)
        state = state_from_rows([[1, 1, 0]], np.array([1, 2, 3]), f)
        model = SimilarityModel.from_pairs([(0, 1, 0.0)], 3)
        with pytest.raises(EnumerationBudgetError):
            mle_decode(state, model, budget=100)

    def test_vector_payload_positionwise(self):
        f = field(3)
        rng = np.random.default_rng(14)
        x = rng.integers(0, 8, (3, 4))
        state = DecoderState(3, f)
        while state.rank < 2:
            c = draw_coeffs(rng, 3, f)
            state.accumulate(Packet(c, encode(x, c, f), field=f))
        model = SimilarityModel.from_pairs([(0, 1, 0.0), (1, 2, 3.0)], 3)
        res = mle_decode(state, model)
        assert res.s_hat.shape == (3, 4)
        # every position is itself the brute-force winner
        for t in range(4):
            sub = DecoderState(3, f)
            for row, pl in zip(state.coeff_matrix(), state.payload_matrix()):
                sub.accumulate(Packet(row, np.array([pl[t]]), field=f))
            expect = brute_force_mle(sub, model, f)
            assert res.s_hat[:, t].tolist() == f.lift_array(expect).tolist()
