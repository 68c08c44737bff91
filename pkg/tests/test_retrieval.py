import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from themeweaver.corpus import ContextEntry, ReadingMaterial
from themeweaver.errors import (
    DegenerateQuery,
    DimensionMismatch,
    EmptyMaterialSet,
    NoCandidates,
    ZeroVector,
)
from themeweaver.retrieval import (
    build_session_query,
    cosine,
    top_k_contexts,
    top_k_materials,
)


def unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def material(i, vec):
    return ReadingMaterial(id=f"m{i:04d}", title=f"t{i}", body="b", source_label="",
                           embedding=unit(vec))


def entry(i, vec, subject="science"):
    return ContextEntry(id=f"c{i:04d}", subject=subject, title=f"c{i}", background="bg",
                        embedding=unit(vec))


def brute_force(query, records, k, exclude=frozenset()):
    scored = [
        (float(np.dot(query, r.embedding)), r.id)
        for r in records if r.id not in exclude
    ]
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [rid for _, rid in scored[:k]]


class TestCosine:
    def test_self_similarity(self):
        v = np.array([3.0, -1.0, 2.0])
        assert cosine(v, v) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.0)

    def test_hand_computed(self):
        # 32 / (sqrt(14) * sqrt(77))
        assert cosine(np.array([1.0, 2.0, 3.0]), np.array([4.0, 5.0, 6.0])) == \
            pytest.approx(0.974631846, abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            cosine(np.ones(3), np.ones(4))

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            cosine(np.zeros(3), np.ones(3))


class TestSessionQuery:
    def test_single_material_identity(self):
        m = material(0, [1.0, 2.0, 2.0])
        q = build_session_query([m])
        np.testing.assert_allclose(q.vector, m.embedding)
        assert q.provenance == "mean_of_materials"

    def test_identical_embeddings_idempotent(self):
        m1, m2 = material(0, [1.0, 1.0]), material(1, [2.0, 2.0])
        q = build_session_query([m1, m2])
        np.testing.assert_allclose(q.vector, m1.embedding)

    def test_mean_matches_elementwise_recompute(self):
        rng = np.random.default_rng(3)
        mats = [material(i, rng.standard_normal(8)) for i in range(3)]
        q = build_session_query(mats)
        stacked = np.stack([m.embedding for m in mats])
        expected = stacked.mean(axis=0)
        expected = expected / np.linalg.norm(expected)
        np.testing.assert_allclose(q.vector, expected)

    def test_empty_set(self):
        with pytest.raises(EmptyMaterialSet):
            build_session_query([])

    def test_antipodal_degenerate(self):
        m1, m2 = material(0, [1.0, 0.0]), material(1, [-1.0, 0.0])
        with pytest.raises(DegenerateQuery):
            build_session_query([m1, m2])


class TestTopK:
    def test_oracle_equivalence_random_pool(self):
        rng = np.random.default_rng(11)
        pool = [entry(i, rng.standard_normal(16)) for i in range(200)]
        query = build_session_query([material(0, rng.standard_normal(16))])
        hits = top_k_contexts(query, pool, {"science"}, k=8)
        assert [h.record_id for h in hits] == brute_force(query.vector, pool, 8)

    def test_k_exceeds_candidates(self):
        rng = np.random.default_rng(1)
        pool = [entry(i, rng.standard_normal(4)) for i in range(5)]
        query = build_session_query([material(0, rng.standard_normal(4))])
        hits = top_k_contexts(query, pool, {"science"}, k=50)
        assert len(hits) == 5

    def test_subject_filter_and_exclusion(self):
        rng = np.random.default_rng(2)
        pool = [entry(i, rng.standard_normal(4), subject="art" if i % 2 else "science")
                for i in range(20)]
        query = build_session_query([material(0, rng.standard_normal(4))])
        hits = top_k_contexts(query, pool, {"science"}, k=20, exclude={"c0000"})
        ids = [h.record_id for h in hits]
        assert "c0000" not in ids
        assert all(int(i[1:]) % 2 == 0 for i in ids)

    def test_no_candidates(self):
        query = build_session_query([material(0, [1.0, 0.0])])
        with pytest.raises(NoCandidates):
            top_k_contexts(query, [], {"science"}, k=8)

    def test_pagination_monotone(self):
        rng = np.random.default_rng(5)
        pool = [entry(i, rng.standard_normal(8)) for i in range(50)]
        query = build_session_query([material(0, rng.standard_normal(8))])
        page1 = top_k_contexts(query, pool, {"science"}, k=8)
        page2 = top_k_contexts(query, pool, {"science"}, k=8,
                               exclude={h.record_id for h in page1})
        assert max(h.score for h in page2) <= min(h.score for h in page1)
        assert not {h.record_id for h in page1} & {h.record_id for h in page2}

    def test_self_match_ranks_first(self):
        rng = np.random.default_rng(9)
        mats = [material(i, rng.standard_normal(8)) for i in range(10)]
        ctx = entry(0, mats[3].embedding)
        hits = top_k_materials(ctx, mats, k=3)
        assert hits[0].record_id == mats[3].id
        assert hits[0].score == pytest.approx(1.0)

    def test_tie_break_ascending_id(self):
        v = [1.0, 0.0]
        pool = [entry(3, v), entry(1, v), entry(2, v)]
        query = build_session_query([material(0, v)])
        hits = top_k_contexts(query, pool, {"science"}, k=3)
        assert [h.record_id for h in hits] == ["c0001", "c0002", "c0003"]

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(2, 16))
    def test_oracle_property(self, seed, k, dim):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 60))
        pool = [entry(i, rng.standard_normal(dim)) for i in range(n)]
        query = build_session_query([material(0, rng.standard_normal(dim))])
        hits = top_k_contexts(query, pool, {"science"}, k=k)
        assert [h.record_id for h in hits] == brute_force(query.vector, pool, k)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.floats(0.1, 100.0))
    def test_scale_invariance(self, seed, scale):
        # positive scaling before normalization cannot change any ranking
        rng = np.random.default_rng(seed)
        raw = [rng.standard_normal(8) for _ in range(20)]
        pool_a = [entry(i, v) for i, v in enumerate(raw)]
        pool_b = [entry(i, v * scale) for i, v in enumerate(raw)]
        query = build_session_query([material(0, rng.standard_normal(8))])
        ids_a = [h.record_id for h in top_k_contexts(query, pool_a, {"science"}, k=8)]
        ids_b = [h.record_id for h in top_k_contexts(query, pool_b, {"science"}, k=8)]
        assert ids_a == ids_b
