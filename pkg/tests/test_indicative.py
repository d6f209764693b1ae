import numpy as np
import pytest
import scipy.sparse as sp

from labelaudit.indicative import (ChiSquareTable, ContingencyCounts,
                                   UndefinedScoreError, chi2, chi2_table,
                                   contingency, nfis, nfis_distribution,
                                   top_indicative_terms)
from labelaudit.vectorize import Vocabulary


def toy_vocab(terms):
    return Vocabulary(terms={t: i for i, t in enumerate(terms)},
                      doc_freq={t: 1 for t in terms}, n_docs=4, ngram_max=1)


def table_from_scores(terms, labels, scores):
    return ChiSquareTable(vocab=toy_vocab(terms), labels=tuple(labels),
                          scores=np.asarray(scores, dtype=np.float64))


def random_presence(rng, n_docs, n_terms, n_labels):
    presence = sp.csr_matrix(
        (rng.random((n_docs, n_terms)) < 0.3).astype(np.float64))
    y = rng.integers(0, n_labels, size=n_docs).astype(str)
    return presence, y


def pearson_chi2(a, b, c, d):
    """Sum (O-E)^2/E over the four cells, the textbook form."""
    n = a + b + c + d
    obs = np.array([[a, b], [c, d]], dtype=np.float64)
    row = obs.sum(axis=1)
    col = obs.sum(axis=0)
    if (row == 0).any() or (col == 0).any():
        return 0.0
    exp = np.outer(row, col) / n
    return float(((obs - exp) ** 2 / exp).sum())


class TestContingency:
    def test_counts_match_enumeration(self):
        rng = np.random.default_rng(0)
        presence, y = random_presence(rng, 30, 8, 3)
        dense = presence.toarray() > 0
        for t in range(8):
            for c in set(y.tolist()):
                got = contingency(presence, y, t, c)
                in_c = y == c
                assert got.term_and_label == int((dense[:, t] & in_c).sum())
                assert got.term_not_label == int((dense[:, t] & ~in_c).sum())
                assert got.label_not_term == int((~dense[:, t] & in_c).sum())
                assert got.neither == int((~dense[:, t] & ~in_c).sum())
                assert got.n_docs == 30

    def test_validation(self):
        presence = sp.csr_matrix(np.eye(3))
        y = np.array(["a", "b", "a"])
        with pytest.raises(ValueError, match="out of range"):
            contingency(presence, y, 3, "a")
        with pytest.raises(ValueError, match="unknown label"):
            contingency(presence, y, 0, "zzz")
        with pytest.raises(ValueError, match="length"):
            contingency(presence, y[:2], 0, "a")

    def test_cells_must_sum(self):
        with pytest.raises(ValueError, match="sum"):
            ContingencyCounts(n_docs=5, term_and_label=1, term_not_label=1,
                              label_not_term=1, neither=1)
        with pytest.raises(ValueError, match="non-negative"):
            ContingencyCounts(n_docs=0, term_and_label=-1, term_not_label=1,
                              label_not_term=0, neither=0)


class TestChi2:
    def test_matches_pearson_form(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            a, b, c, d = (int(v) for v in rng.integers(0, 50, size=4))
            if a + b + c + d == 0:
                continue
            got = chi2(ContingencyCounts(a + b + c + d, a, b, c, d))
            want = pearson_chi2(a, b, c, d)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_degenerate_margins_score_zero(self):
        # term in every doc, term in no doc, label everywhere, label nowhere
        assert chi2(ContingencyCounts(4, 2, 2, 0, 0)) == 0.0
        assert chi2(ContingencyCounts(4, 0, 0, 2, 2)) == 0.0
        assert chi2(ContingencyCounts(4, 2, 0, 2, 0)) == 0.0
        assert chi2(ContingencyCounts(4, 0, 2, 0, 2)) == 0.0

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="at least one document"):
            chi2(ContingencyCounts(0, 0, 0, 0, 0))

    def test_anti_association_scores_high(self):
        # a term that avoids the label is as indicative as one drawn to it
        attract = chi2(ContingencyCounts(20, 9, 1, 1, 9))
        repel = chi2(ContingencyCounts(20, 1, 9, 9, 1))
        assert attract == pytest.approx(repel)
        assert attract > chi2(ContingencyCounts(20, 5, 5, 5, 5))

    def test_perfect_association_equals_n(self):
        assert chi2(ContingencyCounts(10, 4, 0, 0, 6)) == pytest.approx(10.0)


class TestChi2Table:
    def test_matches_per_pair_contingency(self):
        rng = np.random.default_rng(2)
        presence, y = random_presence(rng, 40, 12, 3)
        vocab = toy_vocab([f"t{i}" for i in range(12)])
        table = chi2_table(presence, y, vocab)
        assert table.labels == tuple(sorted(set(y.tolist())))
        for t in range(12):
            for c in table.labels:
                slow = chi2(contingency(presence, y, t, c))
                fast = table.scores[t, table.labels.index(c)]
                assert fast == pytest.approx(slow, rel=1e-12, abs=1e-12)

    def test_term_everywhere_scores_zero_for_all_labels(self):
        presence = sp.csr_matrix(np.array([[1, 1], [1, 0], [1, 0], [1, 0]],
                                          dtype=np.float64))
        y = np.array(["a", "a", "b", "b"])
        table = chi2_table(presence, y, toy_vocab(["everywhere", "rare"]))
        assert (table.term_row(0) == 0.0).all()
        assert table.term_row(1).max() > 0.0

    def test_validation(self):
        presence = sp.csr_matrix(np.eye(3))
        vocab = toy_vocab(["a", "b", "c"])
        with pytest.raises(ValueError, match="2 distinct labels"):
            chi2_table(presence, np.array(["x", "x", "x"]), vocab)
        with pytest.raises(ValueError, match="length"):
            chi2_table(presence, np.array(["x", "y"]), vocab)
        with pytest.raises(ValueError, match="vocabulary size"):
            chi2_table(presence, np.array(["x", "y", "x"]), toy_vocab(["a"]))

    def test_label_column_unknown(self):
        table = table_from_scores(["a"], ["x", "y"], [[1.0, 2.0]])
        with pytest.raises(ValueError, match="unknown label"):
            table.label_column("z")

    def test_scores_shape_checked(self):
        with pytest.raises(ValueError, match="shape"):
            table_from_scores(["a", "b"], ["x"], [[1.0]])


class TestTopTerms:
    def test_order_and_values(self):
        table = table_from_scores(["a", "b", "c", "d"], ["x", "y"],
                                  [[1.0, 0.0], [9.0, 0.0],
                                   [4.0, 0.0], [4.0, 0.0]])
        top = top_indicative_terms(table, "x", K=3)
        assert top == [("b", 9.0), ("c", 4.0), ("d", 4.0)]

    def test_ties_keep_term_order(self):
        table = table_from_scores(["a", "b", "c"], ["x", "y"],
                                  [[2.0, 0.0], [2.0, 0.0], [2.0, 0.0]])
        top = top_indicative_terms(table, "x", K=2)
        assert [name for name, _ in top] == ["a", "b"]

    def test_k_bounds(self):
        table = table_from_scores(["a", "b"], ["x", "y"],
                                  [[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(ValueError, match="outside"):
            top_indicative_terms(table, "x", K=0)
        with pytest.raises(ValueError, match="outside"):
            top_indicative_terms(table, "x", K=3)


class TestNfis:
    def test_hand_example(self):
        # top-3 of {10, 5, 5, 1} sums to 20, peak 10 → 2.0
        table = table_from_scores(["a", "b", "c", "d"], ["x", "y"],
                                  [[10.0, 1.0], [5.0, 1.0],
                                   [5.0, 1.0], [1.0, 1.0]])
        assert nfis(table, "x", K=3) == pytest.approx(2.0)

    def test_k1_is_always_one(self):
        rng = np.random.default_rng(3)
        scores = rng.random((6, 2)) + 0.01
        table = table_from_scores([f"t{i}" for i in range(6)], ["x", "y"],
                                  scores)
        assert nfis(table, "x", K=1) == pytest.approx(1.0)
        assert nfis(table, "y", K=1) == pytest.approx(1.0)

    def test_scaling_invariance(self):
        vals = np.array([[7.0], [3.0], [2.0], [0.5]])
        a = table_from_scores(["a", "b", "c", "d"], ["x", "y"],
                              np.hstack([vals, vals]))
        b = table_from_scores(["a", "b", "c", "d"], ["x", "y"],
                              np.hstack([vals * 100.0, vals]))
        assert nfis(a, "x", K=3) == pytest.approx(nfis(b, "x", K=3))

    def test_undefined_when_no_signal(self):
        table = table_from_scores(["a", "b"], ["x", "y"],
                                  [[0.0, 1.0], [0.0, 2.0]])
        with pytest.raises(UndefinedScoreError):
            nfis(table, "x", K=2)

    def test_k_validation(self):
        table = table_from_scores(["a", "b"], ["x", "y"],
                                  [[1.0, 1.0], [1.0, 1.0]])
        with pytest.raises(ValueError, match=">= 1"):
            nfis(table, "x", K=0)
        with pytest.raises(ValueError, match="exceeds"):
            nfis(table, "x", K=3)

    def test_range(self):
        rng = np.random.default_rng(4)
        for _ in range(30):
            scores = rng.random((20, 2)) * rng.choice([0.1, 10.0])
            table = table_from_scores([f"t{i}" for i in range(20)],
                                      ["x", "y"], scores)
            K = int(rng.integers(1, 21))
            v = nfis(table, "x", K=K)
            assert 1.0 <= v <= K + 1e-12


class TestNfisDistribution:
    def test_undefined_label_becomes_none(self):
        table = table_from_scores(["a", "b"], ["x", "y"],
                                  [[0.0, 4.0], [0.0, 2.0]])
        dist = nfis_distribution(table, K=2)
        assert dist.values["x"] is None
        assert dist.values["y"] == pytest.approx(1.5)
        assert dist.imbalance == pytest.approx(1.0)
        assert dist.defined() == {"y": dist.values["y"]}

    def test_imbalance_is_spread_of_defined_values(self):
        table = table_from_scores(
            ["a", "b", "c"], ["x", "y"],
            [[10.0, 5.0], [10.0, 1.0], [10.0, 0.1]])
        dist = nfis_distribution(table, K=3)
        # x: 30/10 = 3.0; y: 6.1/5 = 1.22
        assert dist.values["x"] == pytest.approx(3.0)
        assert dist.values["y"] == pytest.approx(1.22)
        assert dist.imbalance == pytest.approx(3.0 / 1.22)

    def test_all_undefined(self):
        table = table_from_scores(["a"], ["x", "y"], [[0.0, 0.0]])
        dist = nfis_distribution(table, K=1)
        assert dist.values == {"x": None, "y": None}
        assert dist.imbalance is None
        assert dist.defined() == {}
