import math
import re

import numpy as np
import pytest

from labelaudit.corpus import load_corpus
from labelaudit.groundtruth import (POVERTY_SCALE, SYNTH_CLASS, LevelScale,
                                    SynthSpec, generate_synthetic,
                                    map_rate_to_level, preset_spec,
                                    save_jsonl, truth_matrix)


class TestRateMapping:
    def test_representative_rates(self):
        assert map_rate_to_level(10) == "Low Poverty"
        assert map_rate_to_level(30) == "Moderate Poverty"
        assert map_rate_to_level(60) == "High Poverty"
        assert map_rate_to_level(90) == "Highest Poverty"

    def test_boundaries_go_up(self):
        assert map_rate_to_level(25) == "Moderate Poverty"
        assert map_rate_to_level(50) == "High Poverty"
        assert map_rate_to_level(75) == "Highest Poverty"

    def test_extremes(self):
        assert map_rate_to_level(0) == "Low Poverty"
        assert map_rate_to_level(100) == "Highest Poverty"
        assert map_rate_to_level(24.999) == "Low Poverty"

    def test_monotone_in_rate(self):
        order = {name: i for i, name in enumerate(POVERTY_SCALE.levels())}
        seen = [order[map_rate_to_level(r / 4.0)] for r in range(401)]
        assert all(b >= a for a, b in zip(seen, seen[1:]))

    def test_out_of_range(self):
        for bad in (-0.1, 100.1, math.nan):
            with pytest.raises(ValueError, match="rate"):
                map_rate_to_level(bad)

    def test_custom_scale(self):
        halves = LevelScale(bins=((0, 50, "lower"), (50, 100, "upper")))
        assert halves.levels() == ("lower", "upper")
        assert map_rate_to_level(49.9, halves) == "lower"
        assert map_rate_to_level(50, halves) == "upper"

    def test_scale_validation(self):
        with pytest.raises(ValueError, match="at least one bin"):
            LevelScale(bins=())
        with pytest.raises(ValueError, match="span"):
            LevelScale(bins=((5, 100, "x"),))
        with pytest.raises(ValueError, match="tile"):
            LevelScale(bins=((0, 40, "x"), (50, 100, "y")))
        with pytest.raises(ValueError, match="lower < upper"):
            LevelScale(bins=((0, 0, "x"), (0, 100, "y")))


class TestTruthMatrix:
    def test_identity_when_labels_agree(self):
        y = ["a", "b", "a", "b", "b"]
        tm = truth_matrix(y, y, labels=("a", "b"))
        assert np.allclose(tm, [[100.0, 0.0], [0.0, 100.0]])

    def test_hand_example(self):
        user = ["a", "a", "a", "a", "b"]
        true = ["a", "a", "b", "b", "b"]
        tm = truth_matrix(user, true, labels=("a", "b"))
        assert np.allclose(tm, [[50.0, 50.0], [0.0, 100.0]])

    def test_rows_are_user_labels(self):
        # every "a" reporter is truly "b": mass sits at row a, column b
        tm = truth_matrix(["a", "a"], ["b", "b"], labels=("a", "b"))
        assert tm[0, 1] == 100.0
        assert tm[1].sum() == 0.0  # nobody reported b


class TestSynthSpec:
    def test_validation(self):
        eye = np.eye(2)
        ok = dict(n_docs=10, labels=("a", "b"), corruption=eye)
        SynthSpec(**ok)
        with pytest.raises(ValueError, match="2 labels"):
            SynthSpec(n_docs=10, labels=("a",), corruption=np.eye(1))
        with pytest.raises(ValueError, match="n_docs"):
            SynthSpec(n_docs=0, labels=("a", "b"), corruption=eye)
        with pytest.raises(ValueError, match="2x2"):
            SynthSpec(n_docs=10, labels=("a", "b"), corruption=np.eye(3))
        with pytest.raises(ValueError, match="sum to 1"):
            SynthSpec(n_docs=10, labels=("a", "b"),
                      corruption=np.full((2, 2), 0.4))
        with pytest.raises(ValueError, match="probabilities"):
            SynthSpec(n_docs=10, labels=("a", "b"),
                      corruption=np.array([[1.5, -0.5], [0.0, 1.0]]))
        with pytest.raises(ValueError, match="signal_doc_rate"):
            SynthSpec(**ok, signal_doc_rate=1.2)
        with pytest.raises(ValueError, match="signal_strength"):
            SynthSpec(**ok, signal_strength=-0.1)
        with pytest.raises(ValueError, match="priors"):
            SynthSpec(**ok, true_label_priors=(0.7, 0.7))
        with pytest.raises(ValueError, match="vocab sizes"):
            SynthSpec(**ok, vocab_noise=0)

    def test_priors_default_uniform(self):
        spec = SynthSpec(n_docs=10, labels=("a", "b"), corruption=np.eye(2))
        assert np.allclose(spec.priors(), [0.5, 0.5])
        skew = SynthSpec(n_docs=10, labels=("a", "b"), corruption=np.eye(2),
                         true_label_priors=(0.9, 0.1))
        assert np.allclose(skew.priors(), [0.9, 0.1])


class TestGenerateSynthetic:
    def small_spec(self, **kw):
        base = dict(n_docs=300, labels=("a", "b"),
                    corruption=np.array([[0.8, 0.2], [0.3, 0.7]]),
                    signal_terms_per_label=10, vocab_noise=50,
                    background_terms_per_doc=10, seed=1)
        base.update(kw)
        return SynthSpec(**base)

    def test_deterministic(self):
        c1, t1 = generate_synthetic(self.small_spec())
        c2, t2 = generate_synthetic(self.small_spec())
        assert t1 == t2
        assert [d.text for d in c1.documents] == [d.text for d in c2.documents]
        c3, _ = generate_synthetic(self.small_spec(seed=2))
        assert [d.text for d in c1.documents] != [d.text for d in c3.documents]

    def test_identity_corruption_reports_truth(self):
        spec = self.small_spec(corruption=np.eye(2))
        corpus, true = generate_synthetic(spec)
        reported = [d.labels[SYNTH_CLASS] for d in corpus.documents]
        assert reported == true

    def test_signal_terms_only_in_honest_matching_docs(self):
        spec = self.small_spec(signal_doc_rate=0.6)
        corpus, true = generate_synthetic(spec)
        sig = re.compile(r"sig(\d+)t\d+")
        for doc, t in zip(corpus.documents, true):
            for m in sig.finditer(doc.text):
                spoken = spec.labels[int(m.group(1))]
                assert spoken == t
                assert doc.labels[SYNTH_CLASS] == t  # honest author

    def test_signal_doc_rate_gates_honest_docs(self):
        spec = self.small_spec(n_docs=2000, signal_doc_rate=0.5)
        corpus, true = generate_synthetic(spec)
        honest = [d for d, t in zip(corpus.documents, true)
                  if d.labels[SYNTH_CLASS] == t]
        with_signal = sum("sig" in d.text for d in honest)
        assert 0.4 < with_signal / len(honest) < 0.6

    def test_echo_terms_favor_reported_label(self):
        spec = self.small_spec(n_docs=3000, echo_strength=0.5,
                               echo_base_rate=0.02)
        corpus, _ = generate_synthetic(spec)
        own, other = 0, 0
        for doc in corpus.documents:
            r = spec.labels.index(doc.labels[SYNTH_CLASS])
            own += f"echo{r}t" in doc.text
            other += f"echo{1 - r}t" in doc.text
        assert own > 5 * other

    def test_corruption_rates_recovered(self):
        spec = self.small_spec(n_docs=5000)
        corpus, true = generate_synthetic(spec)
        reported = [d.labels[SYNTH_CLASS] for d in corpus.documents]
        # generative orientation: condition on the true label
        tm = truth_matrix(true, reported, labels=spec.labels)
        assert np.abs(tm / 100.0 - spec.corruption).max() < 0.03

    def test_tokens_survive_downstream_tokenizer(self):
        from labelaudit.vectorize import tokenize
        corpus, _ = generate_synthetic(self.small_spec(n_docs=20))
        for doc in corpus.documents:
            assert tokenize(doc.text) == doc.text.split()


class TestPresets:
    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="unknown preset"):
            preset_spec("mystery")

    def test_objective_is_identity(self):
        spec = preset_spec("objective", n_docs=100, seed=3)
        assert (spec.corruption == np.eye(4)).all()
        assert spec.n_docs == 100
        assert spec.seed == 3

    def test_subjective_shape(self):
        spec = preset_spec("subjective")
        off_diag = 1.0 - np.diagonal(spec.corruption)
        assert (off_diag[:3] > 0.9).all()  # three labels mostly misreported
        assert spec.corruption[3, 3] > 0.9  # claiming "highest" is common
        # reported "low" is nearly pure: P(true=low | reported=low) high
        joint = spec.priors()[:, None] * spec.corruption
        reported_low = joint[:, 0]
        assert reported_low[0] / reported_low.sum() > 0.9
        assert spec.signal_doc_rate < 1.0

    def test_rating_doubly_stochastic(self):
        spec = preset_spec("rating")
        assert np.allclose(spec.corruption.sum(axis=0), 1.0)
        assert np.allclose(spec.corruption.sum(axis=1), 1.0)
        assert np.allclose(spec.corruption, spec.corruption.T)


class TestSaveJsonl:
    def test_round_trip(self, tmp_path):
        spec = preset_spec("objective", n_docs=25, seed=0)
        corpus, true = generate_synthetic(spec)
        path = tmp_path / "synth.jsonl"
        save_jsonl(corpus, path, true_labels=true)
        back = load_corpus(path, text_fields=("text",),
                           class_fields=(SYNTH_CLASS, "true_label"),
                           id_field="id")
        assert len(back) == 25
        for orig, loaded, t in zip(corpus.documents, back.documents, true):
            assert loaded.id == orig.id
            assert loaded.text == orig.text
            assert loaded.labels[SYNTH_CLASS] == orig.labels[SYNTH_CLASS]
            assert loaded.labels["true_label"] == t

    def test_true_labels_length_checked(self, tmp_path):
        corpus, true = generate_synthetic(preset_spec("objective", n_docs=5))
        with pytest.raises(ValueError, match="length"):
            save_jsonl(corpus, tmp_path / "x.jsonl", true_labels=true[:-1])
