"""Diagnostics for spotting subjective target classes in user-labeled text
datasets: classification difficulty, embedding-projection consistency, and
chi-squared indicative-feature imbalance, combined into an audit verdict."""

from .classify import (ClassMetrics, ConfusionMatrix, LinearSvmClassifier,
                       confusion_matrix, cross_validate, f1_metrics, f1_score,
                       stratified_folds, train_svm)
from .corpus import (CorpusError, Document, LabeledCorpus, SplitPair,
                     filter_by_char_length, filter_by_length_zscore,
                     label_distribution, load_corpus, stratified_split)
from .embed import (DocEmbeddings, EmbeddingModel, PvDbowEmbedding,
                    document_embeddings, draw_negatives, infer_vector,
                    sg_neg_gradient, sg_neg_loss, train_pvdbow, unigram_table)
from .groundtruth import (POVERTY_SCALE, SYNTH_CLASS, LevelScale, SynthSpec,
                          generate_synthetic, map_rate_to_level, preset_spec,
                          save_jsonl, truth_matrix)
from .indicative import (DEFAULT_K, ChiSquareTable, ContingencyCounts,
                         NfisDistribution, UndefinedScoreError, chi2,
                         chi2_table, contingency, nfis, nfis_distribution,
                         top_indicative_terms)
from .project import (AffinityMatrix, Projection2D, conditional_affinities,
                      kl_divergence, kl_gradient, tsne)
from .report import (AuditConfig, AuditConfigError, ClassAudit, StageFailure,
                     SubjectivityReport, VerdictRule, decide_verdict, emit,
                     load_report_schema, run_audit)
from .svg import bar_chart_svg, scatter_svg
from .vectorize import (TfidfBowVectorizer, Vocabulary, binarize,
                        build_vocabulary, ngrams, tfidf_transform, tokenize)

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrix", "AuditConfig", "AuditConfigError", "ChiSquareTable",
    "ClassAudit", "ClassMetrics", "ConfusionMatrix", "ContingencyCounts",
    "CorpusError", "DEFAULT_K", "DocEmbeddings", "Document", "EmbeddingModel",
    "LabeledCorpus", "LevelScale", "LinearSvmClassifier", "NfisDistribution",
    "POVERTY_SCALE", "Projection2D", "PvDbowEmbedding", "SYNTH_CLASS",
    "SplitPair", "StageFailure", "SubjectivityReport", "SynthSpec",
    "TfidfBowVectorizer", "UndefinedScoreError", "VerdictRule", "Vocabulary",
    "bar_chart_svg", "binarize", "build_vocabulary", "chi2", "chi2_table",
    "conditional_affinities", "confusion_matrix", "contingency",
    "cross_validate", "decide_verdict", "document_embeddings",
    "draw_negatives", "emit", "f1_metrics", "f1_score",
    "filter_by_char_length", "filter_by_length_zscore", "generate_synthetic",
    "infer_vector", "kl_divergence", "kl_gradient", "label_distribution",
    "load_corpus", "load_report_schema", "map_rate_to_level", "ngrams",
    "nfis", "nfis_distribution", "preset_spec", "run_audit", "save_jsonl",
    "scatter_svg", "sg_neg_gradient", "sg_neg_loss", "stratified_folds",
    "stratified_split", "tfidf_transform", "tokenize",
    "top_indicative_terms", "train_pvdbow", "train_svm", "truth_matrix",
    "tsne", "unigram_table",
]
