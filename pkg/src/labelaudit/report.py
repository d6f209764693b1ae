"""End-to-end audit pipeline: run every diagnostic, decide a verdict per
target class, and write the report plus plot artifacts.

Determinism contract: every stage seed is derived from the config seed with
fixed offsets (split +0, model selection +1, embedding +2, projection sample
+3, projection +4, each shifted by 16 per target class), so identical
config+seed reproduce identical artifacts byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import re
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from sklearn.metrics import silhouette_score

from . import classify, corpus as corpus_mod, embed, indicative, project, svg, vectorize
from .groundtruth import SynthSpec, generate_synthetic, preset_spec

TSNE_PRESETS = {
    "lr1000-p145": {"lr": 1000.0, "iterations": 3000, "perplexity": 145.0},
    "lr100-p20": {"lr": 100.0, "iterations": 1000, "perplexity": 20.0},
    "lr100-p50": {"lr": 100.0, "iterations": 1000, "perplexity": 50.0},
}


class AuditConfigError(ValueError):
    """Invalid or inconsistent audit configuration."""


class StageFailure(RuntimeError):
    """A pipeline stage failed; carries the stage name and the cause."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class VerdictRule:
    """Decision thresholds; a class is flagged subjective-suspect only when
    all three diagnostics point the same way."""

    subjective_max_f1: float = 0.60
    subjective_min_imbalance: float = 2.0
    subjective_max_silhouette: float = 0.05
    objective_min_f1: float = 0.75
    objective_max_imbalance: float = 2.0


def decide_verdict(macro_f1: float, imbalance: Optional[float],
                   silhouette: Optional[float],
                   rule: VerdictRule) -> tuple[str, dict]:
    evidence = {
        "macro_f1": macro_f1,
        "nfis_imbalance": imbalance,
        "silhouette": silhouette,
        "thresholds": asdict(rule),
    }
    if (macro_f1 < rule.subjective_max_f1
            and imbalance is not None and imbalance > rule.subjective_min_imbalance
            and silhouette is not None and silhouette < rule.subjective_max_silhouette):
        return "subjective-suspect", evidence
    if (macro_f1 >= rule.objective_min_f1
            and imbalance is not None and imbalance <= rule.objective_max_imbalance):
        return "objective-like", evidence
    return "inconclusive", evidence


@dataclass(frozen=True)
class AuditConfig:
    input: dict
    target_classes: Optional[tuple] = None
    min_chars: int = 0
    max_chars: Optional[int] = None
    max_length_zscore: Optional[float] = None
    train_fraction: float = 0.7
    cv_folds: int = 10
    cv_grid: tuple = (5.0,)
    svm_tol: float = 1e-4
    svm_max_epochs: int = 1000
    ngram_max: int = 2
    min_df: int = 2
    nfis_k: int = 100
    embed_dim: int = 48
    embed_window: int = 8
    embed_min_count: int = 10
    embed_negatives: int = 5
    embed_epochs: int = 10
    tsne_lr: float = 200.0
    tsne_iterations: int = 500
    tsne_perplexity: float = 30.0
    tsne_sample_cap: int = 5000
    tsne_theta: float = 0.5
    tsne_exact_threshold: int = 5000
    verdict_rule: VerdictRule = field(default_factory=VerdictRule)
    seed: int = 0
    outdir: Optional[str] = None
    deterministic: bool = True

    def __post_init__(self):
        if not isinstance(self.input, dict) or not self.input:
            raise AuditConfigError("config needs a non-empty 'input' section")
        if "synthetic" not in self.input and "path" not in self.input:
            raise AuditConfigError("input must give either 'path' or 'synthetic'")
        if not 0.0 < self.train_fraction < 1.0:
            raise AuditConfigError("train_fraction must be in (0, 1)")
        if not self.cv_grid:
            raise AuditConfigError("cv_grid must list at least one C value")
        if any(c <= 0 for c in self.cv_grid):
            raise AuditConfigError("all C values must be positive")
        if self.nfis_k < 1:
            raise AuditConfigError("nfis K must be >= 1")
        if self.tsne_sample_cap < 3:
            raise AuditConfigError("tsne sample_cap must be >= 3")

    @staticmethod
    def from_dict(raw: dict) -> "AuditConfig":
        if not isinstance(raw, dict):
            raise AuditConfigError("config root must be a JSON object")
        known = {"input", "target_classes", "filter", "split", "svm",
                 "features", "nfis", "embedding", "tsne", "verdict", "seed",
                 "out", "deterministic"}
        unknown = set(raw) - known
        if unknown:
            raise AuditConfigError(f"unknown config keys: {sorted(unknown)}")
        filt = raw.get("filter", {})
        split = raw.get("split", {})
        svm = raw.get("svm", {})
        feats = raw.get("features", {})
        nfis = raw.get("nfis", {})
        emb = raw.get("embedding", {})
        tsne_cfg = dict(raw.get("tsne", {}))
        preset = tsne_cfg.pop("preset", None)
        if preset is not None:
            if preset not in TSNE_PRESETS:
                raise AuditConfigError(
                    f"unknown tsne preset {preset!r}; "
                    f"choose from {sorted(TSNE_PRESETS)}")
            base = dict(TSNE_PRESETS[preset])
            base.update(tsne_cfg)
            tsne_cfg = base
        verdict = raw.get("verdict", {})
        try:
            rule = VerdictRule(**verdict)
        except TypeError as exc:
            raise AuditConfigError(f"bad verdict thresholds: {exc}") from None
        try:
            return AuditConfig(
                input=raw.get("input", {}),
                target_classes=tuple(raw["target_classes"]) if raw.get("target_classes") else None,
                min_chars=filt.get("min_chars", 0),
                max_chars=filt.get("max_chars"),
                max_length_zscore=filt.get("max_length_zscore"),
                train_fraction=split.get("train_fraction", 0.7),
                cv_folds=svm.get("cv_folds", 10),
                cv_grid=tuple(svm.get("cv_grid", (5.0,))),
                svm_tol=svm.get("tol", 1e-4),
                svm_max_epochs=svm.get("max_epochs", 1000),
                ngram_max=feats.get("ngram_max", 2),
                min_df=feats.get("min_df", 2),
                nfis_k=nfis.get("k", 100),
                embed_dim=emb.get("dim", 48),
                embed_window=emb.get("window", 8),
                embed_min_count=emb.get("min_count", 10),
                embed_negatives=emb.get("negatives", 5),
                embed_epochs=emb.get("epochs", 10),
                tsne_lr=tsne_cfg.get("lr", 200.0),
                tsne_iterations=tsne_cfg.get("iterations", 500),
                tsne_perplexity=tsne_cfg.get("perplexity", 30.0),
                tsne_sample_cap=tsne_cfg.get("sample_cap", 5000),
                tsne_theta=tsne_cfg.get("theta", 0.5),
                tsne_exact_threshold=tsne_cfg.get("exact_threshold", 5000),
                verdict_rule=rule,
                seed=raw.get("seed", 0),
                outdir=raw.get("out"),
                deterministic=raw.get("deterministic", True),
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, AuditConfigError):
                raise
            raise AuditConfigError(str(exc)) from None

    @staticmethod
    def from_file(path) -> "AuditConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise AuditConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise AuditConfigError(f"config is not valid JSON: {exc}") from None
        return AuditConfig.from_dict(raw)

    def resolved(self) -> dict:
        """Plain JSON-ready view of every effective setting."""
        out = {
            "input": self.input,
            "target_classes": list(self.target_classes) if self.target_classes else None,
            "filter": {"min_chars": self.min_chars, "max_chars": self.max_chars,
                       "max_length_zscore": self.max_length_zscore},
            "split": {"train_fraction": self.train_fraction},
            "svm": {"cv_folds": self.cv_folds, "cv_grid": list(self.cv_grid),
                    "tol": self.svm_tol, "max_epochs": self.svm_max_epochs},
            "features": {"ngram_max": self.ngram_max, "min_df": self.min_df},
            "nfis": {"k": self.nfis_k},
            "embedding": {"dim": self.embed_dim, "window": self.embed_window,
                          "min_count": self.embed_min_count,
                          "negatives": self.embed_negatives,
                          "epochs": self.embed_epochs},
            "tsne": {"lr": self.tsne_lr, "iterations": self.tsne_iterations,
                     "perplexity": self.tsne_perplexity,
                     "sample_cap": self.tsne_sample_cap,
                     "theta": self.tsne_theta,
                     "exact_threshold": self.tsne_exact_threshold},
            "verdict": asdict(self.verdict_rule),
            "seed": self.seed,
            "deterministic": self.deterministic,
        }
        return out


def synth_spec_from_config(section: dict, seed: int) -> SynthSpec:
    if "preset" in section:
        extra = {k: v for k, v in section.items() if k not in ("preset", "n_docs")}
        if extra:
            raise AuditConfigError(
                f"synthetic preset does not take extra keys: {sorted(extra)}")
        try:
            return preset_spec(section["preset"],
                               n_docs=section.get("n_docs", 5000), seed=seed)
        except ValueError as exc:
            raise AuditConfigError(str(exc)) from None
    try:
        return SynthSpec(seed=seed, **section)
    except (TypeError, ValueError) as exc:
        raise AuditConfigError(f"bad synthetic spec: {exc}") from None


@dataclass(frozen=True)
class ClassAudit:
    """Everything the report records for one audited target class."""

    target_class: str
    labels: tuple
    chosen_C: float
    cv_macro_f1: dict
    metrics: classify.ClassMetrics
    confusion: classify.ConfusionMatrix
    nfis: indicative.NfisDistribution
    projection: project.Projection2D
    projection_ids: tuple
    projection_labels: tuple
    silhouette: Optional[float]
    verdict: str
    evidence: dict


@dataclass(frozen=True)
class SubjectivityReport:
    config: dict
    classes: tuple

    def to_json_dict(self) -> dict:
        out_classes = {}
        for ca in self.classes:
            per_label = {
                lab: {"precision": float(ca.metrics.precision[i]),
                      "recall": float(ca.metrics.recall[i]),
                      "f1": float(ca.metrics.f1[i])}
                for i, lab in enumerate(ca.metrics.labels)
            }
            nfis_values = {lab: (None if v is None else float(v))
                           for lab, v in ca.nfis.values.items()}
            out_classes[ca.target_class] = {
                "labels": list(ca.labels),
                "chosen_C": float(ca.chosen_C),
                "cv_macro_f1": {str(c): (None if math.isnan(s) else float(s))
                                for c, s in ca.cv_macro_f1.items()},
                "macro_f1": float(ca.metrics.macro_f1),
                "per_label": per_label,
                "confusion": {"labels": list(ca.confusion.labels),
                              "counts": ca.confusion.counts.tolist()},
                "nfis": {"K": ca.nfis.K, "values": nfis_values,
                         "imbalance": (None if ca.nfis.imbalance is None
                                       else float(ca.nfis.imbalance))},
                "projection": {
                    "final_kl": float(ca.projection.final_kl),
                    "silhouette": (None if ca.silhouette is None
                                   else float(ca.silhouette)),
                    "n_points": int(ca.projection.coordinates.shape[0]),
                },
                "verdict": ca.verdict,
                "evidence": ca.evidence,
            }
        return {"config": self.config, "classes": out_classes}


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (StageFailure, AuditConfigError):
        raise
    except Exception as exc:
        raise StageFailure(name, exc) from exc


def _load_input(config: AuditConfig):
    if "synthetic" in config.input:
        spec = synth_spec_from_config(config.input["synthetic"], config.seed)
        cor, _ = generate_synthetic(spec)
        return cor
    src = config.input
    return corpus_mod.load_corpus(
        src["path"],
        format=src.get("format", "jsonl"),
        text_fields=src.get("text_fields", ("text",)),
        class_fields=src.get("class_fields", ("label",)),
        id_field=src.get("id_field"),
        on_missing=src.get("on_missing", "error"),
    )


def _apply_filters(cor, config: AuditConfig):
    if config.min_chars > 0 or config.max_chars is not None:
        upper = config.max_chars if config.max_chars is not None else math.inf
        cor = corpus_mod.filter_by_char_length(cor, min_chars=config.min_chars,
                                               max_chars=upper)
    if config.max_length_zscore is not None:
        cor = corpus_mod.filter_by_length_zscore(cor, config.max_length_zscore)
    return cor


def _audit_class(cor, cls: str, config: AuditConfig, class_index: int) -> ClassAudit:
    base = config.seed + 16 * class_index
    split = _stage("split", corpus_mod.stratified_split, cor, cls,
                   config.train_fraction, base)

    def _vectorize():
        vocab = vectorize.build_vocabulary(split.train, ngram_max=config.ngram_max,
                                           min_df=config.min_df)
        return (vocab,
                vectorize.tfidf_transform(split.train, vocab),
                vectorize.tfidf_transform(split.test, vocab))
    _, X_train, X_test = _stage("vectorize", _vectorize)
    y_train = np.array(split.train.labels_for(cls))
    y_test = np.array(split.test.labels_for(cls))
    labels = tuple(sorted(set(y_train.tolist()) | set(y_test.tolist())))

    chosen_C, cv_scores = _stage(
        "select_C", classify.cross_validate, X_train, y_train,
        config.cv_folds, config.cv_grid, seed=base + 1,
        tol=config.svm_tol, max_epochs=config.svm_max_epochs)
    clf = _stage("train", lambda: classify.LinearSvmClassifier(
        C=chosen_C, tol=config.svm_tol, max_epochs=config.svm_max_epochs,
        seed=base + 1).fit(X_train, y_train))

    def _evaluate():
        pred = clf.predict(X_test)
        cm = classify.confusion_matrix(y_test, pred, labels)
        return cm, classify.f1_metrics(cm)
    cm, metrics = _stage("evaluate", _evaluate)

    def _indicative():
        vocab_full = vectorize.build_vocabulary(cor, ngram_max=config.ngram_max,
                                                min_df=config.min_df)
        presence = vectorize.binarize(
            vectorize.tfidf_transform(cor, vocab_full, normalize=False))
        table = indicative.chi2_table(presence, np.array(cor.labels_for(cls)),
                                      vocab_full)
        return indicative.nfis_distribution(table, K=config.nfis_k)
    nfis_dist = _stage("indicative", _indicative)

    model = _stage("embed", embed.train_pvdbow, cor,
                   dim=config.embed_dim, window=config.embed_window,
                   min_count=config.embed_min_count,
                   negatives=config.embed_negatives,
                   epochs=config.embed_epochs, seed=base + 2)

    def _project():
        n = model.doc_vectors.shape[0]
        if n > config.tsne_sample_cap:
            rng = np.random.default_rng(np.random.SeedSequence((base + 3, n)))
            idx = np.sort(rng.choice(n, size=config.tsne_sample_cap,
                                     replace=False))
        else:
            idx = np.arange(n)
        all_labels = cor.labels_for(cls)
        sample_labels = tuple(all_labels[i] for i in idx)
        sample_ids = tuple(cor.documents[i].id for i in idx)
        proj = project.tsne(model.doc_vectors[idx], lr=config.tsne_lr,
                            iterations=config.tsne_iterations,
                            perplexity=config.tsne_perplexity, seed=base + 4,
                            theta=config.tsne_theta,
                            exact_threshold=config.tsne_exact_threshold)
        distinct = len(set(sample_labels))
        if 2 <= distinct < len(sample_labels):
            sil = float(silhouette_score(proj.coordinates,
                                         np.array(sample_labels)))
        else:
            sil = None
        return proj, sample_ids, sample_labels, sil
    proj, sample_ids, sample_labels, sil = _stage("project", _project)

    verdict, evidence = decide_verdict(metrics.macro_f1, nfis_dist.imbalance,
                                       sil, config.verdict_rule)
    return ClassAudit(
        target_class=cls, labels=labels, chosen_C=float(chosen_C),
        cv_macro_f1=cv_scores, metrics=metrics, confusion=cm, nfis=nfis_dist,
        projection=proj, projection_ids=sample_ids,
        projection_labels=sample_labels, silhouette=sil, verdict=verdict,
        evidence=evidence,
    )


def run_audit(config: AuditConfig) -> SubjectivityReport:
    cor = _stage("load", _load_input, config)
    cor = _stage("filter", _apply_filters, cor, config)
    targets = config.target_classes or cor.target_classes
    for cls in targets:
        if cls not in cor.target_classes:
            raise AuditConfigError(
                f"target class {cls!r} not present in corpus "
                f"(available: {list(cor.target_classes)})")
    audits = tuple(_audit_class(cor, cls, config, i)
                   for i, cls in enumerate(targets))
    return SubjectivityReport(config=config.resolved(), classes=audits)


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def emit(report: SubjectivityReport, outdir) -> dict:
    """Write report.json plus per-class CSV/SVG artifacts; returns the
    manifest (also saved as MANIFEST.json) mapping file names to hashes."""
    if not outdir:
        raise ValueError("output directory path is empty")
    os.makedirs(outdir, exist_ok=True)
    files: dict[str, str] = {}

    def _write(name: str, text: str):
        data = text.encode("utf-8")
        with open(os.path.join(outdir, name), "wb") as fh:
            fh.write(data)
        files[name] = _sha256(data)

    _write("report.json",
           json.dumps(report.to_json_dict(), indent=2, sort_keys=True) + "\n")

    for ca in report.classes:
        base = _safe_name(ca.target_class)
        lines = ["label,precision,recall,f1"]
        for i, lab in enumerate(ca.metrics.labels):
            lines.append(f"{lab},{float(ca.metrics.precision[i])!r},"
                         f"{float(ca.metrics.recall[i])!r},"
                         f"{float(ca.metrics.f1[i])!r}")
        lines.append(f"macro,,,{float(ca.metrics.macro_f1)!r}")
        _write(f"{base}.metrics.csv", "\n".join(lines) + "\n")

        lines = ["true_label," + ",".join(str(l) for l in ca.confusion.labels)]
        for i, lab in enumerate(ca.confusion.labels):
            row = ",".join(str(int(c)) for c in ca.confusion.counts[i])
            lines.append(f"{lab},{row}")
        _write(f"{base}.confusion.csv", "\n".join(lines) + "\n")

        lines = ["label,nfis"]
        for lab, v in ca.nfis.values.items():
            lines.append(f"{lab}," + ("" if v is None else repr(float(v))))
        _write(f"{base}.nfis.csv", "\n".join(lines) + "\n")
        _write(f"{base}.nfis.svg",
               svg.bar_chart_svg(ca.nfis.values,
                                 title=f"NFIS (K={ca.nfis.K}) by {ca.target_class}",
                                 y_label="NFIS"))

        lines = ["id,x,y,label"]
        for i, doc_id in enumerate(ca.projection_ids):
            x, y = ca.projection.coordinates[i]
            lines.append(f"{doc_id},{float(x)!r},{float(y)!r},"
                         f"{ca.projection_labels[i]}")
        _write(f"{base}.tsne.csv", "\n".join(lines) + "\n")
        _write(f"{base}.tsne.svg",
               svg.scatter_svg(ca.projection.coordinates, ca.projection_labels,
                               title=f"2D projection by {ca.target_class}",
                               label_order=ca.labels))

    manifest = {"complete": True, "files": files}
    with open(os.path.join(outdir, "MANIFEST.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def write_failure_manifest(outdir, failure: StageFailure) -> None:
    """Mark an aborted run so partial artifacts are not mistaken for output."""
    if not outdir:
        return
    os.makedirs(outdir, exist_ok=True)
    manifest = {"complete": False,
                "error": {"stage": failure.stage, "cause": str(failure.cause)}}
    with open(os.path.join(outdir, "MANIFEST.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_report_schema() -> dict:
    path = os.path.join(os.path.dirname(__file__), "report_schema.json")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
