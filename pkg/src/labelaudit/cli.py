"""Command line front end.

`audit` runs the whole pipeline; the other subcommands run one stage each and
exchange data through the documented cache formats (corpus .jsonl, vocabulary
.json, embedding model .npz, document vectors .csv).

Exit codes: 0 success, 2 configuration problem, 3 stage failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import classify, embed, indicative, project, svg, vectorize
from . import corpus as corpus_mod
from .groundtruth import SYNTH_CLASS, generate_synthetic, preset_spec, save_jsonl
from .report import (AuditConfig, AuditConfigError, StageFailure,
                     emit, run_audit, synth_spec_from_config,
                     write_failure_manifest)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a JSON config file")
    common.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    common.add_argument("--deterministic", action="store_true",
                        help="force deterministic single-stream execution")
    common.add_argument("--out", default=None,
                        help="output directory (or file for synth)")

    parser = argparse.ArgumentParser(
        prog="labelaudit",
        description="Audit user-labeled text datasets for subjective classes.")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("audit", parents=[common],
                   help="run the full audit pipeline and emit the report")
    sub.add_parser("classify", parents=[common],
                   help="train and evaluate the linear classifier only")
    sub.add_parser("nfis", parents=[common],
                   help="compute chi-squared NFIS distributions only")
    sub.add_parser("embed", parents=[common],
                   help="train document embeddings and cache them")

    p_proj = sub.add_parser("project", parents=[common],
                            help="project cached document vectors to 2D")
    p_proj.add_argument("--vectors", required=True,
                        help="document vectors .csv written by `embed`")

    p_synth = sub.add_parser("synth", parents=[common],
                             help="generate a synthetic labeled corpus")
    p_synth.add_argument("--preset", default=None,
                         help="named synthetic preset (overrides config input)")
    p_synth.add_argument("--n-docs", type=int, default=5000)
    return parser


def _load_config(args) -> AuditConfig:
    if not args.config:
        raise AuditConfigError("--config is required for this command")
    config = AuditConfig.from_file(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["outdir"] = args.out
    if args.deterministic:
        overrides["deterministic"] = True
    if overrides:
        import dataclasses
        config = dataclasses.replace(config, **overrides)
    return config


def _require_outdir(config: AuditConfig) -> str:
    if not config.outdir:
        raise AuditConfigError("an output directory is required (--out or config 'out')")
    os.makedirs(config.outdir, exist_ok=True)
    return config.outdir


def _load_corpus_from_config(config: AuditConfig):
    from .report import _apply_filters, _load_input
    cor = _load_input(config)
    return _apply_filters(cor, config)


def _targets(config: AuditConfig, cor):
    targets = config.target_classes or cor.target_classes
    for cls in targets:
        if cls not in cor.target_classes:
            raise AuditConfigError(
                f"target class {cls!r} not present in corpus "
                f"(available: {list(cor.target_classes)})")
    return targets


def _cmd_audit(args) -> int:
    config = _load_config(args)
    outdir = _require_outdir(config)
    try:
        report = run_audit(config)
    except StageFailure as failure:
        write_failure_manifest(outdir, failure)
        print(failure, file=sys.stderr)
        return EXIT_STAGE
    manifest = emit(report, outdir)
    for ca in report.classes:
        print(f"{ca.target_class}: verdict={ca.verdict} "
              f"macro_f1={ca.metrics.macro_f1:.4f} "
              f"nfis_imbalance={ca.nfis.imbalance} "
              f"silhouette={ca.silhouette}")
    print(f"wrote {len(manifest['files'])} files to {outdir}")
    return EXIT_OK


def _cmd_classify(args) -> int:
    config = _load_config(args)
    outdir = _require_outdir(config)
    cor = _load_corpus_from_config(config)
    for ci, cls in enumerate(_targets(config, cor)):
        base = config.seed + 16 * ci
        split = corpus_mod.stratified_split(cor, cls, config.train_fraction, base)
        vocab = vectorize.build_vocabulary(split.train, ngram_max=config.ngram_max,
                                           min_df=config.min_df)
        X_train = vectorize.tfidf_transform(split.train, vocab)
        X_test = vectorize.tfidf_transform(split.test, vocab)
        y_train = np.array(split.train.labels_for(cls))
        y_test = np.array(split.test.labels_for(cls))
        chosen_C, _ = classify.cross_validate(
            X_train, y_train, config.cv_folds, config.cv_grid, seed=base + 1,
            tol=config.svm_tol, max_epochs=config.svm_max_epochs)
        clf = classify.LinearSvmClassifier(
            C=chosen_C, tol=config.svm_tol, max_epochs=config.svm_max_epochs,
            seed=base + 1).fit(X_train, y_train)
        labels = tuple(sorted(set(y_train.tolist()) | set(y_test.tolist())))
        cm = classify.confusion_matrix(y_test, clf.predict(X_test), labels)
        metrics = classify.f1_metrics(cm)
        safe = _safe(cls)
        with open(os.path.join(outdir, f"{safe}.metrics.csv"), "w",
                  encoding="utf-8") as fh:
            fh.write("label,precision,recall,f1\n")
            for i, lab in enumerate(metrics.labels):
                fh.write(f"{lab},{float(metrics.precision[i])!r},"
                         f"{float(metrics.recall[i])!r},{float(metrics.f1[i])!r}\n")
            fh.write(f"macro,,,{float(metrics.macro_f1)!r}\n")
        with open(os.path.join(outdir, f"{safe}.confusion.csv"), "w",
                  encoding="utf-8") as fh:
            fh.write("true_label," + ",".join(str(l) for l in labels) + "\n")
            for i, lab in enumerate(labels):
                fh.write(f"{lab}," + ",".join(str(int(c)) for c in cm.counts[i]) + "\n")
        print(f"{cls}: C={chosen_C} macro_f1={metrics.macro_f1:.4f}")
    return EXIT_OK


def _cmd_nfis(args) -> int:
    config = _load_config(args)
    outdir = _require_outdir(config)
    cor = _load_corpus_from_config(config)
    vocab = vectorize.build_vocabulary(cor, ngram_max=config.ngram_max,
                                       min_df=config.min_df)
    presence = vectorize.binarize(
        vectorize.tfidf_transform(cor, vocab, normalize=False))
    for cls in _targets(config, cor):
        table = indicative.chi2_table(presence, np.array(cor.labels_for(cls)),
                                      vocab)
        dist = indicative.nfis_distribution(table, K=config.nfis_k)
        safe = _safe(cls)
        with open(os.path.join(outdir, f"{safe}.nfis.csv"), "w",
                  encoding="utf-8") as fh:
            fh.write("label,nfis\n")
            for lab, v in dist.values.items():
                fh.write(f"{lab}," + ("" if v is None else repr(float(v))) + "\n")
        with open(os.path.join(outdir, f"{safe}.nfis.svg"), "w",
                  encoding="utf-8") as fh:
            fh.write(svg.bar_chart_svg(dist.values,
                                       title=f"NFIS (K={dist.K}) by {cls}",
                                       y_label="NFIS"))
        print(f"{cls}: imbalance={dist.imbalance} values={dist.values}")
    return EXIT_OK


def _cmd_embed(args) -> int:
    config = _load_config(args)
    outdir = _require_outdir(config)
    cor = _load_corpus_from_config(config)
    model = embed.train_pvdbow(cor, dim=config.embed_dim,
                               window=config.embed_window,
                               min_count=config.embed_min_count,
                               negatives=config.embed_negatives,
                               epochs=config.embed_epochs,
                               seed=config.seed + 2)
    model.save(os.path.join(outdir, "model.npz"))
    embed.document_embeddings(model).save_csv(
        os.path.join(outdir, "doc_vectors.csv"))
    print(f"embedded {len(model.doc_ids)} documents at dim={model.dim}")
    return EXIT_OK


def _cmd_project(args) -> int:
    config = _load_config(args)
    outdir = _require_outdir(config)
    vectors = embed.DocEmbeddings.load_csv(args.vectors)
    labels: Optional[dict] = None
    cls = None
    try:
        cor = _load_corpus_from_config(config)
        cls = (_targets(config, cor))[0]
        labels = {doc.id: doc.labels[cls] for doc in cor.documents}
    except (AuditConfigError, corpus_mod.CorpusError, KeyError, OSError):
        labels = None
    n = vectors.vectors.shape[0]
    if n > config.tsne_sample_cap:
        rng = np.random.default_rng(np.random.SeedSequence((config.seed + 3, n)))
        idx = np.sort(rng.choice(n, size=config.tsne_sample_cap, replace=False))
    else:
        idx = np.arange(n)
    ids = [vectors.ids[i] for i in idx]
    point_labels = tuple(labels.get(i, "?") for i in ids) if labels else \
        tuple("all" for _ in ids)
    proj = project.tsne(vectors.vectors[idx], lr=config.tsne_lr,
                        iterations=config.tsne_iterations,
                        perplexity=config.tsne_perplexity,
                        seed=config.seed + 4, theta=config.tsne_theta,
                        exact_threshold=config.tsne_exact_threshold)
    with open(os.path.join(outdir, "tsne.csv"), "w", encoding="utf-8") as fh:
        fh.write("id,x,y,label\n")
        for i, doc_id in enumerate(ids):
            x, y = proj.coordinates[i]
            fh.write(f"{doc_id},{float(x)!r},{float(y)!r},{point_labels[i]}\n")
    title = f"2D projection by {cls}" if cls else "2D projection"
    with open(os.path.join(outdir, "tsne.svg"), "w", encoding="utf-8") as fh:
        fh.write(svg.scatter_svg(proj.coordinates, point_labels, title=title))
    print(f"projected {len(ids)} points, final_kl={proj.final_kl:.4f}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    if args.preset is not None:
        seed = args.seed if args.seed is not None else 0
        try:
            spec = preset_spec(args.preset, n_docs=args.n_docs, seed=seed)
        except ValueError as exc:
            raise AuditConfigError(str(exc)) from None
    else:
        config = _load_config(args)
        if "synthetic" not in config.input:
            raise AuditConfigError("synth needs --preset or a config with input.synthetic")
        spec = synth_spec_from_config(config.input["synthetic"], config.seed)
    out = args.out
    if not out:
        raise AuditConfigError("synth needs --out FILE for the generated corpus")
    cor, true_labels = generate_synthetic(spec)
    parent = os.path.dirname(out)
    if parent:
        os.makedirs(parent, exist_ok=True)
    save_jsonl(cor, out, true_labels=true_labels)
    print(f"wrote {len(cor)} documents with target class {SYNTH_CLASS!r} to {out}")
    return EXIT_OK


def _safe(name: str) -> str:
    from .report import _safe_name
    return _safe_name(name)


_COMMANDS = {
    "audit": _cmd_audit,
    "classify": _cmd_classify,
    "nfis": _cmd_nfis,
    "embed": _cmd_embed,
    "project": _cmd_project,
    "synth": _cmd_synth,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (AuditConfigError, corpus_mod.CorpusError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageFailure as exc:
        print(exc, file=sys.stderr)
        return EXIT_STAGE
    except json.JSONDecodeError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # standalone stages: any failure is a stage failure
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
