"""
main.py: command-line entry point for the dual-wing harmonium toolkit.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

import argparse
import sys
from typing import List, Optional

import config
from core import logger as log
from core.errors import HarmoniumError
from core.gibbs import GibbsConfig
from core.harmonium import TruncationSpec
from core.logger import set_level
from core.mean_field import GmfConfig, annotate
from tools.corpus_io import formats
from tools.corpus_io.model_io import load_model, save_model
from tools.corpus_io.synthetic import (
    generate_synthetic,
    load_synthetic_spec,
    train_test_ids,
    two_cluster_spec,
)
from tools.evaluation.annotation import annotation_ablation, annotation_eval
from tools.evaluation.classify import nearest_centroid_eval
from tools.evaluation.latent import lsi_fit, lsi_project, project
from tools.evaluation.ranking import retrieval_eval
from tools.evaluation.sweep import learning_curve, sweep_dimensions
from tools.evaluation.topics import format_topic_report, topic_report
from tools.trainer.normalize import normalize_features
from tools.trainer.oracle import oracle_suite
from tools.trainer.train import METHODS, TrainConfig, train

log = log.get_logger()

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# =====================================================
# Shared arguments
# =====================================================


def _corpus_args(p, labels_required=False):
    p.add_argument("--text", required=True, help="word-count file (id<TAB>word:count ...)")
    p.add_argument("--image", required=True, help="image vector file (id<TAB>v1,...,vK)")
    p.add_argument("--labels", required=labels_required, help="category file (id<TAB>label)")
    p.add_argument(
        "--no-normalize",
        action="store_true",
        help="skip rescaling images so their sum matches the word-count sum",
    )


def _split_arg(p, required=False):
    p.add_argument(
        "--split",
        required=required,
        help="split file (id<TAB>train|test, or index|query); default: every id in both roles",
    )


def _train_args(p):
    p.add_argument("--method", choices=METHODS, default="cd", help="gradient estimator")
    p.add_argument("--epochs", type=int, default=config.TRAIN_EPOCHS, help="training epochs")
    p.add_argument(
        "--learning-rate", type=float, default=config.TRAIN_LEARNING_RATE, help="step size"
    )
    p.add_argument(
        "--batch-size", type=int, default=config.TRAIN_BATCH_SIZE, help="mini-batch size"
    )
    p.add_argument("--momentum", type=float, default=config.TRAIN_MOMENTUM, help="in [0, 1)")
    p.add_argument(
        "--weight-decay",
        type=float,
        default=config.TRAIN_WEIGHT_DECAY,
        help="L2 penalty on W and U",
    )
    p.add_argument("--seed", type=int, default=config.TRAIN_SEED, help="random seed")
    p.add_argument("--cd-steps", type=int, default=config.GIBBS_STEPS, help="Gibbs sweeps (CD-k)")
    p.add_argument(
        "--x-max", type=int, default=config.DEFAULT_X_MAX, help="cap on sampled word counts"
    )
    p.add_argument(
        "--freeze-couplings", action="store_true", help="keep W and U at zero (decoupled fit)"
    )
    p.add_argument(
        "--grid-points",
        type=int,
        default=41,
        help="z-grid points per bin for --method exact (x capped by --x-max)",
    )


def _train_only_arg(p):
    p.add_argument(
        "--train-only",
        action="store_true",
        help="fit the unsupervised models on training ids only (default: every id)",
    )


def _train_config(args, K: int) -> TrainConfig:
    truncation = None
    if args.method == "exact":
        truncation = TruncationSpec.uniform(x_max=args.x_max, K=K, n=args.grid_points)
    return TrainConfig(
        method=args.method,
        learning_rate=args.learning_rate,
        epochs=args.epochs,
        batch_size=args.batch_size,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        seed=args.seed,
        gibbs=GibbsConfig(steps=args.cd_steps, x_max=args.x_max, rng_seed=args.seed),
        gmf=GmfConfig(),
        freeze_couplings=args.freeze_couplings,
        truncation=truncation,
    )


def _require_positive(flag: str, *values) -> None:
    bad = [v for v in values if v < 1]
    if bad:
        raise UsageError(f"{flag} must be at least 1, got {bad[0]}")


def _load(args):
    corpus = formats.load_corpus(args.text, args.image, getattr(args, "labels", None))
    if not args.no_normalize:
        corpus, _ = normalize_features(corpus)
    return corpus


def _split(args, corpus):
    if getattr(args, "split", None):
        split = formats.load_split(args.split)
        unknown = [i for i in split.train + split.test if i not in corpus.ids]
        if unknown:
            raise UsageError(f"--split names ids missing from the corpus: {unknown[:5]}")
        return split
    return formats.Split(train=list(corpus.ids), test=list(corpus.ids))


# =====================================================
# Subcommands
# =====================================================


def cmd_synth(args) -> int:
    if args.spec:
        spec = load_synthetic_spec(args.spec)
    else:
        spec = two_cluster_spec(
            N=args.n,
            M=args.m,
            K=args.k,
            rate=args.rate,
            image_level=args.image_level,
            noise=args.noise,
            seed=args.seed,
        )
    corpus = generate_synthetic(spec)
    formats.save_corpus(corpus, args.out_text, args.out_image, args.out_labels)
    if args.out_split:
        train_ids, test_ids = train_test_ids(corpus, args.test_fraction, args.seed)
        formats.save_split(formats.Split(train=train_ids, test=test_ids), args.out_split)
    print(f"wrote {len(corpus)} observations (M={corpus.M}, K={corpus.K})")
    return EXIT_OK


def cmd_train(args) -> int:
    corpus = _load(args)
    if args.split:
        corpus = corpus.subset(_split(args, corpus).train)
    params, report = train(corpus, corpus.dims(args.dims), _train_config(args, corpus.K))
    save_model(params, args.out_model)
    if args.report:
        formats.write_report(report, args.report)
    print(f"trained {len(report.records)} epochs; model written to {args.out_model}")
    return EXIT_OK


def cmd_project(args) -> int:
    params = load_model(args.model)
    latents = project(params, _load(args))
    formats.save_latents(latents, args.out)
    return EXIT_OK


def cmd_retrieve(args) -> int:
    params = load_model(args.model)
    corpus = _load(args)
    split = _split(args, corpus)
    latents = project(params, corpus)
    result = retrieval_eval(latents, corpus.label_map(), (split.query, split.index))
    if args.out_ap:
        formats.write_per_query_ap(args.out_ap, result.per_query)
    if args.out_pr:
        formats.write_plot_data(args.out_pr, result.pr_points())
    print(f"mean AP {result.mean_ap:.4f} over {len(result.per_query)} queries")
    if result.skipped:
        print(f"skipped {len(result.skipped)} queries")
    return EXIT_OK


def cmd_annotate(args) -> int:
    _require_positive("--top-n", args.top_n)
    params = load_model(args.model)
    ids, Z, _ = formats.load_image_vectors(args.images)
    vocab = formats.load_vocab(args.vocab) if args.vocab else None
    if vocab is not None and len(vocab) != params.dims.M:
        raise UsageError(f"--vocab has {len(vocab)} words, model has M={params.dims.M}")
    top_n = min(args.top_n, params.dims.M)
    rankings = []
    for n, doc_id in enumerate(ids):
        ranked = annotate(params, Z[n], top_n, observation=n)
        words = [(vocab[i] if vocab else str(i), score) for i, score in ranked]
        rankings.append((doc_id, words))
    if args.out:
        formats.save_ranked_words(args.out, rankings)
    else:
        for doc_id, words in rankings:
            print(f"{doc_id}\t{' '.join(w for w, _ in words)}")
    return EXIT_OK


def cmd_eval_annotation(args) -> int:
    _require_positive("--top-n", *args.top_n)
    params = load_model(args.model)
    corpus = _load(args)
    if args.split:
        corpus = corpus.subset(_split(args, corpus).test)
    trained = annotation_eval(params, corpus, args.top_n)
    rows = [{"model": "trained", "top_n": n, "ap": ap} for n, ap in trained["ap"].items()]
    if args.ablation:
        ablated = annotation_eval(annotation_ablation(params), corpus, args.top_n)
        rows += [{"model": "U=0", "top_n": n, "ap": ap} for n, ap in ablated["ap"].items()]
    for row in rows:
        print(f"{row['model']}\ttop {row['top_n']}\tAP {row['ap']:.4f}")
    if args.out:
        formats.write_table(args.out, rows)
    return EXIT_OK


def cmd_eval_classify(args) -> int:
    corpus = _load(args)
    split = _split(args, corpus)
    if args.model:
        latents = project(load_model(args.model), corpus)
    else:
        latents = lsi_project(corpus, args.lsi, lsi_fit(corpus.subset(split.train), args.lsi))
    result = nearest_centroid_eval(latents, corpus.label_map(), (split.train, split.test))
    print(f"accuracy {result.accuracy:.4f}\terror {result.error:.4f}")
    print("\t" + "\t".join(result.labels))
    for label, row in zip(result.labels, result.confusion):
        print(label + "\t" + "\t".join(str(int(c)) for c in row))
    return EXIT_OK


def cmd_topics(args) -> int:
    params = load_model(args.model)
    corpus = _load(args)
    if corpus.M != params.dims.M or corpus.K != params.dims.K:
        raise UsageError("corpus dimensions do not match the model")
    text = format_topic_report(topic_report(params, corpus, args.top_words, args.top_docs))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        print(text, end="")
    return EXIT_OK


def cmd_lsi(args) -> int:
    corpus = _load(args)
    basis = lsi_fit(corpus.subset(_split(args, corpus).train), args.dims)
    formats.save_latents(lsi_project(corpus, args.dims, basis), args.out)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    summary = oracle_suite(draws=args.draws, seed=args.seed, tol=args.tol)
    for component, error in summary["worst"].items():
        status = "PASS" if error < args.tol else "FAIL"
        print(f"{status}\t{component}\tmax relative error {error:.3g}")
    return EXIT_OK if summary["passed"] else EXIT_RUNTIME


def cmd_sweep(args) -> int:
    _require_positive("--dims", *args.dims)
    _require_positive("--top-n", args.top_n)
    corpus = _load(args)
    split = _split(args, corpus)
    rows = sweep_dimensions(
        corpus,
        (split.train, split.test),
        args.dims,
        _train_config(args, corpus.K),
        args.top_n,
        fit_on_all=not args.train_only,
    )
    formats.write_table(args.out, rows)
    for row in rows:
        print(f"{row['method']}\tJ={row['J']}\terror {row['error']:.4f}\tAP {row['mean_ap']:.4f}")
    return EXIT_OK


def cmd_learning_curve(args) -> int:
    _require_positive("--every", args.every)
    corpus = _load(args)
    split = _split(args, corpus)
    rows = learning_curve(
        corpus,
        args.dims,
        (split.train, split.test),
        _train_config(args, corpus.K),
        args.every,
        fit_on_all=not args.train_only,
    )
    formats.write_table(args.out, rows)
    return EXIT_OK


# =====================================================
# Parser
# =====================================================


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dwh", description="Dual-wing harmonium toolkit")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="override DWH_LOG_LEVEL for this run",
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("synth", help="generate a synthetic clustered corpus")
    p.add_argument("--spec", help="JSON synthetic spec; otherwise a two-cluster corpus")
    p.add_argument("--n", type=int, default=400, help="observations")
    p.add_argument("--m", type=int, default=50, help="vocabulary size")
    p.add_argument("--k", type=int, default=10, help="image bins")
    p.add_argument("--rate", type=float, default=1.0, help="Poisson rate on cluster words")
    p.add_argument("--image-level", type=float, default=1.0, help="mean of cluster bins")
    p.add_argument("--noise", type=float, default=0.1, help="image noise standard deviation")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--out-text", required=True, help="word-count file to write")
    p.add_argument("--out-image", required=True, help="image vector file to write")
    p.add_argument("--out-labels", required=True, help="label file to write")
    p.add_argument("--out-split", help="also write a train/test split file")
    p.add_argument("--test-fraction", type=float, default=0.25, help="share of test ids")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a harmonium")
    _corpus_args(p)
    _split_arg(p)
    _train_args(p)
    p.add_argument("--dims", type=int, required=True, help="latent dimension J")
    p.add_argument("--out-model", required=True, help="model file to write")
    p.add_argument("--report", help="per-epoch training report to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("project", help="write latent projections")
    p.add_argument("--model", required=True, help="model file")
    _corpus_args(p)
    p.add_argument("--out", required=True, help="latent file to write (id<TAB>g1,...,gJ)")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("retrieve", help="same-label retrieval with cosine similarity")
    p.add_argument("--model", required=True, help="model file")
    _corpus_args(p, labels_required=True)
    _split_arg(p)
    p.add_argument("--out-ap", help="per-query AP file to write")
    p.add_argument("--out-pr", help="11-point precision-recall plot data to write")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("annotate", help="rank words for images")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--images", required=True, help="image vector file")
    p.add_argument("--top-n", type=int, default=config.TOPIC_TOP_WORDS, help="words per image")
    p.add_argument("--vocab", help="word-count file whose #vocab header names the words")
    p.add_argument("--out", help="ranked word file to write; default prints")
    p.set_defaults(func=cmd_annotate)

    p = sub.add_parser("eval-annotation", help="average precision of image annotation")
    p.add_argument("--model", required=True, help="model file")
    _corpus_args(p)
    _split_arg(p)
    p.add_argument(
        "--top-n",
        type=int,
        nargs="+",
        default=list(config.ANNOTATION_TOP_N),
        help="ranking depths to score",
    )
    p.add_argument("--ablation", action="store_true", help="also score the U=0 model")
    p.add_argument("--out", help="table to write")
    p.set_defaults(func=cmd_eval_annotation)

    p = sub.add_parser("eval-classify", help="nearest-centroid classification of latents")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", help="model file")
    group.add_argument("--lsi", type=int, help="use an LSI projection of this dimension")
    _corpus_args(p, labels_required=True)
    _split_arg(p, required=True)
    p.set_defaults(func=cmd_eval_classify)

    p = sub.add_parser("topics", help="top words and documents per latent aspect")
    p.add_argument("--model", required=True, help="model file")
    _corpus_args(p)
    p.add_argument("--top-words", type=int, default=config.TOPIC_TOP_WORDS, help="words")
    p.add_argument("--top-docs", type=int, default=config.TOPIC_TOP_DOCS, help="documents")
    p.add_argument("--out", help="report file; default prints")
    p.set_defaults(func=cmd_topics)

    p = sub.add_parser("lsi", help="LSI baseline projection")
    _corpus_args(p)
    _split_arg(p)
    p.add_argument("--dims", type=int, required=True, help="latent dimension J")
    p.add_argument("--out", required=True, help="latent file to write")
    p.set_defaults(func=cmd_lsi)

    p = sub.add_parser("oracle-check", help="finite-difference check of the learning rules")
    p.add_argument("--draws", type=int, default=5, help="random tiny models")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--tol", type=float, default=1e-5, help="relative error bound")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("sweep", help="latent-dimension sweep for DWH and LSI")
    _corpus_args(p, labels_required=True)
    _split_arg(p, required=True)
    _train_args(p)
    p.add_argument(
        "--dims",
        type=int,
        nargs="+",
        default=list(config.LATENT_DIM_SWEEP),
        help="latent dimensions",
    )
    _train_only_arg(p)
    p.add_argument("--top-n", type=int, default=10, help="annotation depth")
    p.add_argument("--out", required=True, help="table to write")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("learning-curve", help="retrieval AP against training epochs")
    _corpus_args(p, labels_required=True)
    _split_arg(p, required=True)
    _train_args(p)
    p.add_argument("--dims", type=int, required=True, help="latent dimension J")
    _train_only_arg(p)
    p.add_argument("--every", type=int, default=10, help="epochs between evaluations")
    p.add_argument("--out", required=True, help="table to write")
    p.set_defaults(func=cmd_learning_curve)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.log_level:
            set_level(args.log_level)
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    except (HarmoniumError, OSError, ValueError, KeyError) as e:
        log.error(f"[main] {type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
