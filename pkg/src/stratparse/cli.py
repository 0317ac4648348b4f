"""Command-line entry points: corpus generation, binarization, statistics,
training, parsing, evaluation, and headedness reports.

Reports write delimiter-separated tables plus matplotlib figures into the
chosen output directory.  Exit codes: 0 success, 2 usage, 3 missing file,
4 configuration error, 5 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import figures
from .binarize import BinaryFactor, binarize
from .config import load_run_config
from .embeddings import load_embeddings
from .grammar import GRAMMARS, generate_corpus
from .model import CombinatorModel
from .recover import recover_tree, validate
from .scoring import corpus_score, headedness_report, score_counts
from .stats import (compression_stats, fit_node_counts, node_budget_report,
                    orientation_stats)
from .stratify import stratify_binary, stratify_multi
from .training import Trainer
from .trees import (ConfigError, TreeError, parse_brackets, preprocess_corpus,
                    read_treebank, render_brackets, write_treebank)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except FileNotFoundError as err:
        print(f"error: missing file: {err.filename or err}", file=sys.stderr)
        return 3
    except ConfigError as err:
        print(f"error: bad configuration: {err}", file=sys.stderr)
        return 4
    except (TreeError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 5


def build_parser():
    parser = argparse.ArgumentParser(prog="stratparse",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(required=True)

    p = sub.add_parser("generate", help="write a synthetic treebank")
    p.add_argument("--grammar", choices=sorted(GRAMMARS), default="toy")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-len", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("split", help="partition a treebank into train/dev/test")
    p.add_argument("--input", required=True, nargs="+",
                   help="treebank files; section splits read the section "
                        "from the first number in each filename")
    p.add_argument("--outdir", required=True)
    p.add_argument("--dev", type=int, help="random split: dev size")
    p.add_argument("--test", type=int, help="random split: test size")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-sections")
    p.add_argument("--dev-sections")
    p.add_argument("--test-sections")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("binarize", help="binarize and/or stratify a treebank")
    p.add_argument("--input", required=True)
    p.add_argument("--factor", default="right",
                   choices=[f.value for f in BinaryFactor])
    p.add_argument("--mode", choices=("binary", "multi"), default="binary")
    p.add_argument("--relay-labels", choices=("parent", "self"), default="parent")
    p.add_argument("--output", help="binarized bracketed trees")
    p.add_argument("--stratified", help="stratified samples as JSON lines")
    p.set_defaults(func=cmd_binarize)

    p = sub.add_parser("stats", help="orientation/compression/complexity report")
    p.add_argument("--input", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--factor", default="all",
                   choices=["all"] + [f.value for f in BinaryFactor])
    p.add_argument("--relay-labels", choices=("parent", "self"), default="parent")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a parser from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--outdir", default="run")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--max-seconds", type=float, default=0.0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="parse text or a treebank")
    p.add_argument("--model", help="checkpoint; optional with --oracle")
    p.add_argument("--input", required=True,
                   help="treebank or one sentence per line")
    p.add_argument("--output", required=True)
    p.add_argument("--oracle", action="store_true",
                   help="decode gold signals instead of model predictions")
    p.add_argument("--mode", choices=("binary", "multi"), default="binary",
                   help="oracle stratification mode")
    p.add_argument("--factor", default="right",
                   choices=[f.value for f in BinaryFactor])
    p.add_argument("--relay-labels", choices=("parent", "self"), default="parent")
    p.add_argument("--records", help="per-sentence signal records (JSON lines)")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="score predictions against gold trees")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--per-sentence", help="optional per-sentence TSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("heads", help="headedness table from a multi-mode model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--outdir", required=True)
    p.set_defaults(func=cmd_heads)
    return parser


def cmd_generate(args):
    grammar = GRAMMARS[args.grammar]()
    trees = generate_corpus(grammar, args.count, seed=args.seed,
                            max_len=args.max_len)
    write_treebank(trees, args.out)
    print(f"wrote {len(trees)} trees to {args.out}")


def _file_section(path):
    """Section id from the first number in a filename; 4-digit treebank
    file numbers use their leading two digits (wsj_2301 is section 23)."""
    import re
    match = re.search(r"(\d+)", os.path.basename(path))
    if not match:
        raise ConfigError(f"no section number in filename: {path}")
    number = match.group(1)
    return int(number[:2]) if len(number) == 4 else int(number)


def cmd_split(args):
    from .trees import RandomSplit, SectionSplit, split_corpus

    trees, sections = [], []
    for path in args.input:
        batch = read_treebank(path)
        trees.extend(batch)
        sections.extend([path] * len(batch))
    if args.train_sections:
        if not (args.dev_sections and args.test_sections):
            raise ConfigError("section splits need all three selectors")
        split = SectionSplit(args.train_sections, args.dev_sections,
                             args.test_sections)
        section_ids = [_file_section(p) for p in sections]
        train, dev, test = split_corpus(trees, split, sections=section_ids)
    elif args.dev is not None and args.test is not None:
        split = RandomSplit(dev=args.dev, test=args.test, seed=args.seed)
        train, dev, test = split_corpus(trees, split)
    else:
        raise ConfigError("give either --dev/--test or the section selectors")
    os.makedirs(args.outdir, exist_ok=True)
    membership = {}
    for name, subset in (("train", train), ("dev", dev), ("test", test)):
        write_treebank(subset, os.path.join(args.outdir, f"{name}.txt"))
        for tree in subset:
            membership[id(tree)] = name
    rows = [(i, membership.get(id(tree), "dropped"), sections[i])
            for i, tree in enumerate(trees)]
    _write_tsv(os.path.join(args.outdir, "manifest.tsv"),
               ("index", "split", "source"), rows)
    print(f"split {len(trees)} trees into {len(train)}/{len(dev)}/{len(test)}; "
          f"manifest in {args.outdir}")


def cmd_binarize(args):
    trees, dropped = preprocess_corpus(read_treebank(args.input))
    factor = BinaryFactor(args.factor)
    if args.mode == "binary":
        btrees = [binarize(t, factor) for t in trees]
        samples = [stratify_binary(t, args.relay_labels) for t in btrees]
        out_trees = btrees
    else:
        samples = [stratify_multi(t, args.relay_labels) for t in trees]
        out_trees = trees
    if args.output:
        write_treebank(out_trees, args.output)
    if args.stratified:
        with open(args.stratified, "w", encoding="utf-8") as handle:
            for sample in samples:
                handle.write(sample.to_json())
                handle.write("\n")
    print(f"processed {len(trees)} trees ({dropped} dropped)")


def cmd_stats(args):
    trees, _ = preprocess_corpus(read_treebank(args.input))
    os.makedirs(args.outdir, exist_ok=True)
    factors = list(BinaryFactor) if args.factor == "all" else [BinaryFactor(args.factor)]
    orientation_rows = []
    compression_rows = []
    complexity_rows = []
    counts_by_factor = {}

    def one_setting(name, samples, with_orientation):
        if with_orientation:
            left, right = orientation_stats(samples)
            orientation_rows.append((name, left, right))
            counts_by_factor[with_orientation] = (left, right)
        comp = compression_stats(samples)
        for row in comp.rows():
            compression_rows.append((name,) + row)
        points = [(len(s.words), s.node_count) for s in samples]
        a2, a1 = fit_node_counts(points)
        budget = node_budget_report(samples)
        complexity_rows.append((name, a2, a1, budget["stratified_nodes"],
                                budget["triangular_nodes"], budget["ratio"]))
        figures.compression_figure(comp, os.path.join(args.outdir, f"compression_{name}.png"))
        figures.complexity_figure(points, (a2, a1),
                                  os.path.join(args.outdir, f"complexity_{name}.png"))

    for factor in factors:
        samples = [stratify_binary(binarize(t, factor), args.relay_labels)
                   for t in trees]
        one_setting(factor.value, samples, factor)
    one_setting("multi", [stratify_multi(t, args.relay_labels) for t in trees], None)

    _write_tsv(os.path.join(args.outdir, "orientation.tsv"),
               ("factor", "left", "right"), orientation_rows)
    _write_tsv(os.path.join(args.outdir, "compression.tsv"),
               ("factor", "layer_length", "c_mean", "c_std", "count"),
               compression_rows)
    _write_tsv(os.path.join(args.outdir, "complexity.tsv"),
               ("factor", "a2", "a1", "stratified_nodes", "triangular_nodes",
                "ratio"), complexity_rows)
    if counts_by_factor:
        figures.orientation_figure(counts_by_factor,
                                   os.path.join(args.outdir, "orientation.png"))
    print(f"wrote statistics for {len(trees)} trees to {args.outdir}")


def cmd_train(args):
    config = load_run_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    train_trees = read_treebank(config.train_path)
    dev_trees = read_treebank(config.dev_path)
    embeddings = None
    if config.embedding_path:
        embeddings = load_embeddings(config.embedding_path,
                                     frozen=config.freeze_embeddings)
    os.makedirs(args.outdir, exist_ok=True)
    trainer = Trainer(config, train_trees, dev_trees, embeddings=embeddings)
    with open(os.path.join(args.outdir, "log.tsv"), "w", encoding="utf-8") as log:
        result = trainer.train(log=log, max_seconds=args.max_seconds)
    trainer.model.save(os.path.join(args.outdir, "model.ckpt"))
    with open(os.path.join(args.outdir, "config.json"), "w", encoding="utf-8") as out:
        json.dump(config.to_dict(), out, indent=2)
    figures.training_figure(result.history,
                            os.path.join(args.outdir, "curves.png"))
    print(f"best dev F1 {result.best_f1:.2f} at epoch {result.best_epoch}; "
          f"artifacts in {args.outdir}")


def _read_sentences(path):
    """Treebank input yields (words, tree); raw text yields (words, None)."""
    with open(path, encoding="utf-8") as handle:
        text = handle.read()
    if "(" in text:
        trees = parse_brackets(text)
        return [(t.words(), t) for t in trees]
    return [(line.split(), None) for line in text.splitlines() if line.strip()]


def cmd_parse(args):
    sentences = _read_sentences(args.input)
    start = time.time()
    if args.oracle:
        outcomes = _oracle_outcomes(args, sentences)
    else:
        if not args.model:
            raise ConfigError("--model is required without --oracle")
        model = CombinatorModel.load(args.model)
        words_list = [words for words, _ in sentences]
        if args.threads > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                outcomes = list(pool.map(model.parse, words_list))
        else:
            outcomes = [model.parse(words) for words in words_list]
    elapsed = time.time() - start

    by_validity = {}
    clamps = 0
    with open(args.output, "w", encoding="utf-8") as out:
        for i, outcome in enumerate(outcomes):
            report = validate(outcome)
            by_validity[report.validity] = by_validity.get(report.validity, 0) + 1
            clamps += report.clamp_count
            if not outcome.is_single_tree:
                out.write(f";; sentence {i}: {report.row()}\n")
            out.write(" ".join(render_brackets(t) for t in outcome.trees))
            out.write("\n")
    if args.records:
        with open(args.records, "w", encoding="utf-8") as rec:
            for outcome in outcomes:
                rec.write(json.dumps({
                    "words": outcome.words, "tags": outcome.tags,
                    "labels": outcome.labels, "signals": outcome.signals,
                    "mode": outcome.mode, "validity": outcome.validity,
                    "attention": outcome.attention}))
                rec.write("\n")
    rate = len(outcomes) / elapsed if elapsed > 0 else float("inf")
    summary = " ".join(f"{k}={v}" for k, v in sorted(by_validity.items()))
    print(f"parsed {len(outcomes)} sentences in {elapsed:.2f}s "
          f"({rate:.1f} sents/sec); {summary}; clamps={clamps}")


def _oracle_outcomes(args, sentences):
    outcomes = []
    for words, tree in sentences:
        if tree is None:
            raise ConfigError("--oracle needs a gold treebank as input")
        normalized, _ = preprocess_corpus([tree])
        if not normalized:
            raise TreeError(f"sentence {words!r} is empty after preprocessing")
        tree = normalized[0]
        if args.mode == "binary":
            sample = stratify_binary(binarize(tree, BinaryFactor(args.factor)),
                                     args.relay_labels)
            outcomes.append(recover_tree(sample.words, sample.tags, sample.labels,
                                         orientations=sample.orientations))
        else:
            sample = stratify_multi(tree, args.relay_labels)
            outcomes.append(recover_tree(sample.words, sample.tags, sample.labels,
                                         chunks=sample.chunks))
    return outcomes


def _read_predictions(path):
    groups = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if not line.strip() or line.startswith(";;"):
                continue
            groups.append(parse_brackets(line))
    return groups


def cmd_eval(args):
    golds = read_treebank(args.gold)
    preds = _read_predictions(args.pred)
    total = corpus_score(golds, preds)
    if args.per_sentence:
        rows = []
        for i, (gold, pred) in enumerate(zip(golds, preds)):
            counts = score_counts(gold, pred)
            rows.append((i, f"{counts.lp:.2f}", f"{counts.lr:.2f}",
                         f"{counts.f1:.2f}", f"{counts.tag_accuracy:.2f}"))
        _write_tsv(args.per_sentence, ("sentence", "lp", "lr", "f1", "tag_acc"),
                   rows)
    print(f"LP {total.lp:.2f}  LR {total.lr:.2f}  F1 {total.f1:.2f}  "
          f"tags {total.tag_accuracy:.2f}  "
          f"(match {total.match} / pred {total.pred} / gold {total.gold})")


def cmd_heads(args):
    model = CombinatorModel.load(args.model)
    if model.config.mode != "multi":
        raise ConfigError("headedness needs a multi-branching model")
    sentences = _read_sentences(args.input)
    outcomes = [model.parse(words) for words, _ in sentences]
    rows = headedness_report(outcomes)
    os.makedirs(args.outdir, exist_ok=True)
    _write_tsv(os.path.join(args.outdir, "heads.tsv"),
               ("parent", "head_child", "count"), rows)
    figures.heads_figure(rows, os.path.join(args.outdir, "heads.png"))
    print(f"wrote headedness table ({len(rows)} rows) to {args.outdir}")


def _write_tsv(path, columns, rows):
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\t".join(columns) + "\n")
        for row in rows:
            handle.write("\t".join(str(v) for v in row) + "\n")


if __name__ == "__main__":
    sys.exit(main())
