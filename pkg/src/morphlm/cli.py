"""Command-line entry points for the whole toolkit.

Subcommands cover corpus generation, tokenizer training, pre-training,
fine-tuning protocols, evaluation/reporting, and the serving platform.
Report-producing commands write figures (PNG) next to the CSV output.
"""

import argparse
import csv
import json
import os
import sys

from .model.config import ModelConfig
from .finetune.data import make_examples, parse_tsv, read_tsv_dataset
from .finetune.metrics import evaluate_labels
from .finetune.protocol import (
    DEFAULT_GRID,
    ensemble_protocol,
    format_stability,
    grid_search,
    stability_report,
)
from .finetune.trainer import FinetuneHyper, finetune_run
from .pretrain.corpus import (
    SyntheticLanguage,
    analyze_corpus,
    build_vocabularies,
    to_morpho_words,
)
from .pretrain.loop import PretrainHyper, pretrain_run
from .report.plots import confusion_heatmap_png, loss_curves_png
from .report.tables import eval_report_csv, grid_table, variant_comparison, write_csv
from .tokenizer.bpe import BpeModel, train_bpe
from .tokenizer.emoji import load_default_emoji_table
from .tokenizer.grammar import Grammar, ToyAnalyzer
from .tokenizer.segment import segment_text, words_to_jsonl
from .tokenizer.vocab import VocabularySet


def _read_lines(path: str):
    with open(path, "r", encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f if line.strip()]


def _load_tokenizer(args):
    grammar = Grammar.load(args.grammar)
    analyzer = ToyAnalyzer(grammar)
    bpe = BpeModel.load(args.bpe)
    vocabs = VocabularySet.load(args.vocabs)
    return analyzer, bpe, vocabs


def cmd_make_corpus(args) -> int:
    os.makedirs(args.out_dir, exist_ok=True)
    lang = SyntheticLanguage(args.seed)
    lang.grammar.save(os.path.join(args.out_dir, "grammar.txt"))
    raw = lang.sentences(
        args.sentences,
        seed=args.seed + 1,
        min_words=args.min_words,
        max_words=args.max_words,
        number_rate=args.number_rate,
        chained=args.chained,
    )
    with open(os.path.join(args.out_dir, "corpus.txt"), "w", encoding="utf-8") as f:
        f.write("\n".join(raw) + "\n")
    if args.labeled:
        pairs = lang.labeled_sentences(args.labeled, seed=args.seed + 2)
        with open(os.path.join(args.out_dir, "labeled.tsv"), "w", encoding="utf-8") as f:
            f.writelines(f"{text}\t{label}\n" for text, label in pairs)
    print(f"wrote grammar + {args.sentences} sentences to {args.out_dir}")
    return 0


def cmd_train_bpe(args) -> int:
    model = train_bpe(_read_lines(args.input), args.merges)
    model.save(args.out)
    print(f"learned {len(model.merges)} merges -> {args.out}")
    return 0


def cmd_build_vocabs(args) -> int:
    grammar = Grammar.load(args.grammar)
    analyzer = ToyAnalyzer(grammar)
    bpe = BpeModel.load(args.bpe)
    corpus = analyze_corpus(_read_lines(args.corpus), analyzer, bpe)
    vocabs = build_vocabularies(corpus)
    vocabs.save(args.out)
    print(f"vocab sizes {vocabs.sizes()} -> {args.out}")
    return 0


def cmd_tokenize(args) -> int:
    analyzer, bpe, vocabs = _load_tokenizer(args)
    table = load_default_emoji_table() if args.emoji else None
    lines = [args.text] if args.text else _read_lines(args.input)
    sentences = [
        segment_text(line, analyzer, vocabs, bpe, verbalize_emoji=args.emoji, emoji_table=table)
        for line in lines
    ]
    if args.out:
        words_to_jsonl(sentences, args.out)
        print(f"wrote {len(sentences)} sentences -> {args.out}")
    else:
        for sent in sentences:
            print(json.dumps([w.to_json() for w in sent]))
    return 0


def cmd_pretrain(args) -> int:
    analyzer, bpe, vocabs = _load_tokenizer(args)
    corpus = analyze_corpus(_read_lines(args.corpus), analyzer, bpe)
    sentences = to_morpho_words(corpus, vocabs)
    sizes = vocabs.sizes()
    preset = ModelConfig.tiny if args.tiny else ModelConfig.paper_preset
    config = preset(
        n_stems=sizes["stems"],
        n_affixes=sizes["affixes"],
        n_pos_tags=sizes["pos_tags"],
        n_affix_sets=sizes["affix_sets"],
        variant=args.variant,
    )
    hyper = PretrainHyper(
        steps=args.steps,
        seed=args.seed,
        batch_sentences=args.batch_sentences,
        peak_lr=args.peak_lr,
    )
    result = pretrain_run(sentences, config, hyper, args.out)
    png = loss_curves_png(result.curves_path, os.path.join(args.out, "loss_curves.png"))
    print(f"final losses: {result.final_losses}")
    if result.diverged_at is not None:
        print(f"warning: diverged at step {result.diverged_at}, kept last good checkpoint")
    print(f"checkpoint: {result.checkpoint_path}")
    print(f"curves: {result.curves_path}\nfigure: {png}")
    return 0


def _load_bundle(args):
    from .platform.bundle import Bundle

    return Bundle(args.bundle)


def _bundle_examples(args, bundle):
    splits = read_tsv_dataset(args.data, seed=args.split_seed)
    train = make_examples(splits.train, splits.labels, bundle.tokenize)
    dev = make_examples(splits.dev, splits.labels, bundle.tokenize)
    return train, dev, splits.labels


def _hyper_from_args(args) -> FinetuneHyper:
    return FinetuneHyper(
        peak_lr=args.peak_lr,
        batch_size=args.batch_size,
        epochs=args.epochs,
        dropout=args.dropout,
        weight_decay=args.weight_decay,
        warmup_fraction=args.warmup_fraction,
        seed=args.seed,
    )


def cmd_finetune(args) -> int:
    bundle = _load_bundle(args)
    train, dev, labels = _bundle_examples(args, bundle)
    result = finetune_run(
        train,
        dev,
        bundle.checkpoint_path,
        bundle.config_path,
        _hyper_from_args(args),
        n_classes=len(labels),
        label_names=labels,
        out_dir=args.out,
    )
    eval_report_csv(
        result.dev_report,
        os.path.join(args.out, "dev_metrics.csv"),
        confusion_path=os.path.join(args.out, "confusion.csv"),
    )
    confusion_heatmap_png(
        result.dev_report.confusion, os.path.join(args.out, "confusion.png"), labels
    )
    print(result.dev_report.render())
    if result.warning:
        print(f"warning: {result.warning}")
    print(f"best epoch: {result.best_epoch}  checkpoint: {result.checkpoint_path}")
    return 0


def cmd_gridsearch(args) -> int:
    bundle = _load_bundle(args)
    train, dev, labels = _bundle_examples(args, bundle)
    grid = DEFAULT_GRID
    if args.grid:
        with open(args.grid, "r", encoding="utf-8") as f:
            grid = json.load(f)
    points = grid_search(
        train,
        dev,
        bundle.checkpoint_path,
        bundle.config_path,
        n_classes=len(labels),
        grid=grid,
        base=_hyper_from_args(args),
    )
    os.makedirs(args.out, exist_ok=True)
    print(grid_table(points, os.path.join(args.out, "grid.csv")))
    return 0


def cmd_stability(args) -> int:
    bundle = _load_bundle(args)
    train, dev, labels = _bundle_examples(args, bundle)
    stats, scores = stability_report(
        train,
        dev,
        bundle.checkpoint_path,
        bundle.config_path,
        _hyper_from_args(args),
        runs=args.runs,
        first_seed=args.seed,
    )
    os.makedirs(args.out, exist_ok=True)
    write_csv(
        os.path.join(args.out, "stability.csv"),
        ["seed", "dev_f1"],
        [[args.seed + i, s] for i, s in enumerate(scores)],
    )
    print(format_stability(stats))
    return 0


def cmd_ensemble(args) -> int:
    bundle = _load_bundle(args)
    train, dev, labels = _bundle_examples(args, bundle)
    selection = ensemble_protocol(
        train,
        dev,
        bundle.checkpoint_path,
        bundle.config_path,
        _hyper_from_args(args),
        n_candidates=args.candidates,
        k=args.k,
        first_seed=args.seed,
        out_dir=args.out,
    )
    print(f"candidate dev F1: {[round(s, 4) for s in selection.dev_f1s]}")
    print(f"ranking: {selection.ranking}  ensemble size: {len(selection.members)}")
    print(f"artifacts in {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    gold_text = _read_lines(args.gold)
    pred_text = _read_lines(args.pred)
    names = sorted(set(gold_text) | set(pred_text))
    index = {n: i for i, n in enumerate(names)}
    report = evaluate_labels(
        [index[g] for g in gold_text],
        [index[p] for p in pred_text],
        n_classes=len(names),
        label_names=names,
    )
    print(report.render())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        eval_report_csv(
            report,
            os.path.join(args.out, "metrics.csv"),
            confusion_path=os.path.join(args.out, "confusion.csv"),
        )
        confusion_heatmap_png(report.confusion, os.path.join(args.out, "confusion.png"), names)
    return 0


def cmd_report(args) -> int:
    out_dir = args.out or args.run
    os.makedirs(out_dir, exist_ok=True)
    wrote = []
    curves = os.path.join(args.run, "curves.csv")
    if os.path.exists(curves):
        wrote.append(loss_curves_png(curves, os.path.join(out_dir, "loss_curves.png")))
    confusion = os.path.join(args.run, "confusion.csv")
    if os.path.exists(confusion):
        with open(confusion, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.reader(f))
        names = rows[0][1:]
        matrix = [[float(v) for v in row[1:]] for row in rows[1:]]
        wrote.append(
            confusion_heatmap_png(matrix, os.path.join(out_dir, "confusion.png"), names)
        )
    if not wrote:
        print(f"nothing to render in {args.run}", file=sys.stderr)
        return 1
    for path in wrote:
        print(path)
    return 0


def cmd_compare_variants(args) -> int:
    from .report.parity import run_parity

    outcome = run_parity(
        args.out,
        seed=args.seed,
        pretrain_steps=args.steps,
        finetune_runs=args.runs,
        finetune_epochs=args.epochs,
    )
    print(outcome["table"])
    print(f"report: {outcome['csv_path']}")
    return 0


def cmd_init_platform(args) -> int:
    from .platform.bundle import write_bundle

    os.makedirs(args.root, exist_ok=True)
    work = os.path.join(args.root, "bundle_src")
    os.makedirs(work, exist_ok=True)
    lang = SyntheticLanguage(args.seed)
    raw = lang.sentences(args.sentences, seed=args.seed + 1, chained=True, number_rate=0.0)
    bpe = train_bpe(raw, args.merges)
    corpus = analyze_corpus(raw, lang.analyzer, bpe)
    vocabs = build_vocabularies(corpus)
    sentences = to_morpho_words(corpus, vocabs)
    sizes = vocabs.sizes()
    config = ModelConfig.tiny(
        n_stems=sizes["stems"],
        n_affixes=sizes["affixes"],
        n_pos_tags=sizes["pos_tags"],
        n_affix_sets=sizes["affix_sets"],
    )
    result = pretrain_run(
        sentences,
        config,
        PretrainHyper(steps=args.steps, seed=args.seed, batch_sentences=8),
        os.path.join(work, "pretrain"),
    )
    grammar_path = os.path.join(work, "grammar.txt")
    bpe_path = os.path.join(work, "bpe.json")
    vocabs_path = os.path.join(work, "vocabs.json")
    lang.grammar.save(grammar_path)
    bpe.save(bpe_path)
    vocabs.save(vocabs_path)
    write_bundle(
        os.path.join(args.root, "bundle"),
        grammar_path,
        bpe_path,
        vocabs_path,
        result.checkpoint_path,
        result.config_path,
        verbalize_emoji=True,
    )
    demo = os.path.join(args.root, "demo.tsv")
    with open(demo, "w", encoding="utf-8") as f:
        f.writelines(
            f"{text}\t{label}\n"
            for text, label in lang.labeled_sentences(args.labeled, seed=args.seed + 2)
        )
    print(f"platform root ready at {args.root} (demo dataset: {demo})")
    return 0


def cmd_serve(args) -> int:
    from .platform.service import serve

    root = args.root or os.environ.get("MORPHLM_ROOT")
    if not root:
        print("serve needs --root or MORPHLM_ROOT", file=sys.stderr)
        return 2
    port = args.port if args.port is not None else int(os.environ.get("MORPHLM_PORT", "8000"))
    ui_dir = args.ui or os.environ.get("MORPHLM_UI_DIR")
    serve(root, port=port, host=args.host, ui_dir=ui_dir)
    return 0


def _add_tokenizer_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grammar", required=True, help="grammar file")
    p.add_argument("--bpe", required=True, help="trained BPE model (json)")
    p.add_argument("--vocabs", required=True, help="vocabulary tables (json)")


def _add_hyper_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--peak-lr", type=float, default=2e-5)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--weight-decay", type=float, default=0.05)
    p.add_argument("--warmup-fraction", type=float, default=0.06)
    p.add_argument("--seed", type=int, default=0)


def _add_bundle_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="labeled TSV file")
    p.add_argument("--bundle", required=True, help="platform bundle directory")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--split-seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="morphlm",
        description="morphology-aware two-tier language model toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-corpus", help="generate a synthetic corpus + grammar")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sentences", type=int, default=64)
    p.add_argument("--labeled", type=int, default=0, help="also write N labeled rows")
    p.add_argument("--min-words", type=int, default=3)
    p.add_argument("--max-words", type=int, default=9)
    p.add_argument("--number-rate", type=float, default=0.06)
    p.add_argument("--chained", action="store_true", help="stem-cycle sentences")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_make_corpus)

    p = sub.add_parser("train-bpe", help="learn BPE merges from text")
    p.add_argument("--input", required=True)
    p.add_argument("--merges", type=int, default=200)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_bpe)

    p = sub.add_parser("build-vocabs", help="build vocabulary tables from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--grammar", required=True)
    p.add_argument("--bpe", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_vocabs)

    p = sub.add_parser("tokenize", help="segment text into morphology records")
    _add_tokenizer_args(p)
    p.add_argument("--text", help="inline text (otherwise --input)")
    p.add_argument("--input", help="file with one sentence per line")
    p.add_argument("--emoji", action="store_true", help="verbalize emoji first")
    p.add_argument("--out", help="write JSON-lines here instead of stdout")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("pretrain", help="masked-morphology pre-training")
    _add_tokenizer_args(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--variant", choices=("bert", "gpt"), default="bert")
    p.add_argument("--steps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--batch-sentences", type=int, default=8)
    p.add_argument("--peak-lr", type=float, default=1e-3)
    p.add_argument("--tiny", action="store_true", help="desk-scale dimensions")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="fine-tune a classifier")
    _add_bundle_data_args(p)
    _add_hyper_args(p)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("gridsearch", help="hyperparameter grid search")
    _add_bundle_data_args(p)
    _add_hyper_args(p)
    p.add_argument("--grid", help="json file with batch_size/peak_lr/epochs lists")
    p.set_defaults(func=cmd_gridsearch)

    p = sub.add_parser("stability", help="repeat fine-tuning over seeds")
    _add_bundle_data_args(p)
    _add_hyper_args(p)
    p.add_argument("--runs", type=int, default=10)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("ensemble", help="train candidates, keep top-k voters")
    _add_bundle_data_args(p)
    _add_hyper_args(p)
    p.add_argument("--candidates", type=int, default=10)
    p.add_argument("--k", type=int, default=3)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("evaluate", help="score prediction files")
    p.add_argument("--gold", required=True, help="file with one gold label per line")
    p.add_argument("--pred", required=True, help="file with one predicted label per line")
    p.add_argument("--out", help="directory for CSV + confusion figure")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="render figures for a run directory")
    p.add_argument("--run", required=True)
    p.add_argument("--out", help="defaults to the run directory")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare-variants", help="bidirectional vs causal study")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=120)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--epochs", type=int, default=2)
    p.set_defaults(func=cmd_compare_variants)

    p = sub.add_parser("init-platform", help="bootstrap a demo platform root")
    p.add_argument("--root", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sentences", type=int, default=64)
    p.add_argument("--labeled", type=int, default=60)
    p.add_argument("--merges", type=int, default=100)
    p.add_argument("--steps", type=int, default=120)
    p.set_defaults(func=cmd_init_platform)

    p = sub.add_parser("serve", help="run the HTTP platform service")
    p.add_argument("--root", help="platform root (or MORPHLM_ROOT)")
    p.add_argument("--port", type=int, help="port (or MORPHLM_PORT, default 8000)")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--ui", help="static UI directory (or MORPHLM_UI_DIR)")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
