"""Command-line interface wiring the toolkit into reproducible workflows.

Subcommands: split, train, finetune, tag, parse, eval, derive-annotations,
synth. Flags may also come from a config file of `key = value` lines
(`--config`); command-line flags win. Every command echoes its resolved
configuration to `run-config.txt` next to its primary output, writes outputs
atomically, and is byte-reproducible for fixed inputs and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import synth
from .corpus import (
    AnnotatedLog,
    SplitSpec,
    derive_binary_annotations,
    read_annotations,
    split_dataset,
    tokenize,
    write_annotations,
)
from .embed import build_vocabs, load_word_vectors
from .errors import AlignmentError, EmptyLog, LogvarError
from .evaluate import evaluate, to_binary_annotations
from .parse import parse_corpus, result_record
from .tagger import Hyperparams, init_model, tag_log
from .taxonomy import BINARY, CATEGORY_ABBREVS, MULTICLASS, VariableCategory
from .train import TrainConfig, finetune, load_model, save_model, train

DEFAULT_SEED = 42


class UsageError(Exception):
    pass


def _read_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def _echo_run_config(out_path: Path, args: argparse.Namespace) -> None:
    lines = [f"{k} = {v}" for k, v in sorted(vars(args).items()) if k != "func"]
    _atomic_write(out_path.parent / "run-config.txt", "\n".join(lines) + "\n")


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError("--ratios must be three comma-separated fractions")
    try:
        a, b, c = (float(p) for p in parts)
    except ValueError as exc:
        raise UsageError(f"bad ratio: {exc}") from exc
    return a, b, c


def _parse_preserve(text: str) -> set[VariableCategory]:
    if not text.strip():
        return set()
    out = set()
    for abbrev in text.split(","):
        abbrev = abbrev.strip()
        if abbrev not in CATEGORY_ABBREVS:
            raise UsageError(
                f"unknown category {abbrev!r} in --preserve; "
                f"valid: {', '.join(CATEGORY_ABBREVS)}"
            )
        out.add(VariableCategory.from_abbrev(abbrev))
    return out


def _train_config(args: argparse.Namespace, mode: str) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        gradient_clip_norm=args.clip_norm,
        seed=args.seed,
        mode=mode,
        freeze_word_embeddings=args.freeze_word_embeddings,
        selection_metric=args.selection_metric,
    )


def _hyperparams(args: argparse.Namespace) -> Hyperparams:
    return Hyperparams(
        word_dim=args.word_dim,
        char_emb_dim=args.char_emb_dim,
        char_filters=args.char_filters,
        char_kernel=args.char_kernel,
        lstm_hidden=args.lstm_hidden,
        dropout=args.dropout,
        max_word_len=args.max_word_len,
        use_char_channel=not args.no_char_channel,
    )


def cmd_split(args: argparse.Namespace) -> int:
    ratios = _parse_ratios(args.ratios)
    try:
        spec = SplitSpec(*ratios, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    logs = read_annotations(args.input)
    train_set, val_set, test_set = split_dataset(logs, spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_annotations(train_set, out / "train.tsv")
    write_annotations(val_set, out / "val.tsv")
    write_annotations(test_set, out / "test.tsv")
    _echo_run_config(out / "train.tsv", args)
    print(f"split {len(logs)} logs -> {len(train_set)}/{len(val_set)}/{len(test_set)}")
    return 0


def cmd_train(args: argparse.Namespace) -> int:
    mode = args.mode
    train_set = read_annotations(args.train)
    val_set = read_annotations(args.val)
    wv, cv = build_vocabs(train_set, min_freq=args.min_freq)
    hp = _hyperparams(args)
    pretrained = None
    if args.vectors:
        pretrained, coverage = load_word_vectors(args.vectors, wv, hp.word_dim, seed=args.seed)
        print(f"pretrained vector coverage: {coverage:.3f}", file=sys.stderr)
    model = init_model(hp, wv, cv, pretrained=pretrained, seed=args.seed, mode=mode)
    cfg = _train_config(args, mode)
    best, history = train(model, train_set, val_set, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(best, out)
    _echo_run_config(out, args)
    for h in history:
        print(f"epoch {h.epoch:3d}  loss {h.train_loss:.4f}  val {h.val_metric:.4f}")
    print(f"saved best checkpoint to {out}")
    return 0


def cmd_finetune(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    train_set = read_annotations(args.train)
    val_set = read_annotations(args.val)
    if not train_set:
        raise UsageError("fine-tuning train file contains no logs")
    cfg = _train_config(args, model.mode)
    best, history = finetune(model, train_set, val_set, cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(best, out)
    _echo_run_config(out, args)
    for h in history:
        print(f"epoch {h.epoch:3d}  loss {h.train_loss:.4f}  val {h.val_metric:.4f}")
    return 0


def cmd_tag(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    blocks: list[str] = []
    for i, line in enumerate(lines, start=1):
        try:
            annotated = tag_log(model, line)
        except EmptyLog:
            print(f"line {i}: empty log, skipped", file=sys.stderr)
            continue
        blocks.append(
            "\n".join(f"{tok}\t{tag}" for tok, tag in zip(annotated.tokens, annotated.tags))
        )
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(out, "\n\n".join(blocks) + "\n")
    _echo_run_config(out, args)
    return 0


def cmd_parse(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    if model.mode != MULTICLASS:
        raise UsageError("parsing requires a multiclass model")
    preserve = _parse_preserve(args.preserve)
    raw = Path(args.input).read_text(encoding="utf-8").splitlines()
    results, store = parse_corpus(model, raw, preserve, wildcard=args.wildcard)
    records = []
    for i, result in enumerate(results, start=1):
        if result is None:
            print(f"line {i}: empty log, skipped", file=sys.stderr)
            continue
        records.append(result_record(i, result))
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(out, "\n".join(records) + "\n")
    if args.templates:
        _atomic_write(
            Path(args.templates),
            "\n".join(json.dumps(e, ensure_ascii=False) for e in store.summary()) + "\n",
        )
    _echo_run_config(out, args)
    print(f"parsed {len(records)} logs into {len(store.entries)} templates")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    golds = read_annotations(args.gold)
    preds = read_annotations(args.pred)
    if args.collapse_binary:
        golds = [to_binary_annotations(l) for l in golds]
        preds = [to_binary_annotations(l) for l in preds]
    report = evaluate(preds, golds, token_level=args.token_level)
    out = Path(args.report)
    out.parent.mkdir(parents=True, exist_ok=True)
    _atomic_write(out, report.to_json() + "\n")
    print(report.to_text())
    _echo_run_config(out, args)
    return 0


def cmd_derive_annotations(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    derived: list[AnnotatedLog] = []
    errors: list[str] = []
    with open(args.structured, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or args.content_col not in reader.fieldnames \
                or args.template_col not in reader.fieldnames:
            raise UsageError(
                f"columns {args.content_col!r}/{args.template_col!r} not in {args.structured}"
            )
        for i, row in enumerate(reader, start=2):  # header is line 1
            try:
                derived.append(
                    derive_binary_annotations(row[args.content_col], row[args.template_col])
                )
            except (AlignmentError, EmptyLog) as exc:
                errors.append(f"line {i}: {exc}")
    write_annotations(derived, out)
    if errors:
        _atomic_write(out.with_suffix(out.suffix + ".errors"), "\n".join(errors) + "\n")
        print(f"{len(errors)} rows could not be aligned "
              f"(see {out.with_suffix(out.suffix + '.errors')})", file=sys.stderr)
    _echo_run_config(out, args)
    print(f"derived {len(derived)} binary-annotated logs")
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    logs, spec = synth.generate_synthetic(args.seed, args.templates, args.logs)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_annotations(logs, out)
    _atomic_write(
        out.with_suffix(out.suffix + ".spec.json"), json.dumps(spec.to_dict(), indent=2) + "\n"
    )
    counts: dict[str, int] = {c: 0 for c in CATEGORY_ABBREVS}
    for log in logs:
        for tag in log.tags:
            if tag.prefix == "B":
                counts[tag.category] += 1
    _echo_run_config(out, args)
    print("category coverage (B- spans):")
    for cat, n in counts.items():
        print(f"  {cat}: {n}")
    return 0


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--clip-norm", type=float, default=5.0)
    p.add_argument("--freeze-word-embeddings", action="store_true")
    p.add_argument("--selection-metric", default="variable_aware_accuracy",
                   choices=["variable_aware_accuracy", "general_accuracy"])


def _add_hp_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--word-dim", type=int, default=100)
    p.add_argument("--char-emb-dim", type=int, default=300)
    p.add_argument("--char-filters", type=int, default=50)
    p.add_argument("--char-kernel", type=int, default=3)
    p.add_argument("--lstm-hidden", type=int, default=128)
    p.add_argument("--dropout", type=float, default=0.2)
    p.add_argument("--max-word-len", type=int, default=30)
    p.add_argument("--min-freq", type=int, default=1)
    p.add_argument("--no-char-channel", action="store_true",
                   help="char-ablated baseline (word embeddings only)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logvar", description="variable-aware log abstraction toolkit"
    )
    parser.add_argument("--config", help="key = value config file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="split an annotation file into train/val/test")
    p.add_argument("--input", required=True)
    p.add_argument("--ratios", default="0.2,0.2,0.6")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a tagger and save the best checkpoint")
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", default=MULTICLASS, choices=[MULTICLASS, BINARY])
    p.add_argument("--vectors", help="pretrained word vector file (text format)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_train_flags(p)
    _add_hp_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("finetune", help="fine-tune a saved model on a small sample")
    p.add_argument("--model", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_train_flags(p)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("tag", help="tag raw log lines with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="file of raw log lines")
    p.add_argument("--output", required=True, help="annotation-format output")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("parse", help="extract templates, preserving selected categories")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--preserve", default="", help="comma-separated category abbreviations")
    p.add_argument("--wildcard", default="<*>")
    p.add_argument("--output", required=True, help="line-delimited JSON records")
    p.add_argument("--templates", help="templates summary file")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="score predictions against gold annotations")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--report", required=True, help="JSON report output")
    p.add_argument("--token-level", action="store_true")
    p.add_argument("--collapse-binary", action="store_true",
                   help="relabel all variable categories to VAR before scoring")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("derive-annotations",
                       help="binary annotations from a structured content/template file")
    p.add_argument("--structured", required=True, help="CSV with content and template columns")
    p.add_argument("--content-col", default="Content")
    p.add_argument("--template-col", default="EventTemplate")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.set_defaults(func=cmd_derive_annotations)

    p = sub.add_parser("synth", help="generate a synthetic annotated corpus")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--templates", type=int, default=20)
    p.add_argument("--logs", type=int, default=2000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # config file values become defaults, command-line flags override
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            cfg_path = argv[idx + 1]
        except IndexError:
            parser.error("--config needs a path")
        defaults = _read_config_file(cfg_path)
        for sp in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
            converted = {}
            for a in sp._actions:
                if a.dest not in defaults:
                    continue
                value: object = defaults[a.dest]
                if a.type is not None:
                    value = a.type(value)
                elif isinstance(a.default, bool):
                    value = str(value).lower() in ("1", "true", "yes")
                converted[a.dest] = value
            sp.set_defaults(**converted)
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(json.dumps({"error": "usage", "message": str(exc)}), file=sys.stderr)
        return 2
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return 2
    except LogvarError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
