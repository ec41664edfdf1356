"""Command-line front end.

Exit status: 0 on success, 1 on usage errors, 2 on data or file errors.
"""

import argparse
import json
import logging
import sys

from cmifl import dataio
from cmifl.cmi import corpus_profile
from cmifl.errors import CmiflError
from cmifl.evaluation import confusion, metrics, paired_table, stuart_maxwell
from cmifl.model import featurize, predict_batch
from cmifl.textlang import Dictionary, TargetLanguage, tag_sentence
from cmifl.train import (
    TrainConfig,
    apply_overrides,
    load_config_file,
    pseudo_label,
    resolve_labels,
    train,
    train_with_pseudo,
)

log = logging.getLogger("cmifl")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _dictionary(path):
    return Dictionary.load(path) if path else Dictionary.default()


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


# -- subcommands -----------------------------------------------------------------

def cmd_cmi_stats(args):
    dictionary = _dictionary(args.dict)
    texts = dataio.read_texts(args.data)
    if args.has_header:
        texts = texts[1:]
    profile = corpus_profile(tag_sentence(t, dictionary, args.lang) for t in texts)
    if args.json:
        _emit(profile.to_dict())
        return
    print(f"sentences  {len(profile.per_sentence)}")
    print(f"mean CMI   {profile.mean:.6f}")
    for i, count in enumerate(profile.histogram):
        lo, hi = i / 10, (i + 1) / 10
        close = "]" if i == 9 else ")"
        print(f"[{lo:.1f}, {hi:.1f}{close}  {count}")


def _train_config(args):
    cfg = TrainConfig()
    values = load_config_file(args.config) if args.config else {}
    flags = {
        "loss.kind": args.loss,
        "head": args.head,
        "seed": args.seed,
        "epochs": args.epochs,
        "pseudo_threshold": args.threshold,
    }
    values.update({k: str(v) for k, v in flags.items() if v is not None})
    return apply_overrides(cfg, values)


def cmd_train(args):
    cfg = _train_config(args)
    lang = TargetLanguage.parse(args.lang)
    dictionary = _dictionary(args.dict)
    labels = resolve_labels(cfg, lang)
    data = dataio.load_tsv(args.data, has_header=args.has_header, vocab=labels)
    if args.unlabeled:
        pool = dataio.read_texts(args.unlabeled)
        params, history = train_with_pseudo(data, pool, cfg, dictionary, lang,
                                            continue_training=args.continue_training)
    else:
        params, history = train(data, cfg, dictionary, lang)
    dataio.save_model(args.out, params)

    pred, _ = predict_batch(params, [featurize(ex.text, params.features) for ex in data])
    report = metrics(confusion([ex.label for ex in data],
                               [params.labels[k] for k in pred.tolist()], params.labels))
    summary = {
        "model": str(args.out),
        "examples": history.phase_sizes,
        "epochs": len(history.loss),
        "final_loss": history.loss[-1],
        "train_accuracy": report.accuracy,
        "train_macro_f1": report.macro.f1,
    }
    if args.json:
        _emit(summary)
    else:
        for key, value in summary.items():
            print(f"{key:16s} {value}")


def cmd_predict(args):
    params = dataio.load_model(args.model)
    texts = dataio.read_texts(args.data)
    if args.has_header:
        texts = texts[1:]
    pred, probs = predict_batch(params, [featurize(t, params.features) for t in texts])
    rows = [(params.labels[k], float(probs[i, k])) for i, k in enumerate(pred.tolist())]
    dataio.write_predictions(args.out, rows)


def cmd_pseudo_label(args):
    params = dataio.load_model(args.model)
    texts = dataio.read_texts(args.unlabeled)
    accepted = pseudo_label(params, texts, args.threshold)
    dataio.write_tsv(args.out, accepted)
    print(f"kept {len(accepted)} of {len(texts)}", file=sys.stderr)


def cmd_eval(args):
    gold = [ex.label for ex in dataio.load_tsv(args.gold, has_header=args.has_header)]
    pred = [label for label, _ in dataio.read_predictions(args.preds)]
    report = metrics(confusion(gold, pred))
    out = report.to_dict()
    if args.classwise:
        out["classwise_f1"] = {c.label: c.f1 for c in report.per_class}
    _emit(out)


def cmd_significance(args):
    a = [label for label, _ in dataio.read_predictions(args.preds_a)]
    if args.preds_b:
        b = [label for label, _ in dataio.read_predictions(args.preds_b)]
    else:
        b = [ex.label for ex in dataio.load_tsv(args.gold)]
    _emit(stuart_maxwell(paired_table(a, b)).to_dict())


# -- parser ------------------------------------------------------------------------

def _lang(value):
    try:
        return TargetLanguage.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fraction(value):
    x = float(value)
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError("must lie in [0, 1]")
    return x


def build_parser():
    parser = _Parser(prog="cmifl", description="CMI-weighted focal loss text classifier")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("cmi-stats", help="code-mixing profile of a corpus")
    p.add_argument("--data", required=True)
    p.add_argument("--lang", required=True, type=_lang)
    p.add_argument("--dict", help="English word list (default: shipped list)")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_cmi_stats)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--data", required=True)
    p.add_argument("--lang", required=True, type=_lang)
    p.add_argument("--dict")
    p.add_argument("--config")
    p.add_argument("--loss", choices=("ce", "focal", "cmi-fl"))
    p.add_argument("--head", choices=("dot", "cosine"))
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--unlabeled", help="pool for a second, pseudo-labelled phase")
    p.add_argument("--threshold", type=_fraction)
    p.add_argument("--continue", dest="continue_training", action="store_true",
                   help="phase 2 continues from the phase-1 weights")
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="write label<TAB>prob per input line")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("pseudo-label", help="label an unlabeled pool")
    p.add_argument("--model", required=True)
    p.add_argument("--unlabeled", required=True)
    p.add_argument("--threshold", type=_fraction, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pseudo_label)

    p = sub.add_parser("eval", help="precision/recall/F1 report")
    p.add_argument("--gold", required=True)
    p.add_argument("--preds", required=True)
    p.add_argument("--has-header", action="store_true")
    p.add_argument("--classwise", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("significance", help="Stuart-Maxwell test between two systems")
    p.add_argument("--preds-a", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--preds-b")
    group.add_argument("--gold", help="compare system A against gold labels instead")
    p.set_defaults(func=cmd_significance)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)

    if args.verbose:
        logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                            format="%(name)s: %(message)s")
    try:
        args.func(args)
    except (CmiflError, OSError, UnicodeDecodeError) as exc:
        print(f"cmifl {args.command}: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
