"""Single command-line entry point exposing every subsystem.

Subcommands: codec, validate, perturb, tokenize, wordseg, kb, init-embed,
augment, transcribe, render, eval, train, ingest. Results go to stdout (or
``--out``); diagnostics go to stderr. Exit codes: 0 success, 1 usage or
configuration error, 2 data error.

A TOML config (``--config``) can override the default data file locations
under ``[paths]`` and option defaults under ``[defaults]``; explicit flags
win over the config, which wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import __version__, augment as aug, codec, kb as kb_mod, metrics, pipeline, tokenizer, train
from .codec import BrailleError
from .data import default_paths
from .embeddings import (SyllableTokenMap, extend_vocab, init_all,
                         load_embeddings, save_embeddings)


class ConfigError(Exception):
    pass


CONFIG_PATH_KEYS = {"braille_table", "zh_prior", "en_prior", "attributes", "words",
                    "char_pinyin", "math_rules", "templates", "golden_corpus"}
CONFIG_DEFAULT_KEYS = {"tokenize", "metrics", "seed", "jobs"}


def load_config(path) -> dict:
    with open(path, "rb") as f:
        cfg = tomllib.load(f)
    unknown = set(cfg) - {"paths", "defaults"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for key in set(cfg.get("paths", {})) - CONFIG_PATH_KEYS:
        raise ConfigError(f"unknown [paths] key: {key}")
    for key in set(cfg.get("defaults", {})) - CONFIG_DEFAULT_KEYS:
        raise ConfigError(f"unknown [defaults] key: {key}")
    for key, value in cfg.get("paths", {}).items():
        if not Path(value).exists():
            raise ConfigError(f"[paths] {key} does not exist: {value}")
    return cfg


def resolve_paths(args) -> dict[str, Path]:
    paths = default_paths()
    if getattr(args, "config", None):
        for key, value in load_config(args.config).get("paths", {}).items():
            paths[key] = Path(value)
    return paths


def config_default(args, key, fallback):
    if getattr(args, "config", None):
        value = load_config(args.config).get("defaults", {}).get(key)
        if value is not None:
            return value
    return fallback


def _emit(args, text: str):
    if getattr(args, "out", None):
        Path(args.out).write_text(text + ("\n" if not text.endswith("\n") else ""),
                                  encoding="utf-8")
    else:
        print(text)


def _read_lines(args) -> list[str]:
    if getattr(args, "text", None) is not None:
        return [args.text]
    if getattr(args, "infile", None):
        return Path(args.infile).read_text(encoding="utf-8").splitlines()
    return sys.stdin.read().splitlines()


def _load_kbs(paths) -> tuple[kb_mod.KnowledgeBase, kb_mod.KnowledgeBase]:
    kc = kb_mod.load(paths["zh_prior"], "zh")
    kc.load_attributes(paths["attributes"])
    if paths["words"].exists():
        kc.load_words(paths["words"])
    ke = kb_mod.load(paths["en_prior"], "en")
    return kc, ke


# --- subcommand handlers -------------------------------------------------------

def cmd_codec(args, paths):
    # the direction flags double as inline text: `codec --to-unicode "A"`
    for flag in (args.to_unicode, args.to_ascii):
        if isinstance(flag, str) and args.text is None:
            args.text = flag
    lines = _read_lines(args)
    if args.to_unicode:
        _emit(args, "\n".join(codec.ascii_to_unicode(line) for line in lines))
    else:
        _emit(args, "\n".join(codec.unicode_to_ascii(line) for line in lines))
    return 0


def cmd_validate(args, paths):
    corpus = pipeline.load_corpus(args.corpus)
    report = []
    for ex in corpus:
        issues = pipeline.validate_example(ex)
        if issues:
            report.append({"id": ex.id, "issues": [
                {"kind": i.kind, "position": i.position, "detail": i.detail} for i in issues]})
    _emit(args, json.dumps({"examples": len(corpus), "invalid": len(report),
                            "issues": report}, ensure_ascii=False, indent=2))
    return 2 if report else 0


def cmd_perturb(args, paths):
    out = [codec.perturb_dots(line, args.rate, args.seed) for line in _read_lines(args)]
    _emit(args, "\n".join(out))
    return 0


def cmd_tokenize(args, paths):
    kc, ke = _load_kbs(paths)
    kb = kc if args.language == "zh" else ke
    rows = []
    for line in _read_lines(args):
        for tok in tokenizer.segment(line, kb).tokens:
            rows.append(json.dumps({"fragment": tok.fragment, "counterpart": tok.counterpart,
                                    "start": tok.start, "end": tok.end}, ensure_ascii=False))
    _emit(args, "\n".join(rows))
    return 0


def cmd_wordseg(args, paths):
    kc, ke = _load_kbs(paths)
    kb = kc if args.language == "zh" else ke
    _emit(args, "\n".join(tokenizer.word_segment(line, kb) for line in _read_lines(args)))
    return 0


def cmd_kb(args, paths):
    kc, ke = _load_kbs(paths)
    kb = kc if args.language == "zh" else ke
    if args.lookup:
        _emit(args, json.dumps(kb.lookup(args.lookup), ensure_ascii=False))
    elif args.inverse:
        _emit(args, json.dumps(kb.inverse_lookup(args.inverse), ensure_ascii=False))
    else:
        info = {"language": kb.language, "entries": len(kb),
                "fragments": len(kb.by_fragment),
                "attributes": {a: len(es) for a, es in kb.attr_entries.items()},
                "words": len(kb.words)}
        _emit(args, json.dumps(info, ensure_ascii=False, indent=2))
    return 0


def cmd_init_embed(args, paths):
    table, vocab = load_embeddings(args.embeddings)
    kc, ke = _load_kbs(paths)
    fragments = args.fragments.split(",") if args.fragments else \
        sorted(set(kc.fragments()) | set(ke.fragments()))
    new_fragments = [f for f in fragments if f"<|{f}|>" not in vocab]
    vocab, table = extend_vocab(vocab, table, new_fragments)
    stm = SyllableTokenMap(vocab, SyllableTokenMap.load_char_pinyin(paths["char_pinyin"]))
    report = init_all(table, vocab, kc, ke, stm)
    save_embeddings(table, vocab, args.out_prefix)
    _emit(args, json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    return 0


def cmd_augment(args, paths):
    kc, ke = _load_kbs(paths)
    corpus = pipeline.load_corpus(args.corpus)
    if args.method == "tree":
        out = aug.augment_corpus(corpus, kc, k=args.k, min_sim=args.min_sim,
                                 seed=args.seed, jobs=args.jobs)
    elif args.method == "noise":
        out = aug.noise_inject(corpus, rate=args.rate, seed=args.seed)
    else:
        out = aug.fragment_replace(corpus, kc if args.language == "zh" else ke,
                                   rate=args.rate, seed=args.seed)
    pipeline.save_corpus(out, args.out or (args.corpus + ".aug"))
    print(f"wrote {len(out)} examples", file=sys.stderr)
    return 0


def cmd_transcribe(args, paths):
    kc, ke = _load_kbs(paths)
    kb = kc if args.language == "zh" else ke
    rules = pipeline.RuleSet.load(paths["math_rules"])
    pinyin = None
    if args.pinyin:
        pinyin = [group.split() for group in args.pinyin.split("|")]
    char_pinyin = SyllableTokenMap.load_char_pinyin(paths["char_pinyin"]) \
        if paths["char_pinyin"].exists() else None
    out = [pipeline.transcribe_mixed(pipeline.normalize(line), rules, kb,
                                     pinyin=pinyin, char_pinyin=char_pinyin)
           for line in _read_lines(args)]
    _emit(args, "\n".join(out))
    return 0


def cmd_render(args, paths):
    corpus = pipeline.load_corpus(args.corpus)
    templates = pipeline.load_templates(args.templates or paths["templates"])
    rows = []
    for ex in corpus:
        for tid, template in templates.items():
            rec = pipeline.render_instruction(template, ex, args.direction, template_id=tid)
            rows.append(json.dumps(rec.to_dict(), ensure_ascii=False))
    _emit(args, "\n".join(rows))
    return 0


def cmd_eval(args, paths):
    hyps = Path(args.hyp).read_text(encoding="utf-8").splitlines()
    refs = Path(args.ref).read_text(encoding="utf-8").splitlines()
    selected = tuple(args.metrics.split(","))
    tokenize = config_default(args, "tokenize", None) if args.tokenize is None else args.tokenize
    report = metrics.evaluate_pairs(hyps, refs, tokenize=tokenize or "char",
                                    metrics=selected, jobs=args.jobs)
    _emit(args, json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    return 0


def cmd_train(args, paths):
    seeds = tuple(int(s) for s in args.seeds.split(","))
    if args.corpus_zh or args.corpus_en:
        if not (args.corpus_zh and args.corpus_en):
            print("error: --corpus-zh and --corpus-en must be given together",
                  file=sys.stderr)
            return 1
        kc, ke = _load_kbs(paths)
        char_pinyin = SyllableTokenMap.load_char_pinyin(paths["char_pinyin"])
        task = train.make_file_task(train.load_aligned_corpus(args.corpus_zh),
                                    train.load_aligned_corpus(args.corpus_en),
                                    kc, ke, char_pinyin, seed=args.task_seed)
    else:
        task = train.make_synthetic_task(seed=args.task_seed)
    cfg = train.TrainConfig(learning_rate=args.learning_rate, batch_size=args.batch_size,
                            epochs=args.epochs, init_mode="bkft")
    if args.init:
        model = train.build_arm_model(task, args.init, seeds[0])
        run_cfg = replace(cfg, init_mode=args.init, seed=seeds[0])
        result = train.train_run(model, task.corpus_c, task.corpus_e, run_cfg,
                                 heldout=task.heldout)
        payload = {"init_mode": args.init, "seed": seeds[0],
                   "epoch_losses": result.epoch_losses,
                   "epoch_accuracy": result.epoch_accuracy,
                   "epochs_to_target": result.epochs_to_target()}
    else:
        report = train.run_experiment(task.corpus_c, task.corpus_e,
                                      (cfg, replace(cfg, init_mode="random")),
                                      task, seeds=seeds, jobs=args.jobs)
        payload = report.to_dict()
    text = json.dumps(payload, ensure_ascii=False, indent=2)
    if args.report:
        Path(args.report).write_text(text + "\n", encoding="utf-8")
        print(f"wrote report to {args.report}", file=sys.stderr)
    else:
        _emit(args, text)
    return 0


def cmd_ingest(args, paths):
    raw = pipeline.load_corpus(args.infile)
    normalized = [replace(ex, text=pipeline.normalize(ex.text)) for ex in raw]
    deduped = pipeline.dedup(normalized)
    bad = [(ex.id, pipeline.validate_example(ex)) for ex in deduped]
    bad = [(i, issues) for i, issues in bad if issues]
    pipeline.save_corpus(deduped, args.out)
    print(f"ingested {len(raw)} -> {len(deduped)} examples, {len(bad)} with issues",
          file=sys.stderr)
    for ex_id, issues in bad:
        for issue in issues:
            print(f"  {ex_id}: {issue.kind} @{issue.position} {issue.detail}", file=sys.stderr)
    return 2 if bad and args.strict else 0


def _version_string() -> str:
    lines = [f"brailletk {__version__}"]
    for name, path in default_paths().items():
        if path.is_file():
            digest = hashlib.sha256(path.read_bytes()).hexdigest()[:12]
            lines.append(f"  {name}: sha256:{digest}")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="brailletk", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--config", help="TOML config file")
        p.add_argument("--out", help="write results to this file instead of stdout")
        return p

    p = add("codec", cmd_codec, help="braille ASCII <-> unicode conversion")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--to-unicode", nargs="?", const=True, metavar="TEXT")
    g.add_argument("--to-ascii", nargs="?", const=True, metavar="TEXT")
    p.add_argument("--text")
    p.add_argument("--in", dest="infile")

    p = add("validate", cmd_validate, help="validate a corpus JSONL file")
    p.add_argument("corpus")

    p = add("perturb", cmd_perturb, help="flip braille dots at a given rate")
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--text")
    p.add_argument("--in", dest="infile")

    for name, func in (("tokenize", cmd_tokenize), ("wordseg", cmd_wordseg)):
        p = add(name, func, help=f"{name} braille sequences against the KB")
        p.add_argument("--language", choices=("zh", "en"), default="zh")
        p.add_argument("--text")
        p.add_argument("--in", dest="infile")

    p = add("kb", cmd_kb, help="inspect the knowledge bases")
    p.add_argument("--language", choices=("zh", "en"), default="zh")
    p.add_argument("--lookup", help="fragment to look up")
    p.add_argument("--inverse", help="counterpart to look up")

    p = add("init-embed", cmd_init_embed, help="extend a vocabulary and initialize braille rows")
    p.add_argument("--embeddings", required=True, help="input table prefix (.json/.bin)")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--fragments", help="comma-separated fragments (default: all KB fragments)")

    p = add("augment", cmd_augment, help="augment a parallel corpus")
    p.add_argument("--method", choices=("tree", "noise", "fragment"), default="tree")
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--min-sim", type=float, default=0.0)
    p.add_argument("--rate", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--language", choices=("zh", "en"), default="zh")
    p.add_argument("--jobs", type=int, default=os.cpu_count())

    p = add("transcribe", cmd_transcribe, help="transcribe mixed text into braille")
    p.add_argument("--language", choices=("zh", "en"), default="zh")
    p.add_argument("--pinyin", help="per-word pinyin, words split by |, syllables by space")
    p.add_argument("--text")
    p.add_argument("--in", dest="infile")

    p = add("render", cmd_render, help="render instruction records from a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--templates")
    p.add_argument("--direction", choices=("to_text", "to_braille"), default="to_text")

    p = add("eval", cmd_eval, help="score parallel hypothesis/reference files")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--tokenize", choices=tuple(metrics.TOKENIZERS))
    p.add_argument("--metrics", default="bleu,chrf,cer,ter")
    p.add_argument("--jobs", type=int, default=os.cpu_count())

    p = add("train", cmd_train, help="run the init-comparison training demo")
    p.add_argument("--corpus-zh", help="aligned-pairs JSONL (default: built-in synthetic task)")
    p.add_argument("--corpus-en", help="aligned-pairs JSONL (default: built-in synthetic task)")
    p.add_argument("--init", choices=("bkft", "random"), help="train a single arm")
    p.add_argument("--seeds", default="0,1,2,3,4")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=25)
    p.add_argument("--learning-rate", type=float, default=1.0)
    p.add_argument("--task-seed", type=int, default=12345)
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--jobs", type=int, default=os.cpu_count())

    p = add("ingest", cmd_ingest, help="normalize, dedup and validate a raw corpus")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(out="corpus.out.jsonl")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code in (0, None) else 1
    try:
        paths = resolve_paths(args)
        return args.func(args, paths)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 1
    except BrailleError as e:
        print(f"error: {e.__class__.__name__}: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
