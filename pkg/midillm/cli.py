#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Command-line entry point: the MIDI pipeline end to end
"""

import os
import sys
import argparse
import dataclasses
import logging

import numpy as np
from dotenv import load_dotenv

from midillm.bench import run_bench
from midillm.codec import (
    TokenSequence, tokenize_midi, decode, validate, midi_portion, music_duration,
)
from midillm.dataset import DatasetSettings, Manifest, tokenize_text, write_example_set
from midillm.decoding import get_provider, generate, train_ngram
from midillm.embeddings import read_embeddings, write_embeddings, random_embeddings, expand_embeddings
from midillm.errors import EXIT_OK, EXIT_ERROR, EXIT_USAGE, handle_error
from midillm.midi import load_notes, format_notes, write_smf
from midillm.tasks import build_pretrain_corpus, build_finetune_corpus
from midillm.tokenfile import read_tokens, write_tokens
from midillm.utils import setup_logger, load_config, format_duration
from midillm.vocab import VocabConfig, MIDI_VOCAB_SIZE, describe_token

logger = logging.getLogger(__name__)


def _print_fields(fields, out=None):
    out = out or sys.stdout
    for key, value in fields.items():
        print(f"{key}={value}", file=out)


def _write_bytes(path, data):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, 'wb') as f:
        f.write(data)


def _segment_path(path, index):
    if index == 0:
        return path
    root, ext = os.path.splitext(path)
    return f"{root}.seg{index:03d}{ext}"


def _jobs(args, config):
    return args.jobs if args.jobs is not None else int(config.get("jobs", 1))


# --- Subcommands ---

def cmd_parse(args, config, cfg):
    notes = load_notes(args.input)
    for warning in notes.warnings:
        logger.warning(f"{args.input}: {warning}")
    sys.stdout.write(format_notes(notes))
    return EXIT_OK


def cmd_tokenize(args, config, cfg):
    span = float(config["codec"]["segment_span"])
    notes = load_notes(args.input)
    sequences = tokenize_midi(notes, cfg, span) or [TokenSequence([], cfg)]
    for index, seq in enumerate(sequences):
        write_tokens(seq, _segment_path(args.output, index))
    logger.info(f"Tokenized {len(notes)} notes of {args.input} into {len(sequences)} segment(s)")
    return EXIT_OK


def cmd_detokenize(args, config, cfg):
    tokens = read_tokens(args.input, cfg)
    body = TokenSequence(midi_portion(tokens.ids, cfg), cfg)
    notes = decode(body, strict=not args.lenient)
    midi = config["midi"]
    _write_bytes(args.output, write_smf(notes, int(midi["velocity"]), int(midi["division"])))
    logger.info(f"Wrote {len(notes)} notes ({format_duration(music_duration(notes))}) to {args.output}")
    return EXIT_OK


def cmd_validate(args, config, cfg):
    tokens = read_tokens(args.input, cfg)
    report = validate(TokenSequence(midi_portion(tokens.ids, cfg), cfg))
    _print_fields({"ok": str(report.ok).lower(), "violations": len(report.violations)})
    for v in report.violations:
        print(f"violation={v.kind}@{v.position}")
    if report.ok:
        return EXIT_OK
    print(report.summary(), file=sys.stderr)
    return EXIT_ERROR


def cmd_inspect(args, config, cfg):
    tokens = read_tokens(args.input, cfg)
    for pos, tid in enumerate(tokens.ids):
        print(f"{pos}\t{tid}\t{describe_token(tid, cfg)}")
    return EXIT_OK


def cmd_pack(args, config, cfg):
    settings = DatasetSettings.from_config(config)
    if args.seqlen is not None:
        settings = dataclasses.replace(settings, seqlen=args.seqlen)
    if settings.seqlen < 1:
        raise ValueError(f"seqlen must be positive, got {settings.seqlen}")
    manifest = Manifest.load(args.manifest)
    extra = [read_tokens(path, cfg) for path in args.text_tokens]
    examples = build_pretrain_corpus(manifest, cfg, settings, _jobs(args, config), extra)
    write_example_set(examples, args.output, "pretrain", cfg)
    _print_fields({"sequences": len(examples), "seqlen": settings.seqlen})
    return EXIT_OK


def cmd_augment(args, config, cfg):
    settings = DatasetSettings.from_config(config)
    manifest = Manifest.load(args.manifest)
    finetune, infill = build_finetune_corpus(
        manifest, cfg, args.seed, None, settings, _jobs(args, config), augment=not args.no_infill,
    )
    write_example_set(finetune, args.output, "finetune", cfg)
    write_example_set(infill, args.output, "infill", cfg)
    _print_fields({"finetune": len(finetune), "infill": len(infill)})
    return EXIT_OK


def cmd_train_ngram(args, config, cfg):
    corpus = [read_tokens(path, cfg) for path in args.inputs]
    model = train_ngram(corpus, args.order, cfg)
    model.save(args.output)
    return EXIT_OK


def _provider(args, cfg):
    if args.uniform:
        return get_provider("uniform", cfg)
    if not args.model:
        raise ValueError("either --model or --uniform is required")
    return get_provider("ngram", cfg, args.model)


def _prompt_ids(text, config, cfg):
    max_len = int(config["dataset"]["max_text_len"])
    return tokenize_text(text or "", max_len=max_len, text_vocab_size=cfg.text_vocab_size) + [cfg.separator_id]


def cmd_generate(args, config, cfg):
    decoder = config["decoder"]
    top_p = args.top_p if args.top_p is not None else float(decoder["top_p"])
    max_new = args.max_new if args.max_new is not None else int(decoder["max_new"])
    constrained = bool(decoder["constrained"]) and not args.unconstrained

    provider = _provider(args, cfg)
    prompt = _prompt_ids(args.prompt, config, cfg)
    out = generate(provider, prompt, top_p, max_new, constrained, np.random.default_rng(args.seed), cfg)
    if args.tokens_out:
        write_tokens(out, args.tokens_out)

    notes = decode(TokenSequence(midi_portion(out.ids, cfg), cfg), strict=constrained)
    midi = config["midi"]
    _write_bytes(args.output, write_smf(notes, int(midi["velocity"]), int(midi["division"])))
    _print_fields({
        "tokens": len(out) - len(prompt),
        "notes": len(notes),
        "music_s": repr(music_duration(notes)),
    })
    return EXIT_OK


def cmd_expand_embeddings(args, config, cfg):
    e_llm = read_embeddings(args.e_llm)
    if args.e_amt:
        e_amt = read_embeddings(args.e_amt)
    else:
        std = float(config["embeddings"]["init_std"])
        e_amt = random_embeddings(MIDI_VOCAB_SIZE, e_llm.dim, args.seed, std)
    write_embeddings(expand_embeddings(e_llm, e_amt, MIDI_VOCAB_SIZE), args.output)
    return EXIT_OK


def cmd_bench(args, config, cfg):
    decoder = config["decoder"]
    top_p = args.top_p if args.top_p is not None else float(decoder["top_p"])
    max_new = args.max_new if args.max_new is not None else int(decoder["max_new"])
    report = run_bench(
        _provider(args, cfg), _prompt_ids(args.prompt, config, cfg), args.batch, args.runs,
        top_p, max_new, bool(decoder["constrained"]), args.seed,
    )
    print(report.to_json() if args.json else report.to_text())
    return EXIT_OK


# --- Parser ---

def _add_model_flags(p):
    group = p.add_mutually_exclusive_group()
    group.add_argument('--model', help="NGRM model file")
    group.add_argument('--uniform', action='store_true', help="Score every token equally")
    p.add_argument('--prompt', default="", help="Text prompt")
    p.add_argument('--top-p', type=float, default=None)
    p.add_argument('--max-new', type=int, default=None)
    p.add_argument('--seed', type=int, default=0)


def build_parser():
    parser = argparse.ArgumentParser(prog="midillm", description="Text-to-MIDI toolkit")
    parser.add_argument('--config', default=None, help="JSON configuration file")
    parser.add_argument('--log-level', default=None, help="Console log level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser('parse', help="Print the notes of a MIDI file")
    p.add_argument('input')
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser('tokenize', help="MIDI file to AMTK token file(s)")
    p.add_argument('input')
    p.add_argument('-o', '--output', required=True)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser('detokenize', help="AMTK token file to MIDI file")
    p.add_argument('input')
    p.add_argument('-o', '--output', required=True)
    p.add_argument('--lenient', action='store_true', help="Skip malformed triples")
    p.set_defaults(func=cmd_detokenize)

    p = sub.add_parser('validate', help="Check the token grammar of an AMTK file")
    p.add_argument('input')
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser('inspect', help="Print token names of an AMTK file")
    p.add_argument('input')
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser('pack', help="Build packed pretraining sequences")
    p.add_argument('--manifest', required=True)
    p.add_argument('--seqlen', type=int, default=None)
    p.add_argument('--text-tokens', nargs='*', default=[], help="Extra AMTK text documents")
    p.add_argument('--jobs', type=int, default=None)
    p.add_argument('-o', '--output', required=True, help="Output directory")
    p.set_defaults(func=cmd_pack)

    p = sub.add_parser('augment', help="Build finetuning and infilling examples")
    p.add_argument('--manifest', required=True)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--jobs', type=int, default=None)
    p.add_argument('--no-infill', action='store_true')
    p.add_argument('-o', '--output', required=True, help="Output directory")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser('train-ngram', help="Train an n-gram model on AMTK files")
    p.add_argument('--order', type=int, required=True)
    p.add_argument('inputs', nargs='+')
    p.add_argument('-o', '--output', required=True)
    p.set_defaults(func=cmd_train_ngram)

    p = sub.add_parser('generate', help="Generate a MIDI file")
    _add_model_flags(p)
    p.add_argument('--unconstrained', action='store_true', help="Disable the grammar mask")
    p.add_argument('--tokens-out', default=None, help="Also write the generated ids")
    p.add_argument('-o', '--output', required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser('expand-embeddings', help="Append MIDI rows to an embedding table")
    p.add_argument('e_llm')
    p.add_argument('e_amt', nargs='?', default=None)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('-o', '--output', required=True)
    p.set_defaults(func=cmd_expand_embeddings)

    p = sub.add_parser('bench', help="Measure the real-time factor of generation")
    _add_model_flags(p)
    p.add_argument('--batch', type=int, default=1)
    p.add_argument('--runs', type=int, default=1)
    p.add_argument('--json', action='store_true')
    p.set_defaults(func=cmd_bench)

    return parser


def run_cli(argv=None):
    """Run one command

    Returns:
        int: 0 on success, 1 on a toolkit error, 2 on a usage error
    """
    load_dotenv()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    try:
        config = load_config(args.config)
        logging_config = config.get("logging", {})
        setup_logger(args.log_level or logging_config.get("level"), logging_config.get("dir"))
        cfg = VocabConfig.from_config(config)
        return args.func(args, config, cfg)
    except Exception as e:
        code, message = handle_error(e)
        print(message, file=sys.stderr)
        return code


def main():
    sys.exit(run_cli())


if __name__ == '__main__':
    main()
