#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Training example builders: finetuning, infilling augmentation and pretraining packing
"""

import os
import enum
import json
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from midillm.codec import encode, interleave_infill, TokenSequence, DEFAULT_DELTA, SEGMENT_SPAN
from midillm.dataset.tokenizers import tokenize_text, MAX_TEXT_LEN
from midillm.errors import EmptyMidi, TooSparse, FileFormatError
from midillm.midi.notes import NoteSeq
from midillm.tokenfile import write_tokens, read_tokens

logger = logging.getLogger(__name__)

SEQLEN = 2048
MIDI_LEN = 2048


class ExampleKind(enum.Enum):
    PRETRAIN = "pretrain"
    FINETUNE = "finetune"
    INFILL = "infill"


@dataclass
class TrainingExample:
    """Token ids of one training sequence

    Finetune and infill examples are text ++ [separator] ++ MIDI ++ [eos];
    prefix_len counts the text ids.
    """
    ids: List[int]
    prefix_len: int
    kind: ExampleKind

    def __post_init__(self):
        if self.kind is not ExampleKind.PRETRAIN:
            if self.prefix_len > MAX_TEXT_LEN:
                raise ValueError(f"text prefix of {self.prefix_len} ids exceeds {MAX_TEXT_LEN}")
            if len(self.ids) > MAX_TEXT_LEN + MIDI_LEN + 2:
                raise ValueError(f"{self.kind.value} example of {len(self.ids)} ids is too long")

    @property
    def midi_ids(self):
        """MIDI body (without prefix, separator and EOS) of finetune/infill examples"""
        if self.kind is ExampleKind.PRETRAIN:
            return list(self.ids)
        return self.ids[self.prefix_len + 1:-1]

    def __len__(self):
        return len(self.ids)

    def __repr__(self):
        return f'<TrainingExample {self.kind.value} len={len(self.ids)} prefix={self.prefix_len}>'


@dataclass(frozen=True)
class DatasetSettings:
    """Knobs of the two-stage dataset construction"""
    seqlen: int = SEQLEN
    max_text_len: int = MAX_TEXT_LEN
    midi_len: int = MIDI_LEN
    gap: tuple = (5.0, 15.0)
    cut_span: tuple = (0.2, 0.8)
    delta: float = DEFAULT_DELTA
    segment_span: float = SEGMENT_SPAN

    @classmethod
    def from_config(cls, config):
        dataset = (config or {}).get("dataset", {})
        codec = (config or {}).get("codec", {})
        return cls(
            seqlen=int(dataset.get("seqlen", SEQLEN)),
            max_text_len=int(dataset.get("max_text_len", MAX_TEXT_LEN)),
            midi_len=int(dataset.get("finetune_midi_len", MIDI_LEN)),
            gap=tuple(dataset.get("infill_gap", (5.0, 15.0))),
            cut_span=tuple(dataset.get("infill_cut_span", (0.2, 0.8))),
            delta=float(codec.get("anticipation_delta", DEFAULT_DELTA)),
            segment_span=float(codec.get("segment_span", SEGMENT_SPAN)),
        )


def _assemble(text_ids, midi_ids, cfg, midi_len):
    # truncate at a triple boundary so the body always decodes
    body = list(midi_ids[:(midi_len // 3) * 3])
    return list(text_ids) + [cfg.separator_id] + body + [cfg.eos_id]


def build_finetune_example(caption, notes, cfg, tok=None, settings=None):
    """Text-prefixed finetuning example

    Args:
        caption (str): Caption used as instruction prefix
        notes (NoteSeq): Notes of one segment (onsets below 100 s)
        cfg (VocabConfig): Vocabulary layout
        tok (TextTokenizer): Caption tokenizer (default: bytes)
        settings (DatasetSettings): Length budgets

    Returns:
        TrainingExample: kind FINETUNE
    """
    settings = settings or DatasetSettings()
    if not len(notes):
        raise EmptyMidi("cannot build a finetune example without notes")
    text_ids = tokenize_text(caption, tok, settings.max_text_len, cfg.text_vocab_size)
    midi_ids = encode(notes, cfg).ids
    return TrainingExample(_assemble(text_ids, midi_ids, cfg, settings.midi_len), len(text_ids), ExampleKind.FINETUNE)


def build_infill_examples(caption, notes, rng, cfg, tok=None, settings=None):
    """Two infilling variants of one segment

    Each variant draws a cut time uniformly over the middle of the segment
    and a gap; notes from cut + gap onwards become anticipated future
    context interleaved with the rest.

    Args:
        caption (str): Caption prefix, None for no text
        notes (NoteSeq): Notes of one segment with at least 3 distinct onsets
        rng (numpy.random.Generator): Source of the two independent draws
        cfg (VocabConfig): Vocabulary layout
        tok (TextTokenizer): Caption tokenizer (default: bytes)
        settings (DatasetSettings): Gap, cut span, delta and length budgets

    Returns:
        list: Two TrainingExample of kind INFILL
    """
    settings = settings or DatasetSettings()
    if not isinstance(notes, NoteSeq):
        notes = NoteSeq.sorted(notes)
    if len({n.onset for n in notes}) < 3:
        raise TooSparse(f"{len({n.onset for n in notes})} distinct onsets, need 3")

    text_ids = tokenize_text(caption, tok, settings.max_text_len, cfg.text_vocab_size) if caption else []
    start, end = notes[0].onset, notes.end_time
    lo, hi = settings.cut_span
    gap_lo, gap_hi = settings.gap

    variants = []
    for _ in range(2):
        t_cut = start + rng.uniform(lo, hi) * (end - start)
        boundary = min(t_cut + rng.uniform(gap_lo, gap_hi), end)
        middle = NoteSeq([n for n in notes if n.onset < boundary])
        future = NoteSeq([n for n in notes if n.onset >= boundary])
        body = interleave_infill(middle, future, settings.delta, cfg).ids
        logger.debug(f"Infill variant: cut {t_cut:.2f}s boundary {boundary:.2f}s, {len(future)} anticipated notes")
        variants.append(TrainingExample(_assemble(text_ids, body, cfg, settings.midi_len), len(text_ids), ExampleKind.INFILL))
    return variants


def pack_pretrain(docs, cfg, seqlen=SEQLEN):
    """Pack documents into fixed-length pretraining sequences

    Each document contributes [separator] ++ ids ++ [eos] to one stream
    that is cut into consecutive `seqlen` chunks; the partial tail is dropped.

    Args:
        docs (list): TokenSequence (or id lists) in order
        cfg (VocabConfig): Vocabulary layout
        seqlen (int): Sequence length

    Returns:
        list: TrainingExample of kind PRETRAIN
    """
    stream = []
    for doc in docs:
        stream.append(cfg.separator_id)
        stream.extend(doc.ids if isinstance(doc, TokenSequence) else doc)
        stream.append(cfg.eos_id)

    count = len(stream) // seqlen
    if len(stream) % seqlen:
        logger.info(f"Dropping {len(stream) % seqlen} trailing ids of {len(stream)}")
    return [
        TrainingExample(stream[i * seqlen:(i + 1) * seqlen], 0, ExampleKind.PRETRAIN)
        for i in range(count)
    ]


def write_example_set(examples, out_dir, name, cfg):
    """Write examples as <name>.amtk plus an index <name>.idx.jsonl

    Returns:
        tuple: (token file path, index file path)
    """
    os.makedirs(out_dir, exist_ok=True)
    token_path = os.path.join(out_dir, f"{name}.amtk")
    index_path = os.path.join(out_dir, f"{name}.idx.jsonl")

    ids, offset = [], 0
    with open(index_path, 'w', encoding='utf-8') as f:
        for example in examples:
            record = {"offset": offset, "length": len(example), "prefix_len": example.prefix_len,
                      "kind": example.kind.value}
            f.write(json.dumps(record, sort_keys=True) + "\n")
            ids.extend(example.ids)
            offset += len(example)

    write_tokens(TokenSequence(ids, cfg), token_path)
    logger.info(f"Wrote {len(examples)} examples ({offset} ids) to {token_path}")
    return token_path, index_path


def read_example_set(out_dir, name, cfg):
    """Read a set written by write_example_set"""
    tokens = read_tokens(os.path.join(out_dir, f"{name}.amtk"), cfg).ids
    examples = []
    with open(os.path.join(out_dir, f"{name}.idx.jsonl"), 'r', encoding='utf-8') as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            start, length = record["offset"], record["length"]
            if start + length > len(tokens):
                raise FileFormatError(f"index entry at offset {start} runs past the token file")
            examples.append(TrainingExample(tokens[start:start + length], record["prefix_len"],
                                            ExampleKind(record["kind"])))
    return examples


def new_rng(seed, index=0):
    """Per-entry generator derived from (seed, index)"""
    return np.random.default_rng([int(seed), int(index)])
