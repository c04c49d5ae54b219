#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Corpus jobs: per-entry processing on a worker pool with deterministic gathering
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from tqdm import tqdm

from midillm.codec import tokenize_midi, segment
from midillm.dataset.builders import (
    DatasetSettings, build_finetune_example, build_infill_examples, pack_pretrain, new_rng,
)
from midillm.errors import MidiLLMError, TooSparse
from midillm.midi import load_notes

logger = logging.getLogger(__name__)


def run_entries(func, items, jobs=1, desc="entries"):
    """Apply `func` to every item, in worker processes when jobs > 1

    Results come back in input order whatever the worker count. With more
    than one job, `func`, the items and the results must be picklable.

    Args:
        func (callable): Work for one item, a module-level function or partial
        items (list): The items
        jobs (int): Worker processes
        desc (str): Progress bar label

    Returns:
        list: func(item) for every item
    """
    jobs = max(1, int(jobs or 1))
    if jobs == 1:
        return [func(item) for item in tqdm(items, desc=desc, disable=None, leave=False)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(tqdm(pool.map(func, items), total=len(items), desc=desc, disable=None, leave=False))


def process_pretrain_entry(path, cfg, settings):
    """Tokenize one standalone MIDI into one document per 100 s window

    Returns:
        list: TokenSequence documents, empty if the file could not be used
    """
    try:
        notes = load_notes(path)
        docs = [doc for doc in tokenize_midi(notes, cfg, settings.segment_span) if len(doc)]
        logger.debug(f"{path}: {len(notes)} notes -> {len(docs)} documents")
        return docs
    except (MidiLLMError, OSError) as e:
        logger.error(f"Error processing {path}: {str(e)}")
        return []


def process_finetune_entry(path, caption, rng, cfg, tok, settings, augment=True):
    """Build the finetune example and, when possible, two infill variants per window

    Returns:
        tuple: (finetune examples, infill examples)
    """
    finetune, infill = [], []
    try:
        notes = load_notes(path)
    except (MidiLLMError, OSError) as e:
        logger.error(f"Error processing {path}: {str(e)}")
        return finetune, infill

    for window in segment(notes, settings.segment_span):
        if not len(window):
            continue
        finetune.append(build_finetune_example(caption, window, cfg, tok, settings))
        if not augment:
            continue
        try:
            infill.extend(build_infill_examples(caption, window, rng, cfg, tok, settings))
        except TooSparse as e:
            logger.debug(f"{path}: no infill variants, {e}")
    return finetune, infill


def _finetune_job(item, seed, cfg, tok, settings, augment):
    index, path, caption = item
    return process_finetune_entry(path, caption, new_rng(seed, index), cfg, tok, settings, augment)


def build_pretrain_corpus(manifest, cfg, settings=None, jobs=1, extra_docs=()):
    """Pack the pretrain split of a manifest (plus extra text documents)

    Args:
        manifest (Manifest): The corpus
        cfg (VocabConfig): Vocabulary layout
        settings (DatasetSettings): seqlen and segment span
        jobs (int): Worker processes
        extra_docs (iterable): Pre-tokenized text documents appended after the MIDI ones

    Returns:
        list: Pretrain TrainingExample
    """
    settings = settings or DatasetSettings()
    paths = [manifest.resolve(e) for e in manifest.split("pretrain")]
    work = partial(process_pretrain_entry, cfg=cfg, settings=settings)
    per_entry = run_entries(work, paths, jobs, "tokenize")
    docs = [doc for entry_docs in per_entry for doc in entry_docs] + list(extra_docs)
    examples = pack_pretrain(docs, cfg, settings.seqlen)
    logger.info(f"Packed {len(docs)} documents from {len(paths)} files into {len(examples)} sequences")
    return examples


def build_finetune_corpus(manifest, cfg, seed=0, tok=None, settings=None, jobs=1, augment=True):
    """Finetune examples and infill augmentation for the finetune split

    The generator of entry i (sorted by path) is seeded with (seed, i), so
    output does not depend on the worker count.

    Returns:
        tuple: (finetune examples, infill examples)
    """
    settings = settings or DatasetSettings()
    entries = manifest.split("finetune")

    items = [(index, manifest.resolve(entry), entry.caption) for index, entry in enumerate(entries)]
    work = partial(_finetune_job, seed=seed, cfg=cfg, tok=tok, settings=settings, augment=augment)
    results = run_entries(work, items, jobs, "augment")
    finetune = [ex for ft, _ in results for ex in ft]
    infill = [ex for _, inf in results for ex in inf]
    logger.info(f"Built {len(finetune)} finetune and {len(infill)} infill examples from {len(entries)} files")
    return finetune, infill
