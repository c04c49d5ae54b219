#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Dataset construction for continued pretraining and text-to-MIDI finetuning
"""

from midillm.dataset.tokenizers import TextTokenizer, ByteTokenizer, get_tokenizer, tokenize_text
from midillm.dataset.manifest import Manifest, ManifestEntry
from midillm.dataset.builders import (
    ExampleKind, TrainingExample, DatasetSettings,
    build_finetune_example, build_infill_examples, pack_pretrain,
    write_example_set, read_example_set, new_rng,
)

__all__ = [
    "TextTokenizer", "ByteTokenizer", "get_tokenizer", "tokenize_text",
    "Manifest", "ManifestEntry",
    "ExampleKind", "TrainingExample", "DatasetSettings",
    "build_finetune_example", "build_infill_examples", "pack_pretrain",
    "write_example_set", "read_example_set", "new_rng",
]
