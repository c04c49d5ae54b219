#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Decoding: score providers, nucleus sampling and grammar-constrained generation
"""

import logging

from midillm.decoding.base_provider import LogitsProvider, UniformProvider
from midillm.decoding.sampling import softmax, nucleus_support, nucleus_sample
from midillm.decoding.grammar import Expect, GrammarState, grammar_mask
from midillm.decoding.generate import generate, DEFAULT_TOP_P, MAX_NEW
from midillm.decoding.ngram import NGramModel, train_ngram

logger = logging.getLogger(__name__)


def get_provider(name, cfg, model_path=None):
    """Get the score provider registered under `name`

    Args:
        name (str): 'uniform' or 'ngram'
        cfg (VocabConfig): Vocabulary layout
        model_path (str): Saved model, required for 'ngram'

    Returns:
        LogitsProvider: A provider instance, or None if the name is unknown
    """
    name = name.lower()

    if name == "uniform":
        return UniformProvider(cfg)
    elif name == "ngram":
        if not model_path:
            raise ValueError("the ngram provider needs a model file")
        return NGramModel.load(model_path, cfg)

    logger.error(f"Unknown provider: {name}")
    return None


__all__ = [
    "LogitsProvider", "UniformProvider", "get_provider",
    "softmax", "nucleus_support", "nucleus_sample",
    "Expect", "GrammarState", "grammar_mask",
    "generate", "DEFAULT_TOP_P", "MAX_NEW",
    "NGramModel", "train_ngram",
]
