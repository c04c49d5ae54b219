#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Text tokenizers for caption prefixes
"""

import logging
from abc import ABC, abstractmethod

logger = logging.getLogger(__name__)

MAX_TEXT_LEN = 256


class TextTokenizer(ABC):
    """Abstract base class for caption tokenizers

    Implementations must be deterministic and return ids below the text
    vocabulary size.
    """

    name = "base"

    @abstractmethod
    def encode(self, text):
        """Tokenize text

        Args:
            text (str): The caption

        Returns:
            list: Token ids in [0, text_vocab_size)
        """
        pass


class ByteTokenizer(TextTokenizer):
    """UTF-8 bytes as token ids (all below 256)"""

    name = "byte"

    def encode(self, text):
        return list(text.encode("utf-8"))


def get_tokenizer(name="byte"):
    """Get the tokenizer registered under `name`

    Args:
        name (str): Tokenizer name

    Returns:
        TextTokenizer: A tokenizer instance, or None if the name is unknown
    """
    name = (name or "byte").lower()

    if name == "byte":
        return ByteTokenizer()

    logger.error(f"Unknown text tokenizer: {name}")
    return None


def tokenize_text(caption, tok=None, max_len=MAX_TEXT_LEN, text_vocab_size=None):
    """Tokenize a caption, keeping at most the first `max_len` ids

    Args:
        caption (str): The caption ('' gives [])
        tok (TextTokenizer): Tokenizer (default: bytes)
        max_len (int): Prefix budget
        text_vocab_size (int): When given, ids are checked against it

    Returns:
        list: Token ids
    """
    if not caption:
        return []
    ids = (tok or ByteTokenizer()).encode(caption)[:max_len]
    if text_vocab_size is not None:
        bad = [i for i in ids if not 0 <= i < text_vocab_size]
        if bad:
            raise ValueError(f"tokenizer produced ids outside the text vocabulary: {bad[:5]}")
    return ids
