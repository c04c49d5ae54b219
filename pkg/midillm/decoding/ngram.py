#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
N-gram reference model - a desk-scale next-token provider
"""

import struct
import logging
from collections import Counter, defaultdict

import numpy as np

from midillm.codec import TokenSequence
from midillm.decoding.base_provider import LogitsProvider
from midillm.errors import FileFormatError
from midillm.utils.binary_io import write_header, read_header, read_array, ensure_parent
from midillm.vocab import VocabConfig

logger = logging.getLogger(__name__)

NGRAM_MAGIC = b'NGRM'
NGRAM_LAYOUT = '<IIIQ'  # n, text_vocab_size, midi_vocab_size, record count


class NGramModel(LogitsProvider):
    """Add-one smoothed n-gram model with back-off to shorter contexts

    counts[k] maps a context of k ids to a Counter of next ids. A context
    never seen at order k backs off to its last k-1 ids, down to the
    unigram table.
    """

    def __init__(self, n, cfg, counts=None):
        if n < 1:
            raise ValueError(f"n-gram order must be at least 1, got {n}")
        super().__init__(cfg)
        self.provider_name = f"{n}-gram"
        self.n = n
        self.counts = counts or [defaultdict(Counter) for _ in range(n)]
        self._tables = [{} for _ in range(n)]
        self._compile()

    def _compile(self):
        # sparse (tokens, log(c + 1), log denominator) per context
        vocab = self.vocab_size
        for k, table in enumerate(self.counts):
            for context, nexts in table.items():
                tokens = np.fromiter(nexts.keys(), dtype=np.int64, count=len(nexts))
                values = np.fromiter(nexts.values(), dtype=np.float64, count=len(nexts))
                self._tables[k][context] = (tokens, np.log1p(values), np.log(values.sum() + vocab))

    def count(self, context, token):
        """Times `token` followed exactly `context` in the training corpus"""
        context = tuple(int(t) for t in context)
        if len(context) >= self.n:
            return 0
        return self.counts[len(context)].get(context, {}).get(int(token), 0)

    def _lookup(self, context):
        context = tuple(int(t) for t in context[-(self.n - 1):]) if self.n > 1 else ()
        for k in range(len(context), -1, -1):
            key = context[len(context) - k:]
            if key in self._tables[k]:
                return self._tables[k][key]
        return None

    def scores(self, context):
        """Log-probabilities of the smoothed next-token distribution"""
        entry = self._lookup(list(context))
        if entry is None:
            return np.full(self.vocab_size, -np.log(self.vocab_size))
        tokens, log_numer, log_denom = entry
        out = np.full(self.vocab_size, -log_denom)
        out[tokens] = log_numer - log_denom
        return out

    def probabilities(self, context):
        return np.exp(self.scores(context))

    def save(self, path):
        """Write the count tables as an NGRM file"""
        records = sorted(
            (len(context), context, token, c)
            for table in self.counts
            for context, nexts in table.items()
            for token, c in nexts.items()
        )
        ensure_parent(path)
        with open(path, 'wb') as f:
            write_header(f, NGRAM_LAYOUT, NGRAM_MAGIC, self.n,
                         self.cfg.text_vocab_size, self.cfg.midi_vocab_size, len(records))
            for k, context, token, c in records:
                f.write(struct.pack(f'<I{k}IIQ', k, *context, token, c))
        logger.info(f"Saved {self.n}-gram model ({len(records)} records) to {path}")

    @classmethod
    def load(cls, path, cfg=None):
        """Read an NGRM file; `cfg` must match the stored vocabulary sizes"""
        with open(path, 'rb') as f:
            n, text_size, midi_size, count = read_header(f, NGRAM_LAYOUT, NGRAM_MAGIC, name=path)
            if cfg is None:
                cfg = VocabConfig(text_vocab_size=text_size)
            if (text_size, midi_size) != (cfg.text_vocab_size, cfg.midi_vocab_size):
                raise FileFormatError(
                    f"{path}: written for vocab {text_size}+{midi_size}, "
                    f"configured {cfg.text_vocab_size}+{cfg.midi_vocab_size}"
                )
            if n < 1:
                raise FileFormatError(f"{path}: invalid order {n}")
            counts = [defaultdict(Counter) for _ in range(n)]
            for _ in range(count):
                k = int(read_array(f, '<u4', 1, name=path)[0])
                if k >= n:
                    raise FileFormatError(f"{path}: context of {k} ids in a {n}-gram model")
                context = tuple(int(t) for t in read_array(f, '<u4', k, name=path))
                token = int(read_array(f, '<u4', 1, name=path)[0])
                c = int(read_array(f, '<u8', 1, name=path)[0])
                if token >= cfg.total_size:
                    raise FileFormatError(f"{path}: token {token} outside the vocabulary")
                counts[k][context][token] = c
        logger.info(f"Loaded {n}-gram model ({count} records) from {path}")
        return cls(n, cfg, counts)

    def __repr__(self):
        return f'<NGramModel n={self.n} contexts={sum(len(t) for t in self.counts)}>'


def train_ngram(corpus, n, cfg=None):
    """Count every context of up to n-1 ids followed by a next id

    Args:
        corpus (list): TokenSequence (or id lists)
        n (int): Model order
        cfg (VocabConfig): Vocabulary layout (default: the first sequence's)

    Returns:
        NGramModel: The trained model
    """
    if n < 1:
        raise ValueError(f"n-gram order must be at least 1, got {n}")
    corpus = list(corpus)
    if not corpus:
        raise ValueError("cannot train on an empty corpus")
    if cfg is None:
        cfg = corpus[0].cfg if isinstance(corpus[0], TokenSequence) else VocabConfig()

    counts = [defaultdict(Counter) for _ in range(n)]
    total = 0
    for seq in corpus:
        ids = seq.ids if isinstance(seq, TokenSequence) else [int(t) for t in seq]
        for i, token in enumerate(ids):
            for k in range(min(n - 1, i) + 1):
                counts[k][tuple(ids[i - k:i])][token] += 1
        total += len(ids)
    logger.info(f"Trained {n}-gram model on {len(corpus)} sequences ({total} ids)")
    return NGramModel(n, cfg, counts)
