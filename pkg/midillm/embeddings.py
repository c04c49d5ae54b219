#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Embedding tables and the text + MIDI vocabulary expansion

The expanded table stacks the text LLM's rows on top of the MIDI rows, so
text ids keep their original embeddings and MIDI ids index the new block.
"""

import logging

import numpy as np

from midillm.errors import DimMismatch
from midillm.utils.binary_io import write_header, read_header, read_array, ensure_parent
from midillm.vocab import MIDI_VOCAB_SIZE

logger = logging.getLogger(__name__)

EMB_MAGIC = b'EMB1'
EMB_LAYOUT = '<III'  # rows, dim, reserved


class EmbeddingTable:
    """Dense rows x dim float32 matrix"""

    def __init__(self, data):
        data = np.asarray(data, dtype=np.float32)
        if data.ndim != 2:
            raise ValueError(f"embedding table must be 2-D, got shape {data.shape}")
        if not np.isfinite(data).all():
            raise ValueError("embedding table contains non-finite entries")
        self.data = data

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]

    def __eq__(self, other):
        return isinstance(other, EmbeddingTable) and self.data.shape == other.data.shape \
            and self.data.tobytes() == other.data.tobytes()

    def __repr__(self):
        return f'<EmbeddingTable {self.rows}x{self.dim}>'


def random_embeddings(rows=MIDI_VOCAB_SIZE, dim=2048, seed=0, std=0.02):
    """Seeded Gaussian table (mean 0) for the new MIDI rows

    Args:
        rows (int): Number of rows
        dim (int): Hidden dimension
        seed (int): Generator seed; the same seed gives the same table
        std (float): Standard deviation

    Returns:
        EmbeddingTable: The random table
    """
    rng = np.random.default_rng(seed)
    return EmbeddingTable(rng.normal(0.0, std, size=(rows, dim)).astype(np.float32))


def expand_embeddings(e_llm, e_amt, midi_rows=None):
    """Concatenate text and MIDI embedding tables

    Args:
        e_llm (EmbeddingTable): The text LLM's embeddings
        e_amt (EmbeddingTable): The MIDI embeddings
        midi_rows (int): Expected MIDI row count, None to skip the check

    Returns:
        EmbeddingTable: (e_llm.rows + e_amt.rows) x dim, text rows first
    """
    if e_llm.dim != e_amt.dim:
        raise DimMismatch(f"text table has dim {e_llm.dim}, MIDI table has dim {e_amt.dim}")
    if midi_rows is not None and e_amt.rows != midi_rows:
        raise ValueError(f"MIDI table has {e_amt.rows} rows, expected {midi_rows}")

    expanded = EmbeddingTable(np.concatenate([e_llm.data, e_amt.data], axis=0))
    logger.info(f"Expanded embeddings {e_llm.rows}x{e_llm.dim} + {e_amt.rows} MIDI rows -> {expanded.rows} rows")
    return expanded


def write_embeddings(table, path):
    """Write a table in the EMB1 format"""
    ensure_parent(path)
    with open(path, 'wb') as f:
        write_header(f, EMB_LAYOUT, EMB_MAGIC, table.rows, table.dim, 0)
        f.write(table.data.astype('<f4').tobytes())


def read_embeddings(path):
    """Read a table written by write_embeddings"""
    with open(path, 'rb') as f:
        rows, dim, _ = read_header(f, EMB_LAYOUT, EMB_MAGIC, name=path)
        data = read_array(f, '<f4', rows * dim, name=path)
    return EmbeddingTable(data.reshape(rows, dim))
