#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
AMTK token files

A 24-byte header (magic, version, text and MIDI vocabulary sizes, count)
followed by the global ids as little-endian u32.
"""

import logging

import numpy as np

from midillm.codec import TokenSequence
from midillm.errors import FileFormatError
from midillm.utils.binary_io import write_header, read_header, read_array, ensure_parent

logger = logging.getLogger(__name__)

TOKEN_MAGIC = b'AMTK'
TOKEN_VERSION = 1
TOKEN_LAYOUT = '<IIIQ'  # version, text_vocab_size, midi_vocab_size, count


def write_tokens(tokens, path):
    """Write a TokenSequence to an AMTK file

    Args:
        tokens (TokenSequence): Global ids and their vocabulary layout
        path (str): Output file, parent directories are created
    """
    ensure_parent(path)
    ids = np.asarray(tokens.ids, dtype='<u4')
    with open(path, 'wb') as f:
        write_header(f, TOKEN_LAYOUT, TOKEN_MAGIC, TOKEN_VERSION,
                     tokens.cfg.text_vocab_size, tokens.cfg.midi_vocab_size, len(ids))
        f.write(ids.tobytes())
    logger.debug(f"Wrote {len(ids)} tokens to {path}")


def read_tokens(path, cfg):
    """Read an AMTK file written under the vocabulary layout `cfg`

    Args:
        path (str): Token file
        cfg (VocabConfig): Expected vocabulary layout

    Returns:
        TokenSequence: The ids

    Raises:
        FileFormatError: Bad magic, unknown version, vocabulary mismatch or short body
    """
    with open(path, 'rb') as f:
        version, text_size, midi_size, count = read_header(f, TOKEN_LAYOUT, TOKEN_MAGIC, name=path)
        if version != TOKEN_VERSION:
            raise FileFormatError(f"{path}: unsupported token file version {version}")
        if (text_size, midi_size) != (cfg.text_vocab_size, cfg.midi_vocab_size):
            raise FileFormatError(
                f"{path}: written for vocab {text_size}+{midi_size}, "
                f"configured {cfg.text_vocab_size}+{cfg.midi_vocab_size}"
            )
        ids = read_array(f, '<u4', count, name=path)
    return TokenSequence(ids.tolist(), cfg)
