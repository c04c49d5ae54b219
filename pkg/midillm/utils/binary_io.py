#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Little-endian header helpers shared by the AMTK, EMB1 and NGRM file formats
"""

import os
import struct
import logging

import numpy as np

from midillm.errors import FileFormatError

logger = logging.getLogger(__name__)


def write_header(f, layout, magic, *fields):
    """Write `magic` followed by the integer `fields` packed with `layout`

    Args:
        f: Binary file open for writing
        layout (str): struct format without the magic, e.g. "<IIQ"
        magic (bytes): Four-byte file tag
        *fields (int): Header values
    """
    f.write(struct.pack(layout[0] + "4s" + layout[1:], magic, *fields))


def read_header(f, layout, magic, name="file"):
    """Read and check a header written by write_header

    Args:
        f: Binary file open for reading
        layout (str): struct format without the magic
        magic (bytes): Expected four-byte file tag
        name (str): File name for error messages

    Returns:
        tuple: The header fields

    Raises:
        FileFormatError: Short header or wrong magic
    """
    full = layout[0] + "4s" + layout[1:]
    size = struct.calcsize(full)
    raw = f.read(size)
    if len(raw) < size:
        raise FileFormatError(f"{name}: header is {len(raw)} bytes, expected {size}")
    found, *fields = struct.unpack(full, raw)
    if found != magic:
        raise FileFormatError(f"{name}: bad magic {found!r}, expected {magic!r}")
    return tuple(fields)


def read_array(f, dtype, count, name="file"):
    """Read exactly `count` items of `dtype` (e.g. "<u4")

    Raises:
        FileFormatError: The body is shorter than `count` items
    """
    itemsize = np.dtype(dtype).itemsize
    raw = f.read(count * itemsize)
    if len(raw) != count * itemsize:
        raise FileFormatError(
            f"{name}: expected {count} items, found {len(raw) // itemsize}"
        )
    return np.frombuffer(raw, dtype=dtype).copy()


def ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
