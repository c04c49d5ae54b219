#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Exception hierarchy and error handlers for the toolkit
"""

import logging

logger = logging.getLogger(__name__)

# Exit codes of the command-line surface
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


class MidiLLMError(Exception):
    """Base class for every error raised by the toolkit"""

    def __init__(self, message=None):
        super().__init__(message or self.__class__.__doc__)
        self.message = message or self.__class__.__doc__

    def __str__(self):
        return f"{self.__class__.__name__}: {self.message}"


class FileFormatError(MidiLLMError):
    """Binary file has a wrong magic number or is shorter than its header says"""


class ConfigError(MidiLLMError):
    """Configuration file exists but cannot be read as a JSON object"""


# --- Standard MIDI Files ---

class MidiFileError(MidiLLMError):
    """Standard MIDI File could not be read"""


class MalformedHeader(MidiFileError):
    """Missing or short MThd header chunk"""


class UnsupportedFormat(MidiFileError):
    """SMF format 2 and SMPTE time divisions are not supported"""


class TruncatedTrack(MidiFileError):
    """Track chunk declares more data than the file contains"""


class ChannelOverflowWarning(UserWarning):
    """More melodic instruments than free MIDI channels; channels are shared"""


# --- Vocabulary ---

class VocabError(MidiLLMError):
    """Token id or table shape does not fit the vocabulary layout"""


class OutOfRange(VocabError):
    """Token id outside the vocabulary range"""


class DimMismatch(VocabError):
    """Embedding tables have different hidden dimensions"""


# --- Codec ---

class CodecError(MidiLLMError):
    """Notes or tokens could not be converted"""


class OnsetOutOfRange(CodecError):
    """Note onset is at or beyond the 100 second window; segment first"""


class UnsortedNotes(CodecError):
    """Notes are not in (onset, instrument, pitch, duration) order"""


class DecodeError(CodecError):
    """Token stream does not follow the onset/duration/instrument-pitch grammar"""

    DANGLING_TRIPLE = "DanglingTriple"
    CYCLE_BREAK = "CycleBreak"
    RANGE_ERROR = "RangeError"

    def __init__(self, kind, position, message=None):
        super().__init__(message or f"{kind} at position {position}")
        self.kind = kind
        self.position = position


# --- Dataset ---

class DatasetError(MidiLLMError):
    """Training example could not be built"""


class EmptyMidi(DatasetError):
    """Piece has no notes"""


class TooSparse(DatasetError):
    """Piece has fewer than 3 distinct onset times"""


class ManifestError(DatasetError):
    """Manifest is malformed"""


# --- Decoding ---

class DecoderError(MidiLLMError):
    """Generation failed"""


class DeadEnd(DecoderError):
    """Grammar mask left no token with non-zero probability"""


def handle_error(e):
    """Map an exception to the command-line contract

    Args:
        e (Exception): The exception raised by a subcommand

    Returns:
        tuple: (exit code, single-line diagnostic)
    """
    if isinstance(e, MidiLLMError):
        return EXIT_ERROR, str(e).replace("\n", " ")
    if isinstance(e, (OSError, ValueError)):
        return EXIT_ERROR, f"{e.__class__.__name__}: {e}".replace("\n", " ")
    logger.exception("Unexpected error")
    return EXIT_ERROR, f"InternalError: {e}".replace("\n", " ")
