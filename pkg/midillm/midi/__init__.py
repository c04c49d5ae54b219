#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
MIDI input/output: Standard MIDI Files to seconds-based notes and back
"""

from midillm.midi.notes import Note, NoteSeq, DRUM_INSTRUMENT, format_notes, parse_notes
from midillm.midi.smf import (
    MidiFile, TrackEvent, TempoMap, parse_smf, extract_notes, write_smf, read_midi, load_notes,
    DEFAULT_TEMPO, DRUM_CHANNEL, MELODIC_CHANNELS,
)

__all__ = [
    "Note", "NoteSeq", "DRUM_INSTRUMENT", "format_notes", "parse_notes",
    "MidiFile", "TrackEvent", "TempoMap", "parse_smf", "extract_notes", "write_smf",
    "read_midi", "load_notes", "DEFAULT_TEMPO", "DRUM_CHANNEL", "MELODIC_CHANNELS",
]
