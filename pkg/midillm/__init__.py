"""MIDI-side toolkit for a text-to-MIDI language model."""

__version__ = "0.1.0"
