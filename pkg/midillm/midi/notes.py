#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Note and NoteSeq - continuous-time note records shared by every module
"""

from dataclasses import dataclass, field
from typing import Iterable, Iterator, List

DRUM_INSTRUMENT = 128
NUM_INSTRUMENTS = 129


@dataclass(frozen=True)
class Note:
    """One musical note in continuous time (seconds)"""
    onset: float
    duration: float
    instrument: int
    pitch: int
    velocity: int = field(default=64, compare=False)

    def __post_init__(self):
        if not self.onset >= 0:
            raise ValueError(f"onset must be non-negative, got {self.onset}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if not 0 <= self.instrument <= DRUM_INSTRUMENT:
            raise ValueError(f"instrument must be in [0, 128], got {self.instrument}")
        if not 0 <= self.pitch <= 127:
            raise ValueError(f"pitch must be in [0, 127], got {self.pitch}")
        if not 1 <= self.velocity <= 127:
            raise ValueError(f"velocity must be in [1, 127], got {self.velocity}")

    @property
    def sort_key(self):
        return (self.onset, self.instrument, self.pitch, self.duration)

    @property
    def offset(self):
        return self.onset + self.duration

    def shifted(self, seconds):
        """Copy of the note moved by `seconds`"""
        return Note(self.onset + seconds, self.duration, self.instrument, self.pitch, self.velocity)

    def __repr__(self):
        return f'<Note {self.onset:.3f}s +{self.duration:.3f}s inst={self.instrument} pitch={self.pitch}>'


@dataclass
class NoteSeq:
    """Notes ordered by (onset, instrument, pitch, duration)

    The constructor keeps the given order; use NoteSeq.sorted() to build a
    sequence from arbitrary notes. Warnings collected while producing the
    sequence travel with it but do not take part in equality.
    """
    notes: List[Note] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list, compare=False)

    @classmethod
    def sorted(cls, notes: Iterable[Note], warnings=None) -> "NoteSeq":
        return cls(sorted(notes, key=lambda n: n.sort_key), list(warnings or []))

    def is_sorted(self) -> bool:
        return all(a.sort_key <= b.sort_key for a, b in zip(self.notes, self.notes[1:]))

    def shifted(self, seconds) -> "NoteSeq":
        return NoteSeq([n.shifted(seconds) for n in self.notes], list(self.warnings))

    @property
    def end_time(self) -> float:
        """Latest note offset, 0.0 when empty"""
        return max((n.offset for n in self.notes), default=0.0)

    def __len__(self):
        return len(self.notes)

    def __iter__(self) -> Iterator[Note]:
        return iter(self.notes)

    def __getitem__(self, index):
        return self.notes[index]

    def __repr__(self):
        return f'<NoteSeq {len(self.notes)} notes>'


def format_notes(seq):
    """Serialize notes as lines of `onset_sec duration_sec instrument pitch`

    Args:
        seq (NoteSeq): The notes to write

    Returns:
        str: One note per line, newline terminated (empty string when empty)
    """
    return "".join(
        f"{n.onset:.6f} {n.duration:.6f} {n.instrument} {n.pitch}\n" for n in seq
    )


def parse_notes(text):
    """Parse the line format written by format_notes

    Blank lines and lines starting with '#' are ignored.

    Args:
        text (str): The serialized notes

    Returns:
        NoteSeq: The notes in NoteSeq order
    """
    notes = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields, found {len(parts)}")
        onset, duration = float(parts[0]), float(parts[1])
        notes.append(Note(onset, duration, int(parts[2]), int(parts[3])))
    return NoteSeq.sorted(notes)
