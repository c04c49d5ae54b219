#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
AMT music vocabulary layout and its concatenation with a text vocabulary

Local MIDI ids, per flavor block of 27512:
    [0, 10000)      onset bins (10 ms, 0-100 s)
    [10000, 11000)  duration bins (10 ms, 0-10 s)
    [11000, 27512)  instrument * 128 + pitch (129 instruments, 128 pitches)
The anticipated flavor repeats the block at offset 27512. Global ids put
the MIDI block right after the text vocabulary.
"""

import enum
import logging
from dataclasses import dataclass

from midillm.errors import OutOfRange

logger = logging.getLogger(__name__)

ONSET_BINS = 10000
DURATION_BINS = 1000
NUM_INSTRUMENTS = 129
NUM_PITCHES = 128
INSTRPITCH_COUNT = NUM_INSTRUMENTS * NUM_PITCHES

ONSET_BASE = 0
DURATION_BASE = ONSET_BASE + ONSET_BINS
INSTRPITCH_BASE = DURATION_BASE + DURATION_BINS
NORMAL_BLOCK = INSTRPITCH_BASE + INSTRPITCH_COUNT
MIDI_VOCAB_SIZE = 2 * NORMAL_BLOCK

# Seconds per onset/duration bin
TIME_RESOLUTION = 0.01


class EventKind(enum.Enum):
    ONSET = "onset"
    DURATION = "duration"
    INSTR_PITCH = "instr_pitch"


@dataclass(frozen=True)
class Event:
    """One AMT event: an onset bin, a duration bin or an instrument-pitch pair"""
    kind: EventKind
    value: int
    anticipated: bool = False

    def __post_init__(self):
        limit = {
            EventKind.ONSET: ONSET_BINS,
            EventKind.DURATION: DURATION_BINS,
            EventKind.INSTR_PITCH: INSTRPITCH_COUNT,
        }[self.kind]
        if not 0 <= self.value < limit:
            raise OutOfRange(f"{self.kind.value} value {self.value} not in [0, {limit})")

    @classmethod
    def onset(cls, bin, anticipated=False):
        return cls(EventKind.ONSET, bin, anticipated)

    @classmethod
    def duration(cls, bin, anticipated=False):
        return cls(EventKind.DURATION, bin, anticipated)

    @classmethod
    def instr_pitch(cls, instrument, pitch, anticipated=False):
        if not 0 <= instrument < NUM_INSTRUMENTS or not 0 <= pitch < NUM_PITCHES:
            raise OutOfRange(f"instrument {instrument} / pitch {pitch} out of range")
        return cls(EventKind.INSTR_PITCH, instrument * NUM_PITCHES + pitch, anticipated)

    @property
    def instrument(self):
        return self.value // NUM_PITCHES if self.kind is EventKind.INSTR_PITCH else None

    @property
    def pitch(self):
        return self.value % NUM_PITCHES if self.kind is EventKind.INSTR_PITCH else None

    def __repr__(self):
        flag = "a:" if self.anticipated else ""
        if self.kind is EventKind.INSTR_PITCH:
            return f'<Event {flag}instr_pitch {self.instrument}:{self.pitch}>'
        return f'<Event {flag}{self.kind.value} {self.value}>'


_KIND_BASE = {
    EventKind.ONSET: ONSET_BASE,
    EventKind.DURATION: DURATION_BASE,
    EventKind.INSTR_PITCH: INSTRPITCH_BASE,
}


@dataclass(frozen=True)
class VocabConfig:
    """Token-id layout of the joint text + MIDI vocabulary"""
    text_vocab_size: int = 128256
    eos_id: int = 128001
    separator_id: int = 128000
    midi_vocab_size: int = MIDI_VOCAB_SIZE
    onset_base: int = ONSET_BASE
    duration_base: int = DURATION_BASE
    instrpitch_base: int = INSTRPITCH_BASE
    normal_block: int = NORMAL_BLOCK

    def __post_init__(self):
        if self.normal_block != ONSET_BINS + DURATION_BINS + INSTRPITCH_COUNT:
            raise ValueError(f"normal_block must be {NORMAL_BLOCK}, got {self.normal_block}")
        if self.midi_vocab_size != 2 * self.normal_block:
            raise ValueError(f"midi_vocab_size must be {2 * self.normal_block}, got {self.midi_vocab_size}")
        if (self.onset_base, self.duration_base, self.instrpitch_base) != (ONSET_BASE, DURATION_BASE, INSTRPITCH_BASE):
            raise ValueError("the MIDI block layout is fixed: onset 0, duration 10000, instrument-pitch 11000")
        if self.eos_id == self.separator_id:
            raise ValueError("eos_id and separator_id must differ")
        for name in ("eos_id", "separator_id"):
            value = getattr(self, name)
            if not 0 <= value < self.text_vocab_size:
                raise ValueError(f"{name} {value} must be below text_vocab_size {self.text_vocab_size}")

    @classmethod
    def from_config(cls, config):
        """Build from the 'vocab' section of the toolkit configuration"""
        vocab = (config or {}).get("vocab", {})
        return cls(
            text_vocab_size=int(vocab.get("text_vocab_size", 128256)),
            eos_id=int(vocab.get("eos_id", 128001)),
            separator_id=int(vocab.get("separator_id", 128000)),
        )

    @property
    def total_size(self):
        return self.text_vocab_size + self.midi_vocab_size

    @property
    def midi_start(self):
        """First global MIDI id"""
        return self.text_vocab_size

    def global_range(self, kind, anticipated=False):
        """Global ids of one event class as a range"""
        start = self.text_vocab_size + _KIND_BASE[kind] + (self.normal_block if anticipated else 0)
        size = {EventKind.ONSET: ONSET_BINS, EventKind.DURATION: DURATION_BINS,
                EventKind.INSTR_PITCH: INSTRPITCH_COUNT}[kind]
        return range(start, start + size)

    def is_midi(self, global_id):
        return self.text_vocab_size <= global_id < self.total_size


@dataclass(frozen=True)
class TextId:
    value: int


@dataclass(frozen=True)
class MidiId:
    value: int


def local_id_of(event):
    """Local MIDI id of an event, in [0, 55024)

    Args:
        event (Event): The event

    Returns:
        int: The local id
    """
    local = _KIND_BASE[event.kind] + event.value
    return local + NORMAL_BLOCK if event.anticipated else local


def event_of(local_id):
    """Inverse of local_id_of

    Args:
        local_id (int): Local MIDI id

    Returns:
        Event: The event the id stands for
    """
    if not 0 <= local_id < MIDI_VOCAB_SIZE:
        raise OutOfRange(f"local MIDI id {local_id} not in [0, {MIDI_VOCAB_SIZE})")
    anticipated = local_id >= NORMAL_BLOCK
    rest = local_id - NORMAL_BLOCK if anticipated else local_id
    if rest < DURATION_BASE:
        return Event(EventKind.ONSET, rest - ONSET_BASE, anticipated)
    if rest < INSTRPITCH_BASE:
        return Event(EventKind.DURATION, rest - DURATION_BASE, anticipated)
    return Event(EventKind.INSTR_PITCH, rest - INSTRPITCH_BASE, anticipated)


def to_global(local_id, cfg):
    """Place a local MIDI id after the text vocabulary"""
    if not 0 <= local_id < cfg.midi_vocab_size:
        raise OutOfRange(f"local MIDI id {local_id} not in [0, {cfg.midi_vocab_size})")
    return cfg.text_vocab_size + local_id


def to_local(global_id, cfg):
    """Split a global id into TextId or MidiId"""
    if not 0 <= global_id < cfg.total_size:
        raise OutOfRange(f"global id {global_id} not in [0, {cfg.total_size})")
    if global_id < cfg.text_vocab_size:
        return TextId(global_id)
    return MidiId(global_id - cfg.text_vocab_size)


def global_event(global_id, cfg):
    """Event of a global MIDI id, None for text ids"""
    local = to_local(global_id, cfg)
    return event_of(local.value) if isinstance(local, MidiId) else None


def describe_token(global_id, cfg):
    """Human-readable name of a global token id

    Args:
        global_id (int): The token
        cfg (VocabConfig): Vocabulary layout

    Returns:
        str: e.g. '<onset 10.20s>', '<duration 120ms>', '<a:inst 0 pitch 60>', '<eos>'
    """
    if global_id == cfg.eos_id:
        return "<eos>"
    if global_id == cfg.separator_id:
        return "<sep>"
    event = global_event(global_id, cfg)
    if event is None:
        return f"<text {global_id}>"
    flag = "a:" if event.anticipated else ""
    if event.kind is EventKind.ONSET:
        return f"<{flag}onset {event.value * TIME_RESOLUTION:.2f}s>"
    if event.kind is EventKind.DURATION:
        return f"<{flag}duration {event.value * 10}ms>"
    instrument = "drums" if event.instrument == NUM_INSTRUMENTS - 1 else f"inst {event.instrument}"
    return f"<{flag}{instrument} pitch {event.pitch}>"
