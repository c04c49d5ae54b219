#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
AMT codec - notes to arrival-time token triples and back

Every note becomes exactly three tokens: onset bin, duration bin and
instrument-pitch. Future notes given as infilling context use the
anticipated flavor of the same three classes.
"""

import math
import bisect
import logging
from dataclasses import dataclass, field
from typing import List

from midillm.errors import OnsetOutOfRange, UnsortedNotes, DecodeError, OutOfRange
from midillm.midi.notes import Note, NoteSeq
from midillm.vocab import (
    Event, EventKind, VocabConfig, local_id_of, to_global, global_event,
    ONSET_BINS, DURATION_BINS, TIME_RESOLUTION,
)

logger = logging.getLogger(__name__)

SEGMENT_SPAN = ONSET_BINS * TIME_RESOLUTION  # 100 s
DEFAULT_DELTA = 5.0

# Validation violation kinds
CYCLE_BREAK = DecodeError.CYCLE_BREAK
DANGLING_TRIPLE = DecodeError.DANGLING_TRIPLE
RANGE_ERROR = DecodeError.RANGE_ERROR
ONSET_REGRESSION = "OnsetRegression"


@dataclass(frozen=True)
class QuantNote:
    """A note on the 10 ms grid"""
    onset_bin: int
    duration_bin: int
    instrument: int
    pitch: int
    anticipated: bool = False

    def __post_init__(self):
        if not 0 <= self.onset_bin < ONSET_BINS:
            raise OnsetOutOfRange(f"onset bin {self.onset_bin} not in [0, {ONSET_BINS})")
        if not 0 <= self.duration_bin < DURATION_BINS:
            raise ValueError(f"duration bin {self.duration_bin} not in [0, {DURATION_BINS})")

    def events(self):
        return (
            Event.onset(self.onset_bin, self.anticipated),
            Event.duration(self.duration_bin, self.anticipated),
            Event.instr_pitch(self.instrument, self.pitch, self.anticipated),
        )

    def to_note(self):
        return Note(self.onset_bin / 100, max(1, self.duration_bin) / 100, self.instrument, self.pitch)


@dataclass
class TokenSequence:
    """Flat list of global token ids under a vocabulary layout"""
    ids: List[int]
    cfg: VocabConfig = field(default_factory=VocabConfig)

    def __post_init__(self):
        self.ids = [int(i) for i in self.ids]
        total = self.cfg.total_size
        for pos, tid in enumerate(self.ids):
            if not 0 <= tid < total:
                raise OutOfRange(f"token {tid} at position {pos} not in [0, {total})")

    def __len__(self):
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def __repr__(self):
        return f'<TokenSequence {len(self.ids)} ids>'


@dataclass(frozen=True)
class Violation:
    position: int
    kind: str


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations

    def summary(self):
        """One line: 'ok' or the first violation plus a count"""
        if self.ok:
            return "ok"
        first = self.violations[0]
        more = f" (+{len(self.violations) - 1} more)" if len(self.violations) > 1 else ""
        return f"{first.kind} at position {first.position}{more}"


def _to_bin(seconds):
    # round half up on the 10 ms grid
    return int(math.floor(seconds * 100 + 0.5))


def quantize(note, anticipated=False):
    """Put a note on the 10 ms grid

    Args:
        note (Note): Note with onset below 100 s
        anticipated (bool): Flavor of the result

    Returns:
        QuantNote: Onset bin (half-up), duration bin clipped to [1, 999]
    """
    if note.onset >= SEGMENT_SPAN:
        raise OnsetOutOfRange(f"onset {note.onset:.3f}s is not below {SEGMENT_SPAN:.0f}s, segment first")
    onset_bin = min(ONSET_BINS - 1, _to_bin(note.onset))
    duration_bin = min(DURATION_BINS - 1, max(1, _to_bin(note.duration)))
    return QuantNote(onset_bin, duration_bin, note.instrument, note.pitch, anticipated)


def segment(notes, max_span=SEGMENT_SPAN):
    """Split notes into consecutive windows of `max_span` seconds

    Window k holds the notes with onset in [k*max_span, (k+1)*max_span),
    rebased to start at 0. Empty windows between non-empty ones are kept so
    that window k always starts at k*max_span in the original piece.

    Args:
        notes (NoteSeq): Sorted notes
        max_span (float): Window length in seconds

    Returns:
        list: NoteSeq per window, empty list for empty input
    """
    if not len(notes):
        return []
    windows = {}
    for note in notes:
        k = int(note.onset // max_span)
        windows.setdefault(k, []).append(note.shifted(-k * max_span))
    return [NoteSeq(windows.get(k, [])) for k in range(max(windows) + 1)]


def _check_sorted(notes, name="notes"):
    if not isinstance(notes, NoteSeq):
        notes = NoteSeq(list(notes))
    if not notes.is_sorted():
        raise UnsortedNotes(f"{name} are not in (onset, instrument, pitch, duration) order")
    return notes


def _triple_ids(qnote, cfg):
    return [to_global(local_id_of(ev), cfg) for ev in qnote.events()]


def encode(notes, cfg):
    """Encode sorted notes as normal-flavor token triples

    Args:
        notes (NoteSeq): Sorted notes, all onsets below 100 s
        cfg (VocabConfig): Vocabulary layout

    Returns:
        TokenSequence: 3 * len(notes) global ids
    """
    notes = _check_sorted(notes)
    ids = []
    for note in notes:
        ids.extend(_triple_ids(quantize(note), cfg))
    return TokenSequence(ids, cfg)


def _event_at(ids, pos, cfg):
    try:
        return global_event(ids[pos], cfg)
    except OutOfRange:
        return None


def decode(tokens, strict=True):
    """Decode token triples back into notes

    Anticipated triples decode like normal ones. A duration bin of 0 is
    read as one bin so every decoded note has positive length.

    Args:
        tokens (TokenSequence): MIDI-block ids
        strict (bool): Raise on the first grammar error instead of skipping
            to the next onset token and recording a warning

    Returns:
        NoteSeq: Sorted notes; lenient-mode warnings in .warnings
    """
    ids, cfg = tokens.ids, tokens.cfg
    notes, warns = [], []
    n = len(ids)
    i = 0

    def fail(kind, pos):
        if strict:
            raise DecodeError(kind, pos)
        warns.append(f"{kind} at position {pos}")
        nxt = pos
        while nxt < n:
            ev = _event_at(ids, nxt, cfg)
            if ev is not None and ev.kind is EventKind.ONSET and nxt > i:
                break
            nxt += 1
        return nxt

    while i < n:
        first = _event_at(ids, i, cfg)
        if first is None:
            i = fail(RANGE_ERROR, i)
            continue
        if first.kind is not EventKind.ONSET:
            i = fail(CYCLE_BREAK, i)
            continue

        error = None
        rest = []
        for offset, kind in ((1, EventKind.DURATION), (2, EventKind.INSTR_PITCH)):
            pos = i + offset
            if pos >= n:
                error = (DANGLING_TRIPLE, i)
                break
            ev = _event_at(ids, pos, cfg)
            if ev is None:
                error = (RANGE_ERROR, pos)
                break
            if ev.kind is not kind or ev.anticipated != first.anticipated:
                error = (CYCLE_BREAK, pos)
                break
            rest.append(ev)

        if error is not None:
            i = fail(*error)
            continue

        duration, instr_pitch = rest
        notes.append(Note(
            first.value / 100,
            max(1, duration.value) / 100,
            instr_pitch.instrument,
            instr_pitch.pitch,
        ))
        i += 3

    if warns:
        logger.warning(f"Lenient decode skipped {len(warns)} malformed span(s)")
    return NoteSeq.sorted(notes, warns)


def interleave_infill(past_and_middle, future, delta=DEFAULT_DELTA, cfg=None):
    """Encode notes plus anticipated future notes for infilling

    Each anticipated triple goes right before the first normal triple whose
    onset is at least (anticipated onset - delta); triples anticipating past
    the last normal note are appended in onset order. Anticipated precedes
    normal on ties.

    Args:
        past_and_middle (NoteSeq): Sorted notes encoded with normal ids
        future (NoteSeq): Sorted notes encoded with anticipated ids
        delta (float): Anticipation interval in seconds
        cfg (VocabConfig): Vocabulary layout

    Returns:
        TokenSequence: 3 * (len(past_and_middle) + len(future)) ids
    """
    cfg = cfg or VocabConfig()
    past_and_middle = _check_sorted(past_and_middle, "past and middle notes")
    future = _check_sorted(future, "future notes")

    normal = [quantize(n) for n in past_and_middle]
    anticipated = [quantize(n, anticipated=True) for n in future]
    normal_onsets = [q.onset_bin for q in normal]
    delta_bins = _to_bin(delta)

    slots = [[] for _ in range(len(normal) + 1)]
    for q in anticipated:
        slots[bisect.bisect_left(normal_onsets, q.onset_bin - delta_bins)].append(q)

    ids = []
    for j, q in enumerate(normal):
        for a in slots[j]:
            ids.extend(_triple_ids(a, cfg))
        ids.extend(_triple_ids(q, cfg))
    for a in slots[-1]:
        ids.extend(_triple_ids(a, cfg))
    return TokenSequence(ids, cfg)


def validate(tokens):
    """Check the grammar of a MIDI token stream

    Checks: MIDI ids only; onset -> duration -> instrument-pitch cycling with
    one flavor per triple; non-decreasing normal onsets; no trailing partial
    triple. Placement of anticipated triples is not checked.

    Args:
        tokens (TokenSequence): The stream

    Returns:
        ValidationReport: Every violation found
    """
    ids, cfg = tokens.ids, tokens.cfg
    violations = []
    expect = EventKind.ONSET
    triple_start = None
    flavor = False
    last_onset = -1

    def start_triple(pos, ev):
        nonlocal triple_start, flavor, last_onset, expect
        triple_start, flavor = pos, ev.anticipated
        if not ev.anticipated:
            if ev.value < last_onset:
                violations.append(Violation(pos, ONSET_REGRESSION))
            last_onset = ev.value
        expect = EventKind.DURATION

    for pos in range(len(ids)):
        ev = _event_at(ids, pos, cfg)
        if ev is None:
            violations.append(Violation(pos, RANGE_ERROR))
            expect, triple_start = EventKind.ONSET, None
            continue
        if expect is EventKind.ONSET:
            if ev.kind is EventKind.ONSET:
                start_triple(pos, ev)
            else:
                violations.append(Violation(pos, CYCLE_BREAK))
            continue
        if ev.kind is not expect or ev.anticipated != flavor:
            violations.append(Violation(pos, CYCLE_BREAK))
            if ev.kind is EventKind.ONSET:
                start_triple(pos, ev)
            else:
                expect, triple_start = EventKind.ONSET, None
            continue
        if expect is EventKind.DURATION:
            expect = EventKind.INSTR_PITCH
        else:
            expect, triple_start = EventKind.ONSET, None

    if triple_start is not None:
        violations.append(Violation(triple_start, DANGLING_TRIPLE))
    return ValidationReport(violations)


def tokenize_midi(notes, cfg, span=SEGMENT_SPAN):
    """Segment a whole piece and encode every window

    Returns:
        list: One TokenSequence per window (see segment)
    """
    return [encode(seg, cfg) for seg in segment(notes, span)]


def midi_portion(ids, cfg):
    """MIDI body of a prompt/example: after the last separator, before EOS"""
    ids = list(ids)
    if cfg.separator_id in ids:
        start = len(ids) - ids[::-1].index(cfg.separator_id)
    else:
        start = 0
        while start < len(ids) and ids[start] < cfg.text_vocab_size and ids[start] != cfg.eos_id:
            start += 1
    body = ids[start:]
    if cfg.eos_id in body:
        body = body[:body.index(cfg.eos_id)]
    return body


def music_duration(notes):
    """Last onset plus its duration, 0.0 for no notes"""
    if not len(notes):
        return 0.0
    last = max(n.onset for n in notes)
    return last + max(n.duration for n in notes if n.onset == last)
