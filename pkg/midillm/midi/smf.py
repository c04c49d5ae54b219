#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Standard MIDI File reading and writing on top of mido
"""

import io
import struct
import bisect
import logging
import warnings
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import List

import mido

from midillm.errors import (
    MidiFileError, MalformedHeader, UnsupportedFormat, TruncatedTrack, ChannelOverflowWarning,
)
from midillm.midi.notes import Note, NoteSeq, DRUM_INSTRUMENT

logger = logging.getLogger(__name__)

DEFAULT_TEMPO = 500000  # µs per quarter note (120 BPM)
DRUM_CHANNEL = 9
MELODIC_CHANNELS = [ch for ch in range(16) if ch != DRUM_CHANNEL]


@dataclass(frozen=True)
class TrackEvent:
    """A mido message at an absolute tick"""
    tick: int
    message: object


@dataclass
class MidiFile:
    """Parsed SMF: header values plus per-track events in absolute ticks"""
    format: int
    division: int
    tracks: List[List[TrackEvent]] = field(default_factory=list)

    def channel_events(self):
        """All channel (non-meta, non-sysex) events over every track"""
        return [
            ev for track in self.tracks for ev in track
            if not ev.message.is_meta and hasattr(ev.message, 'channel')
        ]

    @property
    def end_tick(self):
        return max((track[-1].tick for track in self.tracks if track), default=0)

    def __repr__(self):
        return f'<MidiFile format={self.format} division={self.division} tracks={len(self.tracks)}>'


class TempoMap:
    """Piecewise-constant tempo map converting ticks to seconds"""

    def __init__(self, division, tempo_events=()):
        """Build the map

        Args:
            division (int): Ticks per quarter note
            tempo_events (iterable): (tick, µs per quarter) pairs in file order;
                several changes on one tick keep the last
        """
        self.division = division
        self._ticks = [0]
        self._tempos = [DEFAULT_TEMPO]
        for tick, tempo in sorted(tempo_events, key=lambda item: item[0]):
            if tempo <= 0:
                logger.warning(f"Ignoring non-positive tempo {tempo} at tick {tick}")
                continue
            if tick == self._ticks[-1]:
                self._tempos[-1] = tempo
            else:
                self._ticks.append(tick)
                self._tempos.append(tempo)

        self._seconds = [0.0]
        for i in range(1, len(self._ticks)):
            span = self._ticks[i] - self._ticks[i - 1]
            self._seconds.append(self._seconds[-1] + span * self._tempos[i - 1] / (1e6 * division))

    @classmethod
    def from_midi(cls, midi):
        events = [
            (ev.tick, ev.message.tempo)
            for track in midi.tracks for ev in track
            if ev.message.is_meta and ev.message.type == 'set_tempo'
        ]
        return cls(midi.division, events)

    def ticks_to_seconds(self, tick):
        i = bisect.bisect_right(self._ticks, tick) - 1
        return self._seconds[i] + (tick - self._ticks[i]) * self._tempos[i] / (1e6 * self.division)

    def __len__(self):
        return len(self._ticks)


def _split_chunks(data):
    """Check the header and the chunk framing, return (format, division, track chunks)"""
    if len(data) < 14 or data[:4] != b'MThd':
        raise MalformedHeader("missing or short MThd chunk")
    header_len, fmt, ntrks, division = struct.unpack('>IHHH', data[4:14])
    if header_len < 6 or len(data) < 8 + header_len:
        raise MalformedHeader(f"MThd declares {header_len} bytes")
    if fmt not in (0, 1):
        raise UnsupportedFormat(f"SMF format {fmt} is not supported")
    if division & 0x8000:
        raise UnsupportedFormat("SMPTE time division is not supported")
    if division == 0:
        raise MalformedHeader("division must be positive")

    chunks = []
    pos = 8 + header_len
    while pos < len(data) and len(chunks) < ntrks:
        if len(data) - pos < 8:
            raise TruncatedTrack(f"chunk header at byte {pos} is cut short")
        name = data[pos:pos + 4]
        size = struct.unpack('>I', data[pos + 4:pos + 8])[0]
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise TruncatedTrack(
                f"track {len(chunks)} declares {size} bytes, only {len(body)} present"
            )
        if name == b'MTrk':
            chunks.append(data[pos:pos + 8 + size])
        else:
            logger.debug(f"Skipping unknown chunk {name!r} at byte {pos}")
        pos += 8 + size

    if len(chunks) < ntrks:
        raise TruncatedTrack(f"header declares {ntrks} tracks, found {len(chunks)}")
    return fmt, division, chunks


def parse_smf(data):
    """Parse Standard MIDI File bytes

    Args:
        data (bytes): Raw SMF format 0 or 1 bytes

    Returns:
        MidiFile: Tracks with delta times resolved to absolute ticks, each
        ending with an End-of-Track meta event

    Raises:
        MalformedHeader, UnsupportedFormat, TruncatedTrack, MidiFileError
    """
    fmt, division, chunks = _split_chunks(bytes(data))

    # Hand mido a clean file: rebuilt header, MTrk chunks only
    clean = struct.pack('>4sIHHH', b'MThd', 6, fmt, len(chunks), division) + b''.join(chunks)
    try:
        mid = mido.MidiFile(file=io.BytesIO(clean))
    except EOFError as e:
        raise TruncatedTrack(f"track data ends inside an event: {e}") from e
    except (OSError, ValueError, KeyError, IndexError) as e:
        raise MidiFileError(f"corrupt track data: {e}") from e

    tracks = []
    for track in mid.tracks:
        events = []
        tick = 0
        for msg in track:
            tick += msg.time
            events.append(TrackEvent(tick, msg))
        if not events or events[-1].message.type != 'end_of_track':
            events.append(TrackEvent(tick, mido.MetaMessage('end_of_track')))
        tracks.append(events)

    return MidiFile(format=fmt, division=division, tracks=tracks)


def extract_notes(midi):
    """Turn parsed tracks into seconds-based notes

    Note-ons are matched FIFO per (channel, pitch); a note-on with velocity 0
    is a note-off. Unmatched note-ons are closed at the final event time and
    reported in the returned sequence's warnings.

    Args:
        midi (MidiFile): The parsed file

    Returns:
        NoteSeq: Notes in NoteSeq order
    """
    tempo_map = TempoMap.from_midi(midi)
    to_sec = tempo_map.ticks_to_seconds

    # Stable merge: tick, program changes first, then track order, then file order
    merged = sorted(
        (
            (ev.tick, ev.message.type != 'program_change', t, i, ev.message)
            for t, track in enumerate(midi.tracks) for i, ev in enumerate(track)
        ),
        key=lambda item: item[:4],
    )

    programs = [0] * 16
    active = defaultdict(deque)
    notes = []
    stray_offs = 0

    def close(on_tick, off_tick, instrument, pitch, velocity):
        if off_tick <= on_tick:
            off_tick = on_tick + 1
        onset = to_sec(on_tick)
        notes.append(Note(onset, to_sec(off_tick) - onset, instrument, pitch, velocity))

    for tick, _, _, _, msg in merged:
        if msg.is_meta or not hasattr(msg, 'channel'):
            continue
        ch = msg.channel
        if msg.type == 'program_change':
            programs[ch] = msg.program
        elif msg.type == 'note_on' and msg.velocity > 0:
            instrument = DRUM_INSTRUMENT if ch == DRUM_CHANNEL else programs[ch]
            active[(ch, msg.note)].append((tick, instrument, msg.velocity))
        elif msg.type == 'note_off' or msg.type == 'note_on':
            pending = active.get((ch, msg.note))
            if pending:
                on_tick, instrument, velocity = pending.popleft()
                close(on_tick, tick, instrument, msg.note, velocity)
            else:
                stray_offs += 1

    end_tick = midi.end_tick
    warnings_report = []
    for (ch, pitch), pending in sorted(active.items()):
        for on_tick, instrument, velocity in pending:
            close(on_tick, end_tick, instrument, pitch, velocity)
            warnings_report.append(
                f"unmatched note-on channel {ch} pitch {pitch} at tick {on_tick} closed at tick {end_tick}"
            )

    if warnings_report:
        logger.warning(f"{len(warnings_report)} unmatched note-on(s) closed at end of piece")
    if stray_offs:
        logger.debug(f"Ignored {stray_offs} note-off(s) without a matching note-on")

    return NoteSeq.sorted(notes, warnings_report)


def write_smf(notes, velocity=96, division=480):
    """Write notes to SMF format 1 bytes

    Tempo is fixed at 120 BPM. Every distinct instrument gets its own track
    with a program change at its start; drums go to channel 9 and melodic
    instruments take channels 0-8, 10-15 round-robin.

    Args:
        notes (NoteSeq): The notes to write
        velocity (int): Note-on velocity for every note (1-127)
        division (int): Ticks per quarter note

    Returns:
        bytes: The SMF file
    """
    if not 1 <= velocity <= 127:
        raise ValueError(f"velocity must be in [1, 127], got {velocity}")
    if division <= 0 or division & 0x8000:
        raise ValueError(f"division must be in [1, 32767], got {division}")

    ticks_per_second = division * 1e6 / DEFAULT_TEMPO
    mid = mido.MidiFile(type=1, ticks_per_beat=division)

    conductor = mido.MidiTrack()
    conductor.append(mido.MetaMessage('set_tempo', tempo=DEFAULT_TEMPO, time=0))
    conductor.append(mido.MetaMessage('end_of_track', time=0))
    mid.tracks.append(conductor)

    by_instrument = defaultdict(list)
    for note in notes:
        by_instrument[note.instrument].append(note)

    melodic = sorted(i for i in by_instrument if i != DRUM_INSTRUMENT)
    if len(melodic) > len(MELODIC_CHANNELS):
        message = (f"{len(melodic)} melodic instruments share "
                   f"{len(MELODIC_CHANNELS)} channels; program changes will collide")
        logger.warning(message)
        warnings.warn(message, ChannelOverflowWarning, stacklevel=2)

    channels = {inst: MELODIC_CHANNELS[i % len(MELODIC_CHANNELS)] for i, inst in enumerate(melodic)}
    channels[DRUM_INSTRUMENT] = DRUM_CHANNEL

    for instrument in sorted(by_instrument):
        ch = channels[instrument]
        program = 0 if instrument == DRUM_INSTRUMENT else instrument
        events = []
        for note in by_instrument[instrument]:
            on = int(round(note.onset * ticks_per_second))
            off = max(on + 1, int(round(note.offset * ticks_per_second)))
            # note-offs sort before note-ons on the same tick
            events.append((on, 1, mido.Message('note_on', channel=ch, note=note.pitch, velocity=velocity)))
            events.append((off, 0, mido.Message('note_off', channel=ch, note=note.pitch, velocity=0)))
        events.sort(key=lambda e: (e[0], e[1]))

        track = mido.MidiTrack()
        track.append(mido.MetaMessage('track_name', name=_track_name(instrument), time=0))
        track.append(mido.Message('program_change', channel=ch, program=program, time=0))
        last = 0
        for tick, _, msg in events:
            track.append(msg.copy(time=tick - last))
            last = tick
        track.append(mido.MetaMessage('end_of_track', time=0))
        mid.tracks.append(track)

    buf = io.BytesIO()
    mid.save(file=buf)
    return buf.getvalue()


def _track_name(instrument):
    return "drums" if instrument == DRUM_INSTRUMENT else f"program {instrument}"


def read_midi(path):
    """Parse a Standard MIDI File from disk"""
    with open(path, 'rb') as f:
        return parse_smf(f.read())


def load_notes(path):
    """Read a Standard MIDI File from disk and extract its notes"""
    return extract_notes(read_midi(path))
