#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Token grammar of the MIDI body

Onset, duration and instrument-pitch repeat in that order. Normal onsets
never go back in time, anticipated ones are free.
"""

import enum
import logging
from dataclasses import dataclass, replace

import numpy as np

from midillm.vocab import EventKind, global_event

logger = logging.getLogger(__name__)


class Expect(enum.Enum):
    ONSET = "onset"
    DURATION = "duration"
    INSTR_PITCH = "instr_pitch"
    ANY = "any"


_NEXT = {
    EventKind.ONSET: Expect.DURATION,
    EventKind.DURATION: Expect.INSTR_PITCH,
    EventKind.INSTR_PITCH: Expect.ONSET,
}

_EXPECTED_KIND = {
    Expect.ONSET: EventKind.ONSET,
    Expect.DURATION: EventKind.DURATION,
    Expect.INSTR_PITCH: EventKind.INSTR_PITCH,
}


@dataclass(frozen=True)
class GrammarState:
    """Position inside the triple grammar

    ANY is the state after a text id: text may continue, or MIDI may
    start with a normal onset. `anticipated` is the flavor of the triple
    in progress.
    """
    expects: Expect = Expect.ONSET
    last_onset_bin: int = 0
    emitted: int = 0
    anticipated: bool = False

    @property
    def at_boundary(self):
        return self.expects in (Expect.ONSET, Expect.ANY)

    def advance(self, token, cfg):
        """State after accepting `token`

        Raises:
            ValueError: The token breaks the grammar
        """
        emitted = self.emitted + 1
        if token == cfg.separator_id:
            return GrammarState(Expect.ONSET, 0, emitted)
        if token == cfg.eos_id:
            if not self.at_boundary:
                raise ValueError(f"eos inside a triple while expecting {self.expects.value}")
            return replace(self, expects=Expect.ONSET, emitted=emitted)

        event = global_event(token, cfg)
        if event is None:
            if self.expects is not Expect.ANY and self.emitted:
                raise ValueError(f"text id {token} while expecting {self.expects.value}")
            return GrammarState(Expect.ANY, 0, emitted)

        wanted = EventKind.ONSET if self.expects is Expect.ANY else _EXPECTED_KIND[self.expects]
        if event.kind is not wanted:
            raise ValueError(f"{event} while expecting {wanted.value}")
        if event.kind is EventKind.ONSET:
            last = self.last_onset_bin
            if not event.anticipated:
                if event.value < last:
                    raise ValueError(f"onset bin {event.value} after {last}")
                last = event.value
            return GrammarState(Expect.DURATION, last, emitted, event.anticipated)
        if event.anticipated != self.anticipated:
            raise ValueError(f"{event} mixes flavors inside a triple")
        return replace(self, expects=_NEXT[event.kind], emitted=emitted)

    @classmethod
    def from_prompt(cls, prompt, cfg):
        """Replay a prompt from the fresh state; `emitted` then counts prompt ids"""
        state = cls()
        for token in prompt:
            state = state.advance(int(token), cfg)
        return replace(state, emitted=0)


def grammar_mask(state, cfg):
    """Global ids allowed next

    Args:
        state (GrammarState): Current grammar position
        cfg (VocabConfig): Vocabulary layout

    Returns:
        numpy.ndarray: Sorted allowed ids
    """
    if state.expects is Expect.DURATION:
        r = cfg.global_range(EventKind.DURATION, state.anticipated)
        return np.arange(r.start, r.stop)
    if state.expects is Expect.INSTR_PITCH:
        r = cfg.global_range(EventKind.INSTR_PITCH, state.anticipated)
        return np.arange(r.start, r.stop)

    onsets = cfg.global_range(EventKind.ONSET)
    tail = np.arange(onsets.start + state.last_onset_bin, onsets.stop)
    if state.expects is Expect.ANY:
        return np.concatenate([np.arange(cfg.text_vocab_size), tail])
    return np.concatenate([[cfg.eos_id], tail]).astype(np.int64)
